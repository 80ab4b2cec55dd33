//! The d = 2 replacement kernel Pᴺ and its distance to G∘Lᴺ.

use std::f64::consts::PI;

use rayon::prelude::*;
use serde::Serialize;

use super::closed::{g_fn, l_n};
use crate::{Error, ModelParams, Result};

fn check(p: &ModelParams, ks: &[[i32; 2]]) -> Result<()> {
    if p.d != 2 {
        return Err(Error::InvalidParam("the replacement kernel is defined for d = 2".into()));
    }
    if ks.is_empty() || ks.iter().any(|k| k[0] == 0 && k[1] == 0) {
        return Err(Error::InvalidParam("replacement kernel needs nonzero k_1..k_n".into()));
    }
    Ok(())
}

/// Pᴺ(k_{1:n}): lattice sum over l + m = k₁ with the angular factor
/// sin²θ₁ − sin²θ₂(sin²θ₁ + (|l|/|m|)cosθ₁cosθ₂), θ₁ = ∠(k₁,m), θ₂ = ∠(k₁,l),
/// divided by x(1 + G(Lᴺ(x))) with x = (2π)²(|l|²+|m|²+|k_{2:n}|²).
pub fn replacement_kernel_pn(ks: &[[i32; 2]], p: &ModelParams) -> Result<f64> {
    check(p, ks)?;
    let k1 = ks[0];
    if !p.in_ball(&k1) {
        return Ok(0.0);
    }
    let rest: f64 = ks[1..].iter().map(|k| crate::divfree::norm2(k)).sum();
    let lam = p.lambda_n();
    let k1f = [k1[0] as f64, k1[1] as f64];
    let k1n = (k1f[0] * k1f[0] + k1f[1] * k1f[1]).sqrt();
    let r = p.cutoff.floor() as i32;
    let n2 = p.cutoff * p.cutoff;
    let mut sum = 0.0;
    for a in -r..=r {
        for b in -r..=r {
            let l2 = (a * a + b * b) as f64;
            if l2 == 0.0 || l2 > n2 {
                continue;
            }
            let m = [k1[0] - a, k1[1] - b];
            let m2 = (m[0] * m[0] + m[1] * m[1]) as f64;
            if m2 == 0.0 || m2 > n2 {
                continue;
            }
            let ln = l2.sqrt();
            let mn = m2.sqrt();
            let c1 = (k1f[0] * m[0] as f64 + k1f[1] * m[1] as f64) / (k1n * mn);
            let c2 = (k1f[0] * a as f64 + k1f[1] * b as f64) / (k1n * ln);
            let s1 = 1.0 - c1 * c1;
            let s2 = 1.0 - c2 * c2;
            let ang = s1 - s2 * (s1 + ln / mn * c1 * c2);
            let x = 4.0 * PI * PI * (l2 + m2 + rest);
            sum += ang / (x * (1.0 + g_fn(l_n(x, lam, p.cutoff))));
        }
    }
    Ok(lam * lam * sum)
}

/// |Pᴺ(k_{1:n}) − G(Lᴺ((2π)²|k_{1:n}|²))|.
pub fn replacement_deviation(ks: &[[i32; 2]], p: &ModelParams) -> Result<f64> {
    let pn = replacement_kernel_pn(ks, p)?;
    let s: f64 = ks.iter().map(|k| crate::divfree::norm2(k)).sum();
    let target = g_fn(l_n(4.0 * PI * PI * s, p.lambda_n(), p.cutoff));
    Ok((pn - target).abs())
}

/// Empirical constant C = sup deviation / λ_N² over a sample of tuples.
#[derive(Debug, Clone, Serialize)]
pub struct ReplacementFit {
    pub cutoff: f64,
    pub lambda_n: f64,
    pub max_deviation: f64,
    pub constant: f64,
    pub worst: Vec<[i32; 2]>,
}

pub fn fit_replacement_constant(p: &ModelParams, samples: &[Vec<[i32; 2]>]) -> Result<ReplacementFit> {
    let devs: Vec<f64> = samples
        .par_iter()
        .map(|ks| replacement_deviation(ks, p))
        .collect::<Result<_>>()?;
    let (i, &worst) = devs
        .iter()
        .enumerate()
        .max_by(|a, b| a.1.total_cmp(b.1))
        .ok_or_else(|| Error::InvalidParam("empty sample".into()))?;
    let lam = p.lambda_n();
    Ok(ReplacementFit {
        cutoff: p.cutoff,
        lambda_n: lam,
        max_deviation: worst,
        constant: worst / (lam * lam),
        worst: samples[i].clone(),
    })
}

/// Deterministic sample of tuples with |k₁| ≤ N/2 for n ∈ {1, 2}.
pub fn default_samples(cutoff: f64) -> Vec<Vec<[i32; 2]>> {
    let half = cutoff / 2.0;
    let mut firsts: Vec<[i32; 2]> = vec![[1, 0], [1, 1], [0, 2], [3, -2]];
    for frac in [0.05, 0.15, 0.3, 0.5] {
        for phi in [0.0f64, 0.4, 1.1, 2.5] {
            let r = frac * cutoff;
            let k = [(r * phi.cos()).round() as i32, (r * phi.sin()).round() as i32];
            if (k[0] != 0 || k[1] != 0) && crate::divfree::norm2(&k).sqrt() <= half {
                firsts.push(k);
            }
        }
    }
    firsts.sort();
    firsts.dedup();
    let mut out: Vec<Vec<[i32; 2]>> = firsts.iter().map(|k| vec![*k]).collect();
    for k in &firsts {
        out.push(vec![*k, [1, 0]]);
        let big = [(0.25 * cutoff).round() as i32, 1];
        out.push(vec![*k, big]);
    }
    out
}
