use num_complex::Complex64;
use rayon::prelude::*;

use super::kernel::{multiplicity, ChaosKernel, Key};
use super::ops::l0_weight;
use super::{factorial, ipow};
use crate::divfree::sub;
use crate::{ModelParams, REDUCE_CHUNK};

const ZERO: Complex64 = Complex64::new(0.0, 0.0);

/// All sorted tuples of `degree` nonzero momenta inside the mollifier ball
/// that sum to `total`, in ascending order.
pub fn fiber_keys<const D: usize>(p: &ModelParams, degree: usize, total: [i32; D]) -> Vec<Key<D>> {
    let ball = p.ball_points::<D>();
    let mut out = Vec::new();
    if degree == 0 {
        if total.iter().all(|&c| c == 0) {
            out.push(Vec::new().into_boxed_slice());
        }
        return out;
    }
    let mut stack: Vec<usize> = Vec::with_capacity(degree);
    rec(&ball, p, degree, total, 0, &mut stack, &mut out);
    out
}

fn rec<const D: usize>(
    ball: &[[i32; D]],
    p: &ModelParams,
    degree: usize,
    remaining: [i32; D],
    start: usize,
    stack: &mut Vec<usize>,
    out: &mut Vec<Key<D>>,
) {
    if stack.len() + 1 == degree {
        if remaining.iter().all(|&c| c == 0) || !p.in_ball(&remaining) {
            return;
        }
        if let Some(&last) = stack.last() {
            if remaining < ball[last] {
                return;
            }
        }
        let mut key: Vec<[i32; D]> = stack.iter().map(|&i| ball[i]).collect();
        key.push(remaining);
        out.push(key.into_boxed_slice());
        return;
    }
    for i in start..ball.len() {
        // the remaining momenta are all >= ball[i], so their sum must be reachable
        let rest = sub(&remaining, &ball[i]);
        stack.push(i);
        rec(ball, p, degree, rest, i, stack, out);
        stack.pop();
    }
}

/// Rough size of a degree-m fiber: B^{m−1}/m! for a ball of B points.
pub fn estimate_fiber_len(p: &ModelParams, degree: usize) -> f64 {
    let r = p.cutoff;
    let b = match p.norm {
        crate::Norm::Euclidean => {
            let d = p.d as f64;
            // volume of the d-ball
            std::f64::consts::PI.powf(d / 2.0) / gamma_half_int(p.d) * r.powf(d)
        }
        crate::Norm::Sup => (2.0 * r.floor() + 1.0).powi(p.d as i32),
    };
    b.powi(degree as i32 - 1) / factorial(degree)
}

// Γ(d/2 + 1)
fn gamma_half_int(d: usize) -> f64 {
    if d % 2 == 0 {
        factorial(d / 2)
    } else {
        let mut g = std::f64::consts::PI.sqrt() / 2.0;
        let mut x = 1.5;
        while x < d as f64 / 2.0 + 1.0 - 1e-9 {
            g *= x;
            x += 1.0;
        }
        g
    }
}

/// Dense coordinates for kernels of degrees `lo..=hi` on one momentum fiber.
///
/// A vector is the concatenation of the blocks of every fiber tuple, degree by
/// degree. [`StackSpace::dot`] is the Fock inner product.
pub struct StackSpace<const D: usize> {
    lo: usize,
    hi: usize,
    total: [i32; D],
    keys: Vec<Vec<Key<D>>>,
    offsets: Vec<usize>,
    // per block: n!·multiplicity and (2π)²Σ|k|²
    weight: Vec<f64>,
    l0: Vec<f64>,
    block_of: Vec<usize>,
    len: usize,
}

impl<const D: usize> StackSpace<D> {
    pub fn new(p: &ModelParams, lo: usize, hi: usize, total: [i32; D]) -> Self {
        assert!(lo >= 1 && lo <= hi);
        let mut keys = Vec::new();
        let mut offsets = Vec::new();
        let mut weight = Vec::new();
        let mut l0 = Vec::new();
        let mut block_of = Vec::new();
        let mut len = 0;
        for m in lo..=hi {
            let ks = fiber_keys(p, m, total);
            offsets.push(len);
            let bs = ipow(D, m);
            for k in &ks {
                weight.push(factorial(m) * multiplicity(k));
                l0.push(l0_weight(k));
                block_of.extend(std::iter::repeat_n(weight.len() - 1, bs));
            }
            len += ks.len() * bs;
            keys.push(ks);
        }
        StackSpace {
            lo,
            hi,
            total,
            keys,
            offsets,
            weight,
            l0,
            block_of,
            len,
        }
    }

    pub fn lo(&self) -> usize {
        self.lo
    }

    pub fn hi(&self) -> usize {
        self.hi
    }

    pub fn total(&self) -> [i32; D] {
        self.total
    }

    pub fn dim(&self) -> usize {
        self.len
    }

    pub fn keys(&self, degree: usize) -> &[Key<D>] {
        &self.keys[degree - self.lo]
    }

    pub fn segment(&self, degree: usize) -> std::ops::Range<usize> {
        let i = degree - self.lo;
        let start = self.offsets[i];
        start..start + self.keys[i].len() * ipow(D, degree)
    }

    /// Per-entry (2π)²Σ|k|².
    pub fn l0_entry(&self, i: usize) -> f64 {
        self.l0[self.block_of[i]]
    }

    pub fn dot(&self, x: &[Complex64], y: &[Complex64]) -> Complex64 {
        let idx: Vec<usize> = (0..self.len).collect();
        let partial: Vec<Complex64> = idx
            .par_chunks(REDUCE_CHUNK)
            .map(|c| {
                c.iter()
                    .map(|&i| x[i].conj() * y[i] * self.weight[self.block_of[i]])
                    .sum::<Complex64>()
            })
            .collect();
        partial.iter().sum()
    }

    pub fn norm(&self, x: &[Complex64]) -> f64 {
        self.dot(x, x).re.max(0.0).sqrt()
    }

    /// Dense vector of the given kernels; kernels outside the stack or off the fiber are ignored.
    pub fn to_dense(&self, kernels: &[&ChaosKernel<D>]) -> Vec<Complex64> {
        let mut v = vec![ZERO; self.len];
        for f in kernels {
            let m = f.degree();
            if m < self.lo || m > self.hi {
                continue;
            }
            let seg = self.segment(m);
            let bs = ipow(D, m);
            for (i, k) in self.keys(m).iter().enumerate() {
                if let Some(b) = f.block_of(k) {
                    v[seg.start + i * bs..seg.start + (i + 1) * bs].copy_from_slice(b);
                }
            }
        }
        v
    }

    /// Kernels for degrees lo..=hi.
    pub fn from_dense(&self, v: &[Complex64]) -> Vec<ChaosKernel<D>> {
        (self.lo..=self.hi)
            .map(|m| {
                let seg = self.segment(m);
                ChaosKernel::from_sorted(m, Some(self.total), self.keys(m).to_vec(), v[seg].to_vec())
            })
            .collect()
    }
}
