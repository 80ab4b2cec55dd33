//! Finite-N operator routes: ‖T⁺σ‖², iterated T, path sums, truncated D and the
//! sector-bound ratio. All "_operator" quantities are λ-stripped (λ = 1).

use std::f64::consts::PI;

use num_complex::Complex64;
use serde::Serialize;

use crate::divfree::{FrameRule, WaveVector};
use crate::fock::{
    apply_aminus, apply_aplus, apply_l0_power, apply_t, estimate_fiber_len, fiber_keys, ipow, norm_sq_on,
    resolvent_solve_schur, sigma_kernel, sigma_kernel_with_rule, ChaosKernel, GmresConfig, LazyAplus, Sign,
};
use crate::{Error, ModelParams, Result};

fn stripped(p: &ModelParams) -> ModelParams {
    p.with_lambda(1.0)
}

/// ‖T^{N,+,*}σ_{k,α}‖² at finite N.
pub fn f1_operator<const D: usize>(p: &ModelParams, k: &WaveVector<D>, alpha: usize) -> f64 {
    let p = stripped(p);
    apply_t(Sign::Plus, &sigma_kernel(k, alpha), &p).norm_sq()
}

/// ‖T^{N,+,*}T^{N,+,*}σ_{k,α}‖² at finite N; the degree-3 kernel is never stored.
pub fn f2_operator<const D: usize>(p: &ModelParams, k: &WaveVector<D>, alpha: usize) -> f64 {
    let p = stripped(p);
    let v2 = apply_t(Sign::Plus, &sigma_kernel(k, alpha), &p);
    let src = apply_l0_power(&v2, -0.5);
    let lazy = LazyAplus::new(&src, &p, -0.5);
    norm_sq_on(&lazy, &fiber_keys(&p, 3, *k.components()))
}

fn check_budget(p: &ModelParams, degree: usize, d: usize, budget: usize) -> Result<()> {
    // key storage plus the complex block of every fiber tuple
    let per = (degree * d * 4 + ipow(d, degree) * 16 + 48) as f64;
    let est = estimate_fiber_len(p, degree) * per;
    if est > budget as f64 {
        return Err(Error::MemoryBudget {
            estimate_bytes: est as u64,
            budget_bytes: budget as u64,
        });
    }
    Ok(())
}

/// Finite-(N, n) value of the l-th expansion term.
#[derive(Debug, Clone, Copy, Serialize)]
pub struct FlValue {
    pub l: usize,
    /// ‖(T^{N,*}_{2,n})^{l−1}T^{N,+,*}σ_{k,1}‖².
    pub norm_sq: f64,
    /// (−1)^{l−1}·norm_sq.
    pub signed: f64,
}

/// Applies P_{2,n}T^{N,*}P_{2,n} to a stack of kernels indexed by degree 2..=n.
fn apply_truncated_t<const D: usize>(w: &[Option<ChaosKernel<D>>], p: &ModelParams) -> Vec<Option<ChaosKernel<D>>> {
    let n = w.len() + 1;
    let mut out: Vec<Option<ChaosKernel<D>>> = (0..w.len()).map(|_| None).collect();
    let mut acc = |deg: usize, f: ChaosKernel<D>| {
        let slot = &mut out[deg - 2];
        *slot = Some(match slot.take() {
            None => f,
            Some(g) => g.lin_comb(Complex64::new(1.0, 0.0), &f, Complex64::new(1.0, 0.0)),
        });
    };
    for (i, c) in w.iter().enumerate() {
        let m = i + 2;
        let Some(c) = c else { continue };
        if m < n {
            acc(m + 1, apply_t(Sign::Plus, c, p));
        }
        if m > 2 {
            acc(m - 1, apply_t(Sign::Minus, c, p));
        }
    }
    out
}

/// |f_l| at finite (N, n = p.degree) by repeated application of the truncated T.
/// Degrees that would need more than `budget_bytes` are refused up front.
pub fn fl_lattice<const D: usize>(l: usize, p: &ModelParams, k: &WaveVector<D>, budget_bytes: usize) -> Result<FlValue> {
    let n = p.degree;
    if l == 0 || n < l + 1 {
        return Err(Error::InvalidParam(format!("fl_lattice needs l ≥ 1 and n ≥ l+1 (l = {l}, n = {n})")));
    }
    let p = stripped(p);
    // degrees reached: 2..=min(l+1, n); the last application is evaluated lazily
    // when it only raises the degree
    let top = (l + 1).min(n);
    for deg in 2..top {
        check_budget(&p, deg, D, budget_bytes)?;
    }
    let mut w: Vec<Option<ChaosKernel<D>>> = (2..=n).map(|_| None).collect();
    w[0] = Some(apply_t(Sign::Plus, &sigma_kernel(k, 0), &p));
    for _ in 1..l.saturating_sub(1) {
        w = apply_truncated_t(&w, &p);
    }
    let norm_sq = if l == 1 {
        w[0].as_ref().map_or(0.0, |f| f.norm_sq())
    } else {
        // last step: (T w)_m = T⁺w_{m−1} + T⁻w_{m+1}
        let mut total = 0.0;
        for m in 2..=n {
            let up = (m > 2).then(|| w[m - 3].as_ref()).flatten();
            let down = (m < n).then(|| w[m - 1].as_ref()).flatten();
            total += match (up, down) {
                (None, None) => 0.0,
                (Some(u), None) => {
                    let src = apply_l0_power(u, -0.5);
                    norm_sq_on(&LazyAplus::new(&src, &p, -0.5), &fiber_keys(&p, m, *k.components()))
                }
                (u, d) => {
                    check_budget(&p, m, D, budget_bytes)?;
                    let mut acc = ChaosKernel::zero(m, Some(*k.components()));
                    if let Some(u) = u {
                        acc = acc.lin_comb(Complex64::new(1.0, 0.0), &apply_t(Sign::Plus, u, &p), Complex64::new(1.0, 0.0));
                    }
                    if let Some(d) = d {
                        acc = acc.lin_comb(Complex64::new(1.0, 0.0), &apply_t(Sign::Minus, d, &p), Complex64::new(1.0, 0.0));
                    }
                    acc.norm_sq()
                }
            };
        }
        total
    };
    let signed = if l % 2 == 1 { norm_sq } else { -norm_sq };
    Ok(FlValue { l, norm_sq, signed })
}

/// Simple random-walk paths of length `a` from height 1 back to 1 that stay in
/// 2..=n strictly inside; each step is `true` for up (T⁺) and `false` for down.
pub fn paths(a: usize, n: usize) -> Vec<Vec<bool>> {
    fn rec(h: usize, left: usize, n: usize, cur: &mut Vec<bool>, out: &mut Vec<Vec<bool>>) {
        if left == 0 {
            if h == 1 {
                out.push(cur.clone());
            }
            return;
        }
        if h - 1 > left {
            return;
        }
        // interior heights lie in 2..=n; the final step may land on 1
        if h < n && (h + 1) - 1 < left {
            cur.push(true);
            rec(h + 1, left - 1, n, cur, out);
            cur.pop();
        }
        if h > 1 && (h > 2 || left == 1) {
            cur.push(false);
            rec(h - 1, left - 1, n, cur, out);
            cur.pop();
        }
    }
    let mut out = Vec::new();
    if a >= 2 && a % 2 == 0 {
        rec(1, a, n, &mut Vec::new(), &mut out);
    }
    out
}

/// Σ_p ⟨σ_{j',t'}, 𝒯ᴺ_p σ_{j,t}⟩ over the paths of length `a` (λ-stripped). The
/// sesquilinear pairing with σ_{j'} equals the bilinear pairing with σ_{−j'}.
pub fn path_sum<const D: usize>(
    a: usize,
    p: &ModelParams,
    (j, t): (&WaveVector<D>, usize),
    (j2, t2): (&WaveVector<D>, usize),
) -> Result<Complex64> {
    if a % 2 == 1 || a == 0 || a > 2 * (p.degree - 1) {
        return Err(Error::InvalidParam(format!("path length {a} must be even and at most 2(n−1)")));
    }
    if j.components() != j2.components() {
        // different total momentum: orthogonal fibers
        return Ok(Complex64::new(0.0, 0.0));
    }
    let p = stripped(p);
    let start = sigma_kernel(j, t);
    let end = sigma_kernel(j2, t2);
    let mut total = Complex64::new(0.0, 0.0);
    for path in paths(a, p.degree) {
        let mut f = start.clone();
        for &up in &path {
            f = apply_t(if up { Sign::Plus } else { Sign::Minus }, &f, &p);
        }
        total += end.inner(&f);
    }
    Ok(total)
}

/// Truncated diffusivity Dⁿ at finite N.
#[derive(Debug, Clone, Copy, Serialize)]
pub struct DTruncated {
    pub value: f64,
    pub iterations: usize,
    pub residual: f64,
}

/// ⟨𝒜₊σ_{k,1}, (−𝔏ᴺ_{2,n})⁻¹𝒜₊σ_{k,1}⟩/((2π)²|k|²) with the model's λ.
pub fn d_truncated<const D: usize>(p: &ModelParams, k: &WaveVector<D>, rule: FrameRule) -> Result<DTruncated> {
    d_truncated_solution(p, k, rule).map(|(d, _)| d)
}

/// [`d_truncated`] together with the degree-2 component of the resolvent solution.
pub fn d_truncated_solution<const D: usize>(
    p: &ModelParams,
    k: &WaveVector<D>,
    rule: FrameRule,
) -> Result<(DTruncated, ChaosKernel<D>)> {
    let n = p.degree;
    if n < 2 {
        return Err(Error::InvalidParam("D_truncated needs n ≥ 2".into()));
    }
    let rhs = apply_aplus(&sigma_kernel_with_rule(k, 0, rule), p);
    if n == 2 {
        let v = apply_l0_power(&rhs, -1.0);
        let value = d_truncated_from(p, k, rule, &v);
        return Ok((
            DTruncated {
                value,
                iterations: 0,
                residual: 0.0,
            },
            v,
        ));
    }
    let sol = resolvent_solve_schur(&[&rhs], p, 2, n, &GmresConfig::default())?;
    let v = sol.component(2).expect("degree-2 component").clone();
    let d = DTruncated {
        value: d_truncated_from(p, k, rule, &v),
        iterations: sol.iterations,
        residual: sol.residual,
    };
    Ok((d, v))
}

/// Dⁿ from a stored degree-2 solution `v`.
pub fn d_truncated_from<const D: usize>(p: &ModelParams, k: &WaveVector<D>, rule: FrameRule, v: &ChaosKernel<D>) -> f64 {
    let rhs = apply_aplus(&sigma_kernel_with_rule(k, 0, rule), p);
    rhs.inner(v).re / (4.0 * PI * PI * k.norm2())
}

/// ‖(−𝔏₀)^{−½}𝒜_σφ‖² / (λ²‖√𝒩(−𝔏₀)^{½}φ‖²) for one kernel φ of degree n.
pub fn sector_ratio<const D: usize>(sign: Sign, phi: &ChaosKernel<D>, p: &ModelParams) -> f64 {
    let a = match sign {
        Sign::Plus => apply_aplus(phi, p),
        Sign::Minus => apply_aminus(phi, p),
    };
    let num = apply_l0_power(&a, -0.5).norm_sq();
    let den = p.lambda * p.lambda * phi.degree() as f64 * apply_l0_power(phi, 0.5).norm_sq();
    num / den
}
