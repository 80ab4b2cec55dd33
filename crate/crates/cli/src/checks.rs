//! The verification suite behind `llns verify`.

use std::f64::consts::PI;

use num_complex::Complex64;
use serde::Serialize;
use serde_json::json;

use llns::diffusivity::{
    corollary_check, d2_effective_d, d_rep_d2, default_samples, f2_monte_carlo, fit_replacement_constant, g_fn,
    g_ode_residual, lambda_grid, path_sum, richardson, F2Config, F1_CLOSED,
};
use llns::divfree::WaveVector;
use llns::fock::{
    apply_aminus, apply_aplus, apply_momentum, fiber_keys, random_kernel, ChaosKernel,
};
use llns::{ModelParams, Norm};

#[derive(Debug, Clone, Serialize)]
pub struct CheckResult {
    pub name: String,
    pub passed: bool,
    pub detail: String,
    pub metrics: serde_json::Value,
}

impl CheckResult {
    fn new(name: &str, passed: bool, detail: String, metrics: serde_json::Value) -> Self {
        CheckResult {
            name: name.into(),
            passed,
            detail,
            metrics,
        }
    }

    fn error(name: &str, e: impl std::fmt::Display) -> Self {
        Self::new(name, false, format!("error: {e}"), serde_json::Value::Null)
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct CheckOptions {
    pub replacement_cutoffs: Vec<f64>,
    pub decoupling_cutoffs: Vec<f64>,
    pub mc_samples: u64,
    pub seed: u64,
}

impl Default for CheckOptions {
    fn default() -> Self {
        CheckOptions {
            replacement_cutoffs: vec![64.0, 128.0, 256.0, 512.0],
            decoupling_cutoffs: vec![4.5, 8.5, 16.5],
            mc_samples: 2_000_000,
            seed: 7,
        }
    }
}

pub const ALL_CHECKS: [&str; 11] = [
    "closed-form",
    "g-ode",
    "adjointness",
    "commutation",
    "preservation",
    "skew",
    "dense-oracle",
    "sector",
    "replacement",
    "corollary",
    "decoupling",
];

pub fn run_check(name: &str, opts: &CheckOptions) -> Option<CheckResult> {
    Some(match name {
        "closed-form" => closed_form(),
        "g-ode" => g_ode(),
        "adjointness" => adjointness(opts.seed),
        "commutation" => commutation(opts.seed),
        "preservation" => preservation(opts.seed),
        "skew" => skew(opts.seed),
        "dense-oracle" => dense_oracle(opts.seed),
        "sector" => sector(opts.seed),
        "replacement" => replacement(&opts.replacement_cutoffs),
        "corollary" => corollary(opts.mc_samples, opts.seed),
        "decoupling" => decoupling(&opts.decoupling_cutoffs),
        _ => return None,
    })
}

fn rel(a: Complex64, b: Complex64) -> f64 {
    let s = a.norm().max(b.norm());
    if s == 0.0 {
        0.0
    } else {
        (a - b).norm() / s
    }
}

pub fn closed_form() -> CheckResult {
    let mut worst_g = 0.0f64;
    let mut worst_rep = 0.0f64;
    let mut worst_formula = 0.0f64;
    for i in 1..=100 {
        let l = 0.1 * i as f64;
        let d = d2_effective_d(l);
        worst_formula = worst_formula.max((d - ((l * l / (8.0 * PI) + 1.0).sqrt() - 1.0)).abs());
        worst_g = worst_g.max((d - g_fn(2.0 * l * l)).abs());
        worst_rep = worst_rep.max((d - d_rep_d2(1.0 / (16.0 * PI), l)).abs());
    }
    let passed = worst_formula <= 1e-12 && worst_g <= 1e-12 && worst_rep <= 1e-12;
    CheckResult::new(
        "closed-form",
        passed,
        format!("max |D − formula| = {worst_formula:.2e}, |D − G(2λ²)| = {worst_g:.2e}, |D − D_rep(1/16π)| = {worst_rep:.2e}"),
        json!({"formula": worst_formula, "g_chain": worst_g, "d_rep": worst_rep}),
    )
}

pub fn g_ode() -> CheckResult {
    match g_ode_residual(100.0, 200) {
        Ok(r) => CheckResult::new("g-ode", r <= 1e-8, format!("max residual {r:.2e} on [0,100]"), json!({"residual": r})),
        Err(e) => CheckResult::error("g-ode", e),
    }
}

fn small_params(d: usize, lambda: f64) -> ModelParams {
    let n = if d == 2 { 3.0 } else { 2.5 };
    ModelParams::new(d, lambda, n, 4).expect("valid parameters")
}

fn adjointness_d<const D: usize>(total: [i32; D], seed: u64) -> f64 {
    let p = small_params(D, 0.8);
    let mut worst = 0.0f64;
    for n in 1..=3 {
        let f = random_kernel(&p, n, total, 25, seed + n as u64);
        let g = random_kernel(&p, n + 1, total, 25, seed + 100 + n as u64);
        let a = apply_aplus(&f, &p).inner(&g);
        let b = f.inner(&apply_aminus(&g, &p));
        worst = worst.max(rel(a, -b));
    }
    worst
}

pub fn adjointness(seed: u64) -> CheckResult {
    let e2 = adjointness_d([1, 1], seed);
    let e3 = adjointness_d([1, 0, 0], seed);
    let w = e2.max(e3);
    CheckResult::new(
        "adjointness",
        w <= 1e-11,
        format!("max relative |⟨A₊f,g⟩ + ⟨f,A₋g⟩| = {w:.2e} (d=2 {e2:.1e}, d=3 {e3:.1e}), degrees 1..4"),
        json!({"d2": e2, "d3": e3}),
    )
}

fn commutation_d<const D: usize>(total: [i32; D], seed: u64) -> (f64, bool) {
    let p = small_params(D, 1.0);
    let mut worst = 0.0f64;
    let mut consistent = true;
    for n in 1..=3 {
        let f = random_kernel(&p, n, total, 20, seed + n as u64);
        for up in [true, false] {
            let op = |g: &ChaosKernel<D>| if up { apply_aplus(g, &p) } else { apply_aminus(g, &p) };
            let af = op(&f);
            consistent &= af.momentum_consistent();
            for i in 0..D {
                let x = apply_momentum(i, &af);
                let y = op(&apply_momentum(i, &f));
                let scale = x.max_abs().max(y.max_abs()).max(1e-300);
                worst = worst.max(x.max_abs_diff(&y) / scale);
            }
        }
    }
    (worst, consistent)
}

pub fn commutation(seed: u64) -> CheckResult {
    let (e2, c2) = commutation_d([1, 1], seed);
    let (e3, c3) = commutation_d([1, 1, 0], seed);
    let w = e2.max(e3);
    CheckResult::new(
        "commutation",
        w <= 1e-12 && c2 && c3,
        format!("max coefficientwise |M_i A± − A± M_i| = {w:.2e}; outputs stay on the fiber: {}", c2 && c3),
        json!({"d2": e2, "d3": e3}),
    )
}

fn preservation_d<const D: usize>(total: [i32; D], seed: u64) -> (f64, f64, usize) {
    let p = small_params(D, 1.0);
    let mut sym = 0.0f64;
    let mut div = 0.0f64;
    let mut tested = 0;
    for n in 1..=3 {
        let len = fiber_keys(&p, n, total).len();
        if len > 500 {
            continue;
        }
        // every tuple of the fiber carries a random block
        let f = random_kernel(&p, n, total, len, seed + n as u64);
        for out in [apply_aplus(&f, &p), apply_aminus(&f, &p)] {
            if out.is_empty() {
                continue;
            }
            sym = sym.max(out.symmetry_defect() / out.max_abs());
            div = div.max(out.divergence_defect());
        }
        tested += 1;
    }
    (sym, div, tested)
}

pub fn preservation(seed: u64) -> CheckResult {
    let (s2, d2, t2) = preservation_d([1, 1], seed);
    let (s3, d3, t3) = preservation_d([1, 0, 0], seed);
    let s = s2.max(s3);
    let d = d2.max(d3);
    CheckResult::new(
        "preservation",
        s <= 1e-12 && d <= 1e-12 && t2 > 0 && t3 > 0,
        format!("symmetry defect {s:.2e}, divergence defect {d:.2e} over {} full fibers", t2 + t3),
        json!({"symmetry": s, "divergence": d, "fibers": t2 + t3}),
    )
}

fn skew_d<const D: usize>(total: [i32; D], seed: u64) -> f64 {
    let p = small_params(D, 1.0);
    let f2 = random_kernel(&p, 2, total, 40, seed);
    let f3 = random_kernel(&p, 3, total, 40, seed + 1);
    // ⟨f, (A₊ + A₋) f⟩ for f = f₂ + f₃ restricted to degrees 2..3
    let a = f2.inner(&apply_aminus(&f3, &p));
    let b = f3.inner(&apply_aplus(&f2, &p));
    (a + b).re.abs() / a.norm().max(b.norm()).max(1e-300)
}

pub fn skew(seed: u64) -> CheckResult {
    let e = skew_d([1, 1], seed).max(skew_d([1, 0, 0], seed));
    CheckResult::new("skew", e <= 1e-12, format!("relative |Re⟨f, A f⟩| = {e:.2e}"), json!({"relative": e}))
}

// Direct evaluation of the generator formulas on single tuples, written
// independently of the library operators.
mod oracle {
    use super::*;

    fn proj<const D: usize>(k: &[i32; D]) -> [[f64; D]; D] {
        let n2: f64 = k.iter().map(|&c| (c as f64).powi(2)).sum();
        let mut m = [[0.0; D]; D];
        for (i, row) in m.iter_mut().enumerate() {
            for (j, x) in row.iter_mut().enumerate() {
                *x = if i == j { 1.0 } else { 0.0 } - k[i] as f64 * k[j] as f64 / n2;
            }
        }
        m
    }

    fn add<const D: usize>(a: &[i32; D], b: &[i32; D]) -> [i32; D] {
        std::array::from_fn(|i| a[i] + b[i])
    }

    fn nonzero<const D: usize>(k: &[i32; D]) -> bool {
        k.iter().any(|&c| c != 0)
    }

    fn r<const D: usize>(p: &ModelParams, a: &[i32; D], b: &[i32; D]) -> bool {
        p.in_ball(a) && p.in_ball(b) && p.in_ball(&add(a, b))
    }

    /// (𝒜₊φ)(l, k) for a tuple of length n+1.
    pub fn aplus<const D: usize>(phi: &ChaosKernel<D>, p: &ModelParams, ls: &[usize], ks: &[[i32; D]]) -> Complex64 {
        let m = ks.len();
        let n = m - 1;
        let mut s = Complex64::new(0.0, 0.0);
        for i in 0..m {
            for j in 0..m {
                if i == j || !r(p, &ks[i], &ks[j]) {
                    continue;
                }
                let sum = add(&ks[i], &ks[j]);
                if !nonzero(&sum) {
                    continue;
                }
                let pi = proj(&ks[i]);
                let pj = proj(&ks[j]);
                let first: f64 = (0..D).map(|c| pi[ls[i]][c] * sum[c] as f64).sum();
                let mut rest_l = Vec::with_capacity(n);
                let mut rest_k = Vec::with_capacity(n);
                rest_l.push(0);
                rest_k.push(sum);
                for t in 0..m {
                    if t != i && t != j {
                        rest_l.push(ls[t]);
                        rest_k.push(ks[t]);
                    }
                }
                let mut second = Complex64::new(0.0, 0.0);
                for t in 0..D {
                    rest_l[0] = t;
                    second += phi.value(&rest_l, &rest_k) * pj[ls[j]][t];
                }
                s += second * first;
            }
        }
        s * Complex64::new(0.0, 2.0 * PI * p.lambda_n() / (n as f64 + 1.0))
    }

    /// (𝒜₋φ)(l, k) for a tuple of length n−1.
    pub fn aminus<const D: usize>(phi: &ChaosKernel<D>, p: &ModelParams, ls: &[usize], ks: &[[i32; D]]) -> Complex64 {
        let m = ks.len();
        let n = m + 1;
        let ball = p.ball_points::<D>();
        let mut s = Complex64::new(0.0, 0.0);
        for j in 0..m {
            let kj = ks[j];
            let pj = proj(&kj);
            for q in &ball {
                let pp: [i32; D] = std::array::from_fn(|c| kj[c] - q[c]);
                if !nonzero(&pp) || !r(p, &pp, q) {
                    continue;
                }
                let mut rest_l = vec![0, 0];
                let mut rest_k = vec![pp, *q];
                for t in 0..m {
                    if t != j {
                        rest_l.push(ls[t]);
                        rest_k.push(ks[t]);
                    }
                }
                for i in 0..D {
                    if kj[i] == 0 {
                        continue;
                    }
                    for t in 0..D {
                        if pj[ls[j]][t] == 0.0 {
                            continue;
                        }
                        rest_l[0] = t;
                        rest_l[1] = i;
                        s += phi.value(&rest_l, &rest_k) * (kj[i] as f64 * pj[ls[j]][t]);
                    }
                }
            }
        }
        s * Complex64::new(0.0, 2.0 * PI * p.lambda_n() * n as f64)
    }
}

pub use oracle::{aminus as oracle_aminus, aplus as oracle_aplus};

fn all_components<const D: usize>(n: usize) -> Vec<Vec<usize>> {
    (0..D.pow(n as u32))
        .map(|mut c| {
            let mut ls = vec![0; n];
            for s in (0..n).rev() {
                ls[s] = c % D;
                c /= D;
            }
            ls
        })
        .collect()
}

fn dense_oracle_d<const D: usize>(p: &ModelParams, total: [i32; D], seed: u64) -> (f64, usize) {
    let mut worst = 0.0f64;
    let mut count = 0;
    let f = random_kernel(p, 2, total, usize::MAX, seed);
    let g = random_kernel(p, 3, total, 60, seed + 1);
    let af = apply_aplus(&f, p);
    let ag = apply_aminus(&g, p);
    let scale_p = af.max_abs().max(1e-300);
    let scale_m = ag.max_abs().max(1e-300);
    for (deg, lib, src, up, scale) in [(3, &af, &f, true, scale_p), (2, &ag, &g, false, scale_m)] {
        for key in fiber_keys(p, deg, total) {
            for ls in all_components::<D>(deg) {
                let want = if up { oracle::aplus(src, p, &ls, &key) } else { oracle::aminus(src, p, &ls, &key) };
                let got = lib.value(&ls, &key);
                worst = worst.max((want - got).norm() / scale);
                count += 1;
            }
        }
    }
    let g2 = random_kernel(p, 2, total, usize::MAX, seed + 2);
    let ag2 = apply_aminus(&g2, p);
    let scale = ag2.max_abs().max(1e-300);
    for ls in all_components::<D>(1) {
        let want = oracle::aminus(&g2, p, &ls, &[total]);
        worst = worst.max((want - ag2.value(&ls, &[total])).norm() / scale);
        count += 1;
    }
    (worst, count)
}

pub fn dense_oracle(seed: u64) -> CheckResult {
    let p2 = ModelParams::new(2, 0.7, 2.0, 3).expect("valid");
    let p3 = ModelParams::new(3, 0.7, 1.5, 3).expect("valid");
    let (e2, c2) = dense_oracle_d(&p2, [1, 0], seed);
    let (e3, c3) = dense_oracle_d(&p3, [1, 0, 0], seed);
    let w = e2.max(e3);
    CheckResult::new(
        "dense-oracle",
        w <= 1e-12,
        format!("max deviation from the direct formulas {w:.2e} over {} components", c2 + c3),
        json!({"d2": e2, "d3": e3, "components": c2 + c3}),
    )
}

/// Largest sector ratio over random kernels of degrees 1..3 at one cutoff.
pub fn sector_constant(cutoff: f64, seed: u64) -> f64 {
    use llns::diffusivity::sector_ratio;
    use llns::fock::Sign;
    let p = ModelParams::new(3, 1.0, cutoff, 4).expect("valid");
    let mut worst = 0.0f64;
    for n in 1..=3 {
        for s in 0..4 {
            let f = random_kernel(&p, n, [1, 0, 0], 20, seed + 10 * n as u64 + s);
            worst = worst.max(sector_ratio(Sign::Plus, &f, &p));
            if n > 1 {
                worst = worst.max(sector_ratio(Sign::Minus, &f, &p));
            }
        }
    }
    worst
}

pub fn sector(seed: u64) -> CheckResult {
    let cs: Vec<(f64, f64)> = [2.5, 4.5].iter().map(|&n| (n, sector_constant(n, seed))).collect();
    let ratio = cs[1].1 / cs[0].1;
    CheckResult::new(
        "sector",
        cs.iter().all(|c| c.1.is_finite()) && ratio < 2.0,
        format!("fitted C = {:.4} (N=2.5), {:.4} (N=4.5)", cs[0].1, cs[1].1),
        json!({"constants": cs}),
    )
}

pub fn replacement(cutoffs: &[f64]) -> CheckResult {
    let mut rows = Vec::new();
    for &n in cutoffs {
        let p = match ModelParams::new(2, 1.0, n, 2) {
            Ok(p) => p,
            Err(e) => return CheckResult::error("replacement", e),
        };
        match fit_replacement_constant(&p, &default_samples(n)) {
            Ok(f) => rows.push(f),
            Err(e) => return CheckResult::error("replacement", e),
        }
    }
    let cs: Vec<f64> = rows.iter().map(|r| r.constant).collect();
    let max = cs.iter().cloned().fold(f64::MIN, f64::max);
    let min = cs.iter().cloned().fold(f64::MAX, f64::min);
    let detail = rows
        .iter()
        .map(|r| format!("N={} C={:.4}", r.cutoff, r.constant))
        .collect::<Vec<_>>()
        .join(", ");
    CheckResult::new(
        "replacement",
        !cs.is_empty() && max / min < 2.0,
        format!("{detail}; spread {:.3}", max / min),
        json!({"fits": rows}),
    )
}

pub fn corollary(samples: u64, seed: u64) -> CheckResult {
    let mc = match f2_monte_carlo(&F2Config {
        samples,
        seed,
        ..F2Config::default()
    }) {
        Ok(m) => m,
        Err(e) => return CheckResult::error("corollary", e),
    };
    let r = corollary_check(&lambda_grid(40, 4.0), mc.value, mc.stderr, 10.0);
    CheckResult::new(
        "corollary",
        r.inequality_holds && r.second_order_differs,
        format!(
            "7λ²/(30π) < ν_eff − 1 on 40 points: {}; f₂ = {:.6} ± {:.1e} vs f₁² = {:.6} ({:.0} stderr apart)",
            r.inequality_holds, r.f2, r.f2_stderr, r.f1_squared, r.margin_in_stderr
        ),
        serde_json::to_value(&r).unwrap_or_default(),
    )
}

/// Path-sum decoupling data at one cutoff.
#[derive(Debug, Clone, Serialize)]
pub struct DecouplingRow {
    pub cutoff: f64,
    /// |⟨σ_{j,2}, T⁻T⁺σ_{j,1}⟩| for generic j.
    pub off_diagonal: Vec<f64>,
    /// ⟨σ_{j',t}, T⁻T⁺σ_{j,t}⟩ with j' ≠ j.
    pub cross_momentum: f64,
    /// Diagonal values for (3,0,0), (2,2,1), (1,2,3), (2,3,−1), both α.
    pub diagonal: Vec<f64>,
    /// Diagonal value at j = (1,0,0).
    pub axis: f64,
}

pub const GENERIC: [[i32; 3]; 2] = [[1, 2, 3], [2, 3, -1]];
pub const EQUAL_NORM_GROUPS: [[[i32; 3]; 2]; 2] = [[[3, 0, 0], [2, 2, 1]], [[1, 2, 3], [2, 3, -1]]];

pub fn decoupling_row(cutoff: f64) -> llns::Result<DecouplingRow> {
    let p = ModelParams::new(3, 1.0, cutoff, 3)?.with_norm(Norm::Euclidean);
    let w = |c: [i32; 3]| WaveVector::new(c).expect("nonzero");
    let mut off = Vec::new();
    for j in GENERIC {
        off.push(path_sum(2, &p, (&w(j), 0), (&w(j), 1))?.norm());
    }
    let cross = path_sum(2, &p, (&w([1, 2, 3]), 0), (&w([2, 3, -1]), 0))?.norm();
    let mut diagonal = Vec::new();
    for group in EQUAL_NORM_GROUPS {
        for j in group {
            for t in 0..2 {
                diagonal.push(path_sum(2, &p, (&w(j), t), (&w(j), t))?.re);
            }
        }
    }
    let axis = path_sum(2, &p, (&w([1, 0, 0]), 0), (&w([1, 0, 0]), 0))?.re;
    Ok(DecouplingRow {
        cutoff,
        off_diagonal: off,
        cross_momentum: cross,
        diagonal,
        axis,
    })
}

/// Largest relative spread of the diagonal values within each equal-|j| group.
pub fn diagonal_spread(row: &DecouplingRow) -> f64 {
    row.diagonal
        .chunks(4)
        .map(|g| {
            let max = g.iter().cloned().fold(f64::MIN, f64::max);
            let min = g.iter().cloned().fold(f64::MAX, f64::min);
            (max - min) / min.abs().max(max.abs())
        })
        .fold(0.0, f64::max)
}

pub fn decoupling(cutoffs: &[f64]) -> CheckResult {
    let mut rows = Vec::new();
    for &n in cutoffs {
        match decoupling_row(n) {
            Ok(r) => rows.push(r),
            Err(e) => return CheckResult::error("decoupling", e),
        }
    }
    if rows.len() < 2 {
        return CheckResult::error("decoupling", "needs at least two cutoffs");
    }
    let decreasing = (0..GENERIC.len()).all(|i| rows.windows(2).all(|w| w[1].off_diagonal[i] < w[0].off_diagonal[i]));
    let cross_zero = rows.iter().all(|r| r.cross_momentum == 0.0);
    let last = rows.last().expect("rows");
    let spread = diagonal_spread(last);
    let a = &rows[rows.len() - 2];
    let limit = richardson(a.cutoff, a.axis, last.cutoff, last.axis);
    let limit_err = (limit + F1_CLOSED).abs() / F1_CLOSED;
    let ratios: Vec<String> = rows.iter().map(|r| format!("{:.3e}", r.off_diagonal[0] / r.axis.abs())).collect();
    CheckResult::new(
        "decoupling",
        decreasing && cross_zero && spread <= 1e-2 && limit_err <= 0.02,
        format!(
            "off/diag ratios [{}]; decreasing: {decreasing}; diagonal spread at N={} {spread:.2e}; extrapolated diagonal {limit:.5} vs −7/(30π) ({:.2}%)",
            ratios.join(", "),
            last.cutoff,
            100.0 * limit_err
        ),
        json!({"rows": rows, "spread": spread, "limit": limit}),
    )
}
