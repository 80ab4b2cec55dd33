//! Closed-form constants and the replacement functions.

use std::f64::consts::PI;

use serde::Serialize;

use crate::quad::integrate;
use crate::Result;

/// First expansion coefficient in d = 3: 7/(30π).
pub const F1_CLOSED: f64 = 7.0 / (30.0 * PI);

/// Quoted numerical value of the second-order coefficient, 8.588/(2(2π)⁴).
pub const F2_QUOTED: f64 = 8.588 / (2.0 * 16.0 * PI * PI * PI * PI);

/// d = 2 effective diffusivity √(λ²/8π + 1) − 1.
pub fn d2_effective_d(lambda: f64) -> f64 {
    (lambda * lambda / (8.0 * PI) + 1.0).sqrt() - 1.0
}

/// G(x) = √(x/16π + 1) − 1.
pub fn g_fn(x: f64) -> f64 {
    (x / (16.0 * PI) + 1.0).sqrt() - 1.0
}

/// Lᴺ(x) = λ_N² log(1 + N²/x).
pub fn l_n(x: f64, lambda_n: f64, cutoff: f64) -> f64 {
    lambda_n * lambda_n * (cutoff * cutoff / x).ln_1p()
}

/// Positive root of x(1 + x) = cλ².
pub fn d_rep(c: f64, lambda: f64) -> f64 {
    let q = 4.0 * c * lambda * lambda;
    // q/(1+√(1+q)) avoids cancellation at small λ
    0.5 * q / (1.0 + (1.0 + q).sqrt())
}

/// d = 2 replacement value √(2cλ² + 1) − 1, i.e. G(2λ²) when c = 1/(16π).
pub fn d_rep_d2(c: f64, lambda: f64) -> f64 {
    let q = 2.0 * c * lambda * lambda;
    q / (1.0 + (1.0 + q).sqrt())
}

/// Conjectured effective viscosity √(1 + λ²/π).
pub fn nu_eff(lambda: f64) -> f64 {
    (1.0 + lambda * lambda / PI).sqrt()
}

/// max over a grid on [0, x_max] of |G(x) − (1/32π)∫₀ˣ dt/(1+G(t))|.
pub fn g_ode_residual(x_max: f64, points: usize) -> Result<f64> {
    let mut worst = 0.0f64;
    for i in 0..=points {
        let x = x_max * i as f64 / points as f64;
        let (v, _) = integrate(|t| 1.0 / (1.0 + g_fn(t)), 0.0, x, 1e-13, 1e-13)?;
        worst = worst.max((g_fn(x) - v / (32.0 * PI)).abs());
    }
    Ok(worst)
}

/// One row of the corollary comparison table.
#[derive(Debug, Clone, Serialize)]
pub struct CorollaryRow {
    pub lambda: f64,
    pub first_order: f64,
    pub nu_eff_minus_one: f64,
    pub holds: bool,
}

/// Outcome of the two corollary checks.
#[derive(Debug, Clone, Serialize)]
pub struct CorollaryReport {
    pub rows: Vec<CorollaryRow>,
    pub inequality_holds: bool,
    pub f2: f64,
    pub f2_stderr: f64,
    pub f1_squared: f64,
    /// |f₂ − f₁²| in units of the f₂ standard error.
    pub margin_in_stderr: f64,
    pub second_order_differs: bool,
    pub first_failure: Option<f64>,
}

/// Checks 7λ²/(30π) < ν_eff − 1 on `grid` and that f₂ differs from f₁² by more
/// than `sigmas` standard errors.
pub fn corollary_check(grid: &[f64], f2: f64, f2_stderr: f64, sigmas: f64) -> CorollaryReport {
    let rows: Vec<CorollaryRow> = grid
        .iter()
        .map(|&l| {
            let a = F1_CLOSED * l * l;
            let b = nu_eff(l) - 1.0;
            CorollaryRow {
                lambda: l,
                first_order: a,
                nu_eff_minus_one: b,
                holds: a < b,
            }
        })
        .collect();
    let first_failure = rows.iter().find(|r| !r.holds).map(|r| r.lambda);
    let f1_squared = F1_CLOSED * F1_CLOSED;
    let margin = (f2 - f1_squared).abs() / f2_stderr;
    CorollaryReport {
        inequality_holds: first_failure.is_none(),
        rows,
        f2,
        f2_stderr,
        f1_squared,
        margin_in_stderr: margin,
        second_order_differs: margin > sigmas,
        first_failure,
    }
}

/// Evenly spaced grid of `n` points on (0, max].
pub fn lambda_grid(n: usize, max: f64) -> Vec<f64> {
    (1..=n).map(|i| max * i as f64 / n as f64).collect()
}
