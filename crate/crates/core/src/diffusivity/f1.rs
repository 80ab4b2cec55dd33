//! First expansion coefficient f₁ = lim ‖T^{N,+,*}σ_{k,1}‖² (d = 3).

use std::f64::consts::PI;

use super::closed::F1_CLOSED;
use crate::divfree::{dot, frame, leray_raw, mat_vec, norm2, sub, to_f64, WaveVector};
use crate::quad::integrate;
use crate::{Error, ModelParams, Result};

pub fn f1_closed() -> f64 {
    F1_CLOSED
}

fn leray_f(x: &[f64; 3]) -> [[f64; 3]; 3] {
    let n2 = dot(x, x);
    let mut m = [[0.0; 3]; 3];
    for i in 0..3 {
        for j in 0..3 {
            m[i][j] = f64::from(u8::from(i == j)) - x[i] * x[j] / n2;
        }
    }
    m
}

/// Vector-form integrand on the unit sphere: |P(x)k|²|P(x)a|² + (k·P(x)a)².
fn sphere_integrand(x: &[f64; 3], k: &[f64; 3], a: &[f64; 3]) -> f64 {
    let p = leray_f(x);
    let pk = mat_vec(&p, k);
    let pa = mat_vec(&p, a);
    dot(&pk, &pk) * dot(&pa, &pa) + dot(k, &pa).powi(2)
}

/// (1/((2π)²|k|²)) ∫_{|x|≤1} [|P(x)k|²|P(x)a_{k,1}|² + (k·P(x)a_{k,1})²]/(2|x|²) dx
/// by nested adaptive quadrature in spherical coordinates. The radial factor
/// integrates to 1.
pub fn f1_quadrature(k: &WaveVector<3>, tol: f64) -> Result<(f64, f64)> {
    let kf = to_f64(k.components());
    let fr = frame(k);
    let a = *fr.vector(0);
    let mut inner_err = 0.0f64;
    let mut failure: Option<Error> = None;
    let outer = |theta: f64| {
        let (st, ct) = theta.sin_cos();
        let g = |phi: f64| {
            let (sp, cp) = phi.sin_cos();
            sphere_integrand(&[st * cp, st * sp, ct], &kf, &a)
        };
        match integrate(g, 0.0, 2.0 * PI, tol * 1e-2, tol * 1e-2) {
            Ok((v, e)) => {
                inner_err = inner_err.max(e);
                v * st
            }
            Err(err) => {
                failure.get_or_insert(err);
                f64::NAN
            }
        }
    };
    let (v, e) = integrate(outer, 0.0, PI, tol, tol)?;
    if let Some(err) = failure {
        return Err(err);
    }
    let scale = 1.0 / (2.0 * 4.0 * PI * PI * dot(&kf, &kf));
    Ok((v * scale, (e + PI * inner_err) * scale))
}

/// The reduced three-fold form
/// (1/(2(2π)²)) ∫₀^{2π}∫₀^π∫₀¹ sin³θ₁(1 + cos2θ₁cos²θ₂) dr dθ₁ dθ₂.
pub fn f1_trig_quadrature(tol: f64) -> Result<f64> {
    let mut failure: Option<Error> = None;
    let mut fold = |t2: f64| {
        let c2 = t2.cos().powi(2);
        let mid = |t1: f64| {
            let s = t1.sin();
            let val = s * s * s * (1.0 + (2.0 * t1).cos() * c2);
            integrate(|_r| val, 0.0, 1.0, tol * 1e-2, tol * 1e-2).map(|x| x.0).unwrap_or(f64::NAN)
        };
        match integrate(mid, 0.0, PI, tol * 1e-1, tol * 1e-1) {
            Ok((v, _)) => v,
            Err(err) => {
                failure.get_or_insert(err);
                f64::NAN
            }
        }
    };
    let (v, _) = integrate(&mut fold, 0.0, 2.0 * PI, tol, tol)?;
    if let Some(err) = failure {
        return Err(err);
    }
    Ok(v / (2.0 * 4.0 * PI * PI))
}

/// Pre-limit lattice sum with λ = 1:
/// λ_N²/((2π)²|k|²) Σ_p ℛᴺ_{p,k−p}(|P(p)k|²|P(k−p)a|² + (k·P(p)a)(k·P(k−p)a))/(|p|²+|k−p|²).
pub fn f1_lattice(p: &ModelParams, k: &WaveVector<3>, alpha: usize) -> Result<f64> {
    if p.d != 3 {
        return Err(Error::InvalidParam("f1_lattice is defined for d = 3".into()));
    }
    let p = p.with_lambda(1.0);
    let kc = *k.components();
    if !p.in_ball(&kc) {
        return Ok(0.0);
    }
    let kf = to_f64(&kc);
    let a = *frame(k).vector(alpha);
    let ball = p.ball_points::<3>();
    let sum = crate::det_sum(&ball, |q| {
        let r = sub(&kc, q);
        if r == [0, 0, 0] || !p.in_ball(&r) {
            return 0.0;
        }
        let pq = leray_raw(q);
        let pr = leray_raw(&r);
        let u = mat_vec(&pq, &kf);
        let w = mat_vec(&pr, &a);
        let num = dot(&u, &u) * dot(&w, &w) + dot(&kf, &mat_vec(&pq, &a)) * dot(&kf, &mat_vec(&pr, &a));
        num / (norm2(q) + norm2(&r))
    });
    let lam = p.lambda_n();
    Ok(lam * lam * sum / (4.0 * PI * PI * dot(&kf, &kf)))
}

/// Two-point Richardson extrapolation assuming an O(1/N) error.
pub fn richardson(n1: f64, v1: f64, n2: f64, v2: f64) -> f64 {
    (n2 * v2 - n1 * v1) / (n2 - n1)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn trig_form_matches_closed() {
        let v = f1_trig_quadrature(1e-10).unwrap();
        assert!((v - F1_CLOSED).abs() < 1e-9, "{v}");
    }

    #[test]
    fn sphere_form_is_direction_free() {
        for c in [[1, 0, 0], [1, 2, 3], [0, -1, 1]] {
            let (v, _) = f1_quadrature(&WaveVector::new(c).unwrap(), 1e-9).unwrap();
            assert!((v - F1_CLOSED).abs() < 1e-7, "{c:?} {v}");
        }
    }

    #[test]
    fn richardson_removes_first_order_term() {
        let f = |n: f64| 2.0 + 3.0 / n;
        assert!((richardson(10.0, f(10.0), 20.0, f(20.0)) - 2.0).abs() < 1e-14);
    }
}
