use std::f64::consts::PI;

use llns::diffusivity::*;
use llns::divfree::{FrameRule, WaveVector};
use llns::fock::{random_kernel, sigma_kernel, Sign};
use llns::{ModelParams, Norm};

fn w3(c: [i32; 3]) -> WaveVector<3> {
    WaveVector::new(c).unwrap()
}

#[test]
fn d2_closed_form_chain() {
    for i in 1..=100 {
        let l = 0.1 * i as f64;
        let d = d2_effective_d(l);
        assert!((d - ((l * l / (8.0 * PI) + 1.0).sqrt() - 1.0)).abs() <= 1e-12);
        assert!((d - g_fn(2.0 * l * l)).abs() <= 1e-12);
        assert!((d - d_rep_d2(1.0 / (16.0 * PI), l)).abs() <= 1e-12);
    }
    assert!((d2_effective_d(1.0) - 0.019_700_3).abs() < 1e-7);
}

#[test]
fn replacement_fixed_point_identity() {
    for c in [1.0 / (16.0 * PI), F1_CLOSED, 0.3, 2.0] {
        for i in 0..=20 {
            let l = 0.25 * i as f64;
            let x = d_rep(c, l);
            assert!((x * (1.0 + x) - c * l * l).abs() <= 1e-14 * (1.0 + c * l * l));
            assert!(x >= 0.0);
        }
    }
    assert!((d_rep(F1_CLOSED, 1.0) - 0.069_449).abs() < 1e-6);
    assert!((nu_eff(2.0) - (1.0 + 4.0 / PI).sqrt()).abs() < 1e-15);
}

#[test]
fn g_solves_its_integral_equation() {
    assert!(g_ode_residual(100.0, 100).unwrap() <= 1e-8);
    // G(0) = 0 and G′(0) = 1/(32π)
    assert_eq!(g_fn(0.0), 0.0);
    let h = 1e-6;
    assert!(((g_fn(h) / h) - 1.0 / (32.0 * PI)).abs() < 1e-9);
}

#[test]
fn l_n_approaches_twice_lambda_squared() {
    let lam = 1.3;
    let x = 4.0 * PI * PI;
    let mut last = f64::INFINITY;
    for cutoff in [1e2, 1e4, 1e6] {
        let ln = l_n(x, llns::params::coupling(2, lam, cutoff), cutoff);
        let err = (ln - 2.0 * lam * lam).abs();
        // λ²(log(1+N²/x) − 2 log N)/log N = −λ² log x/log N + O(N⁻²)
        let tail = lam * lam * x / (cutoff * cutoff * cutoff.ln());
        assert!((err - lam * lam * x.ln() / cutoff.ln()).abs() <= tail + 1e-12);
        assert!(err < last);
        last = err;
    }
}

#[test]
fn corollary_inequality_and_second_order_gap() {
    let mc = f2_monte_carlo(&F2Config {
        samples: 200_000,
        batches: 32,
        seed: 3,
        norm: Norm::Euclidean,
    })
    .unwrap();
    let r = corollary_check(&lambda_grid(40, 4.0), mc.value, mc.stderr, 10.0);
    assert_eq!(r.rows.len(), 40);
    assert!(r.inequality_holds);
    assert!(r.second_order_differs);
    assert!(r.first_failure.is_none());
}

/// Pᴺ summed over m = k₁ − l with the angles taken from cross products.
fn pn_oracle(k1: [i32; 2], cutoff: f64, lambda: f64) -> f64 {
    let lam = llns::params::coupling(2, lambda, cutoff);
    let r = cutoff as i32 + 1;
    let k = [k1[0] as f64, k1[1] as f64];
    let kn2 = k[0] * k[0] + k[1] * k[1];
    let mut s = 0.0;
    for a in -r..=r {
        for b in -r..=r {
            let m = [a as f64, b as f64];
            let l = [k[0] - m[0], k[1] - m[1]];
            let m2 = m[0] * m[0] + m[1] * m[1];
            let l2 = l[0] * l[0] + l[1] * l[1];
            if m2 == 0.0 || l2 == 0.0 || m2.sqrt() > cutoff || l2.sqrt() > cutoff {
                continue;
            }
            let sin1 = (k[0] * m[1] - k[1] * m[0]).powi(2) / (kn2 * m2);
            let sin2 = (k[0] * l[1] - k[1] * l[0]).powi(2) / (kn2 * l2);
            let cos1 = (k[0] * m[0] + k[1] * m[1]) / (kn2 * m2).sqrt();
            let cos2 = (k[0] * l[0] + k[1] * l[1]) / (kn2 * l2).sqrt();
            let ang = sin1 - sin2 * (sin1 + (l2 / m2).sqrt() * cos1 * cos2);
            let x = 4.0 * PI * PI * (l2 + m2);
            let lx = lam * lam * (1.0 + cutoff * cutoff / x).ln();
            let g = (lx / (16.0 * PI) + 1.0).sqrt() - 1.0;
            s += ang / (x * (1.0 + g));
        }
    }
    lam * lam * s
}

#[test]
fn replacement_kernel_matches_an_independent_sum() {
    let p = ModelParams::new(2, 1.0, 64.0, 2).unwrap();
    for k in [[1, 0], [3, -2], [10, 7]] {
        let a = replacement_kernel_pn(&[k], &p).unwrap();
        let b = pn_oracle(k, 64.0, 1.0);
        assert!((a - b).abs() <= 1e-12 * b.abs(), "{k:?}: {a} vs {b}");
    }
    assert!(replacement_kernel_pn(&[[1, 0]], &ModelParams::new(3, 1.0, 2.5, 2).unwrap()).is_err());
    assert!(replacement_kernel_pn(&[[0, 0]], &p).is_err());
}

#[test]
fn replacement_constant_is_stable_in_n() {
    let cs: Vec<f64> = [32.0, 64.0, 128.0]
        .iter()
        .map(|&n| {
            let p = ModelParams::new(2, 1.0, n, 2).unwrap();
            fit_replacement_constant(&p, &default_samples(n)).unwrap().constant
        })
        .collect();
    let max = cs.iter().cloned().fold(f64::MIN, f64::max);
    let min = cs.iter().cloned().fold(f64::MAX, f64::min);
    assert!(max / min < 2.0, "{cs:?}");
}

#[test]
fn f1_routes_agree() {
    let (q, e) = f1_quadrature(&w3([1, 0, 0]), 1e-10).unwrap();
    assert!((q - F1_CLOSED).abs() <= 1e-6);
    assert!(e < 1e-6);
    let (q2, _) = f1_quadrature(&w3([1, 2, 2]), 1e-10).unwrap();
    assert!((q2 - F1_CLOSED).abs() <= 1e-6);
    assert!((f1_trig_quadrature(1e-10).unwrap() - F1_CLOSED).abs() <= 1e-6);
    assert!((f1_closed() - 0.074_272_3).abs() < 1e-7);
}

#[test]
fn f1_lattice_extrapolates_to_the_closed_form() {
    let k = w3([1, 0, 0]);
    let v = |n: f64| f1_lattice(&ModelParams::new(3, 1.0, n, 2).unwrap(), &k, 0).unwrap();
    let (a, b) = (v(24.5), v(48.5));
    assert!(a < b && b < F1_CLOSED);
    let x = richardson(24.5, a, 48.5, b);
    assert!((x - F1_CLOSED).abs() <= 0.005 * F1_CLOSED);
}

#[test]
fn lattice_sum_equals_operator_norm() {
    for n in [2.5, 4.5] {
        let p = ModelParams::new(3, 0.3, n, 2).unwrap();
        for (k, alpha) in [([1, 0, 0], 0), ([1, 1, 0], 1), ([1, 2, -1], 0)] {
            let a = f1_lattice(&p, &w3(k), alpha).unwrap();
            let b = f1_operator(&p, &w3(k), alpha);
            assert!((a - b).abs() <= 1e-12 * b, "{k:?}: {a} vs {b}");
        }
    }
}

#[test]
fn f2_monte_carlo_is_reproducible_and_in_range() {
    let cfg = F2Config {
        samples: 100_000,
        batches: 16,
        seed: 11,
        norm: Norm::Euclidean,
    };
    let a = f2_monte_carlo(&cfg).unwrap();
    let b = f2_monte_carlo(&cfg).unwrap();
    assert_eq!(a.value.to_bits(), b.value.to_bits());
    assert_eq!(a.stderr.to_bits(), b.stderr.to_bits());
    assert!(a.stderr > 0.0 && a.stderr < 0.05 * a.value);
    assert!((a.value - 0.00178).abs() < 5.0 * a.stderr + 1e-5);
    assert!(a.accepted <= a.proposed);
}

#[test]
fn f2_integrand_agrees_with_the_frame_sum() {
    let k = [1.0, 0.0, 0.0];
    let a = [0.0, 1.0, 0.0];
    for (x1, x2) in [
        ([0.3, -0.2, 0.5], [-0.1, 0.4, 0.2]),
        ([0.05, 0.6, -0.3], [0.2, -0.2, -0.1]),
    ] {
        let u = f2_integrand(&x1, &x2, &k, &a);
        let v = f2_integrand_frames(&x1, &x2, &k, &a);
        assert!((u - v).abs() <= 1e-10 * u.abs().max(1e-300));
    }
}

#[test]
fn expansion_terms_match_the_operator_norms() {
    let p = ModelParams::new(3, 1.0, 2.5, 3).unwrap();
    let k = w3([1, 0, 0]);
    let f1 = fl_lattice(1, &p, &k, 1 << 30).unwrap();
    assert!((f1.norm_sq - f1_operator(&p, &k, 0)).abs() <= 1e-14);
    assert!(f1.signed > 0.0);
    let f2 = fl_lattice(2, &p, &k, 1 << 30).unwrap();
    assert!((f2.norm_sq - f2_operator(&p, &k, 0)).abs() <= 1e-12 * f2.norm_sq);
    assert!(f2.signed < 0.0);
    assert!(matches!(fl_lattice(3, &p, &k, 1 << 30), Err(llns::Error::InvalidParam(_))));
    let big = ModelParams::new(3, 1.0, 8.5, 4).unwrap();
    assert!(matches!(fl_lattice(3, &big, &k, 1 << 10), Err(llns::Error::MemoryBudget { .. })));
}

#[test]
fn truncated_diffusivity_is_frame_independent_and_isotropic() {
    let p = ModelParams::new(3, 0.7, 2.5, 3).unwrap();
    let a = d_truncated(&p, &w3([1, 0, 0]), FrameRule::FirstCanonical).unwrap();
    let b = d_truncated(&p, &w3([1, 0, 0]), FrameRule::LastCanonical).unwrap();
    assert!((a.value - b.value).abs() <= 1e-8 * a.value);
    for k in [[0, 1, 0], [0, 0, 1]] {
        let c = d_truncated(&p, &w3(k), FrameRule::FirstCanonical).unwrap();
        assert!((a.value - c.value).abs() <= 1e-8 * a.value);
    }
    assert!(a.value > 0.0 && a.residual <= 1e-8);
    // n = 2 reduces to λ²‖T⁺σ‖²
    let p2 = ModelParams::new(3, 0.7, 2.5, 2).unwrap();
    let d2 = d_truncated(&p2, &w3([1, 0, 0]), FrameRule::FirstCanonical).unwrap();
    assert!((d2.value - 0.49 * f1_operator(&p2, &w3([1, 0, 0]), 0)).abs() <= 1e-14);
    // the higher truncation lowers the value
    assert!(a.value < d2.value);
}

#[test]
fn path_sums_are_hermitian_and_respect_momentum() {
    let p = ModelParams::new(3, 1.0, 4.5, 3).unwrap();
    let j = w3([1, 2, 3]);
    let x = path_sum(2, &p, (&j, 0), (&j, 1)).unwrap();
    let y = path_sum(2, &p, (&j, 1), (&j, 0)).unwrap();
    assert!((x - y.conj()).norm() <= 1e-14 * x.norm().max(1e-300));
    let d = path_sum(2, &p, (&j, 0), (&j, 0)).unwrap();
    assert!(d.re < 0.0 && d.im.abs() <= 1e-15);
    // the a = 2 diagonal is −‖T⁺σ‖²
    assert!((d.re + f1_operator(&p, &j, 0)).abs() <= 1e-14);
    assert_eq!(path_sum(2, &p, (&j, 0), (&w3([2, 3, -1]), 0)).unwrap().norm(), 0.0);
    assert!(path_sum(3, &p, (&j, 0), (&j, 0)).is_err());
}

#[test]
fn sector_ratio_on_a_single_mode_is_the_first_order_term() {
    let p = ModelParams::new(3, 0.4, 4.5, 3).unwrap();
    let k = w3([1, 1, 0]);
    let r = sector_ratio(Sign::Plus, &sigma_kernel(&k, 1), &p);
    assert!((r - f1_operator(&p, &k, 1)).abs() <= 1e-13);
    let mut worst = 0.0f64;
    for seed in 0..6 {
        let f = random_kernel(&p, 2, [1, 0, 0], 20, seed);
        worst = worst.max(sector_ratio(Sign::Plus, &f, &p));
        worst = worst.max(sector_ratio(Sign::Minus, &f, &p));
    }
    assert!(worst.is_finite() && worst > 0.0 && worst < 1.0);
}
