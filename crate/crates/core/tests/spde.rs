use std::f64::consts::PI;

use llns::spde::*;
use llns::stats::{ks_test, mean_stderr};
use llns::{Error, ModelParams, Norm};
use num_complex::Complex64;

const I: Complex64 = Complex64::new(0.0, 1.0);

fn modes3(lambda: f64, cutoff: f64) -> Modes<3> {
    let p = ModelParams::new(3, lambda, cutoff, 2).unwrap().with_norm(Norm::Sup);
    Modes::new(&p)
}

fn config(lambda: f64, ensemble: usize, horizon: f64) -> SimConfig {
    SimConfig {
        d: 3,
        lambda,
        cutoff: 2.5,
        norm: None,
        dt: None,
        horizon,
        ensemble,
        seed: 21,
        stride: 10,
        observe: vec![
            Observed { k: vec![1, 0, 0], alpha: 0 },
            Observed { k: vec![0, 1, 0], alpha: 1 },
        ],
    }
}

fn exp1(x: f64) -> f64 {
    if x <= 0.0 {
        0.0
    } else {
        -(-x).exp_m1()
    }
}

#[test]
fn invariant_state_moments() {
    let m = modes3(1.0, 2.5);
    let mut abs2 = Vec::new();
    let mut sq = Complex64::new(0.0, 0.0);
    for member in 0..200 {
        let st = sample_invariant_state(&m, 5, member);
        for z in &st.coeffs {
            abs2.push(z.norm_sqr());
            sq += z * z;
        }
    }
    let (mean, se) = mean_stderr(&abs2);
    assert!((mean - 1.0).abs() < 4.0 * se, "{mean} ± {se}");
    // circular: E u² = 0
    assert!(sq.norm() / (abs2.len() as f64) < 0.02);
    let (_, p) = ks_test(&abs2, exp1);
    assert!(p > 1e-3, "{p}");
}

// (u·∇)u evaluated on a real-space grid and transformed back, then projected.
#[test]
fn nonlinearity_matches_real_space_product() {
    let m = modes3(1.0, 2.5);
    let mut st = SpectralState::zero(&m);
    let p = [1, 0, 0];
    let q = [0, 1, 1];
    st.coeffs[m.index(&p, 0).unwrap()] = Complex64::new(0.4, -1.1);
    st.coeffs[m.index(&p, 1).unwrap()] = Complex64::new(0.3, 0.2);
    st.coeffs[m.index(&q, 0).unwrap()] = Complex64::new(-0.7, 0.5);
    st.coeffs[m.index(&q, 1).unwrap()] = Complex64::new(0.9, 0.6);

    let mut modes: Vec<([i32; 3], [Complex64; 3])> = Vec::new();
    for k in [p, q] {
        let o = m.positive().binary_search(&k).unwrap();
        let mut v = [Complex64::new(0.0, 0.0); 3];
        for a in 0..2 {
            let c = st.coeffs[m.index(&k, a).unwrap()];
            for l in 0..3 {
                v[l] += c * m.frame_vector(o, a)[l];
            }
        }
        modes.push((k, v));
        modes.push((k.map(|c| -c), v.map(|z| z.conj())));
    }

    let g = 10usize;
    let mut w = vec![[Complex64::new(0.0, 0.0); 3]; g * g * g];
    for (n, wx) in w.iter_mut().enumerate() {
        let x = [(n / (g * g)) as f64 / g as f64, ((n / g) % g) as f64 / g as f64, (n % g) as f64 / g as f64];
        let mut u = [Complex64::new(0.0, 0.0); 3];
        let mut du = [[Complex64::new(0.0, 0.0); 3]; 3];
        for (k, v) in &modes {
            let ph = (2.0 * PI * I * (k[0] as f64 * x[0] + k[1] as f64 * x[1] + k[2] as f64 * x[2])).exp();
            for l in 0..3 {
                u[l] += v[l] * ph;
                for mm in 0..3 {
                    du[mm][l] += 2.0 * PI * I * k[mm] as f64 * v[l] * ph;
                }
            }
        }
        for l in 0..3 {
            for mm in 0..3 {
                wx[l] += u[mm] * du[mm][l];
            }
        }
    }
    let b = nonlinearity_b(&st, &m);
    let mut scale = 0.0f64;
    let mut worst = 0.0f64;
    for (k, bk) in &b {
        let mut what = [Complex64::new(0.0, 0.0); 3];
        for (n, wx) in w.iter().enumerate() {
            let x = [(n / (g * g)) as f64, ((n / g) % g) as f64, (n % g) as f64];
            let ph = (-2.0 * PI * I * (k[0] as f64 * x[0] + k[1] as f64 * x[1] + k[2] as f64 * x[2]) / g as f64).exp();
            for l in 0..3 {
                what[l] += wx[l] * ph / (g * g * g) as f64;
            }
        }
        let kf = k.map(|c| c as f64);
        let k2: f64 = kf.iter().map(|c| c * c).sum();
        let kw: Complex64 = (0..3).map(|l| what[l] * kf[l]).sum();
        for l in 0..3 {
            let proj = what[l] - kw * kf[l] / k2;
            worst = worst.max((proj - bk[l]).norm());
            scale = scale.max(proj.norm());
        }
    }
    assert!(scale > 1.0, "oracle produced no interaction");
    assert!(worst <= 1e-11 * scale, "{worst} vs {scale}");
}

#[test]
fn nonlinearity_conserves_energy_per_evaluation() {
    for (d, cutoff) in [(2usize, 4.0), (3, 2.5), (3, 3.5)] {
        let p = ModelParams::new(d, 1.0, cutoff, 2).unwrap();
        for member in 0..5 {
            let (e, scale) = if d == 2 {
                let m = Modes::<2>::new(&p);
                let st = sample_invariant_state(&m, 9, member);
                let b = nonlinearity_coeffs(&st, &m);
                (energy_transfer(&st.coeffs, &b), st.coeffs.iter().zip(&b).map(|(u, v)| u.norm() * v.norm()).sum::<f64>())
            } else {
                let m = Modes::<3>::new(&p);
                let st = sample_invariant_state(&m, 9, member);
                let b = nonlinearity_coeffs(&st, &m);
                (energy_transfer(&st.coeffs, &b), st.coeffs.iter().zip(&b).map(|(u, v)| u.norm() * v.norm()).sum::<f64>())
            };
            assert!(e.abs() <= 1e-12 * scale, "d={d} N={cutoff}: {e} vs {scale}");
        }
    }
}

// At λ = 0 every coefficient is an exact OU process with rate (2π|k|)².
#[test]
fn linear_dynamics_has_ou_law() {
    let m = modes3(0.0, 2.5);
    let dt = 0.1 / (2.0 * PI * 2.5f64).powi(2);
    let (mid, end) = (40u64, 80u64);
    let picks: Vec<usize> = [[1, 0, 0], [1, 1, 0], [2, 1, -1], [0, 2, 2]]
        .iter()
        .flat_map(|k| [m.index(k, 0).unwrap(), m.index(k, 1).unwrap()])
        .collect();
    let members = 400u64;
    let mut stationary = vec![Vec::new(); picks.len()];
    let mut transition = vec![Vec::new(); picks.len()];
    for member in 0..members {
        let mut st = sample_invariant_state(&m, 13, member);
        let mut at_mid = Vec::new();
        for n in 0..end {
            step(&mut st, &m, dt, 13, member, n);
            if n + 1 == mid {
                at_mid = st.coeffs.clone();
            }
        }
        for (j, &i) in picks.iter().enumerate() {
            let k = m.positive()[i / 2];
            let gamma = 4.0 * PI * PI * k.iter().map(|&c| (c * c) as f64).sum::<f64>();
            let s = (end - mid) as f64 * dt;
            let r = (st.coeffs[i] - at_mid[i] * (-gamma * s).exp()) / (-(-2.0 * gamma * s).exp_m1()).sqrt();
            stationary[j].push(st.coeffs[i].norm_sqr());
            transition[j].push(r.norm_sqr());
        }
    }
    let tests = 2 * picks.len();
    let alpha = 0.01 / tests as f64;
    for (j, i) in picks.iter().enumerate() {
        let (_, p1) = ks_test(&stationary[j], exp1);
        let (_, p2) = ks_test(&transition[j], exp1);
        assert!(p1 > alpha && p2 > alpha, "coefficient {i}: p = {p1}, {p2}");
    }
}

// Exponential Euler with additive noise: halving δ with consistently coupled
// noise roughly halves the pathwise error.
#[test]
fn strong_error_decreases_with_step() {
    let p = ModelParams::new(2, 1.0, 4.0, 2).unwrap();
    let m = Modes::<2>::new(&p);
    let gammas: Vec<f64> = (0..m.len())
        .map(|i| 4.0 * PI * PI * m.positive()[i].iter().map(|&c| (c * c) as f64).sum::<f64>())
        .collect();
    let levels = 4;
    let coarse_dt = 4.0 / (2.0 * PI * 4.0f64).powi(2);
    let coarse_steps = 10usize;
    let fine = coarse_steps << levels;
    // noise at each level, built by combining pairs of finer increments
    let mut noise: Vec<Vec<Vec<Complex64>>> = vec![(0..fine as u64).map(|n| step_noise(&m, 3, 0, n)).collect()];
    for lev in 1..=levels {
        let h = coarse_dt / (1u64 << (levels - lev + 1)) as f64;
        let prev = noise.last().unwrap();
        let next = prev
            .chunks(2)
            .map(|pair| {
                (0..m.len())
                    .map(|i| {
                        let g = gammas[i];
                        let sh = (-(-2.0 * g * h).exp_m1()).sqrt();
                        let s2 = (-(-4.0 * g * h).exp_m1()).sqrt();
                        ((-g * h).exp() * pair[0][i] + pair[1][i]) * sh / s2
                    })
                    .collect()
            })
            .collect();
        noise.push(next);
    }
    let u0 = sample_invariant_state(&m, 3, 0);
    let solve = |lev: usize| {
        let dt = coarse_dt / (1u64 << (levels - lev)) as f64;
        let mut st = u0.clone();
        for xi in &noise[lev] {
            step_with_noise(&mut st, &m, dt, xi);
        }
        st.coeffs
    };
    let reference = solve(0);
    let err: Vec<f64> = (1..=levels)
        .map(|lev| solve(lev).iter().zip(&reference).map(|(a, b)| (a - b).norm()).fold(0.0, f64::max))
        .collect();
    // err[0] is the finest of the compared levels
    for w in err.windows(2) {
        assert!(w[1] > 1.4 * w[0], "{err:?}");
    }
}

#[test]
fn nonlinear_dynamics_stays_stationary() {
    let ens = run(&config(1.0, 16, 0.05)).unwrap();
    let (drift, se) = energy_drift(&ens);
    assert!(drift.abs() < 4.0 * se + 1e-3, "{drift} ± {se}");
    let all: Vec<f64> = ens.members.iter().flat_map(|t| t.energy.iter().copied()).collect();
    let mean = all.iter().sum::<f64>() / all.len() as f64;
    assert!((mean - 1.0).abs() < 0.05, "{mean}");
}

#[test]
fn ensemble_is_deterministic_across_thread_counts() {
    let cfg = config(1.0, 8, 0.01);
    let one = rayon::ThreadPoolBuilder::new().num_threads(1).build().unwrap();
    let three = rayon::ThreadPoolBuilder::new().num_threads(3).build().unwrap();
    let a = one.install(|| run(&cfg)).unwrap();
    let b = three.install(|| run(&cfg)).unwrap();
    assert_eq!(a.members, b.members);
    let mut csv_a = Vec::new();
    let mut csv_b = Vec::new();
    write_csv(&a, &mut csv_a).unwrap();
    write_csv(&b, &mut csv_b).unwrap();
    assert_eq!(csv_a, csv_b);
}

#[test]
fn green_kubo_vanishes_without_coupling() {
    let ens = run(&config(0.0, 8, 0.01)).unwrap();
    let est = green_kubo(&ens, &[0, 1]).unwrap();
    assert_eq!(est.value, 0.0);
    assert_eq!(est.samples, 8);
}

#[test]
fn green_kubo_refuses_small_ensembles() {
    let ens = run(&config(1.0, 7, 0.005)).unwrap();
    assert!(matches!(green_kubo(&ens, &[0]), Err(Error::Estimator(_))));
}

#[test]
fn autocorrelation_recovers_linear_rate() {
    let mut cfg = config(0.0, 256, 0.02);
    cfg.stride = 2;
    let ens = run(&cfg).unwrap();
    let est = mode_autocorr(&ens, &[0, 1], 40, 0.2).unwrap();
    // D = 0 at λ = 0
    assert!(est.value.abs() < 4.0 * est.stderr + 0.02, "{est:?}");
}

#[test]
fn blow_up_is_reported() {
    let mut cfg = config(1e200, 1, 0.01);
    cfg.stride = 1;
    match run(&cfg) {
        Err(Error::NonFinite { mode, .. }) => assert_eq!(mode.len(), 3),
        other => panic!("expected NonFinite, got {:?}", other.map(|e| e.members.len())),
    }
}
