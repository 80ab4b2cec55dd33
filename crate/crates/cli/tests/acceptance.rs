//! Acceptance run: one PASS/FAIL line per criterion. Exits nonzero only when a
//! criterion outside `KNOWN_FAILURES` fails.

use std::path::Path;
use std::process::{Command, ExitCode};
use std::time::Instant;

use llns::diffusivity::*;
use llns::divfree::{FrameRule, WaveVector};
use llns::fock::{
    apply_aminus, apply_aplus, apply_l0_power, resolvent_solve, sigma_kernel, ChaosKernel, GmresConfig, KernelBuilder,
    StackSpace,
};
use llns::spde::{self, Modes};
use llns::stats::ks_test;
use llns::{ModelParams, Norm};
use llns_cli::checks::{run_check, CheckOptions};
use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;
use serde_json::Value;

// The Monte Carlo value of the second coefficient disagrees with the quoted
// constant; see README.
const KNOWN_FAILURES: [usize; 1] = [4];

const ZERO: Complex64 = Complex64 { re: 0.0, im: 0.0 };

type Outcome = Result<(bool, String), String>;

fn k3(c: [i32; 3]) -> WaveVector<3> {
    WaveVector::new(c).unwrap()
}

fn checks(names: &[&str]) -> Outcome {
    let opts = CheckOptions::default();
    let mut ok = true;
    let mut detail = Vec::new();
    for name in names {
        let r = run_check(name, &opts).ok_or(format!("unknown check {name}"))?;
        ok &= r.passed;
        detail.push(format!("{}: {}", r.name, r.detail));
    }
    Ok((ok, detail.join(" | ")))
}

fn criterion_1() -> Outcome {
    let mut e1 = 0.0f64;
    let mut e2 = 0.0f64;
    for i in 1..=100 {
        let l = 0.1 * i as f64;
        let d = d2_effective_d(l);
        e1 = e1.max((d - ((l * l / (8.0 * std::f64::consts::PI) + 1.0).sqrt() - 1.0)).abs());
        e2 = e2.max((d - g_fn(2.0 * l * l)).abs());
    }
    Ok((e1 <= 1e-12 && e2 <= 1e-12, format!("max |D − closed form| {e1:.1e}, max |D − G(2λ²)| {e2:.1e}")))
}

fn criterion_2() -> Outcome {
    checks(&["replacement"])
}

fn criterion_3() -> Outcome {
    let f1 = f1_closed();
    let (q, _) = f1_quadrature(&k3([1, 0, 0]), 1e-10).map_err(|e| e.to_string())?;
    let k = k3([1, 0, 0]);
    let lat = |n: f64| -> Result<f64, String> {
        let p = ModelParams::new(3, 1.0, n, 2).map_err(|e| e.to_string())?;
        f1_lattice(&p, &k, 0).map_err(|e| e.to_string())
    };
    let (a, b) = (lat(24.5)?, lat(48.5)?);
    let ext = richardson(24.5, a, 48.5, b);
    let (eq, el) = ((q - f1).abs(), (ext - f1).abs() / f1);
    Ok((
        eq <= 1e-6 && el <= 5e-3,
        format!("7/(30π) = {f1:.7}; quadrature {q:.7} (|Δ| {eq:.1e}); lattice N=24.5 {a:.5}, N=48.5 {b:.5}, extrapolated {ext:.6} ({:.3}%)", 100.0 * el),
    ))
}

fn f2_estimate() -> Result<McEstimate, String> {
    f2_monte_carlo(&F2Config {
        samples: 16_000_000,
        batches: 64,
        seed: 7,
        norm: Norm::Euclidean,
    })
    .map_err(|e| e.to_string())
}

fn criterion_4(est: &McEstimate) -> Outcome {
    let quoted = 8.588 / (2.0 * (2.0 * std::f64::consts::PI).powi(4));
    let rel = (est.value - quoted).abs() / quoted;
    let rse = est.stderr / est.value;
    Ok((
        rel <= 0.02 && rse <= 0.01 && est.accepted >= 10_000_000,
        format!(
            "f2 = {:.6e} ± {:.1e} ({:.2}% stderr, {} accepted); quoted {quoted:.6e}, off by {:.1}%",
            est.value,
            est.stderr,
            100.0 * rse,
            est.accepted,
            100.0 * rel
        ),
    ))
}

fn criterion_5(est: &McEstimate) -> Outcome {
    let r = corollary_check(&lambda_grid(40, 4.0), est.value, est.stderr, 10.0);
    Ok((
        r.inequality_holds && r.second_order_differs,
        format!(
            "inequality on 40-point grid: {}; |f2 − f1²| = {:.0} stderr (f1² = {:.7})",
            r.inequality_holds, r.margin_in_stderr, r.f1_squared
        ),
    ))
}

fn criterion_6() -> Outcome {
    checks(&["adjointness", "commutation", "preservation", "skew", "dense-oracle"])
}

fn criterion_7() -> Outcome {
    checks(&["decoupling"])
}

// Orthonormal basis of the symmetric divergence-free part of a small stack,
// the matrix of −𝔏₀ − 𝒜 in it, and an LU solve.
struct Dense {
    space: StackSpace<3>,
    basis: Vec<Vec<Complex64>>,
}

impl Dense {
    fn new(p: &ModelParams, lo: usize, hi: usize, total: [i32; 3]) -> Self {
        let space = StackSpace::new(p, lo, hi, total);
        let dim = space.dim();
        let mut basis: Vec<Vec<Complex64>> = Vec::new();
        for j in 0..dim {
            let mut e = vec![ZERO; dim];
            e[j] = Complex64::new(1.0, 0.0);
            let cleaned: Vec<ChaosKernel<3>> = space
                .from_dense(&e)
                .into_iter()
                .map(|k| {
                    let mut b = KernelBuilder::new(k.degree(), Some(space.total()));
                    for (key, blk) in k.iter() {
                        b.add_symmetrized(key, blk);
                    }
                    b.build().project_divergence_free()
                })
                .collect();
            let mut v = space.to_dense(&cleaned.iter().collect::<Vec<_>>());
            for _ in 0..2 {
                for b in &basis {
                    let c = space.dot(b, &v);
                    v.iter_mut().zip(b).for_each(|(x, y)| *x -= c * y);
                }
            }
            let n = space.norm(&v);
            if n > 1e-8 {
                v.iter_mut().for_each(|x| *x /= n);
                basis.push(v);
            }
        }
        Dense { space, basis }
    }

    fn apply(&self, p: &ModelParams, v: &[Complex64]) -> Vec<Complex64> {
        let ks = self.space.from_dense(v);
        let mut out: Vec<ChaosKernel<3>> = ks.iter().map(|k| apply_l0_power(k, 1.0)).collect();
        for f in &ks {
            for g in [apply_aplus(f, p), apply_aminus(f, p)] {
                if let Some(i) = out.iter().position(|o| o.degree() == g.degree()) {
                    out[i] = out[i].lin_comb(Complex64::new(1.0, 0.0), &g, Complex64::new(-1.0, 0.0));
                }
            }
        }
        self.space.to_dense(&out.iter().collect::<Vec<_>>())
    }

    fn solve(&self, p: &ModelParams, rhs: &ChaosKernel<3>) -> Vec<ChaosKernel<3>> {
        let r = self.basis.len();
        let images: Vec<Vec<Complex64>> = self.basis.iter().map(|b| self.apply(p, b)).collect();
        let m = DMatrix::from_fn(r, r, |i, j| self.space.dot(&self.basis[i], &images[j]));
        let b = self.space.to_dense(&[rhs]);
        let c = DVector::from_fn(r, |i, _| self.space.dot(&self.basis[i], &b));
        let x = m.lu().solve(&c).expect("nonsingular");
        let mut v = vec![ZERO; self.space.dim()];
        for (j, bj) in self.basis.iter().enumerate() {
            v.iter_mut().zip(bj).for_each(|(a, y)| *a += x[j] * y);
        }
        self.space.from_dense(&v)
    }
}

fn criterion_8() -> Outcome {
    let k = k3([1, 0, 0]);
    let e = |x: llns::Error| x.to_string();
    let p = ModelParams::new(3, 0.1, 8.5, 3).map_err(e)?;
    let dn = d_truncated(&p, &k, FrameRule::FirstCanonical).map_err(e)?;
    let f1n = f1_lattice(&p, &k, 0).map_err(e)?;
    let ratio = dn.value / (p.lambda * p.lambda);
    let rel = (ratio - f1n).abs() / f1n;

    let tiny = ModelParams::new(3, 2.0, 1.5, 3).map_err(e)?;
    let rhs = apply_aplus(&sigma_kernel(&k, 0), &tiny);
    let want = Dense::new(&tiny, 2, 3, [1, 0, 0]).solve(&tiny, &rhs);
    let cfg = GmresConfig {
        tol: 1e-12,
        ..GmresConfig::default()
    };
    let got = resolvent_solve(&[&rhs], &tiny, 2, 3, &cfg).map_err(e)?;
    let mut dense_err = 0.0f64;
    for w in &want {
        let g = got.component(w.degree()).ok_or("missing degree")?;
        dense_err = dense_err.max(g.max_abs_diff(w) / w.max_abs());
    }
    Ok((
        rel <= 0.1 && dense_err <= 1e-8,
        format!(
            "Dⁿ/λ² = {ratio:.5} vs f1 at N=8.5 {f1n:.5} ({:.2}%, {:.1}% from 7/(30π)); {} GMRES iterations; dense oracle rel. diff {dense_err:.1e}",
            100.0 * rel,
            100.0 * (ratio - f1_closed()).abs() / f1_closed(),
            dn.iterations
        ),
    ))
}

fn exp1(x: f64) -> f64 {
    if x <= 0.0 {
        0.0
    } else {
        -(-x).exp_m1()
    }
}

fn ou_ks() -> (bool, String) {
    let p = ModelParams::new(3, 0.0, 4.5, 2).unwrap().with_norm(Norm::Sup);
    let m = Modes::<3>::new(&p);
    let dt = 0.1 / (2.0 * std::f64::consts::PI * 4.5f64).powi(2);
    let (mid, end) = (40u64, 80u64);
    let picks: Vec<usize> = [[1, 0, 0], [1, 1, 0], [2, 1, -1], [0, 2, 2], [3, 2, 1], [4, 4, 4]]
        .iter()
        .flat_map(|k| [m.index(k, 0).unwrap(), m.index(k, 1).unwrap()])
        .collect();
    let mut stat = vec![Vec::new(); picks.len()];
    let mut trans = vec![Vec::new(); picks.len()];
    for member in 0..300 {
        let mut st = spde::sample_invariant_state(&m, 17, member);
        let mut at_mid = Vec::new();
        for n in 0..end {
            spde::step(&mut st, &m, dt, 17, member, n);
            if n + 1 == mid {
                at_mid = st.coeffs.clone();
            }
        }
        for (j, &i) in picks.iter().enumerate() {
            let k = m.positive()[i / 2];
            let g = 4.0 * std::f64::consts::PI.powi(2) * k.iter().map(|&c| (c * c) as f64).sum::<f64>();
            let s = (end - mid) as f64 * dt;
            let r = (st.coeffs[i] - at_mid[i] * (-g * s).exp()) / (-(-2.0 * g * s).exp_m1()).sqrt();
            stat[j].push(st.coeffs[i].norm_sqr());
            trans[j].push(r.norm_sqr());
        }
    }
    let tests = 2 * picks.len();
    let pmin = stat.iter().chain(&trans).map(|x| ks_test(x, exp1).1).fold(1.0, f64::min);
    (pmin > 0.01 / tests as f64, format!("λ=0 KS min p {pmin:.3} over {tests} tests (threshold {:.1e})", 0.01 / tests as f64))
}

fn orthogonality() -> (bool, String) {
    let p = ModelParams::new(3, 0.5, 4.5, 2).unwrap().with_norm(Norm::Sup);
    let m = Modes::<3>::new(&p);
    let mut worst = 0.0f64;
    for member in 0..10 {
        let st = spde::sample_invariant_state(&m, 23, member);
        let b = spde::nonlinearity_coeffs(&st, &m);
        let scale: f64 = st.coeffs.iter().zip(&b).map(|(u, v)| u.norm() * v.norm()).sum();
        worst = worst.max(spde::energy_transfer(&st.coeffs, &b).abs() / scale);
    }
    (worst <= 1e-12, format!("energy transfer / scale ≤ {worst:.1e}"))
}

fn llns(args: &[&str]) -> Result<std::process::Output, String> {
    Command::new(env!("CARGO_BIN_EXE_llns")).args(args).output().map_err(|e| e.to_string())
}

fn run_ok(args: &[&str]) -> Result<(), String> {
    let o = llns(args)?;
    if o.status.success() {
        Ok(())
    } else {
        Err(format!("llns {} failed: {}", args.join(" "), String::from_utf8_lossy(&o.stderr)))
    }
}

fn read_json(path: &Path) -> Result<Value, String> {
    let s = std::fs::read_to_string(path).map_err(|e| format!("{}: {e}", path.display()))?;
    serde_json::from_str(&s).map_err(|e| e.to_string())
}

fn entry(report: &Value, name: &str) -> Option<(f64, f64)> {
    report["entries"]
        .as_array()?
        .iter()
        .find(|e| e["name"] == name)
        .map(|e| (e["value"].as_f64().unwrap_or(f64::NAN), e["stderr"].as_f64().unwrap_or(f64::NAN)))
}

fn criterion_9() -> Outcome {
    let (ks_ok, ks) = ou_ks();
    let (orth_ok, orth) = orthogonality();
    let dir = tempfile::tempdir().map_err(|e| e.to_string())?;
    let out = dir.path().to_str().ok_or("temp path")?;
    run_ok(&[
        "--out", out, "simulate", "--d", "3", "--lambda", "0.5", "--N", "4.5", "--T", "0.5", "--ensemble", "64", "--seed", "1",
    ])?;
    let rep = read_json(&dir.path().join("estimates.json"))?;
    let (gk, gk_se) = entry(&rep, "D_green_kubo_over_lambda2").ok_or("no Green–Kubo row")?;
    let (drift, drift_se) = entry(&rep, "energy_drift").ok_or("no drift row")?;
    let f1 = f1_closed();
    let rel = (gk - f1).abs() / f1;
    let drift_ok = drift.abs() <= 3.0 * drift_se;
    Ok((
        ks_ok && orth_ok && drift_ok && rel <= 0.3,
        format!(
            "{ks}; {orth}; energy drift {drift:.2e} ± {drift_se:.1e}; Green–Kubo D/λ² = {gk:.4} ± {gk_se:.4} ({:.1}% from 7/(30π))",
            100.0 * rel
        ),
    ))
}

fn outputs(dir: &Path) -> Result<Value, String> {
    Ok(read_json(&dir.join("manifest.json"))?["outputs"].clone())
}

fn criterion_10() -> Outcome {
    let tmp = tempfile::tempdir().map_err(|e| e.to_string())?;
    let path = |s: &str| tmp.path().join(s);
    let p = |s: &str| path(s).to_string_lossy().into_owned();
    let sim = ["simulate", "--d", "3", "--lambda", "0", "--N", "4.5", "--T", "1", "--ensemble", "8", "--seed", "1"];
    let mut notes = Vec::new();
    let mut ok = true;

    for tag in ["sim-a", "sim-b"] {
        let mut args = vec!["--out".to_string(), p(tag)];
        args.extend(sim.iter().map(|s| s.to_string()));
        run_ok(&args.iter().map(String::as_str).collect::<Vec<_>>())?;
    }
    let same_sim = outputs(&path("sim-a"))? == outputs(&path("sim-b"))?;
    ok &= same_sim;
    notes.push(format!("λ=0 simulate twice identical: {same_sim}"));

    run_ok(&[
        "--out", &p("sim-nl"), "simulate", "--d", "3", "--lambda", "0.5", "--N", "2.5", "--T", "0.05", "--ensemble", "8", "--seed", "4",
    ])?;
    let coeff = ["coeff", "--d", "3", "--f2", "--mc-samples", "4e5", "--mc-batches", "16", "--seed", "7"];
    for (tag, threads) in [("mc-1", "1"), ("mc-2", "2")] {
        let mut args = vec!["--threads", threads, "--out"];
        let dir = p(tag);
        args.push(&dir);
        args.extend(coeff);
        run_ok(&args)?;
    }
    let same_mc = outputs(&path("mc-1"))? == outputs(&path("mc-2"))?;
    ok &= same_mc;
    notes.push(format!("Monte Carlo with 1 and 2 threads identical: {same_mc}"));

    run_ok(&["--out", &p("verify"), "verify", "--only", "adjointness,closed-form"])?;
    for tag in ["sim-a", "sim-nl", "mc-2", "verify"] {
        let manifest = p(&format!("{tag}/manifest.json"));
        let o = llns(&["replay", &manifest])?;
        let good = o.status.success();
        ok &= good;
        notes.push(format!("replay {tag}: {}", if good { "bitwise" } else { "MISMATCH" }));
    }
    Ok((ok, notes.join("; ")))
}

fn main() -> ExitCode {
    let mut unexpected = Vec::new();
    let mut report = |n: usize, t: Instant, r: Outcome| {
        let (pass, detail) = r.unwrap_or_else(|e| (false, format!("error: {e}")));
        let tag = if pass { "PASS" } else { "FAIL" };
        let known = if !pass && KNOWN_FAILURES.contains(&n) { " [known]" } else { "" };
        println!("criterion {n:>2}: {tag}{known}  {detail}  ({:.1} s)", t.elapsed().as_secs_f64());
        if !pass && known.is_empty() {
            unexpected.push(n);
        }
    };

    let t = Instant::now();
    report(1, t, criterion_1());
    let t = Instant::now();
    report(2, t, criterion_2());
    let t = Instant::now();
    report(3, t, criterion_3());
    let t = Instant::now();
    match f2_estimate() {
        Ok(est) => {
            report(4, t, criterion_4(&est));
            let t = Instant::now();
            report(5, t, criterion_5(&est));
        }
        Err(e) => {
            report(4, t, Err(e.clone()));
            report(5, t, Err(e));
        }
    }
    let t = Instant::now();
    report(6, t, criterion_6());
    let t = Instant::now();
    report(7, t, criterion_7());
    let t = Instant::now();
    report(8, t, criterion_8());
    let t = Instant::now();
    report(9, t, criterion_9());
    let t = Instant::now();
    report(10, t, criterion_10());

    if unexpected.is_empty() {
        ExitCode::SUCCESS
    } else {
        eprintln!("unexpected failures: {unexpected:?}");
        ExitCode::FAILURE
    }
}
