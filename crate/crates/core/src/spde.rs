//! Spectral Galerkin simulation of the truncated, rescaled equation
//! ∂ₜu = Δu − λ_N ρᴺ∗P div(ρᴺ∗u ⊗ ρᴺ∗u) + (−Δ)^{½}Pξ
//! with stationary white-noise initial data, and diffusivity estimators.
//!
//! The state stores frame coefficients u_{k,α} for k ∈ Z^d₊ inside the cutoff
//! ball; û(−k) = conj û(k) is implied. Time stepping is exponential Euler: the
//! Laplacian and the noise are integrated exactly (an Ornstein–Uhlenbeck bridge
//! per mode) and the nonlinearity is explicit. Noise for `(seed, member, step)`
//! comes from a fixed address of the random stream, so runs are reproducible
//! bit for bit and independent of the thread count.

use std::f64::consts::PI;
use std::io::Write;

use num_complex::Complex64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::divfree::{frame_raw, is_positive, neg, norm2, FourierField, FrameRule};
use crate::params::check_cutoff;
use crate::rng::{Stream, WORDS_PER_PAIR};
use crate::stats::{mean_stderr, slope};
use crate::{Error, ModelParams, Norm, Result};

const ZERO: Complex64 = Complex64::new(0.0, 0.0);

/// One observed coefficient u_{k,α}; `alpha` is 0-based and `k` must lie in Z^d₊.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Observed {
    pub k: Vec<i32>,
    pub alpha: usize,
}

fn default_stride() -> usize {
    1
}

/// Simulation settings, accepted as JSON.
///
/// `norm` defaults to the mollifier norm of the dynamics (sup norm for d = 3,
/// Euclidean for d = 2) and `dt` to 0.1/(2πN)².
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SimConfig {
    pub d: usize,
    pub lambda: f64,
    pub cutoff: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub norm: Option<Norm>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub dt: Option<f64>,
    pub horizon: f64,
    pub ensemble: usize,
    pub seed: u64,
    #[serde(default = "default_stride")]
    pub stride: usize,
    pub observe: Vec<Observed>,
}

impl SimConfig {
    pub fn from_json(s: &str) -> Result<Self> {
        let cfg: SimConfig = serde_json::from_str(s).map_err(|e| Error::InvalidParam(format!("config: {e}")))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn norm(&self) -> Norm {
        self.norm.unwrap_or(if self.d >= 3 { Norm::Sup } else { Norm::Euclidean })
    }

    pub fn dt(&self) -> f64 {
        self.dt.unwrap_or(0.1 / (2.0 * PI * self.cutoff).powi(2))
    }

    pub fn steps(&self) -> usize {
        (self.horizon / self.dt()).round() as usize
    }

    pub fn params(&self) -> Result<ModelParams> {
        Ok(ModelParams::new(self.d, self.lambda, self.cutoff, 2)?.with_norm(self.norm()))
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.d == 2 || self.d == 3) {
            return Err(Error::InvalidParam(format!("d = {} (simulation supports 2 and 3)", self.d)));
        }
        check_cutoff(self.d, self.cutoff)?;
        let p = self.params()?;
        let bad = |m: &str| Err(Error::InvalidParam(m.into()));
        if !(self.lambda >= 0.0 && self.lambda.is_finite()) {
            return bad("lambda must be finite and ≥ 0");
        }
        if !(self.dt() > 0.0 && self.dt().is_finite()) {
            return bad("dt must be positive");
        }
        if !(self.horizon > 0.0) || self.steps() == 0 {
            return bad("horizon must cover at least one step");
        }
        if self.ensemble == 0 || self.stride == 0 {
            return bad("ensemble and stride must be ≥ 1");
        }
        for o in &self.observe {
            if o.k.len() != self.d {
                return bad("observed k has the wrong dimension");
            }
            if o.k.iter().all(|&c| c == 0) {
                return Err(Error::ZeroWaveVector);
            }
            if !is_positive(&o.k) {
                return Err(Error::InvalidParam(format!("observed k = {:?} is not in Z^d_+", o.k)));
            }
            if !p.in_ball(&o.k) {
                return Err(Error::InvalidParam(format!("observed k = {:?} lies outside the cutoff", o.k)));
            }
            if o.alpha + 1 >= self.d {
                return Err(Error::InvalidParam(format!("alpha = {} out of range", o.alpha)));
            }
        }
        Ok(())
    }
}

/// Mode bookkeeping and the interaction list of the convolution.
pub struct Modes<const D: usize> {
    params: ModelParams,
    positive: Vec<[i32; D]>,
    // frame rows per positive mode (rows 0..D−1 are a_{k,α})
    frames: Vec<[[f64; D]; D]>,
    decay: Vec<f64>,
    ball: Vec<[i32; D]>,
    // ball point → (positive index, negated)
    ball_map: Vec<(usize, bool)>,
    ball_f: Vec<[f64; D]>,
    // pairs (k₁, k₂) with k₁ + k₂ = positive[o], as ball indices, grouped by o
    pair_start: Vec<usize>,
    pairs: Vec<(u32, u32)>,
}

impl<const D: usize> Modes<D> {
    pub fn new(params: &ModelParams) -> Self {
        let ball = params.ball_points::<D>();
        let positive: Vec<[i32; D]> = ball.iter().copied().filter(|k| is_positive(k)).collect();
        let pos_index = |k: &[i32; D]| positive.binary_search(k).expect("positive mode");
        let ball_map: Vec<(usize, bool)> = ball
            .iter()
            .map(|k| if is_positive(k) { (pos_index(k), false) } else { (pos_index(&neg(k)), true) })
            .collect();
        let frames = positive.iter().map(|k| frame_raw(k, FrameRule::FirstCanonical).rows_array()).collect();
        let decay = positive.iter().map(|k| 4.0 * PI * PI * norm2(k)).collect();
        let ball_f = ball.iter().map(|k| k.map(f64::from)).collect();
        let mut pair_start = vec![0];
        let mut pairs = Vec::new();
        for k in &positive {
            for (i1, k1) in ball.iter().enumerate() {
                let k2 = crate::divfree::sub(k, k1);
                if k2.iter().all(|&c| c == 0) || !params.in_ball(&k2) {
                    continue;
                }
                let i2 = ball.binary_search(&k2).expect("ball point");
                pairs.push((i1 as u32, i2 as u32));
            }
            pair_start.push(pairs.len());
        }
        Modes {
            params: *params,
            positive,
            frames,
            decay,
            ball,
            ball_map,
            ball_f,
            pair_start,
            pairs,
        }
    }

    pub fn params(&self) -> &ModelParams {
        &self.params
    }

    /// Positive modes in lexicographic order.
    pub fn positive(&self) -> &[[i32; D]] {
        &self.positive
    }

    /// Number of complex coefficients (modes × (d−1)).
    pub fn len(&self) -> usize {
        self.positive.len() * (D - 1)
    }

    pub fn is_empty(&self) -> bool {
        self.positive.is_empty()
    }

    pub fn index(&self, k: &[i32; D], alpha: usize) -> Option<usize> {
        self.positive.binary_search(k).ok().map(|i| i * (D - 1) + alpha)
    }

    pub fn frame_vector(&self, mode: usize, alpha: usize) -> &[f64; D] {
        &self.frames[mode][alpha]
    }

    pub fn interaction_pairs(&self) -> usize {
        self.pairs.len()
    }
}

/// Frame coefficients at time `t`.
#[derive(Debug, Clone, PartialEq)]
pub struct SpectralState<const D: usize> {
    pub t: f64,
    pub coeffs: Vec<Complex64>,
}

impl<const D: usize> SpectralState<D> {
    pub fn zero(modes: &Modes<D>) -> Self {
        SpectralState {
            t: 0.0,
            coeffs: vec![ZERO; modes.len()],
        }
    }

    /// Componentwise û(k) at every ball point, including k ∈ Z^d₋.
    pub fn fields(&self, modes: &Modes<D>) -> Vec<[Complex64; D]> {
        let pos: Vec<[Complex64; D]> = (0..modes.positive.len())
            .map(|i| {
                let mut v = [ZERO; D];
                for a in 0..D - 1 {
                    let c = self.coeffs[i * (D - 1) + a];
                    for l in 0..D {
                        v[l] += c * modes.frames[i][a][l];
                    }
                }
                v
            })
            .collect();
        modes
            .ball_map
            .iter()
            .map(|&(i, negated)| if negated { pos[i].map(|z| z.conj()) } else { pos[i] })
            .collect()
    }

    /// Componentwise table over Z^d₊.
    pub fn to_field(&self, modes: &Modes<D>) -> FourierField<D> {
        let f = self.fields(modes);
        modes
            .ball
            .iter()
            .zip(f)
            .filter(|(k, _)| is_positive(*k))
            .map(|(k, v)| (*k, v))
            .collect()
    }

    /// Mean of |u_{k,α}|² over all stored coefficients.
    pub fn mean_energy(&self) -> f64 {
        self.coeffs.iter().map(|z| z.norm_sqr()).sum::<f64>() / self.coeffs.len() as f64
    }
}

impl<const D: usize> crate::divfree::Frame<D> {
    fn rows_array(&self) -> [[f64; D]; D] {
        let mut r = [[0.0; D]; D];
        for (a, row) in r.iter_mut().enumerate().take(D - 1) {
            *row = *self.vector(a);
        }
        r[D - 1] = *self.unit_k();
        r
    }
}

/// Independent standard complex Gaussians (E|ξ|² = 1) at one stream address.
fn gaussians(seed: u64, member: u64, block: u64, n: usize) -> Vec<Complex64> {
    let mut s = Stream::at(seed, member, block, n as u64 * WORDS_PER_PAIR);
    let r = std::f64::consts::FRAC_1_SQRT_2;
    (0..n)
        .map(|_| {
            let (a, b) = s.normal_pair();
            Complex64::new(a * r, b * r)
        })
        .collect()
}

/// Draw from the invariant white-noise measure for ensemble member `member`.
pub fn sample_invariant_state<const D: usize>(modes: &Modes<D>, seed: u64, member: u64) -> SpectralState<D> {
    SpectralState {
        t: 0.0,
        coeffs: gaussians(seed, member, 0, modes.len()),
    }
}

/// Noise increments ξ for step `step` (0-based) of member `member`.
pub fn step_noise<const D: usize>(modes: &Modes<D>, seed: u64, member: u64, step: u64) -> Vec<Complex64> {
    gaussians(seed, member, step + 1, modes.len())
}

/// Frame coefficients B_{k,α} = a_{k,α}·B̂(k) of the nonlinearity (without λ_N),
/// B̂(k) = ι2π P̂(k) Σ_{k₁+k₂=k} ℛᴺ_{k₁,k₂} (k·û(k₁)) û(k₂).
pub fn nonlinearity_coeffs<const D: usize>(state: &SpectralState<D>, modes: &Modes<D>) -> Vec<Complex64> {
    let f = state.fields(modes);
    let i2pi = Complex64::new(0.0, 2.0 * PI);
    let per_mode: Vec<[Complex64; D]> = (0..modes.positive.len())
        .into_par_iter()
        .map(|o| {
            let mut acc = [ZERO; D];
            for &(i1, i2) in &modes.pairs[modes.pair_start[o]..modes.pair_start[o + 1]] {
                let (u1, u2) = (&f[i1 as usize], &f[i2 as usize]);
                // k·û(k₁) = k₂·û(k₁) since k₁·û(k₁) = 0
                let k2 = &modes.ball_f[i2 as usize];
                let mut s = ZERO;
                for l in 0..D {
                    s += u1[l] * k2[l];
                }
                for l in 0..D {
                    acc[l] += s * u2[l];
                }
            }
            acc
        })
        .collect();
    let mut out = vec![ZERO; modes.len()];
    for (o, acc) in per_mode.iter().enumerate() {
        for a in 0..D - 1 {
            let fr = &modes.frames[o][a];
            let mut s = ZERO;
            for l in 0..D {
                s += acc[l] * fr[l];
            }
            out[o * (D - 1) + a] = i2pi * s;
        }
    }
    out
}

/// Componentwise B̂(k) over Z^d₊ (projected, without λ_N).
pub fn nonlinearity_b<const D: usize>(state: &SpectralState<D>, modes: &Modes<D>) -> FourierField<D> {
    let c = nonlinearity_coeffs(state, modes);
    modes
        .positive
        .iter()
        .enumerate()
        .map(|(o, k)| {
            let mut v = [ZERO; D];
            for a in 0..D - 1 {
                for l in 0..D {
                    v[l] += c[o * (D - 1) + a] * modes.frames[o][a][l];
                }
            }
            (*k, v)
        })
        .collect()
}

/// Σ_{k∈Z^d₊,α} Re(conj(u_{k,α}) B_{k,α}); half of Re⟨u, B(u)⟩ over all of Z^d₀.
pub fn energy_transfer(u: &[Complex64], b: &[Complex64]) -> f64 {
    u.iter().zip(b).map(|(x, y)| (x.conj() * y).re).sum()
}

/// One exponential-Euler step with given standard complex Gaussians `xi`:
/// u' = e^{−γδ}(u − δλ_N B) + √(1−e^{−2γδ}) ξ with γ = (2π|k|)². Returns the
/// nonlinearity coefficients at the start of the step (zero when λ = 0).
pub fn step_with_noise<const D: usize>(state: &mut SpectralState<D>, modes: &Modes<D>, dt: f64, xi: &[Complex64]) -> Vec<Complex64> {
    let lam = modes.params.lambda_n();
    let b = if modes.params.lambda == 0.0 {
        vec![ZERO; modes.len()]
    } else {
        nonlinearity_coeffs(state, modes)
    };
    for (i, u) in state.coeffs.iter_mut().enumerate() {
        let g = modes.decay[i / (D - 1)];
        let e = (-g * dt).exp();
        let s = (-(-2.0 * g * dt).exp_m1()).sqrt();
        *u = e * (*u - b[i] * (dt * lam)) + xi[i] * s;
    }
    state.t += dt;
    b
}

/// Step using the configured noise stream.
pub fn step<const D: usize>(state: &mut SpectralState<D>, modes: &Modes<D>, dt: f64, seed: u64, member: u64, step: u64) -> Vec<Complex64> {
    let xi = step_noise(modes, seed, member, step);
    step_with_noise(state, modes, dt, &xi)
}

/// Recorded observables of one ensemble member.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Trajectory {
    pub member: u64,
    pub times: Vec<f64>,
    /// u_{k,α}(t) per record, per observed coefficient.
    pub values: Vec<Vec<Complex64>>,
    /// I(t) = λ_N∫₀ᵗ B(u_s)(σ_{−k,α}) ds per record, per observed coefficient.
    pub integrals: Vec<Vec<Complex64>>,
    /// Mean |u_{k,α}|² over all modes per record.
    pub energy: Vec<f64>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Ensemble {
    pub config: SimConfig,
    pub members: Vec<Trajectory>,
}

fn run_member<const D: usize>(cfg: &SimConfig, modes: &Modes<D>, obs: &[usize], member: u64) -> Result<Trajectory> {
    let dt = cfg.dt();
    let lam = modes.params.lambda_n();
    let mut st = sample_invariant_state(modes, cfg.seed, member);
    let mut integ = vec![ZERO; obs.len()];
    let mut tr = Trajectory {
        member,
        times: Vec::new(),
        values: Vec::new(),
        integrals: Vec::new(),
        energy: Vec::new(),
    };
    let record = |st: &SpectralState<D>, integ: &[Complex64], tr: &mut Trajectory| {
        tr.times.push(st.t);
        tr.values.push(obs.iter().map(|&i| st.coeffs[i]).collect());
        tr.integrals.push(integ.to_vec());
        tr.energy.push(st.mean_energy());
    };
    record(&st, &integ, &mut tr);
    let steps = cfg.steps();
    for n in 0..steps {
        let b = step(&mut st, modes, dt, cfg.seed, member, n as u64);
        // exact step count keeps timestamps free of accumulated rounding
        st.t = (n + 1) as f64 * dt;
        for (j, &i) in obs.iter().enumerate() {
            integ[j] += b[i] * (lam * dt);
        }
        if let Some(i) = st.coeffs.iter().position(|z| !z.is_finite()) {
            return Err(Error::NonFinite {
                time: st.t,
                mode: modes.positive[i / (D - 1)].to_vec(),
            });
        }
        if (n + 1) % cfg.stride == 0 || n + 1 == steps {
            record(&st, &integ, &mut tr);
        }
    }
    Ok(tr)
}

fn run_d<const D: usize>(cfg: &SimConfig) -> Result<Ensemble> {
    let p = cfg.params()?;
    let modes = Modes::<D>::new(&p);
    let obs: Vec<usize> = cfg
        .observe
        .iter()
        .map(|o| {
            let k: [i32; D] = o.k.as_slice().try_into().expect("validated dimension");
            modes.index(&k, o.alpha).expect("validated mode")
        })
        .collect();
    let members = (0..cfg.ensemble as u64)
        .into_par_iter()
        .map(|m| run_member(cfg, &modes, &obs, m))
        .collect::<Result<Vec<_>>>()?;
    Ok(Ensemble {
        config: cfg.clone(),
        members,
    })
}

/// Runs the ensemble. Deterministic given the configuration.
pub fn run(cfg: &SimConfig) -> Result<Ensemble> {
    cfg.validate()?;
    match cfg.d {
        2 => run_d::<2>(cfg),
        3 => run_d::<3>(cfg),
        _ => unreachable!("validated"),
    }
}

/// Estimate with a standard error from independent groups.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Estimate {
    pub value: f64,
    pub stderr: f64,
    pub samples: usize,
}

fn wave_norm2(o: &Observed) -> f64 {
    o.k.iter().map(|&c| (c as f64).powi(2)).sum()
}

/// Green–Kubo estimate D̂ = E|I(t)|²/(2t(2π|k|)²) at the final time, averaged
/// over the listed observables within each member. Biased at finite (N, t).
pub fn green_kubo(ens: &Ensemble, obs: &[usize]) -> Result<Estimate> {
    if ens.members.len() < 8 {
        return Err(Error::Estimator(format!(
            "Green–Kubo needs at least 8 ensemble members, got {}",
            ens.members.len()
        )));
    }
    check_obs(ens, obs)?;
    let per: Vec<f64> = ens
        .members
        .iter()
        .map(|tr| {
            let t = *tr.times.last().expect("records");
            let last = tr.integrals.last().expect("records");
            obs.iter()
                .map(|&j| last[j].norm_sqr() / (2.0 * t * 4.0 * PI * PI * wave_norm2(&ens.config.observe[j])))
                .sum::<f64>()
                / obs.len() as f64
        })
        .collect();
    let (value, stderr) = mean_stderr(&per);
    Ok(Estimate {
        value,
        stderr,
        samples: per.len(),
    })
}

fn check_obs(ens: &Ensemble, obs: &[usize]) -> Result<()> {
    if obs.is_empty() || obs.iter().any(|&j| j >= ens.config.observe.len()) {
        return Err(Error::Estimator("observable index out of range".into()));
    }
    Ok(())
}

// normalized autocorrelation C(s)/C(0) over the given members, lags 0..=max_lag records
fn autocorr(members: &[&Trajectory], obs: &[usize], max_lag: usize) -> Vec<f64> {
    let mut c = vec![0.0; max_lag + 1];
    let mut cnt = vec![0usize; max_lag + 1];
    for tr in members {
        let n = tr.values.len();
        for &j in obs {
            for lag in 0..=max_lag.min(n.saturating_sub(1)) {
                for t in 0..n - lag {
                    c[lag] += (tr.values[t + lag][j] * tr.values[t][j].conj()).re;
                    cnt[lag] += 1;
                }
            }
        }
    }
    let c0 = c[0] / cnt[0].max(1) as f64;
    c.iter().zip(&cnt).map(|(s, &n)| if n == 0 { f64::NAN } else { s / n as f64 / c0 }).collect()
}

/// Fits E[u(t+s)conj u(t)] ∝ e^{−(1+D)(2π|k|)²s} over lags where the
/// correlation exceeds `floor`; all observables must share |k|.
pub fn mode_autocorr(ens: &Ensemble, obs: &[usize], max_lag: usize, floor: f64) -> Result<Estimate> {
    check_obs(ens, obs)?;
    let k2 = wave_norm2(&ens.config.observe[obs[0]]);
    if obs.iter().any(|&j| wave_norm2(&ens.config.observe[j]) != k2) {
        return Err(Error::Estimator("autocorrelation fit needs observables of equal |k|".into()));
    }
    let rec_dt = ens.config.dt() * ens.config.stride as f64;
    let gamma = 4.0 * PI * PI * k2;
    let fit = |members: &[&Trajectory]| -> Result<f64> {
        let c = autocorr(members, obs, max_lag);
        let mut xs = vec![0.0];
        let mut ys = vec![0.0];
        for (lag, &v) in c.iter().enumerate().skip(1) {
            if !(v > floor) {
                break;
            }
            xs.push(lag as f64 * rec_dt);
            ys.push(v.ln());
        }
        if xs.len() < 3 {
            return Err(Error::Estimator("autocorrelation fell below the floor before two lags".into()));
        }
        // least squares through the origin: ln C(s) = −(1+D)γs
        let b = xs.iter().zip(&ys).map(|(x, y)| x * y).sum::<f64>() / xs.iter().map(|x| x * x).sum::<f64>();
        Ok(-b / gamma - 1.0)
    };
    let all: Vec<&Trajectory> = ens.members.iter().collect();
    let value = fit(&all)?;
    let groups = all.len().min(8);
    let stderr = if groups >= 2 {
        let vals = (0..groups)
            .map(|g| {
                let m: Vec<&Trajectory> = all.iter().copied().skip(g).step_by(groups).collect();
                fit(&m)
            })
            .collect::<Result<Vec<_>>>()?;
        mean_stderr(&vals).1
    } else {
        f64::NAN
    };
    Ok(Estimate {
        value,
        stderr,
        samples: all.len(),
    })
}

/// Per-member regression slopes of the mean mode energy against time; returns
/// (mean slope, its standard error across members).
pub fn energy_drift(ens: &Ensemble) -> (f64, f64) {
    let slopes: Vec<f64> = ens.members.iter().map(|tr| slope(&tr.times, &tr.energy).0).collect();
    mean_stderr(&slopes)
}

fn obs_label(o: &Observed) -> String {
    let k: Vec<String> = o.k.iter().map(|c| c.to_string()).collect();
    format!("k=({});alpha={}", k.join(" "), o.alpha)
}

/// Writes `member,time,observable,re,im` rows; numbers use shortest round-trip decimals.
pub fn write_csv<W: Write>(ens: &Ensemble, mut w: W) -> std::io::Result<()> {
    writeln!(w, "member,time,observable,re,im")?;
    let labels: Vec<String> = ens.config.observe.iter().map(obs_label).collect();
    for tr in &ens.members {
        for (r, t) in tr.times.iter().enumerate() {
            for (j, l) in labels.iter().enumerate() {
                let u = tr.values[r][j];
                let i = tr.integrals[r][j];
                writeln!(w, "{},{},u[{}],{},{}", tr.member, t, l, u.re, u.im)?;
                writeln!(w, "{},{},I[{}],{},{}", tr.member, t, l, i.re, i.im)?;
            }
            writeln!(w, "{},{},energy,{},0", tr.member, t, tr.energy[r])?;
        }
    }
    Ok(())
}
