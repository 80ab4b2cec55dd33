//! Second expansion coefficient f₂ = lim ‖T^{N,+,*}T^{N,+,*}σ_{k,1}‖² (d = 3) as a
//! six-dimensional integral over |x₁|, |x₂|, |x₁+x₂| ≤ 1 with x₃ = −x₁−x₂.

use std::f64::consts::PI;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::divfree::{dot, frame, mat_vec, WaveVector};
use crate::rng::Stream;
use crate::stats::mean_stderr;
use crate::{Error, Norm, Result};

type V3 = [f64; 3];
type T3 = [[[f64; 3]; 3]; 3];

const PERMS: [[usize; 3]; 6] = [[0, 1, 2], [0, 2, 1], [1, 0, 2], [1, 2, 0], [2, 0, 1], [2, 1, 0]];

fn addv(a: &V3, b: &V3) -> V3 {
    [a[0] + b[0], a[1] + b[1], a[2] + b[2]]
}

fn leray(x: &V3) -> [[f64; 3]; 3] {
    let n2 = dot(x, x);
    let mut m = [[0.0; 3]; 3];
    for i in 0..3 {
        for j in 0..3 {
            m[i][j] = if i == j { 1.0 } else { 0.0 } - x[i] * x[j] / n2;
        }
    }
    m
}

// C(y₁,y₂,y₃) before contraction with the frame vectors of y₁, y₂, y₃:
// [(P(s)k)ᵢ y₁_q a_r + (P(s)a)ᵢ y₁_q k_r] / (|s|² + |y₃|²), s = y₁ + y₂.
fn c_tensor(y: [&V3; 3], k: &V3, a: &V3) -> T3 {
    let s = addv(y[0], y[1]);
    let ps = leray(&s);
    let u = mat_vec(&ps, k);
    let w = mat_vec(&ps, a);
    let den = dot(&s, &s) + dot(y[2], y[2]);
    let mut t = [[[0.0; 3]; 3]; 3];
    for i in 0..3 {
        for q in 0..3 {
            let yq = y[0][q] / den;
            for r in 0..3 {
                t[i][q][r] = (u[i] * a[r] + w[i] * k[r]) * yq;
            }
        }
    }
    t
}

/// Integrand of the f₂ integral at (x₁, x₂) with the frame sums done in closed
/// form (Σ_α a_{x,α}a_{x,α}ᵀ = P(x)), including the 1/((2π)⁴|k|²) prefactor.
pub fn f2_integrand(x1: &V3, x2: &V3, k: &V3, a: &V3) -> f64 {
    let x3 = [-x1[0] - x2[0], -x1[1] - x2[1], -x1[2] - x2[2]];
    let xs = [x1, x2, &x3];
    let ps = [leray(x1), leray(x2), leray(&x3)];
    let t = c_tensor([x1, x2, &x3], k, a);
    // contract each slot with the projector of its momentum
    let mut tp = [[[0.0; 3]; 3]; 3];
    for i in 0..3 {
        for j in 0..3 {
            for l in 0..3 {
                let mut s = 0.0;
                for a1 in 0..3 {
                    for b in 0..3 {
                        let pab = ps[0][a1][i] * ps[1][b][j];
                        if pab == 0.0 {
                            continue;
                        }
                        for c in 0..3 {
                            s += t[a1][b][c] * pab * ps[2][c][l];
                        }
                    }
                }
                tp[i][j][l] = s;
            }
        }
    }
    let mut total = 0.0;
    for perm in PERMS {
        let ts = c_tensor([xs[perm[0]], xs[perm[1]], xs[perm[2]]], k, a);
        let mut s = 0.0;
        let mut idx = [0usize; 3];
        for i in 0..3 {
            idx[0] = i;
            for j in 0..3 {
                idx[1] = j;
                for l in 0..3 {
                    idx[2] = l;
                    s += tp[i][j][l] * ts[idx[perm[0]]][idx[perm[1]]][idx[perm[2]]];
                }
            }
        }
        total += s;
    }
    let den = dot(x1, x1) + dot(x2, x2) + dot(&x3, &x3);
    total / (den * (2.0 * PI).powi(4) * dot(k, k))
}

// Orthonormal completion of a real direction; any choice gives the same frame sums.
fn real_frame(x: &V3) -> [V3; 2] {
    let n = dot(x, x).sqrt();
    let u = [x[0] / n, x[1] / n, x[2] / n];
    let i = (0..3).min_by(|&i, &j| u[i].abs().total_cmp(&u[j].abs())).unwrap();
    let mut e = [0.0; 3];
    e[i] = 1.0;
    let c = dot(&e, &u);
    let mut v = [e[0] - c * u[0], e[1] - c * u[1], e[2] - c * u[2]];
    let nv = dot(&v, &v).sqrt();
    v.iter_mut().for_each(|z| *z /= nv);
    let w = [u[1] * v[2] - u[2] * v[1], u[2] * v[0] - u[0] * v[2], u[0] * v[1] - u[1] * v[0]];
    [v, w]
}

fn coefficient(x: [&V3; 3], al: [usize; 3], fr: &[[V3; 2]; 3], k: &V3, a: &V3) -> f64 {
    let s = addv(x[0], x[1]);
    let ps = leray(&s);
    let pa1 = mat_vec(&ps, &fr[0][al[0]]);
    let a3 = &fr[2][al[2]];
    dot(x[0], &fr[1][al[1]]) / (dot(&s, &s) + dot(x[2], x[2])) * (dot(k, &pa1) * dot(a3, a) + dot(a, &pa1) * dot(a3, k))
}

/// The same integrand written as the explicit sum over permutations and frame
/// indices α₁..α₃ of products of scalar coefficients.
pub fn f2_integrand_frames(x1: &V3, x2: &V3, k: &V3, a: &V3) -> f64 {
    let x3 = [-x1[0] - x2[0], -x1[1] - x2[1], -x1[2] - x2[2]];
    let xs = [x1, x2, &x3];
    let frames = [real_frame(x1), real_frame(x2), real_frame(&x3)];
    let mut total = 0.0;
    for perm in PERMS {
        let fp = [frames[perm[0]], frames[perm[1]], frames[perm[2]]];
        for a1 in 0..2 {
            for a2 in 0..2 {
                for a3 in 0..2 {
                    let al = [a1, a2, a3];
                    let c = coefficient(xs, al, &frames, k, a);
                    let cp = coefficient(
                        [xs[perm[0]], xs[perm[1]], xs[perm[2]]],
                        [al[perm[0]], al[perm[1]], al[perm[2]]],
                        &fp,
                        k,
                        a,
                    );
                    total += c * cp;
                }
            }
        }
    }
    let den = dot(x1, x1) + dot(x2, x2) + dot(&x3, &x3);
    total / (den * (2.0 * PI).powi(4) * dot(k, k))
}

/// Monte-Carlo settings. `samples` counts proposals over all batches.
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct F2Config {
    pub samples: u64,
    pub batches: u64,
    pub seed: u64,
    pub norm: Norm,
}

impl Default for F2Config {
    fn default() -> Self {
        F2Config {
            samples: 4_000_000,
            batches: 64,
            seed: 7,
            norm: Norm::Euclidean,
        }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct McEstimate {
    pub value: f64,
    pub stderr: f64,
    pub accepted: u64,
    pub proposed: u64,
    pub batches: u64,
}

struct Domain {
    norm: Norm,
    radial: f64,
    volume: f64,
}

impl Domain {
    fn new(norm: Norm) -> Self {
        match norm {
            Norm::Euclidean => Domain {
                norm,
                radial: 1.0,
                volume: 4.0 * PI / 3.0,
            },
            Norm::Sup => Domain {
                norm,
                radial: 3f64.sqrt(),
                volume: 8.0,
            },
        }
    }

    fn inside(&self, v: &V3) -> bool {
        match self.norm {
            Norm::Euclidean => dot(v, v) <= 1.0,
            Norm::Sup => v.iter().all(|c| c.abs() <= 1.0),
        }
    }

    fn uniform_density(&self, v: &V3) -> f64 {
        if self.inside(v) {
            1.0 / self.volume
        } else {
            0.0
        }
    }

    // direction uniform, radius uniform on [0, R]: density 1/(4πR|v|²)
    fn radial_density(&self, v: &V3) -> f64 {
        let r2 = dot(v, v);
        if r2 <= self.radial * self.radial {
            1.0 / (4.0 * PI * self.radial * r2)
        } else {
            0.0
        }
    }

    fn direction(s: &mut Stream) -> V3 {
        loop {
            let (a, b) = s.normal_pair();
            let (c, _) = s.normal_pair();
            let n = (a * a + b * b + c * c).sqrt();
            if n > 1e-300 {
                return [a / n, b / n, c / n];
            }
        }
    }

    fn draw_radial(&self, s: &mut Stream) -> V3 {
        let u = Self::direction(s);
        let r = self.radial * s.uniform_open();
        [u[0] * r, u[1] * r, u[2] * r]
    }

    fn draw_uniform(&self, s: &mut Stream) -> V3 {
        match self.norm {
            Norm::Euclidean => {
                let u = Self::direction(s);
                let r = s.uniform_open().cbrt();
                [u[0] * r, u[1] * r, u[2] * r]
            }
            Norm::Sup => [
                2.0 * s.uniform() - 1.0,
                2.0 * s.uniform() - 1.0,
                2.0 * s.uniform() - 1.0,
            ],
        }
    }
}

/// f₂ by importance sampling from an equal mixture of three proposals, each
/// resolving the 1/|x|² singularity of one of x₁, x₂, x₃ while the other free
/// vector is uniform. Batch b uses random stream b, so the estimate depends
/// only on (seed, batches, samples).
pub fn f2_monte_carlo(cfg: &F2Config) -> Result<McEstimate> {
    if cfg.batches < 2 || cfg.samples < cfg.batches {
        return Err(Error::InvalidParam("need at least two batches and one sample per batch".into()));
    }
    let dom = Domain::new(cfg.norm);
    let k = [1.0, 0.0, 0.0];
    let a = axis_frame_vector();
    let per = cfg.samples.div_ceil(cfg.batches);
    let results: Vec<(f64, u64)> = (0..cfg.batches)
        .into_par_iter()
        .map(|b| {
            let mut s = Stream::new(cfg.seed, b);
            let mut sum = 0.0;
            let mut acc = 0;
            for _ in 0..per {
                let which = (s.uniform() * 3.0) as u32;
                let xa = dom.draw_radial(&mut s);
                let xb = dom.draw_uniform(&mut s);
                let (x1, x2) = match which {
                    0 => (xa, xb),
                    1 => (xb, xa),
                    _ => ([-xa[0] - xb[0], -xa[1] - xb[1], -xa[2] - xb[2]], xb),
                };
                let x3 = [-x1[0] - x2[0], -x1[1] - x2[1], -x1[2] - x2[2]];
                if !(dom.inside(&x1) && dom.inside(&x2) && dom.inside(&x3)) {
                    continue;
                }
                let q = (dom.radial_density(&x1) * dom.uniform_density(&x2)
                    + dom.radial_density(&x2) * dom.uniform_density(&x1)
                    + dom.radial_density(&x3) * dom.uniform_density(&x2))
                    / 3.0;
                let f = f2_integrand(&x1, &x2, &k, &a);
                if f.is_finite() && q > 0.0 {
                    sum += f / q;
                    acc += 1;
                }
            }
            (sum / per as f64, acc)
        })
        .collect();
    let vals: Vec<f64> = results.iter().map(|r| r.0).collect();
    let (value, stderr) = mean_stderr(&vals);
    Ok(McEstimate {
        value,
        stderr,
        accepted: results.iter().map(|r| r.1).sum(),
        proposed: per * cfg.batches,
        batches: cfg.batches,
    })
}

// a_{k,1} for k = (1,0,0)
fn axis_frame_vector() -> V3 {
    *frame(&WaveVector::new([1, 0, 0]).expect("nonzero")).vector(0)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn projector_form_matches_frame_sum() {
        let k = [1.0, 0.0, 0.0];
        let a = axis_frame_vector();
        let pts = [
            ([0.3, -0.2, 0.5], [-0.1, 0.4, 0.2]),
            ([0.05, 0.6, -0.3], [0.5, -0.5, 0.1]),
            ([-0.7, 0.1, 0.1], [0.2, 0.2, -0.6]),
        ];
        for (x1, x2) in pts {
            let u = f2_integrand(&x1, &x2, &k, &a);
            let v = f2_integrand_frames(&x1, &x2, &k, &a);
            assert!((u - v).abs() <= 1e-10 * u.abs().max(1e-300), "{u} {v}");
        }
    }
}
