//! Model parameters and the coupling schedule.

use serde::{Deserialize, Serialize};

use crate::{Error, Result};

/// Norm used by the mollifier cutoff `1{‖k‖ ≤ N}`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Norm {
    Euclidean,
    Sup,
}

/// Dimension, coupling, mollifier scale and Fock truncation degree.
///
/// `cutoff` is the mollifier scale N. For `d >= 3` it must be a half-integer,
/// for `d = 2` an integer at least 2 (so that `log N > 0`).
///
/// The mollifier norm defaults to Euclidean in every dimension. The sup norm is
/// available through [`ModelParams::with_norm`]; it breaks rotational
/// invariance of the lattice sums and does not reproduce the isotropic limit
/// constants.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ModelParams {
    pub d: usize,
    pub lambda: f64,
    pub cutoff: f64,
    pub degree: usize,
    pub norm: Norm,
}

impl ModelParams {
    pub fn new(d: usize, lambda: f64, cutoff: f64, degree: usize) -> Result<Self> {
        let p = ModelParams {
            d,
            lambda,
            cutoff,
            degree,
            norm: Norm::Euclidean,
        };
        p.validate()?;
        Ok(p)
    }

    pub fn with_norm(mut self, norm: Norm) -> Self {
        self.norm = norm;
        self
    }

    pub fn with_lambda(mut self, lambda: f64) -> Self {
        self.lambda = lambda;
        self
    }

    pub fn validate(&self) -> Result<()> {
        if self.d < 2 {
            return Err(Error::InvalidParam(format!("dimension {} < 2", self.d)));
        }
        if !(self.lambda >= 0.0) || !self.lambda.is_finite() {
            return Err(Error::InvalidParam(format!("lambda = {} must be finite and >= 0", self.lambda)));
        }
        check_cutoff(self.d, self.cutoff)?;
        if self.degree < 1 {
            return Err(Error::InvalidParam("truncation degree must be >= 1".into()));
        }
        Ok(())
    }

    /// λ_N: λ/√(log N) for d = 2, λ N^{1-d/2} for d ≥ 3.
    pub fn lambda_n(&self) -> f64 {
        coupling(self.d, self.lambda, self.cutoff)
    }

    /// `‖k‖ ≤ N` in the configured norm.
    #[inline]
    pub fn in_ball(&self, k: &[i32]) -> bool {
        in_ball(self.norm, self.cutoff, k)
    }

    /// ℛᴺ_{a,b} = 1{‖a‖≤N}·1{‖b‖≤N}·1{‖a+b‖≤N}.
    #[inline]
    pub fn mollifier<const D: usize>(&self, a: &[i32; D], b: &[i32; D]) -> bool {
        let mut s = [0i32; D];
        for i in 0..D {
            s[i] = a[i] + b[i];
        }
        self.in_ball(a) && self.in_ball(b) && self.in_ball(&s)
    }

    /// All nonzero lattice points in the mollifier ball, in lexicographic order.
    pub fn ball_points<const D: usize>(&self) -> Vec<[i32; D]> {
        assert_eq!(self.d, D, "params dimension does not match lattice dimension");
        let r = self.cutoff.floor() as i32;
        let mut out = Vec::new();
        let mut k = [-r; D];
        loop {
            if k.iter().any(|&c| c != 0) && self.in_ball(&k) {
                out.push(k);
            }
            let mut i = D;
            loop {
                if i == 0 {
                    return out;
                }
                i -= 1;
                if k[i] < r {
                    k[i] += 1;
                    break;
                }
                k[i] = -r;
            }
        }
    }
}

/// Coupling schedule N ↦ λ_N.
pub fn coupling(d: usize, lambda: f64, cutoff: f64) -> f64 {
    if d == 2 {
        lambda / cutoff.ln().sqrt()
    } else {
        lambda * cutoff.powf(1.0 - d as f64 / 2.0)
    }
}

pub(crate) fn in_ball(norm: Norm, cutoff: f64, k: &[i32]) -> bool {
    match norm {
        Norm::Euclidean => {
            let n2: i64 = k.iter().map(|&c| (c as i64) * (c as i64)).sum();
            (n2 as f64) <= cutoff * cutoff
        }
        Norm::Sup => k.iter().all(|&c| (c.abs() as f64) <= cutoff),
    }
}

/// Checks the half-integer (d ≥ 3) or integer (d = 2) rule for N.
pub fn check_cutoff(d: usize, cutoff: f64) -> Result<()> {
    if !cutoff.is_finite() || cutoff <= 0.0 {
        return Err(Error::InvalidParam(format!("N = {cutoff} must be positive")));
    }
    let twice = 2.0 * cutoff;
    if d >= 3 {
        if twice.fract() != 0.0 || (twice as i64) % 2 != 1 {
            return Err(Error::InvalidParam(format!("N = {cutoff} must be a half-integer for d = {d}")));
        }
    } else if cutoff.fract() != 0.0 || cutoff < 2.0 {
        return Err(Error::InvalidParam(format!("N = {cutoff} must be an integer >= 2 for d = 2")));
    }
    Ok(())
}
