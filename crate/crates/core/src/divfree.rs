//! Divergence-free Fourier frames and the Leray projection.
//!
//! The sign partition of the lattice follows the lexicographic rule: a nonzero
//! `k` lies in `Z^d_+` iff its first nonzero component is positive.

use std::collections::BTreeMap;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::{Error, Result};

/// Relative tolerance for the divergence check in [`decompose`].
pub const DIV_TOL: f64 = 1e-10;

/// Nonzero integer lattice vector.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct WaveVector<const D: usize>(#[serde(with = "serde_arr")] [i32; D]);

impl<const D: usize> WaveVector<D> {
    pub fn new(c: [i32; D]) -> Result<Self> {
        if c.iter().all(|&x| x == 0) {
            return Err(Error::ZeroWaveVector);
        }
        Ok(WaveVector(c))
    }

    pub fn components(&self) -> &[i32; D] {
        &self.0
    }

    pub fn is_positive(&self) -> bool {
        is_positive(&self.0)
    }

    pub fn neg(&self) -> Self {
        WaveVector(neg(&self.0))
    }

    pub fn norm2(&self) -> f64 {
        norm2(&self.0)
    }
}

mod serde_arr {
    use serde::{Deserialize, Deserializer, Serialize, Serializer};

    pub fn serialize<S: Serializer, const D: usize>(a: &[i32; D], s: S) -> Result<S::Ok, S::Error> {
        a.as_slice().serialize(s)
    }

    pub fn deserialize<'de, De: Deserializer<'de>, const D: usize>(d: De) -> Result<[i32; D], De::Error> {
        let v = Vec::<i32>::deserialize(d)?;
        v.try_into()
            .map_err(|v: Vec<i32>| serde::de::Error::invalid_length(v.len(), &"lattice vector of the model dimension"))
    }
}

/// First nonzero component positive.
#[inline]
pub fn is_positive(k: &[i32]) -> bool {
    k.iter().find(|&&c| c != 0).is_some_and(|&c| c > 0)
}

#[inline]
pub fn neg<const D: usize>(k: &[i32; D]) -> [i32; D] {
    let mut o = *k;
    for c in o.iter_mut() {
        *c = -*c;
    }
    o
}

#[inline]
pub fn add<const D: usize>(a: &[i32; D], b: &[i32; D]) -> [i32; D] {
    let mut o = *a;
    for i in 0..D {
        o[i] += b[i];
    }
    o
}

#[inline]
pub fn sub<const D: usize>(a: &[i32; D], b: &[i32; D]) -> [i32; D] {
    let mut o = *a;
    for i in 0..D {
        o[i] -= b[i];
    }
    o
}

#[inline]
pub fn norm2(k: &[i32]) -> f64 {
    k.iter().map(|&c| (c as f64) * (c as f64)).sum()
}

#[inline]
pub fn to_f64<const D: usize>(k: &[i32; D]) -> [f64; D] {
    let mut o = [0.0; D];
    for i in 0..D {
        o[i] = k[i] as f64;
    }
    o
}

#[inline]
pub fn dot<const D: usize>(a: &[f64; D], b: &[f64; D]) -> f64 {
    let mut s = 0.0;
    for i in 0..D {
        s += a[i] * b[i];
    }
    s
}

/// Leray matrix I − kkᵀ/|k|² without the zero check. Callers guarantee k ≠ 0.
#[inline]
pub fn leray_raw<const D: usize>(k: &[i32; D]) -> [[f64; D]; D] {
    let kf = to_f64(k);
    let n2 = dot(&kf, &kf);
    let mut m = [[0.0; D]; D];
    for i in 0..D {
        for j in 0..D {
            m[i][j] = if i == j { 1.0 } else { 0.0 } - kf[i] * kf[j] / n2;
        }
    }
    m
}

/// Leray projection matrix P̂(k) = I − kkᵀ/|k|².
pub fn leray_matrix<const D: usize>(k: &[i32; D]) -> Result<[[f64; D]; D]> {
    if k.iter().all(|&c| c == 0) {
        return Err(Error::ZeroWaveVector);
    }
    Ok(leray_raw(k))
}

#[inline]
pub fn mat_vec<const D: usize>(m: &[[f64; D]; D], v: &[f64; D]) -> [f64; D] {
    let mut o = [0.0; D];
    for i in 0..D {
        o[i] = dot(&m[i], v);
    }
    o
}

/// Rule for picking the seed vector of the Gram–Schmidt completion.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
pub enum FrameRule {
    /// Canonical vectors are tried in the order e₁, e₂, …
    #[default]
    FirstCanonical,
    /// Canonical vectors are tried in the order e_d, e_{d−1}, …
    LastCanonical,
}

/// Orthonormal divergence-free frame a_{k,1..d−1} attached to a wave vector.
///
/// The frame of `k` and `−k` coincide, and only the direction of `k` matters.
/// For `k ∈ Z^d_+` the ordered set `{a_1, …, a_{d−1}, k/|k|}` has determinant +1.
/// In d = 2 this makes `a_1` the clockwise quarter turn of `k/|k|`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Frame<const D: usize> {
    k: [i32; D],
    // rows 0..D-1 are a_{k,α}; row D-1 is k/|k| (with the sign of k)
    rows: [[f64; D]; D],
}

impl<const D: usize> Frame<D> {
    pub fn new(k: &WaveVector<D>) -> Self {
        Self::with_rule(k, FrameRule::FirstCanonical)
    }

    pub fn with_rule(k: &WaveVector<D>, rule: FrameRule) -> Self {
        frame_raw(k.components(), rule)
    }

    pub fn k(&self) -> &[i32; D] {
        &self.k
    }

    /// Vector a_{k,α+1} for the 0-based index `alpha < D − 1`.
    pub fn vector(&self, alpha: usize) -> &[f64; D] {
        assert!(alpha + 1 < D, "frame index {alpha} out of range for d = {D}");
        &self.rows[alpha]
    }

    pub fn vectors(&self) -> &[[f64; D]] {
        &self.rows[..D - 1]
    }

    pub fn unit_k(&self) -> &[f64; D] {
        &self.rows[D - 1]
    }
}

/// Frame of `k` under the default rule.
pub fn frame<const D: usize>(k: &WaveVector<D>) -> Frame<D> {
    Frame::new(k)
}

pub(crate) fn frame_raw<const D: usize>(k: &[i32; D], rule: FrameRule) -> Frame<D> {
    let kp = if is_positive(k) { *k } else { neg(k) };
    let mut u = to_f64(&kp);
    let n = dot(&u, &u).sqrt();
    u.iter_mut().for_each(|c| *c /= n);

    let mut basis: Vec<[f64; D]> = vec![u];
    let order: Vec<usize> = match rule {
        FrameRule::FirstCanonical => (0..D).collect(),
        FrameRule::LastCanonical => (0..D).rev().collect(),
    };
    for &i in &order {
        if basis.len() == D {
            break;
        }
        let mut v = [0.0; D];
        v[i] = 1.0;
        for b in &basis {
            let c = dot(&v, b);
            for j in 0..D {
                v[j] -= c * b[j];
            }
        }
        let nv = dot(&v, &v).sqrt();
        if nv > 1e-9 {
            v.iter_mut().for_each(|c| *c /= nv);
            basis.push(v);
        }
    }
    let mut rows = [[0.0; D]; D];
    for a in 0..D - 1 {
        rows[a] = basis[a + 1];
    }
    rows[D - 1] = u;
    if det(&rows) < 0.0 {
        rows[D - 2].iter_mut().for_each(|c| *c = -*c);
    }
    if kp != *k {
        rows[D - 1].iter_mut().for_each(|c| *c = -*c);
    }
    Frame { k: *k, rows }
}

/// Determinant by Gaussian elimination with partial pivoting.
pub fn det<const D: usize>(m: &[[f64; D]; D]) -> f64 {
    let mut a = *m;
    let mut d = 1.0;
    for c in 0..D {
        let p = (c..D)
            .max_by(|&i, &j| a[i][c].abs().total_cmp(&a[j][c].abs()))
            .unwrap();
        if a[p][c] == 0.0 {
            return 0.0;
        }
        if p != c {
            a.swap(p, c);
            d = -d;
        }
        d *= a[c][c];
        for r in c + 1..D {
            let f = a[r][c] / a[c][c];
            for j in c..D {
                a[r][j] -= f * a[c][j];
            }
        }
    }
    d
}

/// Componentwise Fourier field: û(·,k) ∈ ℂᵈ per wave vector.
pub type FourierField<const D: usize> = BTreeMap<[i32; D], [Complex64; D]>;

/// Frame coefficients u_{k,α}, `D − 1` entries per wave vector.
pub type FrameCoefficients<const D: usize> = BTreeMap<[i32; D], Vec<Complex64>>;

/// Projects a divergence-free field onto its frame coefficients.
///
/// Rejects the field if some mode has relative divergence above [`DIV_TOL`].
pub fn decompose<const D: usize>(field: &FourierField<D>) -> Result<FrameCoefficients<D>> {
    let mut out = BTreeMap::new();
    for (k, u) in field {
        let kv = WaveVector::new(*k)?;
        let kf = to_f64(k);
        let amp = u.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
        let div: Complex64 = (0..D).map(|l| u[l] * kf[l]).sum();
        let defect = div.norm() / (dot(&kf, &kf).sqrt() * amp.max(f64::MIN_POSITIVE));
        if amp > 0.0 && defect > DIV_TOL {
            return Err(Error::NotDivergenceFree { k: k.to_vec(), defect });
        }
        let fr = Frame::new(&kv);
        let coeffs = fr
            .vectors()
            .iter()
            .map(|a| (0..D).map(|l| u[l] * a[l]).sum())
            .collect();
        out.insert(*k, coeffs);
    }
    Ok(out)
}

/// Builds û(·,k) = Σ_α u_{k,α} a_{k,α}; divergence free by construction.
pub fn recompose<const D: usize>(coeffs: &FrameCoefficients<D>) -> Result<FourierField<D>> {
    let mut out = BTreeMap::new();
    for (k, c) in coeffs {
        let kv = WaveVector::new(*k)?;
        if c.len() != D - 1 {
            return Err(Error::InvalidParam(format!(
                "expected {} frame coefficients at {k:?}, got {}",
                D - 1,
                c.len()
            )));
        }
        let fr = Frame::new(&kv);
        let mut u = [Complex64::new(0.0, 0.0); D];
        for (a, z) in fr.vectors().iter().zip(c) {
            for l in 0..D {
                u[l] += z * a[l];
            }
        }
        out.insert(*k, u);
    }
    Ok(out)
}
