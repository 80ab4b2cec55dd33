use std::f64::consts::PI;

use num_complex::Complex64;
use rayon::prelude::*;
use rustc_hash::FxHashSet;

use super::kernel::{multiplicity, sort_order, ChaosKernel, KernelSource, Key};
use super::{factorial, ipow, Block, MAX_DEGREE};
use crate::divfree::{add, leray_raw, mat_vec, sub, to_f64};
use crate::{ModelParams, REDUCE_CHUNK};

const ZERO: Complex64 = Complex64::new(0.0, 0.0);

/// (2π)² Σ|kᵢ|², the symbol of −𝔏₀ on a momentum tuple.
#[inline]
pub fn l0_weight<const D: usize>(ks: &[[i32; D]]) -> f64 {
    let s: f64 = ks.iter().map(|k| crate::divfree::norm2(k)).sum();
    4.0 * PI * PI * s
}

/// Multiplies every block by ((2π)² Σ|kᵢ|²)^s; s = 1 is −𝔏₀.
pub fn apply_l0_power<const D: usize>(f: &ChaosKernel<D>, s: f64) -> ChaosKernel<D> {
    f.scaled_by(|ks| Complex64::new(l0_weight(ks).powf(s), 0.0))
}

/// Momentum operator M_i: multiplies by Σⱼ kⱼ^i.
pub fn apply_momentum<const D: usize>(axis: usize, f: &ChaosKernel<D>) -> ChaosKernel<D> {
    assert!(axis < D);
    f.scaled_by(|ks| Complex64::new(ks.iter().map(|k| k[axis] as f64).sum(), 0.0))
}

/// Offsets into a block of `m` slots for every digit string over `slots`.
fn slot_offsets<const D: usize>(m: usize, slots: &[usize], out: &mut Vec<usize>) {
    out.clear();
    let r = slots.len();
    let total = ipow(D, r);
    for idx in 0..total {
        let mut rem = idx;
        let mut off = 0;
        for q in (0..r).rev() {
            off += (rem % D) * ipow(D, m - 1 - slots[q]);
            rem /= D;
        }
        out.push(off);
    }
}

/// Pointwise 𝒜ᴺ₊ of a degree-n source at the (n+1)-tuple `ks`.
///
/// Sums over ordered pairs i ≠ j of
/// ℛ_{kᵢ,kⱼ} [P̂(kᵢ)(kᵢ+kⱼ)]_{lᵢ} [P̂(kⱼ) φ̂((·,kᵢ+kⱼ), rest)]_{lⱼ}
/// with prefactor λ_N·2πι/(n+1).
pub fn aplus_block<const D: usize, S: KernelSource<D> + ?Sized>(
    src: &S,
    ks: &[[i32; D]],
    p: &ModelParams,
    out: &mut [Complex64],
) -> bool {
    let m = ks.len();
    out.iter_mut().for_each(|z| *z = ZERO);
    if m < 2 {
        return false;
    }
    let n = m - 1;
    debug_assert_eq!(src.degree(), n);
    let rs = ipow(D, n - 1);
    let mut phi: Block = smallvec::smallvec![ZERO; ipow(D, n)];
    let mut w: Block = smallvec::smallvec![ZERO; D * rs];
    let mut key = [[0i32; D]; MAX_DEGREE];
    let mut rest = [0usize; MAX_DEGREE];
    let mut offs = Vec::with_capacity(rs);
    let mut any = false;
    for i in 0..m {
        for j in 0..m {
            if i == j || !p.mollifier(&ks[i], &ks[j]) {
                continue;
            }
            let kk = add(&ks[i], &ks[j]);
            if kk.iter().all(|&c| c == 0) {
                continue;
            }
            key[0] = kk;
            let mut r = 0;
            for s in 0..m {
                if s != i && s != j {
                    rest[r] = s;
                    key[1 + r] = ks[s];
                    r += 1;
                }
            }
            if !src.block_into(&key[..n], &mut phi) {
                continue;
            }
            any = true;
            let u = mat_vec(&leray_raw(&ks[i]), &to_f64(&kk));
            let pj = leray_raw(&ks[j]);
            for lj in 0..D {
                for rr in 0..rs {
                    let mut s = ZERO;
                    for mm in 0..D {
                        s += phi[mm * rs + rr] * pj[lj][mm];
                    }
                    w[lj * rs + rr] = s;
                }
            }
            slot_offsets::<D>(m, &rest[..n - 1], &mut offs);
            let si = ipow(D, m - 1 - i);
            let sj = ipow(D, m - 1 - j);
            for li in 0..D {
                if u[li] == 0.0 {
                    continue;
                }
                for lj in 0..D {
                    let base = li * si + lj * sj;
                    for rr in 0..rs {
                        out[base + offs[rr]] += w[lj * rs + rr] * u[li];
                    }
                }
            }
        }
    }
    if any {
        let c = Complex64::new(0.0, p.lambda_n() * 2.0 * PI / m as f64);
        out.iter_mut().for_each(|z| *z *= c);
    }
    any
}

/// Pointwise 𝒜ᴺ₋ of a degree-n source at the (n−1)-tuple `ks`.
///
/// Sums over slots j and splittings p + q = kⱼ inside `ball` of
/// ℛ_{p,q} Σ_{i,t} kⱼ^i P̂_{lⱼ,t}(kⱼ) ψ̂((t,p),(i,q), rest), prefactor λ_N·2πι·n.
pub fn aminus_block<const D: usize, S: KernelSource<D> + ?Sized>(
    src: &S,
    ks: &[[i32; D]],
    p: &ModelParams,
    ball: &[[i32; D]],
    out: &mut [Complex64],
) -> bool {
    let m = ks.len();
    let n = m + 1;
    out.iter_mut().for_each(|z| *z = ZERO);
    if n < 2 {
        return false;
    }
    debug_assert_eq!(src.degree(), n);
    let rs = ipow(D, m - 1);
    let mut psi: Block = smallvec::smallvec![ZERO; ipow(D, n)];
    let mut c: Block = smallvec::smallvec![ZERO; D * rs];
    let mut key = [[0i32; D]; MAX_DEGREE];
    let mut rest = [0usize; MAX_DEGREE];
    let mut offs = Vec::with_capacity(rs);
    let mut any = false;
    for j in 0..m {
        let kj = ks[j];
        if !p.in_ball(&kj) {
            continue;
        }
        let mut r = 0;
        for s in 0..m {
            if s != j {
                rest[r] = s;
                key[2 + r] = ks[s];
                r += 1;
            }
        }
        slot_offsets::<D>(m, &rest[..m - 1], &mut offs);
        let pj = leray_raw(&kj);
        let kf = to_f64(&kj);
        let sj = ipow(D, m - 1 - j);
        for pp in ball {
            let q = sub(&kj, pp);
            if q.iter().all(|&x| x == 0) || !p.in_ball(&q) {
                continue;
            }
            key[0] = *pp;
            key[1] = q;
            if !src.block_into(&key[..n], &mut psi) {
                continue;
            }
            any = true;
            for t in 0..D {
                for rr in 0..rs {
                    let mut s = ZERO;
                    for i in 0..D {
                        s += psi[(t * D + i) * rs + rr] * kf[i];
                    }
                    c[t * rs + rr] = s;
                }
            }
            for lj in 0..D {
                for rr in 0..rs {
                    let mut s = ZERO;
                    for t in 0..D {
                        s += c[t * rs + rr] * pj[lj][t];
                    }
                    out[lj * sj + offs[rr]] += s;
                }
            }
        }
    }
    if any {
        let cst = Complex64::new(0.0, p.lambda_n() * 2.0 * PI * n as f64);
        out.iter_mut().for_each(|z| *z *= cst);
    }
    any
}

/// Evaluates `f` at each canonical key in parallel and keeps the nonzero blocks.
pub(crate) fn evaluate_on<const D: usize, F>(
    degree: usize,
    total: Option<[i32; D]>,
    keys: Vec<Key<D>>,
    f: F,
) -> ChaosKernel<D>
where
    F: Fn(&[[i32; D]], &mut [Complex64]) -> bool + Sync,
{
    let bs = ipow(D, degree);
    let pairs: Vec<(Key<D>, Block)> = keys
        .into_par_iter()
        .with_min_len(64)
        .filter_map(|k| {
            let mut b: Block = smallvec::smallvec![ZERO; bs];
            f(&k, &mut b).then_some((k, b))
        })
        .collect();
    ChaosKernel::from_pairs(degree, total, pairs)
}

fn sorted_key<const D: usize>(buf: &[[i32; D]]) -> Key<D> {
    let mut order = [0usize; MAX_DEGREE];
    sort_order(buf, &mut order);
    order[..buf.len()].iter().map(|&i| buf[i]).collect()
}

/// 𝒜ᴺ₊: degree n → n+1, evaluated on every tuple reachable by splitting one momentum.
pub fn apply_aplus<const D: usize>(f: &ChaosKernel<D>, p: &ModelParams) -> ChaosKernel<D> {
    let n = f.degree();
    assert!(n < MAX_DEGREE);
    if n == 0 || f.is_empty() {
        return ChaosKernel::zero(n + 1, f.total());
    }
    let ball = p.ball_points::<D>();
    let mut set: FxHashSet<Key<D>> = FxHashSet::default();
    let mut buf = [[0i32; D]; MAX_DEGREE];
    for key in f.keys() {
        for s in 0..n {
            if s > 0 && key[s] == key[s - 1] {
                continue;
            }
            if !p.in_ball(&key[s]) {
                continue;
            }
            let mut r = 2;
            for (t, q) in key.iter().enumerate() {
                if t != s {
                    buf[r] = *q;
                    r += 1;
                }
            }
            for a in &ball {
                let b = sub(&key[s], a);
                if b.iter().all(|&x| x == 0) || !p.in_ball(&b) {
                    continue;
                }
                buf[0] = *a;
                buf[1] = b;
                set.insert(sorted_key(&buf[..n + 1]));
            }
        }
    }
    let mut keys: Vec<Key<D>> = set.into_iter().collect();
    keys.sort_unstable();
    evaluate_on(n + 1, f.total(), keys, |ks, out| aplus_block(f, ks, p, out))
}

/// 𝒜ᴺ₋: degree n → n−1, evaluated on every tuple reachable by merging two momenta.
pub fn apply_aminus<const D: usize>(f: &ChaosKernel<D>, p: &ModelParams) -> ChaosKernel<D> {
    let n = f.degree();
    if n < 2 || f.is_empty() {
        return ChaosKernel::zero(n.saturating_sub(1), f.total());
    }
    let ball = p.ball_points::<D>();
    let mut set: FxHashSet<Key<D>> = FxHashSet::default();
    let mut buf = [[0i32; D]; MAX_DEGREE];
    for key in f.keys() {
        for a in 0..n {
            for b in a + 1..n {
                if !p.mollifier(&key[a], &key[b]) {
                    continue;
                }
                let kk = add(&key[a], &key[b]);
                if kk.iter().all(|&x| x == 0) {
                    continue;
                }
                buf[0] = kk;
                let mut r = 1;
                for (t, q) in key.iter().enumerate() {
                    if t != a && t != b {
                        buf[r] = *q;
                        r += 1;
                    }
                }
                set.insert(sorted_key(&buf[..n - 1]));
            }
        }
    }
    let mut keys: Vec<Key<D>> = set.into_iter().collect();
    keys.sort_unstable();
    evaluate_on(n - 1, f.total(), keys, |ks, out| aminus_block(f, ks, p, &ball, out))
}

/// Direction of a T operator.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Sign {
    Plus,
    Minus,
}

/// T^{N,±} = (−𝔏₀)^{−½} 𝒜ᴺ_± (−𝔏₀)^{−½}.
pub fn apply_t<const D: usize>(sign: Sign, f: &ChaosKernel<D>, p: &ModelParams) -> ChaosKernel<D> {
    let g = apply_l0_power(f, -0.5);
    let h = match sign {
        Sign::Plus => apply_aplus(&g, p),
        Sign::Minus => apply_aminus(&g, p),
    };
    apply_l0_power(&h, -0.5)
}

/// (−𝔏₀)^{s}𝒜ᴺ₊ of a degree-n kernel, evaluated on demand at any (n+1)-tuple.
pub struct LazyAplus<'a, const D: usize> {
    src: &'a ChaosKernel<D>,
    params: ModelParams,
    power: f64,
}

impl<'a, const D: usize> LazyAplus<'a, D> {
    pub fn new(src: &'a ChaosKernel<D>, params: &ModelParams, power: f64) -> Self {
        LazyAplus {
            src,
            params: *params,
            power,
        }
    }
}

impl<const D: usize> KernelSource<D> for LazyAplus<'_, D> {
    fn degree(&self) -> usize {
        self.src.degree() + 1
    }

    fn block_into(&self, ks: &[[i32; D]], out: &mut [Complex64]) -> bool {
        if !aplus_block(self.src, ks, &self.params, out) {
            return false;
        }
        if self.power != 0.0 {
            let c = l0_weight(ks).powf(self.power);
            out.iter_mut().for_each(|z| *z *= c);
        }
        true
    }
}

/// Fock norm² of a source restricted to the given canonical keys.
pub fn norm_sq_on<const D: usize, S: KernelSource<D> + ?Sized>(src: &S, keys: &[Key<D>]) -> f64 {
    let n = src.degree();
    let bs = ipow(D, n);
    let partial: Vec<f64> = keys
        .par_chunks(REDUCE_CHUNK)
        .map(|chunk| {
            let mut b: Block = smallvec::smallvec![ZERO; bs];
            let mut s = 0.0;
            for k in chunk {
                if src.block_into(k, &mut b) {
                    s += multiplicity(k) * b.iter().map(|z| z.norm_sqr()).sum::<f64>();
                }
            }
            s
        })
        .collect();
    factorial(n) * partial.iter().sum::<f64>()
}
