use num_complex::Complex64;
use rustc_hash::FxHashMap;

use super::{factorial, ipow, Block, MAX_DEGREE};
use crate::divfree::{frame_raw, leray_raw, FrameRule, WaveVector};
use crate::REDUCE_CHUNK;

/// Sorted momentum tuple identifying one block.
pub type Key<const D: usize> = Box<[[i32; D]]>;

const ZERO: Complex64 = Complex64::new(0.0, 0.0);

/// Anything that can produce the component block of a degree-n kernel at a
/// momentum tuple given in arbitrary slot order.
///
/// `out` has length `D^n`, row-major over the slots in the order of `ks`.
/// Returns `false` (and leaves `out` unspecified) when the block is absent.
pub trait KernelSource<const D: usize>: Sync {
    fn degree(&self) -> usize;
    fn block_into(&self, ks: &[[i32; D]], out: &mut [Complex64]) -> bool;
}

/// Sparse symmetric kernel of a fixed degree.
///
/// Blocks are kept in ascending key order so that every traversal, and with it
/// every floating-point reduction, is reproducible.
#[derive(Debug, Clone)]
pub struct ChaosKernel<const D: usize> {
    degree: usize,
    total: Option<[i32; D]>,
    keys: Vec<Key<D>>,
    vals: Vec<Complex64>,
    index: FxHashMap<Key<D>, usize>,
}

/// Number of distinct orderings of a sorted momentum tuple: n!/Π mₖ!.
pub fn multiplicity<const D: usize>(key: &[[i32; D]]) -> f64 {
    let n = key.len();
    let mut m = factorial(n);
    let mut run = 1usize;
    for s in 1..=n {
        if s < n && key[s] == key[s - 1] {
            run += 1;
        } else {
            m /= factorial(run);
            run = 1;
        }
    }
    m
}

/// order[s] = position in `ks` of the s-th smallest momentum (stable).
#[inline]
pub(crate) fn sort_order<const D: usize>(ks: &[[i32; D]], order: &mut [usize]) {
    let n = ks.len();
    for (i, o) in order.iter_mut().enumerate().take(n) {
        *o = i;
    }
    for i in 1..n {
        let mut j = i;
        while j > 0 && ks[order[j]] < ks[order[j - 1]] {
            order.swap(j, j - 1);
            j -= 1;
        }
    }
}

/// out[l₀…l_{n−1}] = src[Σ_s l_s·strides[s]], row-major over `out`.
#[inline]
pub(crate) fn gather(src: &[Complex64], d: usize, strides: &[usize], out: &mut [Complex64]) {
    let n = strides.len();
    let mut digits = [0usize; MAX_DEGREE];
    let mut sidx = 0usize;
    for o in out.iter_mut() {
        *o = src[sidx];
        let mut s = n;
        while s > 0 {
            s -= 1;
            digits[s] += 1;
            sidx += strides[s];
            if digits[s] < d {
                break;
            }
            sidx -= d * strides[s];
            digits[s] = 0;
        }
    }
}

impl<const D: usize> ChaosKernel<D> {
    pub fn zero(degree: usize, total: Option<[i32; D]>) -> Self {
        assert!(degree <= MAX_DEGREE, "degree {degree} exceeds {MAX_DEGREE}");
        ChaosKernel {
            degree,
            total,
            keys: Vec::new(),
            vals: Vec::new(),
            index: FxHashMap::default(),
        }
    }

    /// Builds from canonical keys in strictly ascending order and matching blocks.
    pub(crate) fn from_sorted(degree: usize, total: Option<[i32; D]>, keys: Vec<Key<D>>, vals: Vec<Complex64>) -> Self {
        let bs = ipow(D, degree);
        assert_eq!(keys.len() * bs, vals.len());
        debug_assert!(keys.windows(2).all(|w| w[0] < w[1]));
        let mut index = FxHashMap::default();
        index.reserve(keys.len());
        for (i, k) in keys.iter().enumerate() {
            index.insert(k.clone(), i);
        }
        ChaosKernel {
            degree,
            total,
            keys,
            vals,
            index,
        }
    }

    /// Assembles a kernel from (canonical key, block) pairs in any order.
    /// Pairs whose block is identically zero are dropped.
    pub(crate) fn from_pairs(degree: usize, total: Option<[i32; D]>, mut pairs: Vec<(Key<D>, Block)>) -> Self {
        pairs.retain(|(_, b)| b.iter().any(|z| *z != ZERO));
        pairs.sort_unstable_by(|a, b| a.0.cmp(&b.0));
        let bs = ipow(D, degree);
        let mut keys = Vec::with_capacity(pairs.len());
        let mut vals = Vec::with_capacity(pairs.len() * bs);
        for (k, b) in pairs {
            keys.push(k);
            vals.extend_from_slice(&b);
        }
        Self::from_sorted(degree, total, keys, vals)
    }

    pub fn degree(&self) -> usize {
        self.degree
    }

    pub fn total(&self) -> Option<[i32; D]> {
        self.total
    }

    pub fn len(&self) -> usize {
        self.keys.len()
    }

    pub fn is_empty(&self) -> bool {
        self.keys.is_empty()
    }

    pub fn block_len(&self) -> usize {
        ipow(D, self.degree)
    }

    pub fn keys(&self) -> &[Key<D>] {
        &self.keys
    }

    pub fn block(&self, i: usize) -> &[Complex64] {
        let bs = self.block_len();
        &self.vals[i * bs..(i + 1) * bs]
    }

    pub fn iter(&self) -> impl Iterator<Item = (&[[i32; D]], &[Complex64])> {
        let bs = self.block_len();
        self.keys.iter().map(|k| &k[..]).zip(self.vals.chunks(bs.max(1)))
    }

    /// Block at a sorted key.
    pub fn block_of(&self, key: &[[i32; D]]) -> Option<&[Complex64]> {
        self.index.get(key).map(|&i| self.block(i))
    }

    /// Coefficient f̂((l₁,k₁),…,(lₙ,kₙ)) at an arbitrary tuple; components are 0-based.
    pub fn value(&self, ls: &[usize], ks: &[[i32; D]]) -> Complex64 {
        assert_eq!(ls.len(), self.degree);
        let mut out: Block = smallvec::smallvec![ZERO; self.block_len()];
        if !self.block_into(ks, &mut out) {
            return ZERO;
        }
        let idx = ls.iter().fold(0, |acc, &l| acc * D + l);
        out[idx]
    }

    /// Fock inner product n!·Σ conj(f)·g over the full tuple space.
    /// Kernels of different degree are orthogonal.
    pub fn inner(&self, other: &Self) -> Complex64 {
        if self.degree != other.degree {
            return ZERO;
        }
        let nf = factorial(self.degree);
        let idx: Vec<usize> = (0..self.keys.len()).collect();
        let partial: Vec<Complex64> = {
            use rayon::prelude::*;
            idx.par_chunks(REDUCE_CHUNK)
                .map(|c| {
                    let mut s = ZERO;
                    for &i in c {
                        let key = &self.keys[i];
                        if let Some(g) = other.block_of(key) {
                            let f = self.block(i);
                            let dot: Complex64 = f.iter().zip(g).map(|(a, b)| a.conj() * b).sum();
                            s += dot * multiplicity(key);
                        }
                    }
                    s
                })
                .collect()
        };
        partial.iter().sum::<Complex64>() * nf
    }

    pub fn norm_sq(&self) -> f64 {
        self.inner(self).re
    }

    /// New kernel with every block multiplied by `f(key)`.
    pub fn scaled_by<F: Fn(&[[i32; D]]) -> Complex64>(&self, f: F) -> Self {
        let bs = self.block_len();
        let mut vals = self.vals.clone();
        for (i, k) in self.keys.iter().enumerate() {
            let c = f(k);
            vals[i * bs..(i + 1) * bs].iter_mut().for_each(|z| *z *= c);
        }
        ChaosKernel {
            degree: self.degree,
            total: self.total,
            keys: self.keys.clone(),
            vals,
            index: self.index.clone(),
        }
    }

    pub fn scale(&self, c: Complex64) -> Self {
        self.scaled_by(|_| c)
    }

    /// a·self + b·other on the union of supports.
    pub fn lin_comb(&self, a: Complex64, other: &Self, b: Complex64) -> Self {
        assert_eq!(self.degree, other.degree);
        let bs = self.block_len();
        let mut map: FxHashMap<Key<D>, Block> = FxHashMap::default();
        for (k, blk) in self.iter() {
            map.insert(k.into(), blk.iter().map(|z| z * a).collect());
        }
        for (k, blk) in other.iter() {
            let e = map.entry(k.into()).or_insert_with(|| smallvec::smallvec![ZERO; bs]);
            for (x, y) in e.iter_mut().zip(blk) {
                *x += y * b;
            }
        }
        let total = if self.total == other.total { self.total } else { None };
        Self::from_pairs(self.degree, total, map.into_iter().collect())
    }

    /// Largest coefficient magnitude.
    pub fn max_abs(&self) -> f64 {
        self.vals.iter().map(|z| z.norm()).fold(0.0, f64::max)
    }

    /// Largest coefficientwise difference, treating missing blocks as zero.
    pub fn max_abs_diff(&self, other: &Self) -> f64 {
        let d = self.lin_comb(Complex64::new(1.0, 0.0), other, Complex64::new(-1.0, 0.0));
        d.max_abs()
    }

    /// Largest violation of the permutation symmetry among equal-momentum slots.
    pub fn symmetry_defect(&self) -> f64 {
        let n = self.degree;
        let mut worst = 0.0f64;
        for (key, blk) in self.iter() {
            for s in 0..n.saturating_sub(1) {
                if key[s] != key[s + 1] {
                    continue;
                }
                let st = ipow(D, n - 1 - s);
                let st2 = ipow(D, n - 2 - s);
                for (idx, z) in blk.iter().enumerate() {
                    let a = (idx / st) % D;
                    let b = (idx / st2) % D;
                    let swapped = idx - a * st - b * st2 + b * st + a * st2;
                    worst = worst.max((z - blk[swapped]).norm());
                }
            }
        }
        worst
    }

    /// Largest per-leg divergence |Σ_l k_j^l f(…,(l,k_j),…)|/|k_j|, relative to
    /// the largest coefficient of the kernel.
    pub fn divergence_defect(&self) -> f64 {
        let n = self.degree;
        let scale = self.max_abs();
        if scale == 0.0 {
            return 0.0;
        }
        let mut worst = 0.0f64;
        for (key, blk) in self.iter() {
            for (j, kj) in key.iter().enumerate() {
                let st = ipow(D, n - 1 - j);
                let kn = crate::divfree::norm2(kj).sqrt();
                for idx in 0..blk.len() {
                    if (idx / st) % D != 0 {
                        continue;
                    }
                    let mut s = ZERO;
                    for l in 0..D {
                        s += blk[idx + l * st] * kj[l] as f64;
                    }
                    worst = worst.max(s.norm() / (kn * scale));
                }
            }
        }
        worst
    }

    /// True when every stored tuple sums to the declared total momentum.
    pub fn momentum_consistent(&self) -> bool {
        match self.total {
            None => true,
            Some(t) => self.keys.iter().all(|k| {
                let mut s = [0i32; D];
                for q in k.iter() {
                    for i in 0..D {
                        s[i] += q[i];
                    }
                }
                s == t
            }),
        }
    }

    /// Applies P̂(k_j) along every slot of every block.
    pub fn project_divergence_free(&self) -> Self {
        let n = self.degree;
        let bs = self.block_len();
        let mut vals = self.vals.clone();
        for (i, key) in self.keys.iter().enumerate() {
            let blk = &mut vals[i * bs..(i + 1) * bs];
            for (j, kj) in key.iter().enumerate() {
                let p = leray_raw(kj);
                let st = ipow(D, n - 1 - j);
                for idx in 0..bs {
                    if (idx / st) % D != 0 {
                        continue;
                    }
                    let mut col = [ZERO; D];
                    for l in 0..D {
                        col[l] = blk[idx + l * st];
                    }
                    for l in 0..D {
                        let mut s = ZERO;
                        for m in 0..D {
                            s += col[m] * p[l][m];
                        }
                        blk[idx + l * st] = s;
                    }
                }
            }
        }
        ChaosKernel {
            degree: n,
            total: self.total,
            keys: self.keys.clone(),
            vals,
            index: self.index.clone(),
        }
    }
}

impl<const D: usize> KernelSource<D> for ChaosKernel<D> {
    fn degree(&self) -> usize {
        self.degree
    }

    fn block_into(&self, ks: &[[i32; D]], out: &mut [Complex64]) -> bool {
        let n = ks.len();
        debug_assert_eq!(n, self.degree);
        let mut order = [0usize; MAX_DEGREE];
        sort_order(ks, &mut order);
        let mut buf = [[0i32; D]; MAX_DEGREE];
        for s in 0..n {
            buf[s] = ks[order[s]];
        }
        let Some(&i) = self.index.get(&buf[..n]) else {
            return false;
        };
        let mut strides = [0usize; MAX_DEGREE];
        for s in 0..n {
            strides[order[s]] = ipow(D, n - 1 - s);
        }
        gather(self.block(i), D, &strides[..n], out);
        true
    }
}

/// Accumulates symmetrized contributions into a kernel.
pub struct KernelBuilder<const D: usize> {
    degree: usize,
    total: Option<[i32; D]>,
    map: FxHashMap<Key<D>, Block>,
}

impl<const D: usize> KernelBuilder<D> {
    pub fn new(degree: usize, total: Option<[i32; D]>) -> Self {
        assert!(degree <= MAX_DEGREE);
        KernelBuilder {
            degree,
            total,
            map: FxHashMap::default(),
        }
    }

    /// Adds Sym(t) for the tensor t supported at the ordered tuple `ks` with
    /// block `block` (row-major over the slots of `ks`).
    /// Sym averages over all n! slot permutations.
    pub fn add_symmetrized(&mut self, ks: &[[i32; D]], block: &[Complex64]) {
        let n = self.degree;
        assert_eq!(ks.len(), n);
        let bs = ipow(D, n);
        assert_eq!(block.len(), bs);
        let mut order = [0usize; MAX_DEGREE];
        sort_order(ks, &mut order);
        let key: Key<D> = order[..n].iter().map(|&i| ks[i]).collect();
        let inv_nf = 1.0 / factorial(n);
        let mut tmp: Block = smallvec::smallvec![ZERO; bs];
        let mut perm: Vec<usize> = (0..n).collect();
        let entry = self.map.entry(key.clone()).or_insert_with(|| smallvec::smallvec![ZERO; bs]);
        loop {
            if (0..n).all(|s| ks[perm[s]] == key[s]) {
                let strides: Vec<usize> = (0..n).map(|s| ipow(D, n - 1 - perm[s])).collect();
                gather(block, D, &strides, &mut tmp);
                for (e, t) in entry.iter_mut().zip(&tmp) {
                    *e += t * inv_nf;
                }
            }
            if !next_permutation(&mut perm) {
                break;
            }
        }
    }

    pub fn build(self) -> ChaosKernel<D> {
        ChaosKernel::from_pairs(self.degree, self.total, self.map.into_iter().collect())
    }
}

fn next_permutation(p: &mut [usize]) -> bool {
    let n = p.len();
    if n < 2 {
        return false;
    }
    let mut i = n - 1;
    while i > 0 && p[i - 1] >= p[i] {
        i -= 1;
    }
    if i == 0 {
        return false;
    }
    let mut j = n - 1;
    while p[j] <= p[i - 1] {
        j -= 1;
    }
    p.swap(i - 1, j);
    p[i..].reverse();
    true
}

/// Degree-1 kernel σ_{k,α} with coefficient a_{k,α}^l at (l,k); `alpha` is 0-based.
pub fn sigma_kernel<const D: usize>(k: &WaveVector<D>, alpha: usize) -> ChaosKernel<D> {
    sigma_kernel_with_rule(k, alpha, FrameRule::FirstCanonical)
}

/// [`sigma_kernel`] under an explicit frame rule.
pub fn sigma_kernel_with_rule<const D: usize>(k: &WaveVector<D>, alpha: usize, rule: FrameRule) -> ChaosKernel<D> {
    let fr = frame_raw(k.components(), rule);
    let a = fr.vector(alpha);
    let vals = a.iter().map(|&x| Complex64::new(x, 0.0)).collect();
    let kc = *k.components();
    ChaosKernel::from_sorted(1, Some(kc), vec![Box::new([kc])], vals)
}

/// Symmetrized tensor product ½(f⊗g + g⊗f) of two degree-1 kernels.
pub fn sym_pair<const D: usize>(f: &ChaosKernel<D>, g: &ChaosKernel<D>) -> ChaosKernel<D> {
    assert_eq!(f.degree(), 1);
    assert_eq!(g.degree(), 1);
    let total = match (f.total(), g.total()) {
        (Some(a), Some(b)) => Some(crate::divfree::add(&a, &b)),
        _ => None,
    };
    let mut b = KernelBuilder::new(2, total);
    let mut blk = vec![ZERO; D * D];
    for (kf, bf) in f.iter() {
        for (kg, bg) in g.iter() {
            for l in 0..D {
                for m in 0..D {
                    blk[l * D + m] = bf[l] * bg[m];
                }
            }
            b.add_symmetrized(&[kf[0], kg[0]], &blk);
        }
    }
    b.build()
}
