use num_complex::Complex64;

use super::fiber::fiber_keys;
use super::kernel::{ChaosKernel, KernelBuilder};
use super::ipow;
use crate::rng::Stream;
use crate::ModelParams;

/// Pseudo-random symmetric, per-leg divergence-free kernel on the fiber of
/// `total`, supported on at most `entries` canonical tuples.
pub fn random_kernel<const D: usize>(
    p: &ModelParams,
    degree: usize,
    total: [i32; D],
    entries: usize,
    seed: u64,
) -> ChaosKernel<D> {
    let keys = fiber_keys(p, degree, total);
    let mut s = Stream::new(seed, degree as u64);
    let bs = ipow(D, degree);
    let mut b = KernelBuilder::new(degree, Some(total));
    let take = entries.min(keys.len());
    // partial Fisher–Yates over the fiber
    let mut idx: Vec<usize> = (0..keys.len()).collect();
    for i in 0..take {
        let j = i + ((s.uniform() * (keys.len() - i) as f64) as usize).min(keys.len() - i - 1);
        idx.swap(i, j);
    }
    let mut chosen: Vec<usize> = idx[..take].to_vec();
    chosen.sort_unstable();
    let mut blk = vec![Complex64::new(0.0, 0.0); bs];
    for i in chosen {
        for z in blk.iter_mut() {
            let (a, c) = s.normal_pair();
            *z = Complex64::new(a, c);
        }
        b.add_symmetrized(&keys[i], &blk);
    }
    b.build().project_divergence_free()
}
