//! Numerical laboratory for the truncated stochastic Landau–Lifshitz
//! Navier–Stokes equation on the torus.
//!
//! The crate covers four layers:
//!
//! - [`divfree`]: lattice wave vectors, divergence-free frames, Leray projection.
//! - [`fock`]: sparse symmetric chaos kernels and the generator pieces acting on them.
//! - [`diffusivity`]: closed forms, limit integrals and finite-N lattice routes to
//!   the effective diffusivity constant.
//! - [`spde`]: spectral Galerkin simulation of the truncated dynamics and
//!   Green–Kubo / autocorrelation estimators.
//!
//! Dimension enters as a const generic `D` wherever lattice vectors are
//! stored; the tested dimensions are 2 and 3.

pub mod diffusivity;
pub mod divfree;
mod error;
pub mod fock;
pub mod params;
pub mod quad;
pub mod report;
pub mod rng;
pub mod spde;
pub mod stats;

pub use error::{Error, Result};
pub use params::{ModelParams, Norm};

/// Fixed chunk length for deterministic parallel reductions.
///
/// Reductions are split into chunks of this many items, reduced in parallel and
/// then summed sequentially, so results do not depend on the thread count.
pub const REDUCE_CHUNK: usize = 1024;

pub(crate) fn det_sum<T, F>(items: &[T], f: F) -> f64
where
    T: Sync,
    F: Fn(&T) -> f64 + Sync,
{
    use rayon::prelude::*;
    let partial: Vec<f64> = items
        .par_chunks(REDUCE_CHUNK)
        .map(|c| c.iter().map(&f).sum::<f64>())
        .collect();
    partial.iter().sum()
}
