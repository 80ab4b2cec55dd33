//! Fock-space kernels and the generator pieces acting on them.
//!
//! A degree-n element is stored as a [`ChaosKernel`]: one dense block of
//! `d^n` complex components per sorted momentum tuple. The component index
//! of a block is row-major over the slots in sorted-momentum order.

mod fiber;
mod kernel;
mod ops;
mod random;
mod resolvent;
mod snapshot;

pub use fiber::{estimate_fiber_len, fiber_keys, StackSpace};
pub use kernel::{multiplicity, sigma_kernel, sigma_kernel_with_rule, sym_pair, ChaosKernel, KernelBuilder, KernelSource, Key};
pub use ops::{
    aminus_block, apply_aminus, apply_l0_power, apply_momentum, apply_t, aplus_block, apply_aplus, l0_weight,
    norm_sq_on, LazyAplus, Sign,
};
pub use random::random_kernel;
pub use resolvent::{gmres, resolvent_solve, resolvent_solve_schur, GmresConfig, GmresOutcome, ResolventSolution};
pub use snapshot::{read_snapshot, write_snapshot, SnapshotHeader};

use num_complex::Complex64;

pub(crate) type Block = smallvec::SmallVec<[Complex64; 27]>;

pub(crate) const MAX_DEGREE: usize = 8;

#[inline]
pub(crate) fn ipow(d: usize, n: usize) -> usize {
    d.pow(n as u32)
}

pub(crate) fn factorial(n: usize) -> f64 {
    (1..=n).map(|i| i as f64).product()
}
