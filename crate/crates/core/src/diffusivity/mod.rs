//! Routes to the effective diffusivity constant.
//!
//! - [`closed`]: closed forms, the replacement function G and the corollary inequalities.
//! - [`replacement`]: the d = 2 replacement kernel Pᴺ and its deviation from G∘Lᴺ.
//! - [`f1`]: first expansion coefficient by closed form, quadrature and lattice sum.
//! - [`f2`]: Monte-Carlo evaluation of the six-dimensional second-order integral.
//! - [`lattice`]: finite-N operator routes (path sums, truncated resolvent D, sector bound).
//!
//! "λ-stripped" quantities are computed with λ = 1 while keeping the
//! N-dependence of λ_N, so they multiply a fixed power of λ.

pub mod closed;
pub mod f1;
pub mod f2;
pub mod lattice;
pub mod replacement;

pub use closed::*;
pub use f1::{f1_closed, f1_lattice, f1_quadrature, f1_trig_quadrature, richardson};
pub use f2::{f2_integrand, f2_integrand_frames, f2_monte_carlo, F2Config, McEstimate};
pub use lattice::{
    d_truncated, d_truncated_from, d_truncated_solution, f1_operator, f2_operator, fl_lattice, path_sum, paths, sector_ratio, DTruncated, FlValue,
};
pub use replacement::{default_samples, fit_replacement_constant, replacement_deviation, replacement_kernel_pn, ReplacementFit};
