use thiserror::Error;

/// Errors surfaced by the library.
///
/// Variants split into rejected inputs (the caller asked for something outside
/// the model) and computational failures (a solver or estimator could not meet
/// its contract).
#[derive(Debug, Error)]
pub enum Error {
    #[error("zero wave vector is excluded")]
    ZeroWaveVector,
    #[error("field is not divergence free at k = {k:?} (relative defect {defect:.3e})")]
    NotDivergenceFree { k: Vec<i32>, defect: f64 },
    #[error("invalid parameter: {0}")]
    InvalidParam(String),
    #[error("solver did not converge after {iterations} iterations (relative residual {residual:.3e})")]
    NoConvergence { iterations: usize, residual: f64 },
    #[error("estimated memory {estimate_bytes} bytes exceeds the budget of {budget_bytes} bytes")]
    MemoryBudget { estimate_bytes: u64, budget_bytes: u64 },
    #[error("estimator refused: {0}")]
    Estimator(String),
    #[error("non-finite state at t = {time} in mode {mode:?}")]
    NonFinite { time: f64, mode: Vec<i32> },
    #[error("quadrature did not reach tolerance {tol:.1e} (error estimate {estimate:.3e})")]
    Quadrature { tol: f64, estimate: f64 },
}

impl Error {
    /// True for errors caused by bad input rather than a failed computation.
    pub fn is_usage(&self) -> bool {
        matches!(
            self,
            Error::ZeroWaveVector
                | Error::NotDivergenceFree { .. }
                | Error::InvalidParam(_)
                | Error::MemoryBudget { .. }
        )
    }
}

pub type Result<T> = std::result::Result<T, Error>;
