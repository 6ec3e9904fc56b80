use thiserror::Error;

use crate::fields::FieldError;
use crate::potential::PotentialError;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum SolverError {
    #[error(transparent)]
    Field(#[from] FieldError),
    #[error(transparent)]
    Potential(#[from] PotentialError),
    #[error("invalid parameters: {}", .0.join("; "))]
    Invalid(Vec<String>),
    #[error("non-finite {what} at step {step}")]
    NonFinite { what: String, step: u64 },
    #[error("energy grew by a factor {ratio:.3e} at step {step} (t = {t}); reduce dt")]
    CflAbort { step: u64, t: f64, ratio: f64 },
    #[error("Picard coupling did not converge in {iters} iterations at step {step}; relative changes {trace:?}")]
    PicardDiverged { step: u64, iters: usize, trace: Vec<f64> },
    #[error("{solver} did not converge: residual {residual:.3e} after {iters} iterations")]
    LinearSolver { solver: &'static str, iters: usize, residual: f64 },
    #[error("boundary data: {0}")]
    Boundary(String),
}

impl SolverError {
    /// True for failures of the numerics rather than of the inputs.
    pub fn is_numerical(&self) -> bool {
        matches!(
            self,
            SolverError::NonFinite { .. }
                | SolverError::CflAbort { .. }
                | SolverError::PicardDiverged { .. }
                | SolverError::LinearSolver { .. }
        )
    }
}
