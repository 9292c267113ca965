use thiserror::Error;

use crate::grid::ScalarField;

pub type Result<T> = std::result::Result<T, GmaError>;

#[derive(Debug, Error)]
pub enum GmaError {
    #[error("invalid input: {0}")]
    InvalidInput(String),

    #[error("hypothesis violated: {0}")]
    HypothesisViolation(String),

    #[error("infeasible configuration: {0}")]
    Infeasible(String),

    /// No damping factor above the floor kept the iterate in the cone while
    /// decreasing the residual.
    #[error("Newton step failed at t = {t}: {reason}")]
    StepFailure { t: f64, reason: String },

    #[error("Krylov solve did not converge: relative residual {relative_residual:.3e} after {iterations} iterations")]
    LinearSolve { iterations: usize, relative_residual: f64 },

    #[error("Newton did not converge within {iterations} iterations (residual {residual:.3e})")]
    NonConvergence { iterations: usize, residual: f64 },

    /// The continuity step fell below `dt_min`; carries the last solved point.
    #[error("continuity path stalled: step below {dt_min:.1e} after reaching t = {last_t}")]
    PathFailure { last_t: f64, dt_min: f64, last_phi: Box<ScalarField> },

    #[error("I/O error: {0}")]
    Io(#[from] std::io::Error),

    #[error("format error: {0}")]
    Format(String),
}

impl GmaError {
    pub(crate) fn invalid(msg: impl Into<String>) -> Self {
        GmaError::InvalidInput(msg.into())
    }
}
