//! Exit-code contract: 0 success, 1 property failure, 2 hypothesis failure,
//! 3 path failure, 4 I/O or configuration error.

use std::fmt;

use gma_core::GmaError;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum ExitCode {
    Success = 0,
    PropertyFailure = 1,
    HypothesisFailure = 2,
    PathFailure = 3,
    Io = 4,
}

impl ExitCode {
    pub fn code(self) -> u8 {
        self as u8
    }
}

#[derive(Debug)]
pub struct CliError {
    pub code: ExitCode,
    pub message: String,
}

impl CliError {
    pub fn config(msg: impl Into<String>) -> Self {
        Self { code: ExitCode::Io, message: format!("config: {}", msg.into()) }
    }

    pub fn io(msg: impl Into<String>) -> Self {
        Self { code: ExitCode::Io, message: msg.into() }
    }
}

impl fmt::Display for CliError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.message)
    }
}

impl std::error::Error for CliError {}

pub fn classify(e: &GmaError) -> ExitCode {
    match e {
        GmaError::HypothesisViolation(_) | GmaError::Infeasible(_) => ExitCode::HypothesisFailure,
        GmaError::PathFailure { .. }
        | GmaError::StepFailure { .. }
        | GmaError::NonConvergence { .. }
        | GmaError::LinearSolve { .. } => ExitCode::PathFailure,
        GmaError::InvalidInput(_) | GmaError::Io(_) | GmaError::Format(_) => ExitCode::Io,
    }
}

impl From<GmaError> for CliError {
    fn from(e: GmaError) -> Self {
        Self { code: classify(&e), message: e.to_string() }
    }
}

impl From<std::io::Error> for CliError {
    fn from(e: std::io::Error) -> Self {
        Self::io(e.to_string())
    }
}
