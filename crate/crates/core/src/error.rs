use thiserror::Error;

use crate::qp::QpError;

pub type Result<T, E = Error> = std::result::Result<T, E>;

/// Errors raised by interval arithmetic and the estimators.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("invalid endpoints: inf {inf} > sup {sup}")]
    InvalidEndpoints { inf: f64, sup: f64 },

    #[error("Hukuhara difference does not exist: spr of subtrahend {subtrahend} exceeds {minuend}")]
    NoHukuharaDifference { minuend: f64, subtrahend: f64 },

    #[error("empty sample")]
    EmptySample,

    #[error("length mismatch: expected {expected}, found {found}")]
    LengthMismatch { expected: usize, found: usize },

    #[error("not enough observations: need at least {needed}, have {found}")]
    TooFewObservations { needed: usize, found: usize },

    #[error("degenerate regressor: {0}")]
    DegenerateRegressor(String),

    #[error("degenerate response: the response sample has zero variability")]
    DegenerateResponse,

    #[error("theta must be a positive finite number, got {0}")]
    InvalidTheta(f64),

    #[error("arity mismatch: model expects {expected} predictors, got {found}")]
    ArityMismatch { expected: usize, found: usize },

    #[error("numerical breakdown: {0}")]
    Numerical(String),

    #[error("study failed: {failures} of {reps} replicates could not be fitted")]
    StudyFailed { failures: usize, reps: usize },

    #[error(transparent)]
    Qp(#[from] QpError),
}

impl Error {
    /// Stable variant name, used by the CLI when reporting failures.
    pub fn name(&self) -> &'static str {
        match self {
            Error::InvalidEndpoints { .. } => "InvalidEndpoints",
            Error::NoHukuharaDifference { .. } => "NoHukuharaDifference",
            Error::EmptySample => "EmptySample",
            Error::LengthMismatch { .. } => "LengthMismatch",
            Error::TooFewObservations { .. } => "TooFewObservations",
            Error::DegenerateRegressor(_) => "DegenerateRegressor",
            Error::DegenerateResponse => "DegenerateResponse",
            Error::InvalidTheta(_) => "InvalidTheta",
            Error::ArityMismatch { .. } => "ArityMismatch",
            Error::Numerical(_) => "Numerical",
            Error::StudyFailed { .. } => "StudyFailed",
            Error::Qp(e) => e.name(),
        }
    }
}
