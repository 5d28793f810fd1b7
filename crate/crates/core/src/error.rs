use thiserror::Error;

use crate::theory::FixedPointTrace;

/// Errors raised by the library.
#[derive(Debug, Error)]
pub enum Error {
    #[error("degenerate group: {0}")]
    DegenerateGroup(String),

    #[error("group {group} has zero samples; the objective is infinite")]
    ZeroCount { group: usize },

    #[error("invalid benchmark value {0}: R* must be positive")]
    InvalidBenchmark(f64),

    #[error("brute-force oracle supports at most 4 groups, got {0}")]
    TooLarge(usize),

    #[error("need at least {needed} samples, have {have}")]
    InsufficientSamples { needed: u64, have: u64 },

    #[error("horizon {0} already reached")]
    HorizonExceeded(u64),

    #[error("horizon {horizon} too small: need at least {needed}")]
    HorizonTooSmall { horizon: u64, needed: u64 },

    #[error("target allocation has a non-positive coordinate at group {0}")]
    DegenerateTarget(usize),

    #[error("width argument n*_g - 1 = {arg} is not positive for group {group}")]
    WidthInfinite { group: usize, arg: f64 },

    #[error("fixed-point iteration did not converge after {} iterations", .0.iterates.len())]
    NotConverged(Box<FixedPointTrace>),

    #[error("missing parameter: {0}")]
    MissingParameter(&'static str),

    #[error("bound is not defined for {0}")]
    UnsupportedNorm(String),

    #[error("precondition violated: {0}")]
    PreconditionViolated(String),

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("configuration error: {}", format_diagnostics(.0))]
    Config(Vec<FieldError>),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

/// One field-level configuration diagnostic.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct FieldError {
    pub field: String,
    pub message: String,
}

impl FieldError {
    pub fn new(field: impl Into<String>, message: impl Into<String>) -> Self {
        Self {
            field: field.into(),
            message: message.into(),
        }
    }
}

fn format_diagnostics(errs: &[FieldError]) -> String {
    errs.iter()
        .map(|e| format!("{}: {}", e.field, e.message))
        .collect::<Vec<_>>()
        .join("; ")
}

pub type Result<T> = std::result::Result<T, Error>;
