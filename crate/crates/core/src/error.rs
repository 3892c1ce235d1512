use thiserror::Error;

/// Errors shared across the solver crates.
#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid configuration: {0}")]
    InvalidConfig(String),

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("grid mismatch: {0}")]
    GridMismatch(String),

    #[error("division by zero: {0}")]
    DivisionByZero(String),

    #[error("not applicable: {0}")]
    NotApplicable(String),

    #[error("out of range: {0}")]
    OutOfRange(String),

    #[error("no root: {0}")]
    NoRoot(String),

    #[error("bracket error: {0}")]
    Bracket(String),

    #[error("convergence failure: {0}")]
    Convergence(String),

    #[error("calibration failure: {0}")]
    Calibration(String),

    #[error("mountain-pass geometry failure: {0}")]
    Geometry(String),

    #[error("misclassification: {0}")]
    Misclassification(String),

    #[error("parse error at line {line}: {message}")]
    Parse { line: usize, message: String },

    #[error("io error: {0}")]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
