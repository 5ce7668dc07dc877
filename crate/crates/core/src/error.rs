use thiserror::Error;

/// Errors raised by training, scoring and I/O in this crate.
#[derive(Debug, Error)]
pub enum Error {
    #[error("dimension mismatch: expected {expected}, got {actual}")]
    DimensionMismatch { expected: usize, actual: usize },

    #[error("non-finite value in {0}")]
    NonFinite(&'static str),

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("labels contain a single class; both genuine and impostor samples are required")]
    SingleClass,

    #[error("zero-norm vector has no defined cosine similarity")]
    ZeroNorm,

    #[error("normal equations are singular (pivot {pivot:e} below tolerance {tolerance:e}); use ridge_solve")]
    Singular { pivot: f64, tolerance: f64 },

    #[error("linear solve failed: {0}")]
    SolveFailed(String),

    #[error("missing cohort {0}")]
    MissingCohort(String),

    #[error("insufficient data: {0}")]
    InsufficientData(String),

    #[error("parse error at line {line}: {message}")]
    Parse { line: usize, message: String },

    #[error("unsupported format version {found} (this build reads version {supported})")]
    Version { found: u64, supported: u64 },

    #[error("file is truncated: {0}")]
    Truncated(String),

    #[error("malformed model file: {0}")]
    Format(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn check_dim(expected: usize, actual: usize) -> Result<()> {
    if expected == actual {
        Ok(())
    } else {
        Err(Error::DimensionMismatch { expected, actual })
    }
}
