use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("domain error: {0}")]
    Domain(String),

    #[error("empty input: {0}")]
    Empty(&'static str),

    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },

    #[error("invalid portfolio: {0}")]
    InvalidPortfolio(String),

    /// Lines and columns are 1-based.
    #[error("parse error at line {line}, column {column}: {message}")]
    Parse {
        line: usize,
        column: usize,
        message: String,
    },

    #[error("non-positive entry {value} at line {line}, column {column}")]
    NonPositive { line: usize, column: usize, value: f64 },

    #[error("ragged row at line {line}: expected {expected} fields, found {found}")]
    Ragged { line: usize, expected: usize, found: usize },

    #[error("invalid market spec: {0}")]
    InvalidSpec(String),

    #[error("covariance factorization failed: {0}")]
    Factorization(String),

    #[error("invalid configuration: {0}")]
    InvalidConfig(String),

    /// A dataset file is absent; dataset experiments report this as skipped.
    #[error("dataset absent: {}", .0.display())]
    DataMissing(std::path::PathBuf),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn domain(msg: impl Into<String>) -> Error {
    Error::Domain(msg.into())
}

pub(crate) fn config(msg: impl Into<String>) -> Error {
    Error::InvalidConfig(msg.into())
}
