use thiserror::Error;

/// Errors raised across the library.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("domain error: {0}")]
    Domain(String),

    #[error("invalid parameters: {0}")]
    InvalidParams(String),

    #[error("numeric error: {0}")]
    Numeric(String),

    #[error("quadrature failed on panel [{lo}, {hi}]: {reason}")]
    Quadrature { lo: f64, hi: f64, reason: String },

    #[error("resolution error: {0}")]
    Resolution(String),

    #[error("capacity error: expected {expected:.3e} points exceeds limit {limit:.0e}")]
    Capacity { expected: f64, limit: f64 },

    #[error("insufficient data: {0}")]
    InsufficientData(String),

    #[error("range error: {0}")]
    Range(String),

    #[error("pattern format error at line {line}: {reason}")]
    Format { line: usize, reason: String },

    #[error("replication {replication}: {source}")]
    Replication {
        replication: usize,
        #[source]
        source: Box<Error>,
    },
}

pub type Result<T> = std::result::Result<T, Error>;
