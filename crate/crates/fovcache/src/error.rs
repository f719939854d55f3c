use thiserror::Error;

/// Errors surfaced by the library.
#[derive(Debug, Error)]
pub enum Error {
    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),
    #[error("invalid argument: {0}")]
    InvalidArgument(String),
    #[error("invalid configuration: {0}")]
    InvalidConfig(String),
    #[error("non-finite value encountered: {0}")]
    NonFinite(String),
    #[error("numeric fault at slot {slot}: {detail}")]
    NumericFault { slot: usize, detail: String },
    #[error("outage: transmission rate is not positive")]
    Outage,
    #[error("trace parse error at line {line}: {detail}")]
    TraceParse { line: usize, detail: String },
    #[error("empty trace: {0}")]
    EmptyTrace(String),
    #[error("io error: {0}")]
    Io(#[from] std::io::Error),
    #[error("csv error: {0}")]
    Csv(#[from] csv::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
