use std::path::PathBuf;

use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

/// Failures raised by the numerical and simulation layers.
#[derive(Debug, Error)]
pub enum Error {
    #[error("matrix is not positive definite (pivot {index} = {pivot:e})")]
    NotPositiveDefinite { index: usize, pivot: f64 },

    #[error("argument outside the function domain: {0}")]
    Domain(String),

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("gain matrix is rank deficient (smallest singular value {smallest_singular_value:e})")]
    RankDeficient { smallest_singular_value: f64 },

    #[error("gain matrix is not square ({rows}x{cols})")]
    NotSquare { rows: usize, cols: usize },

    #[error("parse error at line {line}: {message}")]
    Parse { line: usize, message: String },

    #[error("channel Gram matrix is singular")]
    SingularChannel,

    #[error("instance is degenerate: Gram eigenvalues coincide (relative spread {spread:e})")]
    DegenerateInstance { spread: f64 },

    #[error("{skipped} of {total} trials skipped on singular channels (limit 1%)")]
    ExcessiveSkips { skipped: usize, total: usize },

    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
}

impl Error {
    /// Stable variant name, used in CLI reports and the C error codes.
    pub fn kind(&self) -> &'static str {
        match self {
            Error::NotPositiveDefinite { .. } => "NotPositiveDefinite",
            Error::Domain(_) => "DomainError",
            Error::InvalidParameter(_) => "InvalidParameter",
            Error::RankDeficient { .. } => "RankDeficient",
            Error::NotSquare { .. } => "NotSquare",
            Error::Parse { .. } => "ParseError",
            Error::SingularChannel => "SingularChannel",
            Error::DegenerateInstance { .. } => "DegenerateInstance",
            Error::ExcessiveSkips { .. } => "ExcessiveSkips",
            Error::Io { .. } => "IoError",
        }
    }
}
