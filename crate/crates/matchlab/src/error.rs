//! Crate-wide error type.

use thiserror::Error;

#[derive(Debug, Error)]
pub enum MatchError {
    /// A required input file is missing or unreadable.
    #[error("ingest error: {0}")]
    Ingest(String),

    /// An input file exists but its contents are invalid.
    #[error("malformed dataset: {message} (line {line})")]
    MalformedDataset { message: String, line: usize },

    /// Sampling could not produce the requested graphs.
    #[error("sampling error: {0}")]
    Sampling(String),

    /// Two tensors have incompatible shapes for an operation.
    #[error("dimension error in {op}: left is {lhs:?}, right is {rhs:?}")]
    Dimension {
        op: &'static str,
        lhs: (usize, usize),
        rhs: (usize, usize),
    },

    /// A forward op produced a NaN or infinite entry.
    #[error("numeric error: non-finite value produced by {op}")]
    NonFinite { op: &'static str },

    /// Caller misuse of the autodiff or parameter APIs.
    #[error("usage error: {0}")]
    Usage(String),

    /// Invalid configuration value.
    #[error("configuration error: {0}")]
    Config(String),

    /// Problem size exceeds a hard guard.
    #[error("size guard: {0}")]
    SizeGuard(String),

    /// Dataset cannot support the requested operation.
    #[error("dataset error: {0}")]
    Dataset(String),

    #[error("io error on {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },

    #[error("json error: {0}")]
    Json(#[from] serde_json::Error),
}

impl MatchError {
    pub fn io(path: impl Into<String>, source: std::io::Error) -> Self {
        MatchError::Io {
            path: path.into(),
            source,
        }
    }
}

pub type Result<T> = std::result::Result<T, MatchError>;
