//! Error types shared across the pipeline.

use thiserror::Error;

/// Crate-wide error type.
///
/// Variants map onto the CLI exit codes: parse/schema/validation errors
/// exit with 2, numerical failures with 3.
#[derive(Debug, Error)]
pub enum Error {
    /// A line could not be decoded at all.
    #[error("line {line}: malformed record: {msg}")]
    Parse { line: usize, msg: String },

    /// A record decoded but does not match the schema (field counts, team sizes).
    #[error("line {line}: record `{record}`: {msg}")]
    Schema {
        line: usize,
        record: String,
        msg: String,
    },

    /// A record or argument violates a domain invariant.
    #[error("validation: {0}")]
    Validation(String),

    /// Matches reference player ids that are absent from the player list.
    #[error("dangling player references: {}", .0.join(", "))]
    DanglingRefs(Vec<String>),

    /// Vector or matrix dimensions disagree.
    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },

    /// Bad call arguments (empty grids, zero k, degenerate sizes).
    #[error("invalid input: {0}")]
    InvalidInput(String),

    /// Numerical failure (non-finite values, factorization breakdown).
    #[error("numerical failure: {0}")]
    Numerical(String),

    /// A trial inside an experiment harness failed.
    #[error("trial {index} failed: {source}")]
    Trial {
        index: usize,
        #[source]
        source: Box<Error>,
    },

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error("serialization: {0}")]
    Json(#[from] serde_json::Error),
}

pub type Result<T> = std::result::Result<T, Error>;

impl Error {
    /// Exit code the CLI maps this error onto (2 = validation, 3 = numerical).
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::Numerical(_) => 3,
            Error::Trial { source, .. } => source.exit_code(),
            _ => 2,
        }
    }
}
