use std::io;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    /// Input that makes an operation undefined (zero vector, constant column, ...).
    #[error("degenerate input: {0}")]
    DegenerateInput(String),

    #[error("dimension mismatch: expected {expected}, got {actual}")]
    DimensionMismatch { expected: usize, actual: usize },

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    /// The requested radius exceeds what the substring tables can guarantee.
    #[error("lookup radius {radius} exceeds parts - 1 = {max}; results would be incomplete")]
    IncompleteLookup { radius: u32, max: u32 },

    /// A binary image failed to parse; `field` names the first bad field.
    #[error("malformed {format} file at field `{field}`: {reason}")]
    Format {
        format: &'static str,
        field: &'static str,
        reason: String,
    },

    #[error("line {line}: {reason}")]
    Parse { line: usize, reason: String },

    #[error("training diverged at step {step}")]
    Diverged { step: usize },

    #[error(transparent)]
    Io(#[from] io::Error),
}
