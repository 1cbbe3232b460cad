//! Error taxonomy shared by the whole crate.
//!
//! The CLI maps these onto process exit codes: usage problems are caught by
//! the argument parser itself, [`CosaError::StateMismatch`] becomes exit
//! code 3 and [`CosaError::Diverged`] becomes exit code 4.

use thiserror::Error;

#[derive(Debug, Error)]
pub enum CosaError {
    /// Operand shapes are incompatible with the requested operation.
    #[error("shape mismatch in {op}: {detail}")]
    Shape { op: &'static str, detail: String },

    /// An argument is structurally valid but semantically unusable
    /// (e.g. a NaN cost matrix, an empty index list).
    #[error("invalid argument for {op}: {detail}")]
    Invalid { op: &'static str, detail: String },

    /// An iterative routine failed to reach its convergence threshold.
    #[error("{op} did not converge: {detail}")]
    NoConvergence { op: &'static str, detail: String },

    /// Training produced a non-finite loss or parameter.
    #[error("training diverged at step {step}: {detail}")]
    Diverged { step: u64, detail: String },

    /// A configuration value is missing, unknown or out of range.
    #[error("configuration error in `{field}`: {detail}")]
    Config { field: String, detail: String },

    /// A checkpoint/dataset/config disagrees with what the caller expects
    /// (schema, shapes, property layout, resume config).
    #[error("state mismatch: {0}")]
    StateMismatch(String),

    /// A file exists but its contents are not a valid artifact.
    #[error("malformed file {path}: {detail}")]
    Format { path: String, detail: String },

    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, CosaError>;

impl CosaError {
    /// Process exit code the CLI should use for this error.
    pub fn exit_code(&self) -> i32 {
        match self {
            CosaError::StateMismatch(_) => 3,
            CosaError::Diverged { .. } => 4,
            CosaError::Config { .. } => 2,
            _ => 1,
        }
    }
}
