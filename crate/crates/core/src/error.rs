use std::path::PathBuf;

use thiserror::Error;

use crate::nn::TrainTrace;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("shape mismatch in {op}: expected {expected}, got {got}")]
    Shape {
        op: &'static str,
        expected: String,
        got: String,
    },

    #[error("domain error: {0}")]
    Domain(String),

    #[error("usage error: {0}")]
    Usage(String),

    #[error("invalid configuration: {0}")]
    Config(String),

    #[error("empty {0}")]
    Empty(&'static str),

    #[error("training diverged at step {step} (non-finite loss)")]
    Divergence { step: u64, trace: Box<TrainTrace> },

    #[error("file not found: {}", .0.display())]
    MissingFile(PathBuf),

    #[error("base checkpoint hash mismatch: expected {expected}, found {found}")]
    BaseHashMismatch { expected: String, found: String },

    #[error("refusing to overwrite existing artifacts in {} (pass --force)", .0.display())]
    ArtifactsExist(PathBuf),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),
}

impl Error {
    pub(crate) fn shape(op: &'static str, expected: impl ToString, got: impl ToString) -> Self {
        Error::Shape {
            op,
            expected: expected.to_string(),
            got: got.to_string(),
        }
    }

    /// Process exit code for the CLI: 2 for usage/config problems, 1 otherwise.
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::Usage(_)
            | Error::Config(_)
            | Error::MissingFile(_)
            | Error::BaseHashMismatch { .. }
            | Error::ArtifactsExist(_)
            | Error::Json(_) => 2,
            _ => 1,
        }
    }
}
