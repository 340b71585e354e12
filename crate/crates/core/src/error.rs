use std::path::PathBuf;

use thiserror::Error;

/// Crate-wide result alias.
pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    /// An argument lies outside the domain of the operation.
    #[error("{what} = {value} is outside [{lo}, {hi}]")]
    Domain {
        what: &'static str,
        value: f64,
        lo: f64,
        hi: f64,
    },

    /// A synthesis parameter violates its admissible range.
    #[error("invalid parameter `{field}`: {reason}")]
    InvalidParam { field: &'static str, reason: String },

    /// Signal analysis could not produce a result (too few cycles, too short, ...).
    #[error("analysis failed: {0}")]
    Analysis(String),

    /// Numerical blow-up inside the synthesizer.
    #[error("simulation fault at sample {sample}: {reason}")]
    Simulation { sample: usize, reason: String },

    /// Tensor shapes do not line up.
    #[error("shape mismatch: {0}")]
    Shape(String),

    /// Network description is inconsistent.
    #[error("architecture error: {0}")]
    Architecture(String),

    /// Signal has (numerically) zero variance and cannot be normalized.
    #[error("degenerate signal: variance is zero")]
    DegenerateVariance,

    #[error("training error: {0}")]
    Training(String),

    #[error("invalid checkpoint: {0}")]
    Checkpoint(String),

    #[error("invalid dataset: {0}")]
    Dataset(String),

    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("{path}: {source}")]
    Wav {
        path: PathBuf,
        #[source]
        source: hound::Error,
    },

    #[error("json: {0}")]
    Json(#[from] serde_json::Error),
}

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    /// Broad category, used by the command-line front end for exit codes.
    pub fn category(&self) -> ErrorCategory {
        match self {
            Error::Domain { .. }
            | Error::InvalidParam { .. }
            | Error::Architecture(_)
            | Error::Shape(_) => ErrorCategory::Usage,
            Error::Io { .. }
            | Error::Wav { .. }
            | Error::Json(_)
            | Error::Checkpoint(_)
            | Error::Dataset(_) => ErrorCategory::Io,
            Error::Analysis(_)
            | Error::Simulation { .. }
            | Error::DegenerateVariance
            | Error::Training(_) => ErrorCategory::Numeric,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ErrorCategory {
    Usage,
    Io,
    Numeric,
}

impl ErrorCategory {
    pub fn exit_code(self) -> i32 {
        match self {
            ErrorCategory::Usage => 2,
            ErrorCategory::Io => 3,
            ErrorCategory::Numeric => 4,
        }
    }
}
