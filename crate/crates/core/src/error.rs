use std::path::PathBuf;

use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid configuration: {field}: {reason}")]
    Config { field: String, reason: String },

    #[error("failed to parse {path}: {message}")]
    Parse { path: PathBuf, message: String },

    #[error("i/o error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("csv error: {0}")]
    Csv(#[from] csv::Error),

    #[error("dimension mismatch: {0}")]
    Dimension(String),

    #[error("argument out of domain: {0}")]
    Domain(String),

    #[error("infeasible: {0}")]
    Infeasible(String),

    #[error("solver did not converge after {iterations} iterations")]
    MaxIterations { iterations: usize },

    #[error("non-monotone SCA step: objective fell from {previous} to {current}")]
    NonMonotone { previous: f64, current: f64 },

    #[error("no feasible randomized beamvector among {candidates} candidates")]
    NoFeasibleCandidate { candidates: usize },

    #[error("no rows for scheme {0}")]
    NoRows(String),
}

impl Error {
    pub(crate) fn config(field: impl Into<String>, reason: impl Into<String>) -> Self {
        Error::Config {
            field: field.into(),
            reason: reason.into(),
        }
    }

    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    /// True for errors that stem from a bad configuration (CLI exit code 2).
    pub fn is_config(&self) -> bool {
        matches!(self, Error::Config { .. } | Error::Parse { .. })
    }

    /// True for I/O and CSV failures (CLI exit code 3).
    pub fn is_io(&self) -> bool {
        matches!(self, Error::Io { .. } | Error::Csv(_))
    }
}
