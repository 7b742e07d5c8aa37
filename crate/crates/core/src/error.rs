use std::path::PathBuf;

use thiserror::Error;

/// Errors produced anywhere in the planning pipeline.
#[derive(Debug, Error)]
pub enum Error {
    #[error("domain error: {0}")]
    Domain(String),

    #[error("quadrature did not converge: {what} changed by {delta_db:.4} dB on grid doubling (coarse {coarse_db:.4} dB, fine {fine_db:.4} dB)")]
    NonConvergence {
        what: &'static str,
        coarse_db: f64,
        fine_db: f64,
        delta_db: f64,
    },

    #[error("invalid training data: {0}")]
    Data(String),

    #[error("feature width mismatch: expected {expected}, got {got}")]
    Width { expected: usize, got: usize },

    #[error("unsupported model file version {found:?} (expected {expected:?})")]
    Version { found: String, expected: String },

    #[error("SCI cache miss for {0} and computation is disabled")]
    CacheMiss(String),

    #[error("parse error in {location}: {message}")]
    Parse { location: String, message: String },

    #[error("config error: {0}")]
    Config(String),

    #[error("io error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("csv error: {0}")]
    Csv(#[from] csv::Error),

    #[error("json error: {0}")]
    Json(#[from] serde_json::Error),
}

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    pub(crate) fn parse(location: impl Into<String>, message: impl Into<String>) -> Self {
        Error::Parse {
            location: location.into(),
            message: message.into(),
        }
    }
}

pub type Result<T> = std::result::Result<T, Error>;
