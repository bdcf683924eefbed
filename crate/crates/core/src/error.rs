use std::path::PathBuf;

use thiserror::Error;

/// Errors raised by the library and the command-line driver.
#[derive(Debug, Error)]
pub enum Error {
    /// Invalid parameters, grids or config values. `key` names the offending
    /// entry (a config key path when one exists).
    #[error("configuration error at `{key}`: {reason}")]
    Config { key: String, reason: String },

    #[error("failed to parse config {path}: {reason}")]
    Parse { path: PathBuf, reason: String },

    #[error("I/O error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("malformed grid dump: {0}")]
    Format(String),

    /// Two run records that cannot be compared (different grids, time steps
    /// or models).
    #[error("mismatched runs: {0}")]
    Mismatch(String),
}

impl Error {
    pub fn config(key: impl Into<String>, reason: impl Into<String>) -> Self {
        Error::Config {
            key: key.into(),
            reason: reason.into(),
        }
    }

    pub fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
