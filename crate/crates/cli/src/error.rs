use std::path::Path;

use thiserror::Error;

pub type Result<T, E = CliError> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum CliError {
    /// Bad flags or flag combinations; exit code 1.
    #[error("{0}")]
    Usage(String),

    /// A problem with an input or output file; exit code 2.
    #[error("{path}: {source}")]
    File {
        path: String,
        source: duq_core::Error,
    },

    /// Input data the CLI itself found unusable; exit code 2.
    #[error("{0}")]
    Data(String),

    #[error(transparent)]
    Core(#[from] duq_core::Error),
}

impl CliError {
    pub fn exit_code(&self) -> u8 {
        match self {
            CliError::Usage(_) | CliError::Core(duq_core::Error::Parameter(_)) => 1,
            _ => 2,
        }
    }
}

/// Attaches `path` to a library error.
pub fn at<T>(path: &Path, r: duq_core::Result<T>) -> Result<T> {
    r.map_err(|source| CliError::File {
        path: path.display().to_string(),
        source,
    })
}

pub fn io_at<T>(path: &Path, r: std::io::Result<T>) -> Result<T> {
    at(path, r.map_err(duq_core::Error::from))
}
