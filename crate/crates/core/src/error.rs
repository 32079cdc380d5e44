use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

/// Errors produced by the uncertainty pipeline.
#[derive(Debug, Error)]
pub enum Error {
    /// Two rasters (or a raster and a network) disagree on dimensions.
    #[error("shape mismatch: {0}")]
    Shape(String),

    #[error("empty input: {0}")]
    Empty(String),

    /// A value is outside the domain an operation is defined on
    /// (nonpositive sigma, nonpositive depth, NaN, ...).
    #[error("domain error: {0}")]
    Domain(String),

    #[error("insufficient data: {0}")]
    InsufficientData(String),

    #[error("degenerate input: {0}")]
    Degenerate(String),

    #[error("invalid parameter: {0}")]
    Parameter(String),

    #[error("configuration error: {0}")]
    Config(String),

    #[error("training diverged at step {step}: loss is {loss}")]
    TrainingFailure { step: usize, loss: f64 },

    #[error("degenerate correspondences at ICP iteration {iteration}: {found} pairs survived gating, need at least 3")]
    DegenerateCorrespondence { iteration: usize, found: usize },

    /// Binary payload violation, located by byte offset.
    #[error("format error at byte {offset}: {message}")]
    Format { offset: usize, message: String },

    /// Text payload violation, located by 1-based line number.
    #[error("parse error on line {line}: {message}")]
    Parse { line: usize, message: String },

    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),

    #[error("json error: {0}")]
    Json(#[from] serde_json::Error),
}

impl Error {
    pub(crate) fn format(offset: usize, message: impl Into<String>) -> Self {
        Error::Format {
            offset,
            message: message.into(),
        }
    }

    pub(crate) fn parse(line: usize, message: impl Into<String>) -> Self {
        Error::Parse {
            line,
            message: message.into(),
        }
    }
}
