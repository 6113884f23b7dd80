use thiserror::Error;

/// Errors produced by the restoration toolkit.
#[derive(Debug, Error)]
pub enum Error {
    #[error("dimension mismatch: expected {expected:?}, found {found:?}")]
    DimensionMismatch {
        expected: (usize, usize),
        found: (usize, usize),
    },

    #[error("invalid signal: {0}")]
    InvalidSignal(String),

    #[error("operation `{op}` is not supported for {kind} operators")]
    UnsupportedKind {
        op: &'static str,
        kind: &'static str,
    },

    #[error("index {index} out of range (count {count})")]
    IndexOutOfRange { index: usize, count: usize },

    #[error("shift offset {offset:?} must be smaller than block size {block:?}")]
    InvalidOffset {
        offset: (usize, usize),
        block: (usize, usize),
    },

    #[error("invalid codebook: {0}")]
    InvalidCodebook(String),

    #[error("theta {theta} is not in the codec parameter set")]
    ThetaOutOfRange { theta: i32 },

    #[error("codec failure: {message}")]
    Codec {
        message: String,
        status: Option<i32>,
        stderr: String,
    },

    #[error("conjugate gradient did not converge in {iterations} iterations (relative residual {residual:e})")]
    NotConverged { iterations: usize, residual: f64 },

    #[error("pixel {index} is not covered by any shifted grid")]
    Uncovered { index: usize },

    #[error("invalid configuration: {0}")]
    Config(String),

    #[error("malformed image: {0}")]
    Format(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

impl Error {
    pub(crate) fn codec(message: impl Into<String>) -> Self {
        Error::Codec {
            message: message.into(),
            status: None,
            stderr: String::new(),
        }
    }
}

pub type Result<T> = std::result::Result<T, Error>;
