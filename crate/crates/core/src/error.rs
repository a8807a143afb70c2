use std::path::PathBuf;

use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid parameters: {0}")]
    InvalidParams(String),

    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },

    #[error("index {index} out of range 0..{bound}")]
    IndexOutOfRange { index: usize, bound: usize },

    #[error(
        "step size underflow at t = {t:.6e} (h = {h:.3e}); the system is too stiff for the \
         requested tolerances, try a larger tolerance or a smaller g*N^2"
    )]
    StepUnderflow { t: f64, h: f64 },

    #[error("invariant violated at t = {t:.6e}: {what} = {value:.3e} exceeds limit {limit:.3e}")]
    InvariantViolation {
        t: f64,
        what: &'static str,
        value: f64,
        limit: f64,
    },

    #[error("eigensolver did not converge: {0}")]
    Eigensolver(String),

    #[error("not enough data: {0}")]
    InsufficientData(String),

    #[error("checkpoint {path}: {reason}")]
    Checkpoint { path: PathBuf, reason: String },

    #[error("config: {0}")]
    Config(String),

    #[error("i/o error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
}

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }
}

pub type Result<T> = std::result::Result<T, Error>;
