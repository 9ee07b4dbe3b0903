use std::path::PathBuf;

use thiserror::Error;

/// Errors raised by the denoising engine and its supporting kernels.
#[derive(Debug, Error)]
pub enum Error {
    #[error("shape mismatch: {0}")]
    Shape(String),

    #[error("matrix contains a non-finite entry at ({row}, {col})")]
    NotFinite { row: usize, col: usize },

    #[error("matrix is not positive definite (smallest eigenvalue {min_eigenvalue:e})")]
    NotPositiveDefinite { min_eigenvalue: f64 },

    #[error("matrix is singular or ill-conditioned (condition estimate {condition:e})")]
    Singular { condition: f64 },

    #[error("SVD did not converge for a {n}x{n} matrix: {detail}")]
    NoConvergence { n: usize, detail: String },

    #[error("degenerate accumulators (beta = {beta:e}); transform update skipped")]
    DegenerateAccumulators { beta: f64 },

    #[error("patch at ({row}, {col}) does not fit in a {frame_h}x{frame_w} frame")]
    OutOfBounds {
        row: usize,
        col: usize,
        frame_h: usize,
        frame_w: usize,
    },

    #[error("pixel ({row}, {col}) of the emitted frame received no patch contributions")]
    Coverage { row: usize, col: usize },

    #[error("invalid configuration: {0}")]
    Config(String),

    #[error("stream has not started: {0}")]
    NotStarted(String),

    #[error("I/O error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("parse error at byte {offset}: {message}")]
    Parse { offset: usize, message: String },

    #[error("unsupported colorspace `{0}` (only mono and 4:2:0 are accepted)")]
    UnsupportedColorspace(String),

    #[error("invalid checkpoint: {0}")]
    Checkpoint(String),
}

pub type Result<T> = std::result::Result<T, Error>;

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }
}
