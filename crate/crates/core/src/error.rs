use std::path::PathBuf;

use thiserror::Error;

/// Errors produced by the deconvolution toolkit.
#[derive(Debug, Error)]
pub enum TvError {
    #[error("image must be square with side >= 2 and n*n finite samples: {0}")]
    InvalidImage(String),

    #[error("shape mismatch: expected {expected}x{expected}, got {got}x{got}")]
    ShapeMismatch { expected: usize, got: usize },

    #[error("kernel of size {kernel} does not fit an image of size {image}")]
    KernelTooLarge { kernel: usize, image: usize },

    #[error("bad kernel spec: {0}")]
    BadSpec(String),

    #[error("shrinkage threshold must be positive, got {0}")]
    NonpositiveThreshold(f64),

    #[error("singular u-subproblem: denominator {denominator:e} at frequency ({row}, {col})")]
    SingularSystem {
        row: usize,
        col: usize,
        denominator: f64,
    },

    #[error("invalid solver configuration: {0}")]
    InvalidConfig(String),

    #[error("SNR is undefined against a constant reference image")]
    DegenerateReference,

    #[error("trace has no {0} scores")]
    MissingScores(&'static str),

    #[error("dense operator requested for n = {n}, limit is {limit}")]
    TooLarge { n: usize, limit: usize },

    #[error("reference solver did not converge after {iterations} iterations (gradient norm {grad_norm:e})")]
    NoConvergence { iterations: usize, grad_norm: f64 },

    #[error("malformed image file {path}: {reason}")]
    Format { path: PathBuf, reason: String },

    #[error("{context}: {source}")]
    Io {
        context: String,
        #[source]
        source: std::io::Error,
    },
}

impl TvError {
    pub(crate) fn io(context: impl Into<String>, source: std::io::Error) -> Self {
        TvError::Io {
            context: context.into(),
            source,
        }
    }

    /// True for failures of the numerics rather than of the inputs or the filesystem.
    pub fn is_numerical(&self) -> bool {
        matches!(
            self,
            TvError::SingularSystem { .. } | TvError::NoConvergence { .. }
        )
    }
}

pub type Result<T> = std::result::Result<T, TvError>;
