//! Crate-wide error type.

use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    /// The effective mass `1 + eps1*x^2` is too close to zero to divide by.
    #[error("singular effective mass at x = {x}: |1 + eps1*x^2| = {value:.3e}")]
    SingularMass { x: f64, value: f64 },

    /// The control law divides by `gamma1`.
    #[error("gamma1 must be nonzero")]
    GainDegenerate,

    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },

    /// Batch statistics need at least two rows in Train mode.
    #[error("train-mode batch needs at least 2 rows, got {0}")]
    DegenerateBatch(usize),

    #[error("dataset has no usable records")]
    EmptyDataset,

    /// The network has no standardization constants yet.
    #[error("network is untrained; call train first")]
    Untrained,

    #[error("unknown parameter target `{0}`")]
    UnknownTarget(String),

    #[error("need at least {need} records, got {got}")]
    TooSmall { need: usize, got: usize },

    #[error("empty input")]
    EmptyInput,

    #[error("{path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },

    #[error("{path}:{line}: {msg}")]
    Parse {
        path: String,
        line: usize,
        msg: String,
    },

    #[error("config error: {0}")]
    Config(String),
}

impl Error {
    pub(crate) fn io(path: &std::path::Path, source: std::io::Error) -> Self {
        Error::Io {
            path: path.display().to_string(),
            source,
        }
    }
}

pub type Result<T> = std::result::Result<T, Error>;
