//! Error type shared across the crate.

/// Unified error for construction, statistics, calibration, and detection.
#[derive(Debug, Clone, thiserror::Error)]
pub enum Error {
    #[error("need at least {min} observations, got {got}")]
    TooFewObservations { min: usize, got: usize },

    #[error("window length must be even and at least 4, got {got}")]
    BadWindowLength { got: usize },

    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },

    #[error("non-finite value at observation {index}, coordinate {coord}")]
    NonFinite { index: usize, coord: usize },

    #[error("split index k={k} outside {{2, ..., {max}}}")]
    SplitOutOfRange { k: usize, max: usize },

    #[error("degenerate input: {0}")]
    Degenerate(&'static str),

    #[error("{0}")]
    Domain(String),

    #[error("numerical fault: {0}")]
    Numerics(String),
}

impl Error {
    pub(crate) fn domain(msg: impl Into<String>) -> Self {
        Error::Domain(msg.into())
    }

    pub(crate) fn numerics(msg: impl Into<String>) -> Self {
        Error::Numerics(msg.into())
    }
}

pub type Result<T> = std::result::Result<T, Error>;
