use thiserror::Error;

use crate::spectral::Representation;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid grid: {0}")]
    InvalidGrid(String),

    #[error("representation mismatch: expected {expected:?}, found {found:?}")]
    RepresentationMismatch {
        expected: Representation,
        found: Representation,
    },

    #[error("fields live on different grids")]
    GridMismatch,

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    /// The mean (xi = 0) mode of a period-inverse input is not negligible,
    /// which means the data is not odd in space.
    #[error("zero-mode violation: |f(0)| = {modulus:e} exceeds tolerance {tolerance:e}")]
    ZeroModeViolation { modulus: f64, tolerance: f64 },

    #[error("seam-decay violation: boundary/max ratio {ratio:e} exceeds {limit:e}")]
    SeamDecayViolation { ratio: f64, limit: f64 },

    #[error("oddness violation: residual {residual:e} exceeds {limit:e}")]
    OddnessViolation { residual: f64, limit: f64 },

    #[error("non-finite field values during {0}")]
    NonFiniteField(String),

    #[error("index {index} out of range (max {max})")]
    IndexOutOfRange { index: usize, max: usize },

    #[error("insufficient data: {0}")]
    InsufficientData(String),

    #[error("snapshot format: {0}")]
    Format(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}
