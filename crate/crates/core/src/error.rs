use thiserror::Error;

use crate::grid::Space;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid grid: {0}")]
    InvalidGrid(String),

    #[error("fields live on different grids")]
    GridMismatch,

    #[error("expected a field in {expected:?} space, found {found:?}")]
    SpaceMismatch { expected: Space, found: Space },

    #[error("non-finite sample at index {index}")]
    NonFinite { index: usize },

    #[error("band {k} is not resolved on this grid (k_max = {k_max})")]
    BandOutOfRange { k: i64, k_max: usize },

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("symbol fails the regularity check: constant {constant:.3} exceeds {limit}")]
    Regularity { constant: f64, limit: f64 },

    #[error("coefficient is not band limited: relative mass {leak:.3e} outside band {k}")]
    SupportViolation { k: usize, leak: f64 },

    #[error("solution blew up at t = {time}")]
    BlowUp { time: f64 },

    #[error("time grids do not match")]
    TimeGridMismatch,

    #[error("malformed field dump: {0}")]
    Format(String),

    #[error("malformed coefficient spec: {0}")]
    Spec(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}
