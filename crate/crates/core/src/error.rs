//! Error type shared by every module of the crate.

use thiserror::Error;

/// Errors raised by grid, geometry, bound and experiment operations.
#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid grid: {0}")]
    InvalidGrid(String),

    #[error("index {index:?} out of bounds for grid with counts {counts:?}")]
    OutOfBounds { index: [usize; 3], counts: [usize; 3] },

    #[error("invalid shape: {0}")]
    InvalidShape(String),

    #[error("empty set")]
    EmptySet,

    #[error("shape is unbounded")]
    Unbounded,

    #[error("fields are defined on different grids")]
    GridMismatch,

    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },

    #[error("shape does not provide an exact {0} distance; redistance it instead")]
    InexactShape(&'static str),

    #[error("field has negative values; pass unsigned distances (positive_part)")]
    SignedField,

    #[error("no interface: level-set function does not change sign")]
    NoInterface,

    #[error("bbox too small: complementary witness lies on the bounding box")]
    BboxTooSmall,

    #[error("degenerate witness: x and y coincide")]
    DegenerateWitness,

    #[error("external Hausdorff distance is not admissible (slack {slack:.3e})")]
    NotAdmissible { slack: f64 },

    #[error("grid too small: {0}")]
    GridTooSmall(String),

    #[error("external bound invalid: {0}")]
    ExternalBoundInvalid(String),

    #[error("segment is outside the grid hull")]
    SegmentOutsideGrid,

    #[error("need at least {needed} usable points for an order fit, got {got}")]
    InsufficientPoints { needed: usize, got: usize },

    #[error("scene invalid: {0}")]
    InvalidScene(String),

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("config error: {0}")]
    Config(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

impl Error {
    /// True for errors caused by user configuration rather than by the computation.
    pub fn is_config_error(&self) -> bool {
        matches!(
            self,
            Error::Config(_)
                | Error::Json(_)
                | Error::InvalidGrid(_)
                | Error::InvalidShape(_)
                | Error::InvalidParameter(_)
                | Error::InvalidScene(_)
                | Error::DimensionMismatch { .. }
                | Error::GridMismatch
        )
    }
}

pub type Result<T> = std::result::Result<T, Error>;
