use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("non-finite coordinate ({x}, {y})")]
    NonFinite { x: f64, y: f64 },

    #[error("polygon needs at least 3 vertices, got {0}")]
    TooFewVertices(usize),

    #[error("vertices {0} and {1} coincide")]
    CoincidentVertices(usize, usize),

    #[error("polygon has zero area")]
    ZeroArea,

    #[error("polygon self-intersects: segment {first} crosses segment {second}")]
    SelfIntersection { first: usize, second: usize },

    #[error("offsetting collapsed the polygon entirely")]
    EmptyResult,

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("shape mismatch: expected {expected_width}x{expected_height}, got {width}x{height}")]
    ShapeMismatch { expected_width: usize, expected_height: usize, width: usize, height: usize },

    #[error("grid dimensions must be positive, got {width}x{height}")]
    EmptyGrid { width: usize, height: usize },

    #[error("mask has no set pixels")]
    EmptyMask,

    #[error("component {id} out of range 1..={count}")]
    UnknownComponent { id: u32, count: u32 },

    #[error("ratio loss needs positive inputs, got p={p}, p_hat={p_hat}")]
    NonPositiveInput { p: f64, p_hat: f64 },

    #[error("reports use different IoU thresholds")]
    ThresholdMismatch,

    #[error("placement failed after {attempts} attempts; configuration too dense")]
    PlacementFailure { attempts: usize },

    #[error("{0}")]
    Format(String),
}
