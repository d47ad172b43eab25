use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

/// Error type shared by every module of the crate.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("cannot project a zero vector onto the sphere")]
    ZeroVector,

    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },

    #[error("ambient dimension must be at least 2, got {dim}")]
    InvalidDimension { dim: usize },

    #[error("vector is not unit length: norm = {norm}")]
    NotUnit { norm: f64 },

    #[error("a configuration needs at least 2 points, got {n}")]
    TooFewPoints { n: usize },

    #[error("step is not tangent to its base point: inner product = {dot}")]
    NotTangent { dot: f64 },

    #[error("invalid schedule: {0}")]
    InvalidSchedule(String),

    #[error("invalid instance: {0}")]
    InvalidInstance(String),

    #[error("step {step} overflowed at point {point}: |drift + noise| = {magnitude} >= pi/2")]
    StepOverflow {
        step: u64,
        point: usize,
        magnitude: f64,
    },

    #[error("degenerate critical point at angle {angle}: |U''| = {curvature}")]
    DegenerateCritical { angle: f64, curvature: f64 },

    #[error("all chains were censored at the horizon; no exit observed")]
    AllCensored,

    #[error("insufficient data: need at least {needed}, got {got}")]
    InsufficientData { needed: usize, got: usize },

    #[error("configuration is not suboptimal: the positive is already the argmax candidate")]
    NotSuboptimal,
}
