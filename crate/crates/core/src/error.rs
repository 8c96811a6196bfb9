use thiserror::Error;

use crate::chart::ChartPoint;

pub type Result<T> = std::result::Result<T, GeometryError>;

#[derive(Debug, Clone, Error)]
pub enum GeometryError {
    #[error("invalid model: {0}")]
    InvalidModel(String),

    #[error("point outside the {model} domain: {detail}")]
    Domain { model: &'static str, detail: String },

    #[error("model mismatch: {0}")]
    ModelMismatch(String),

    #[error("dimension mismatch: expected {expected}, got {got}")]
    Dimension { expected: usize, got: usize },

    #[error("zero tangent vector")]
    ZeroVector,

    #[error("not an immersion at {at}: smallest singular value {sigma_min:.3e}")]
    NotImmersive { at: ChartPoint, sigma_min: f64 },

    #[error("induced metric is not positive definite at {0}")]
    MetricNotPositive(ChartPoint),

    #[error("eigen-decomposition failed: {0}")]
    Eigen(String),

    #[error("map is not locally invertible: {0}")]
    NotInvertible(String),

    #[error("parameter outside the admissible regime: {0}")]
    Regime(String),

    #[error("curvature {lambda} at {at} violates {interval} (margin {margin:.3e})")]
    IntervalViolation {
        at: ChartPoint,
        lambda: f64,
        interval: String,
        margin: f64,
    },

    #[error("normal flow degenerates at {at}: factor {factor:.3e} for curvature {lambda}")]
    FlowDegenerate {
        at: ChartPoint,
        lambda: f64,
        factor: f64,
    },

    #[error("orientation mismatch: predicted {predicted}, observed {observed}")]
    OrientationMismatch { predicted: String, observed: String },

    #[error("unresolved degree: raw {raw}, residual {residual:.3e}")]
    UnresolvedDegree { raw: f64, residual: f64 },

    #[error("invalid interval: {0}")]
    Interval(String),

    #[error("unknown catalog entry `{0}`")]
    UnknownEntry(String),

    #[error("catalog: {0}")]
    Catalog(String),

    #[error("{0}")]
    Other(String),
}
