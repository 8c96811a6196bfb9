//! Hypersurfaces of Euclidean and hyperbolic space: shape operators,
//! modified Gauss maps, degrees and curvature-constrained deformations.

pub mod catalog;
pub mod chart;
pub mod deform;
pub mod error;
pub mod export;
pub mod gauss;
pub mod immersion;
pub mod interval;
pub mod linalg;
pub mod mesh;
pub mod model;
pub mod verify;

pub use error::{GeometryError, Result};
