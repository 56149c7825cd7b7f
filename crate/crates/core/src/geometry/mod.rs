//! Coordinate metrics and their curvature.

pub mod chart;
pub mod curvature;
pub mod shortcuts;
pub mod weighted;

pub use chart::{BoxDomain, Interval, MetricChart, Structure};
pub use curvature::{
    bianchi_residual, curvature_at, grad_scalar_curvature, laplacian_scalar_curvature,
    scalar_curvature, Connection, Curvature, CurvatureJet,
};
pub use shortcuts::tagged_curvature;
pub use weighted::{weighted_operators_at, WeightedOperators};
