//! Numerical audits for gradient ρ-Einstein solitons `Ric + ∇²f = (ρR + λ)g`.

pub mod error;
pub mod expr;
pub mod catalog;
pub mod geodesic;
pub mod geometry;
pub mod scenario;
pub mod spectral;
pub mod volume;

pub use error::{Error, Result};
pub use expr::{Expression, Jet};
pub use geometry::MetricChart;
