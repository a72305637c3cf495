//! Radial metrics, their curvature, Laplace-type operators and quadrature.

pub mod curvature;
pub mod fields;
pub mod grid;
pub mod operators;
pub mod quadrature;

use std::sync::Arc;

pub use curvature::{curvature, CurvatureData};
pub use fields::{RadialScalarField, RadialSymmetric2Tensor, WarpedMetric};
pub use grid::{Parity, RadialGrid, Scheme};
pub use operators::{
    curvature_action, deturck_vector, einstein_operator, lichnerowicz_laplacian, scalar_laplacian,
    tensor_laplacian,
};
pub use quadrature::integrate_ball;

/// The hyperbolic reference metric ĝ on `grid`.
pub fn hyperbolic_reference(grid: Arc<RadialGrid>) -> WarpedMetric {
    WarpedMetric::hyperbolic(grid)
}
