//! Min-max allocation of uniformly scattered objects to the three corner
//! bins of a unit-area equilateral triangle.
//!
//! The crate provides the geometry of the triangle and its Voronoi cells,
//! cost models, cell quadrature, four allocators (greedy, exact, fractional
//! LP, cone sweep), rate functions and CLT parameters, and seeded Monte
//! Carlo experiments that check the limit theorems numerically.

pub mod allocation;
pub mod asymptotics;
pub mod cost;
pub mod experiments;
pub mod geometry;
pub mod quadrature;

pub use cost::{CostError, CostModel, ModelSpec, SinrParams};
pub use geometry::{frame, Cell, ConeShift, GeometryError, Point, TriangleFrame};
