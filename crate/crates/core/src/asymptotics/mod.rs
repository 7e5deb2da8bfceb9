//! Rate functions, CLT constants, limit-law sampling and the exponentially
//! tilted measure on `T1`.

mod clt;
mod rate;
mod tilted;

use thiserror::Error;

use crate::cost::CostModel;
use crate::quadrature::QuadratureError;

pub use clt::{clt_params, expected_max_of_three, limit_law_suboptimal, CltParams, LimitDraw};
pub use rate::{endpoint_divergence_report, EndpointProbe, EndpointReport, RateFunction, RateRow, Root, SOLVER_TOL};
pub use tilted::TiltedSampler;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum AsymptoticsError {
    #[error("y = {y} is outside the open interval ({lo}, {hi})")]
    OutOfDomain { y: f64, lo: f64, hi: f64 },
    #[error("no tilt with |theta| <= {theta_cap} reaches y = {y}; y is too close to an endpoint")]
    BracketCapReached { y: f64, theta_cap: f64 },
    #[error("root solve for y = {y} stopped at theta = {theta} with residual {residual}")]
    NoConvergence { y: f64, theta: f64, residual: f64 },
    #[error("tilted density exceeds its envelope at ({x}, {y}) by log-ratio {excess}")]
    EnvelopeError { x: f64, y: f64, excess: f64 },
    #[error("invalid parameters: {0}")]
    InvalidParams(String),
    #[error(transparent)]
    Quadrature(#[from] QuadratureError),
}

/// `Λ(θ)` of a model.
pub fn log_mgf(model: &CostModel, theta: f64) -> Result<f64, AsymptoticsError> {
    Ok(3f64.ln() + crate::quadrature::scaled_moments(model, theta)?.log_m0())
}

/// `Λ̄(θ)` of a model.
pub fn log_mgf_bar(model: &CostModel, theta: f64) -> Result<f64, AsymptoticsError> {
    Ok(crate::quadrature::scaled_moments(model, theta)?.log_m0_plus(2.0 / 3.0))
}
