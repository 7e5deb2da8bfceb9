//! Parameters and samplers of the Gaussian limit laws.

use rand::Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use super::AsymptoticsError;
use crate::cost::CostModel;
use crate::quadrature::gamma_sigma2;
use crate::quadrature::gk::integrate;

/// `E[max(Z1, Z2, Z3)]` for iid standard normals, `3∫ x φ(x) Φ(x)² dx`.
pub fn expected_max_of_three() -> f64 {
    let phi = |x: f64| (-0.5 * x * x).exp() / (2.0 * std::f64::consts::PI).sqrt();
    let cdf = |x: f64| 0.5 * libm::erfc(-x / std::f64::consts::SQRT_2);
    let integrand = |x: f64| [3.0 * x * phi(x) * cdf(x).powi(2)];
    integrate(&integrand, &[-12.0, -4.0, 0.0, 4.0, 12.0], 1e-15, 1e-14, 1000)
        .expect("smooth one-dimensional integrand")
        .value[0]
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CltParams {
    pub gamma: f64,
    pub sigma2: f64,
    /// `σ²/3 − γ²`, the limit variance of `(ρ_n − nγ)/√n`.
    pub var_opt: f64,
    /// `E[max(G1, G2, G3)]` with `G_l ~ N(0, σ²)` iid.
    pub m: f64,
}

impl CltParams {
    pub fn new(gamma: f64, sigma2: f64) -> Result<Self, AsymptoticsError> {
        let var_opt = sigma2 / 3.0 - gamma * gamma;
        if !(gamma.is_finite() && sigma2 >= 0.0 && var_opt >= -1e-15) {
            return Err(AsymptoticsError::InvalidParams(format!(
                "gamma = {gamma}, sigma2 = {sigma2} give a negative variance"
            )));
        }
        Ok(CltParams {
            gamma,
            sigma2,
            var_opt: var_opt.max(0.0),
            m: sigma2.sqrt() * expected_max_of_three(),
        })
    }

    pub fn sigma(&self) -> f64 {
        self.sigma2.sqrt()
    }
}

/// `γ`, `σ²` by quadrature and the derived constants.
pub fn clt_params(model: &CostModel) -> Result<CltParams, AsymptoticsError> {
    let (g, s) = gamma_sigma2(model)?;
    CltParams::new(g, s)
}

/// One draw of the limit of the scaled greedy load.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LimitDraw {
    /// `N_l = G_l − (G1 + G2 + G3)/3`.
    pub centred: [f64; 3],
    /// `G ~ N(0, σ²/3 − γ²)`, the limit of `(ρ_n − nγ)/√n`.
    pub optimal: f64,
    /// `max_l N_l`, the limit of `(ρ̄_n − ρ_n)/√n`.
    pub difference: f64,
    /// `max_l N_l + G`, the limit of `(ρ̄_n − nγ)/√n`.
    pub suboptimal: f64,
}

pub fn limit_law_suboptimal<R: Rng + ?Sized>(params: &CltParams, rng: &mut R) -> LimitDraw {
    let sigma = params.sigma();
    let g: [f64; 3] = [0; 3].map(|_| {
        let z: f64 = StandardNormal.sample(rng);
        sigma * z
    });
    let z: f64 = StandardNormal.sample(rng);
    let optimal = params.var_opt.sqrt() * z;
    let mean = (g[0] + g[1] + g[2]) / 3.0;
    let centred = g.map(|v| v - mean);
    let difference = centred[0].max(centred[1]).max(centred[2]);
    LimitDraw { centred, optimal, difference, suboptimal: difference + optimal }
}
