//! Numerical integration of cost functionals over the Voronoi cells.
//!
//! Two routes are provided. [`integrate_polygon`] is a general adaptive
//! cubature over polygons. The cell integrals (`γ`, `σ²`, exponential
//! moments) use polar coordinates centred at the cell's bin, where the
//! SINR cap circles become coordinate lines and the peaks of tilted
//! integrands sit at the ends of the radial range.

pub(crate) mod gk;
mod polar;
mod triangle;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::cost::CostModel;
use crate::geometry::{Cell, Point};
use polar::{integrate_cell, PolarOptions};

pub use triangle::{integrate_polygon, integrate_polygon_with_budget, DEFAULT_TRIANGLE_BUDGET};

/// Default absolute tolerance of the cell integrals.
pub const ABS_TOL: f64 = 1e-10;
/// Default relative tolerance of the cell integrals.
pub const REL_TOL: f64 = 1e-8;
/// Relative tolerance used for the exponential moments.
pub const MOMENT_REL_TOL: f64 = 1e-12;
/// Largest `|θ|·‖c‖∞` accepted by [`moments`], whose values are unscaled.
pub const OVERFLOW_GUARD: f64 = 700.0;
/// Largest `|θ|` accepted by [`scaled_moments`].
pub const THETA_CAP: f64 = 1e4;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum QuadratureError {
    #[error("subdivision budget of {limit} pieces exceeded")]
    BudgetExceeded { limit: usize },
    #[error("polygon needs at least 3 vertices, got {0}")]
    DegeneratePolygon(usize),
    #[error("exponential moment at theta = {theta} would overflow (|theta|·bound = {product})")]
    Overflow { theta: f64, product: f64 },
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct IntegrationResult {
    pub value: f64,
    pub error_estimate: f64,
    pub cells_used: usize,
}

/// `m_k = ∫_{T1} c^k e^{θc}` for `k = 0, 1, 2`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MomentSet {
    pub theta: f64,
    pub m0: f64,
    pub m1: f64,
    pub m2: f64,
}

/// Exponential moments stored as `m_k = e^{shift}·scaled_k`, usable far
/// beyond the range where `e^{θc}` is representable.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ScaledMoments {
    pub theta: f64,
    pub shift: f64,
    pub scaled: [f64; 3],
}

impl ScaledMoments {
    /// `log m0`.
    pub fn log_m0(&self) -> f64 {
        self.shift + self.scaled[0].ln()
    }

    /// `m1/m0`.
    pub fn mean(&self) -> f64 {
        self.scaled[1] / self.scaled[0]
    }

    /// `m2/m0 − (m1/m0)²`.
    pub fn variance(&self) -> f64 {
        (self.scaled[2] / self.scaled[0] - self.mean().powi(2)).max(0.0)
    }

    /// `log(m0 + w)` for `w > 0`.
    pub fn log_m0_plus(&self, w: f64) -> f64 {
        if self.shift > 0.0 {
            self.shift + (self.scaled[0] + w * (-self.shift).exp()).ln()
        } else {
            (self.shift.exp() * self.scaled[0] + w).ln()
        }
    }

    /// `(m1/(m0 + w), m2/(m0 + w))` for `w > 0`.
    pub fn ratios_plus(&self, w: f64) -> (f64, f64) {
        let [s0, s1, s2] = self.scaled;
        if self.shift > 0.0 {
            let den = s0 + w * (-self.shift).exp();
            (s1 / den, s2 / den)
        } else {
            let g = self.shift.exp();
            let den = g * s0 + w;
            (g * s1 / den, g * s2 / den)
        }
    }

    pub fn unscaled(&self) -> MomentSet {
        let g = self.shift.exp();
        MomentSet {
            theta: self.theta,
            m0: g * self.scaled[0],
            m1: g * self.scaled[1],
            m2: g * self.scaled[2],
        }
    }
}

fn kink(model: &CostModel) -> Option<f64> {
    model.kink_radius()
}

/// `∫_{T_l} f` for a vector integrand, at the given tolerances.
pub fn cell_integral<const N: usize, F: Fn(Point) -> [f64; N]>(
    model: &CostModel,
    l: Cell,
    f: F,
    abs_tol: f64,
    rel_tol: f64,
) -> Result<[f64; N], QuadratureError> {
    let opts = PolarOptions { kink: kink(model), levels: 0, abs_tol, rel_tol };
    Ok(integrate_cell(model.frame(), l, &f, &opts)?.value)
}

/// `(γ, σ²) = (∫_{T1} c, ∫_{T1} c²)`.
pub fn gamma_sigma2(model: &CostModel) -> Result<(f64, f64), QuadratureError> {
    let [g, s] = cell_integral(
        model,
        Cell::One,
        |x| {
            let c = model.eval(x);
            [c, c * c]
        },
        ABS_TOL * 1e-2,
        REL_TOL * 1e-4,
    )?;
    Ok((g, s))
}

/// `γ = ∫_{T1} c`.
pub fn gamma(model: &CostModel) -> Result<f64, QuadratureError> {
    Ok(gamma_sigma2(model)?.0)
}

/// `σ² = ∫_{T1} c²`.
pub fn sigma2(model: &CostModel) -> Result<f64, QuadratureError> {
    Ok(gamma_sigma2(model)?.1)
}

/// `∫_{T2} c`.
pub fn integral_t2(model: &CostModel) -> Result<f64, QuadratureError> {
    let [v] = cell_integral(model, Cell::Two, |x| [model.eval(x)], ABS_TOL * 1e-2, REL_TOL * 1e-4)?;
    Ok(v)
}

/// `∫_{T1} c` computed by adaptive triangle cubature, as a cross-check of
/// the polar route.
pub fn gamma_by_triangles(model: &CostModel) -> Result<IntegrationResult, QuadratureError> {
    let poly = model.frame().cell_polygon(Cell::One);
    integrate_polygon(|x| model.eval(x), &poly, ABS_TOL, REL_TOL)
}

/// Exponential moments in shifted form, for `|θ| ≤ THETA_CAP`.
pub fn scaled_moments(model: &CostModel, theta: f64) -> Result<ScaledMoments, QuadratureError> {
    if !(theta.is_finite() && theta.abs() <= THETA_CAP) {
        return Err(QuadratureError::Overflow {
            theta,
            product: theta.abs() * model.sup_norm(),
        });
    }
    let reference = if theta > 0.0 { model.cell_max() } else { model.cell_min() };
    let shift = theta * reference;
    let spread = (model.cell_max() - model.cell_min()).max(0.0);
    let levels = ((1.0 + theta.abs() * spread).log2().ceil() as usize + 1).min(48);
    let levels = if theta == 0.0 { 0 } else { levels };
    let opts = PolarOptions {
        kink: kink(model),
        levels,
        abs_tol: f64::MIN_POSITIVE,
        rel_tol: MOMENT_REL_TOL,
    };
    let integrand = |x: Point| {
        let c = model.eval(x);
        let w = (theta * c - shift).exp();
        [w, c * w, c * c * w]
    };
    let out = integrate_cell(model.frame(), Cell::One, &integrand, &opts)?;
    Ok(ScaledMoments { theta, shift, scaled: out.value })
}

/// `(m0, m1, m2)` at `θ`, subject to `|θ|·‖c‖∞ ≤ 700`.
pub fn moments(model: &CostModel, theta: f64) -> Result<MomentSet, QuadratureError> {
    let product = theta.abs() * model.sup_norm();
    if !(product <= OVERFLOW_GUARD) {
        return Err(QuadratureError::Overflow { theta, product });
    }
    Ok(scaled_moments(model, theta)?.unscaled())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::cost::{constant_cost, radial_cost, sinr_cost, SinrParams};

    fn models() -> Vec<CostModel> {
        vec![
            radial_cost(2.0).unwrap(),
            sinr_cost(SinrParams::new(2.5, 1.0, 10.0).unwrap()),
            constant_cost(1.5).unwrap(),
        ]
    }

    #[test]
    fn constant_cost_integrals() {
        let m = constant_cost(1.5).unwrap();
        let (g, s) = gamma_sigma2(&m).unwrap();
        assert!((g - 0.5).abs() < 1e-12);
        assert!((s - 0.75).abs() < 1e-12);
        assert!((integral_t2(&m).unwrap() - 0.5).abs() < 1e-12);
        let ms = moments(&m, 0.7).unwrap();
        assert!((ms.m0 - (0.7f64 * 1.5).exp() / 3.0).abs() < 1e-12);
    }

    #[test]
    fn radial_gamma_matches_calibration() {
        // ∫_{T1} 2|x − B1| dx, independently estimated by 1e7-sample Monte Carlo.
        let m = radial_cost(2.0).unwrap();
        let (g, s) = gamma_sigma2(&m).unwrap();
        assert!((g - 0.35564).abs() < 2e-4, "{g}");
        assert!((s - 0.42766).abs() < 3e-4, "{s}");
    }

    #[test]
    fn polar_and_triangle_routes_agree() {
        for m in models() {
            let g = gamma(&m).unwrap();
            // the triangle route has no breakpoint at the cap circle and
            // converges slowly across it
            let tol = if m.kink_radius().is_some() { 1e-6 } else { 1e-8 };
            let t = gamma_by_triangles(&m).unwrap();
            assert!((g - t.value).abs() < tol, "{}: {g} vs {}", m.label(), t.value);
            let t2 = integrate_polygon(
                |x| m.eval(x),
                &m.frame().cell_polygon(Cell::Two),
                1e-10,
                1e-10,
            )
            .unwrap();
            let v = integral_t2(&m).unwrap();
            assert!((v - t2.value).abs() < tol * v.max(1.0), "{}: {v} vs {}", m.label(), t2.value);
        }
    }

    #[test]
    fn rotated_cells_have_equal_integrals() {
        for m in models() {
            let g = gamma(&m).unwrap();
            for l in Cell::ALL {
                let [v] = cell_integral(&m, l, |x| [m.eval_cell(l, x)], 1e-12, 1e-12).unwrap();
                assert!((v - g).abs() < 1e-9);
            }
            // change of variables: ∫_{T2} c = ∫_{T1} c(j x)
            let [pulled] = cell_integral(&m, Cell::One, |x| [m.eval(x.mul_j())], 1e-12, 1e-12).unwrap();
            assert!((pulled - integral_t2(&m).unwrap()).abs() < 1e-9);
        }
    }

    #[test]
    fn moments_at_zero_and_cauchy_schwarz() {
        for m in models() {
            let (g, s) = gamma_sigma2(&m).unwrap();
            let z = moments(&m, 0.0).unwrap();
            assert!((z.m0 - 1.0 / 3.0).abs() < 1e-12);
            assert!((z.m1 - g).abs() < 1e-10);
            assert!((z.m2 - s).abs() < 1e-10);
            assert!(s >= 3.0 * g * g - 1e-12);
            for theta in [-20.0, -3.0, -0.5, 0.5, 3.0, 20.0] {
                let s = scaled_moments(&m, theta).unwrap();
                let [m0, m1, m2] = s.scaled;
                assert!(m0 > 0.0);
                assert!(m2 * m0 >= m1 * m1 * (1.0 - 1e-12));
            }
        }
    }

    #[test]
    fn tilted_mean_increases() {
        for m in models().into_iter().take(2) {
            let mut prev = f64::NEG_INFINITY;
            for k in -20..=20 {
                let s = scaled_moments(&m, k as f64 * 2.5).unwrap();
                assert!(s.mean() > prev);
                prev = s.mean();
            }
        }
    }

    #[test]
    fn extreme_tilts_stay_finite() {
        let m = radial_cost(2.0).unwrap();
        let hi = scaled_moments(&m, THETA_CAP).unwrap();
        let lo = scaled_moments(&m, -THETA_CAP).unwrap();
        assert!(hi.mean() < m.cell_max() && hi.mean() > m.cell_max() - 1e-3);
        assert!(lo.mean() > 0.0 && lo.mean() < 1e-3);
        // near B1 the radial cost is 2r, so the tilted mean is 2/(2|θ|)·2 = 2/|θ|
        assert!((lo.mean() - 2.0 / THETA_CAP).abs() < 1e-9);
        assert!(moments(&m, 300.0).is_err());
    }
}
