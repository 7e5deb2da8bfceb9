//! Log-moment generating functions and their Legendre transforms.

use serde::Serialize;

use super::AsymptoticsError;
use crate::cost::CostModel;
use crate::quadrature::{gamma, scaled_moments, ScaledMoments, THETA_CAP};

/// Residual tolerance of the root solvers, relative to `min(c(0), 1)`.
pub const SOLVER_TOL: f64 = 1e-10;

const MAX_ITERATIONS: usize = 200;
const OTHER_BINS: f64 = 2.0 / 3.0;

/// Which tilted mean a root solve targets.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Target {
    /// `Λ'(θ) = m1/m0`.
    Full,
    /// `Λ̄'(θ) = m1/(m0 + 2/3)`.
    Bar,
}

impl Target {
    /// Value and derivative of the tilted mean.
    fn eval(self, s: &ScaledMoments) -> (f64, f64) {
        match self {
            Target::Full => (s.mean(), s.variance()),
            Target::Bar => {
                let (r1, r2) = s.ratios_plus(OTHER_BINS);
                (r1, (r2 - r1 * r1).max(0.0))
            }
        }
    }
}

/// A solved tilt together with the moments at the root.
#[derive(Debug, Clone, Copy)]
pub struct Root {
    pub theta: f64,
    pub residual: f64,
    pub moments: ScaledMoments,
}

/// Evaluator for `Λ`, `Λ̄`, `J` and `J̄` of one cost model.
#[derive(Debug, Clone)]
pub struct RateFunction {
    model: CostModel,
    gamma: f64,
    /// `c(B1)`, the infimum of `c` over `T1`.
    low: f64,
    /// `c(0)`, the supremum of `c` over `T1`.
    high: f64,
    theta_cap: f64,
}

impl RateFunction {
    pub fn new(model: &CostModel) -> Result<Self, AsymptoticsError> {
        Ok(RateFunction {
            gamma: gamma(model)?,
            low: model.cell_min(),
            high: model.cell_max(),
            model: model.clone(),
            theta_cap: THETA_CAP,
        })
    }

    pub fn model(&self) -> &CostModel {
        &self.model
    }

    pub fn gamma(&self) -> f64 {
        self.gamma
    }

    /// `(c(B1), c(0))`.
    pub fn endpoints(&self) -> (f64, f64) {
        (self.low, self.high)
    }

    pub fn theta_cap(&self) -> f64 {
        self.theta_cap
    }

    fn tol(&self) -> f64 {
        SOLVER_TOL * self.high.min(1.0)
    }

    /// `Λ(θ) = log(3 ∫_{T1} e^{θc})`.
    pub fn log_mgf(&self, theta: f64) -> Result<f64, AsymptoticsError> {
        Ok(3f64.ln() + scaled_moments(&self.model, theta)?.log_m0())
    }

    /// `Λ̄(θ) = log(∫_{T1} e^{θc} + 2/3)`.
    pub fn log_mgf_bar(&self, theta: f64) -> Result<f64, AsymptoticsError> {
        Ok(scaled_moments(&self.model, theta)?.log_m0_plus(OTHER_BINS))
    }

    /// `θ_y`, the root of `Λ'(θ) = y` for `c(B1) < y < c(0)`.
    pub fn solve_theta(&self, y: f64) -> Result<Root, AsymptoticsError> {
        self.check_open(y, self.low, self.high)?;
        self.solve(Target::Full, y)
    }

    /// `η_y`, the root of `Λ̄'(θ) = y` for `0 < y < c(0)`.
    pub fn solve_eta(&self, y: f64) -> Result<Root, AsymptoticsError> {
        self.check_open(y, 0.0, self.high)?;
        self.solve(Target::Bar, y)
    }

    fn check_open(&self, y: f64, lo: f64, hi: f64) -> Result<(), AsymptoticsError> {
        if y > lo && y < hi {
            Ok(())
        } else {
            Err(AsymptoticsError::OutOfDomain { y, lo, hi })
        }
    }

    fn solve(&self, target: Target, y: f64) -> Result<Root, AsymptoticsError> {
        let tol = self.tol();
        let eval = |theta: f64| -> Result<(f64, f64, ScaledMoments), AsymptoticsError> {
            let s = scaled_moments(&self.model, theta)?;
            let (v, d) = target.eval(&s);
            Ok((v - y, d, s))
        };
        let done = |theta: f64, r: f64, s: ScaledMoments| Root { theta, residual: r.abs(), moments: s };

        let (r0, d0, s0) = eval(0.0)?;
        if r0.abs() < tol {
            return Ok(done(0.0, r0, s0));
        }
        // Bracket by doubling away from zero on the side of the root.
        let dir = if r0 < 0.0 { 1.0 } else { -1.0 };
        let (mut near, mut far) = (0.0, dir);
        let mut best = (0.0, r0, d0, s0);
        loop {
            let (r, d, s) = eval(far)?;
            if r.abs() < tol {
                return Ok(done(far, r, s));
            }
            if r * dir > 0.0 {
                if r.abs() < best.1.abs() {
                    best = (far, r, d, s);
                }
                break;
            }
            best = (far, r, d, s);
            if far.abs() >= self.theta_cap {
                return Err(AsymptoticsError::BracketCapReached { y, theta_cap: self.theta_cap });
            }
            near = far;
            far = (far * 2.0).clamp(-self.theta_cap, self.theta_cap);
        }
        let (mut lo, mut hi) = if near < far { (near, far) } else { (far, near) };

        // Safeguarded Newton: the residual is increasing in θ.
        let (mut x, mut r, mut d, mut s) = best;
        for _ in 0..MAX_ITERATIONS {
            if r.abs() < tol {
                return Ok(done(x, r, s));
            }
            if r < 0.0 {
                lo = lo.max(x);
            } else {
                hi = hi.min(x);
            }
            let newton = if d > 0.0 { x - r / d } else { f64::NAN };
            let next = if newton > lo && newton < hi { newton } else { 0.5 * (lo + hi) };
            if next == x || hi - lo <= 4.0 * f64::EPSILON * x.abs().max(1.0) {
                break;
            }
            x = next;
            (r, d, s) = eval(x)?;
        }
        if r.abs() < tol {
            Ok(done(x, r, s))
        } else {
            Err(AsymptoticsError::NoConvergence { y, theta: x, residual: r.abs() })
        }
    }

    /// `J(y) = Λ*(3y)` on `(c(B1)/3, c(0)/3)`, `+∞` elsewhere.
    ///
    /// At the endpoints themselves the value is `+∞` by convention; finiteness
    /// there depends on the behaviour of `c` near its extrema.
    pub fn rate_j(&self, y: f64) -> Result<f64, AsymptoticsError> {
        if self.low == self.high {
            return Ok(if 3.0 * y == self.low { 0.0 } else { f64::INFINITY });
        }
        if !(3.0 * y > self.low && 3.0 * y < self.high) {
            return Ok(f64::INFINITY);
        }
        let root = self.solve(Target::Full, 3.0 * y)?;
        let lambda = 3f64.ln() + root.moments.log_m0();
        Ok((3.0 * y * root.theta - lambda).max(0.0))
    }

    /// `J̄(y)`: `Λ*(3y)` on `(c(B1)/3, γ]`, `Λ̄*(y)` on `(γ, c(0))`, `+∞`
    /// elsewhere.
    pub fn rate_jbar(&self, y: f64) -> Result<f64, AsymptoticsError> {
        if y <= self.gamma {
            return self.rate_j(y);
        }
        if self.low == self.high || y >= self.high {
            return Ok(f64::INFINITY);
        }
        let root = self.solve(Target::Bar, y)?;
        let lambda_bar = root.moments.log_m0_plus(OTHER_BINS);
        Ok((y * root.theta - lambda_bar).max(0.0))
    }

    /// One row of the rate table.
    pub fn table_row(&self, y: f64) -> Result<RateRow, AsymptoticsError> {
        let theta_y = if 3.0 * y > self.low && 3.0 * y < self.high {
            Some(self.solve(Target::Full, 3.0 * y)?.theta)
        } else {
            None
        };
        let eta_y = if y > self.gamma && y < self.high {
            Some(self.solve(Target::Bar, y)?.theta)
        } else {
            None
        };
        Ok(RateRow { y, j: self.rate_j(y)?, jbar: self.rate_jbar(y)?, theta_y, eta_y })
    }

    /// `sup_θ (θy − Λ(θ))` by a multilevel grid search on `[-bound, bound]`
    /// refined to spacing `step`, with a parabolic correction at the end.
    /// Independent of the Newton solver.
    pub fn legendre_by_grid(&self, y: f64, bound: f64, step: f64, bar: bool) -> Result<f64, AsymptoticsError> {
        let objective = |theta: f64| -> Result<f64, AsymptoticsError> {
            let lambda = if bar { self.log_mgf_bar(theta)? } else { self.log_mgf(theta)? };
            Ok(theta * y - lambda)
        };
        let mut spacing = 1.0f64.min(bound);
        let (mut lo, mut hi) = (-bound, bound);
        let mut best = (0.0, objective(0.0)?);
        loop {
            let count = ((hi - lo) / spacing).round() as i64;
            let mut values = Vec::with_capacity(count as usize + 1);
            for i in 0..=count {
                let theta = lo + i as f64 * spacing;
                values.push((theta, objective(theta)?));
            }
            let (i_best, &(tb, vb)) = values
                .iter()
                .enumerate()
                .max_by(|a, b| a.1 .1.total_cmp(&b.1 .1))
                .expect("non-empty grid");
            if vb > best.1 {
                best = (tb, vb);
            }
            if spacing <= step * (1.0 + 1e-9) {
                if i_best > 0 && i_best + 1 < values.len() {
                    let (f0, f1, f2) = (values[i_best - 1].1, vb, values[i_best + 1].1);
                    let curvature = f0 - 2.0 * f1 + f2;
                    if curvature < 0.0 {
                        let peak = f1 - (f2 - f0).powi(2) / (8.0 * curvature);
                        return Ok(peak.max(best.1));
                    }
                }
                return Ok(best.1);
            }
            lo = (tb - spacing).max(-bound);
            hi = (tb + spacing).min(bound);
            spacing = (spacing / 10.0).max(step);
        }
    }
}

/// A row of the rate table; `None` where a tilt is undefined.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct RateRow {
    pub y: f64,
    pub j: f64,
    pub jbar: f64,
    pub theta_y: Option<f64>,
    pub eta_y: Option<f64>,
}

impl RateRow {
    pub const CSV_HEADER: &'static str = "y,J,Jbar,theta_y,eta_y";

    pub fn to_csv(&self) -> String {
        let num = |v: f64| if v.is_infinite() && v > 0.0 { "inf".to_string() } else { format!("{v}") };
        let opt = |v: Option<f64>| v.map(num).unwrap_or_default();
        format!("{},{},{},{},{}", num(self.y), num(self.j), num(self.jbar), opt(self.theta_y), opt(self.eta_y))
    }
}

/// One probe of the endpoint scan.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct EndpointProbe {
    /// Distance of `y` from the endpoint.
    pub gap: f64,
    pub y: f64,
    /// `J(y)`, or `None` if the solver could not bracket the tilt.
    pub rate: Option<f64>,
    pub theta: Option<f64>,
    pub bracket_cap_reached: bool,
}

/// Behaviour of `J` as `y` approaches `c(B1)/3` and `c(0)/3`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct EndpointReport {
    pub lower: Vec<EndpointProbe>,
    pub upper: Vec<EndpointProbe>,
    /// Whether the finite rates grow along each approach.
    pub lower_monotone: bool,
    pub upper_monotone: bool,
    /// Smallest gap still solved before the bracket cap was hit.
    pub lower_saturation: Option<f64>,
    pub upper_saturation: Option<f64>,
    pub note: String,
}

/// Evaluates `J` at `gaps` from both endpoints of its domain.
pub fn endpoint_divergence_report(rf: &RateFunction, gaps: &[f64]) -> Result<EndpointReport, AsymptoticsError> {
    let (lo, hi) = (rf.low / 3.0, rf.high / 3.0);
    let probe = |y: f64, gap: f64| -> Result<EndpointProbe, AsymptoticsError> {
        match rf.rate_j(y) {
            Ok(r) => Ok(EndpointProbe {
                gap,
                y,
                rate: Some(r),
                theta: rf.solve(Target::Full, 3.0 * y).ok().map(|root| root.theta),
                bracket_cap_reached: false,
            }),
            Err(AsymptoticsError::BracketCapReached { .. }) => Ok(EndpointProbe {
                gap,
                y,
                rate: None,
                theta: None,
                bracket_cap_reached: true,
            }),
            Err(e) => Err(e),
        }
    };
    let mut sorted = gaps.to_vec();
    sorted.sort_by(|a, b| b.total_cmp(a));
    let lower = sorted.iter().map(|&g| probe(lo + g, g)).collect::<Result<Vec<_>, _>>()?;
    let upper = sorted.iter().map(|&g| probe(hi - g, g)).collect::<Result<Vec<_>, _>>()?;
    let monotone = |v: &[EndpointProbe]| {
        let rates: Vec<f64> = v.iter().filter_map(|p| p.rate).collect();
        rates.windows(2).all(|w| w[1] > w[0])
    };
    let saturation = |v: &[EndpointProbe]| {
        v.iter().any(|p| p.bracket_cap_reached).then(|| {
            v.iter().filter(|p| p.rate.is_some()).map(|p| p.gap).fold(f64::INFINITY, f64::min)
        })
    };
    Ok(EndpointReport {
        lower_monotone: monotone(&lower),
        upper_monotone: monotone(&upper),
        lower_saturation: saturation(&lower),
        upper_saturation: saturation(&upper),
        lower,
        upper,
        note: "values at the endpoints themselves are +inf by convention".into(),
    })
}
