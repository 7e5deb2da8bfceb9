//! Cost functions on the triangle and their rotated variants.
//!
//! A cost `c` is the price of serving a point from bin 1. The cost of
//! serving `x` from bin `l` is `c_l(x) = c(j^{1-l} x)`, i.e.
//! `c_2(x) = c(j²x)` and `c_3(x) = c(jx)`.

mod assumptions;
mod spec;

use std::fmt;
use std::sync::Arc;

use thiserror::Error;

use crate::geometry::{frame, Cell, GeometryError, Point, TriangleFrame};

pub use assumptions::{
    check_assumptions, check_level_sets_monotone, scan_b_threshold, AssumptionCheck,
    AssumptionReport, CheckStatus, LevelSetReport,
};
pub use spec::ModelSpec;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum CostError {
    #[error("invalid model parameters: {0}")]
    InvalidParams(String),
    #[error("cannot parse model spec {spec:?}: {reason}")]
    Parse { spec: String, reason: String },
    #[error(transparent)]
    Geometry(#[from] GeometryError),
    #[error("no candidate b satisfies the centre/cell-integral inequality")]
    NoneFound,
}

/// Parameters of the SINR cost: path-loss exponent, noise level and
/// near-field cap.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SinrParams {
    pub alpha: f64,
    pub a: f64,
    pub b: f64,
}

impl SinrParams {
    pub fn new(alpha: f64, a: f64, b: f64) -> Result<Self, CostError> {
        if !(alpha.is_finite() && alpha >= 2.0) {
            return Err(CostError::InvalidParams(format!(
                "path-loss exponent must be finite and >= 2, got {alpha}"
            )));
        }
        if !(a.is_finite() && a > 0.0) {
            return Err(CostError::InvalidParams(format!(
                "noise level must be finite and positive, got {a}"
            )));
        }
        let threshold = Self::b_threshold(alpha);
        if !(b.is_finite() && b > threshold) {
            return Err(CostError::InvalidParams(format!(
                "cap b = {b} must exceed (side/2)^(-alpha) = {threshold}"
            )));
        }
        Ok(SinrParams { alpha, a, b })
    }

    /// `(λ√3/2)^{-α}`: the smallest cap for which the cap regions around
    /// the three vertices are disjoint.
    pub fn b_threshold(alpha: f64) -> f64 {
        (0.5 * frame().side).powf(-alpha)
    }

    /// Radius of the circles around each vertex on which the cap switches.
    pub fn kink_radius(&self) -> f64 {
        self.b.powf(-1.0 / self.alpha)
    }

    fn capped(&self, d: f64) -> f64 {
        self.b.min(d.powf(-self.alpha))
    }

    /// Cost of serving from the vertex at distance `d_serving` while the
    /// other two vertices, at distances `d_other1`, `d_other2`, interfere.
    fn cost_from_distances(&self, d_serving: f64, d_other1: f64, d_other2: f64) -> f64 {
        (self.a + self.capped(d_other1) + self.capped(d_other2)) / self.capped(d_serving)
    }
}

#[derive(Clone)]
enum Kind {
    /// `scale · |x − B1|`.
    Linear(f64),
    /// `f(|x − B1|)` for a nondecreasing profile `f`.
    Profile(Arc<dyn Fn(f64) -> f64 + Send + Sync>),
    Sinr(SinrParams),
    Constant(f64),
    Custom(Arc<dyn Fn(Point) -> f64 + Send + Sync>),
}

/// A bounded nonnegative cost on the triangle, with its certified sup norm
/// and its extrema over the cell `T1`.
#[derive(Clone)]
pub struct CostModel {
    kind: Kind,
    sup_norm: f64,
    cell_max: f64,
    cell_min: f64,
    label: String,
    spec: Option<ModelSpec>,
    frame: TriangleFrame,
}

impl fmt::Debug for CostModel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("CostModel")
            .field("label", &self.label)
            .field("sup_norm", &self.sup_norm)
            .field("cell_max", &self.cell_max)
            .field("cell_min", &self.cell_min)
            .finish()
    }
}

/// `c(x) = scale·|x − B1|`.
pub fn radial_cost(scale: f64) -> Result<CostModel, CostError> {
    if !(scale.is_finite() && scale > 0.0) {
        return Err(CostError::InvalidParams(format!(
            "radial scale must be finite and positive, got {scale}"
        )));
    }
    let f = frame();
    Ok(CostModel {
        kind: Kind::Linear(scale),
        sup_norm: scale * f.side,
        cell_max: scale * f.lambda,
        cell_min: 0.0,
        label: format!("radial:{scale}"),
        spec: Some(ModelSpec::Radial { scale }),
        frame: f,
    })
}

/// `c(x) = profile(|x − B1|)` for a nondecreasing, nonnegative profile.
pub fn radial_profile_cost<F>(label: impl Into<String>, profile: F) -> CostModel
where
    F: Fn(f64) -> f64 + Send + Sync + 'static,
{
    let f = frame();
    CostModel {
        sup_norm: profile(f.side),
        cell_max: profile(f.lambda),
        cell_min: profile(0.0),
        kind: Kind::Profile(Arc::new(profile)),
        label: label.into(),
        spec: None,
        frame: f,
    }
}

/// The inverse signal-to-interference-plus-noise ratio seen from bin 1.
pub fn sinr_cost(params: SinrParams) -> CostModel {
    let f = frame();
    let SinrParams { alpha, a, b } = params;
    // On T, one interferer is at distance >= side/2 and the serving vertex
    // at distance <= side.
    let sup_norm = (a + b + (0.5 * f.side).powf(-alpha)) * f.side.powf(alpha);
    let b1 = f.vertex(Cell::One);
    let model = CostModel {
        kind: Kind::Sinr(params),
        sup_norm,
        cell_max: f.lambda.powf(alpha) * a + 2.0,
        cell_min: 0.0,
        label: format!("sinr:{alpha},{a},{b}"),
        spec: Some(ModelSpec::Sinr { alpha, a, b }),
        frame: f,
    };
    let cell_min = model.eval(b1);
    CostModel { cell_min, ..model }
}

/// `c ≡ kappa`.
pub fn constant_cost(kappa: f64) -> Result<CostModel, CostError> {
    if !(kappa.is_finite() && kappa >= 0.0) {
        return Err(CostError::InvalidParams(format!(
            "constant cost must be finite and nonnegative, got {kappa}"
        )));
    }
    Ok(CostModel {
        kind: Kind::Constant(kappa),
        sup_norm: kappa,
        cell_max: kappa,
        cell_min: kappa,
        label: format!("const:{kappa}"),
        spec: Some(ModelSpec::Constant { kappa }),
        frame: frame(),
    })
}

/// A user-supplied cost. Its sup norm and cell extrema are grid extrema
/// widened by `lipschitz · h`, where `h` is the grid spacing.
pub fn custom_cost<F>(label: impl Into<String>, cost: F, lipschitz: f64) -> CostModel
where
    F: Fn(Point) -> f64 + Send + Sync + 'static,
{
    let f = frame();
    let res = 400;
    let h = f.side / res as f64;
    let (mut sup, mut cmax, mut cmin) = (0.0f64, f64::NEG_INFINITY, f64::INFINITY);
    for p in grid_points(&f, res) {
        let v = cost(p);
        sup = sup.max(v.abs());
        if f.voronoi_cell_unchecked(p) == Cell::One {
            cmax = cmax.max(v);
            cmin = cmin.min(v);
        }
    }
    for v in [Point::ORIGIN, f.vertex(Cell::One)].map(&cost) {
        sup = sup.max(v.abs());
        cmax = cmax.max(v);
        cmin = cmin.min(v);
    }
    let pad = lipschitz.abs() * h;
    CostModel {
        kind: Kind::Custom(Arc::new(cost)),
        sup_norm: sup + pad,
        cell_max: cmax + pad,
        cell_min: (cmin - pad).max(0.0),
        label: label.into(),
        spec: None,
        frame: f,
    }
}

/// Grid points strictly inside the triangle: cell centres of an
/// `res × res` grid over the bounding box.
pub(crate) fn grid_points(f: &TriangleFrame, res: usize) -> Vec<Point> {
    let (x0, x1) = (-0.5 * f.side, 0.5 * f.side);
    let (y0, y1) = (-0.5 * f.lambda, f.lambda);
    let (hx, hy) = ((x1 - x0) / res as f64, (y1 - y0) / res as f64);
    let mut out = Vec::with_capacity(res * res / 2);
    for i in 0..res {
        for k in 0..res {
            let p = Point::new(x0 + (k as f64 + 0.5) * hx, y0 + (i as f64 + 0.5) * hy);
            if f.contains_strictly(p) {
                out.push(p);
            }
        }
    }
    out
}

impl CostModel {
    pub fn label(&self) -> &str {
        &self.label
    }

    /// The parseable spec this model was built from, if any.
    pub fn spec(&self) -> Option<&ModelSpec> {
        self.spec.as_ref()
    }

    pub fn frame(&self) -> &TriangleFrame {
        &self.frame
    }

    /// Certified upper bound on `c` over the whole triangle.
    pub fn sup_norm(&self) -> f64 {
        self.sup_norm
    }

    /// Upper bound on `c` over `T1`, attained at the origin for the built-in
    /// families.
    pub fn cell_max(&self) -> f64 {
        self.cell_max
    }

    /// Lower bound on `c` over `T1`, attained at `B1` for the built-in
    /// families.
    pub fn cell_min(&self) -> f64 {
        self.cell_min
    }

    pub fn sinr_params(&self) -> Option<SinrParams> {
        match self.kind {
            Kind::Sinr(p) => Some(p),
            _ => None,
        }
    }

    /// Radius around each vertex where the cost is not smooth, if any.
    pub fn kink_radius(&self) -> Option<f64> {
        self.sinr_params().map(|p| p.kink_radius())
    }

    pub fn is_constant(&self) -> bool {
        matches!(self.kind, Kind::Constant(_))
    }

    /// `c(x)`. No containment check.
    pub fn eval(&self, x: Point) -> f64 {
        self.eval_cell(Cell::One, x)
    }

    /// `c_l(x)`. No containment check.
    pub fn eval_cell(&self, l: Cell, x: Point) -> f64 {
        let f = &self.frame;
        match &self.kind {
            Kind::Linear(s) => s * x.dist(f.vertex(l)),
            Kind::Profile(p) => p(x.dist(f.vertex(l))),
            Kind::Sinr(p) => p.cost_from_distances(
                x.dist(f.vertex(l)),
                x.dist(f.vertex(l.next())),
                x.dist(f.vertex(l.prev())),
            ),
            Kind::Constant(k) => *k,
            Kind::Custom(c) => c(x.mul_j_pow(3 - l.index())),
        }
    }

    /// `c_l(x)` for a point of the closed triangle.
    pub fn eval_l(&self, l: Cell, x: Point) -> Result<f64, CostError> {
        self.frame.check_inside(x)?;
        Ok(self.eval_cell(l, x))
    }

    /// `(c_1(x), c_2(x), c_3(x))`.
    pub fn costs(&self, x: Point) -> [f64; 3] {
        Cell::ALL.map(|l| self.eval_cell(l, x))
    }

    /// `L(x) = c1c2c3 / (c1c2 + c1c3 + c2c3)`, the common load when one
    /// object is split across the three bins so that all loads are equal.
    pub fn balanced_load(&self, x: Point) -> f64 {
        let [c1, c2, c3] = self.costs(x);
        let den = c1 * c2 + c1 * c3 + c2 * c3;
        if den == 0.0 {
            0.0
        } else {
            c1 * c2 * c3 / den
        }
    }
}
