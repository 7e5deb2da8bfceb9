//! Grid-based checks of the structural assumptions on a cost function.

use std::f64::consts::PI;

use rayon::prelude::*;
use serde::Serialize;

use super::{grid_points, sinr_cost, CostError, CostModel, SinrParams};
use crate::geometry::{reflect_axis1, Cell, Point, TriangleFrame};
use crate::quadrature::integral_t2;

/// Margin required for a strict inequality to count as satisfied.
const STRICT_MARGIN: f64 = 1e-12;
/// Largest reflection residual accepted as symmetric.
const SYMMETRY_TOL: f64 = 1e-10;
/// Radius of the ball around the origin excluded from the load-peak check.
const CENTER_BALL: f64 = 0.05;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum CheckStatus {
    Pass,
    Fail,
    Indeterminate,
}

/// Outcome of one check. `margin` is the worst slack observed (negative
/// or zero when violated); `witness` is where it was attained.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct AssumptionCheck {
    pub status: CheckStatus,
    pub witness: Option<Point>,
    pub margin: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub note: Option<String>,
}

impl AssumptionCheck {
    fn strict(margin: f64, witness: Option<Point>) -> Self {
        let status = if margin > STRICT_MARGIN { CheckStatus::Pass } else { CheckStatus::Fail };
        AssumptionCheck { status, witness, margin, note: None }
    }

    fn with_note(mut self, note: impl Into<String>) -> Self {
        self.note = Some(note.into());
        self
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct AssumptionReport {
    pub model: String,
    pub grid_resolution: usize,
    /// A point strictly closer to bin `l` than to bin `m` is strictly
    /// cheaper to serve from `l`.
    pub nearest_bin_cheapest: AssumptionCheck,
    /// Symmetry across the line through the origin and `B1`.
    pub axial_symmetry: AssumptionCheck,
    /// Finite-difference Lipschitz estimate in a band around the Voronoi
    /// boundary rays at angles π/6 and 3π/2.
    pub lipschitz_estimate: f64,
    /// Ray-monotonicity surrogate for null level sets.
    pub null_level_sets: AssumptionCheck,
    pub continuity: AssumptionCheck,
    /// `c(B1) < c(x) < c(0)` on `T1` away from those two points.
    pub cell_extrema: AssumptionCheck,
    /// `c1c2c3/(c1c2 + c1c3 + c2c3) < c(0)/3` away from the origin.
    pub load_peak_at_center: AssumptionCheck,
    /// `c(0)/3 < ∫_{T2} c`.
    pub center_below_cell_integral: AssumptionCheck,
}

impl AssumptionReport {
    pub fn entries(&self) -> [(&'static str, &AssumptionCheck); 7] {
        [
            ("nearest_bin_cheapest", &self.nearest_bin_cheapest),
            ("axial_symmetry", &self.axial_symmetry),
            ("null_level_sets", &self.null_level_sets),
            ("continuity", &self.continuity),
            ("cell_extrema", &self.cell_extrema),
            ("load_peak_at_center", &self.load_peak_at_center),
            ("center_below_cell_integral", &self.center_below_cell_integral),
        ]
    }

    pub fn any_fail(&self) -> bool {
        self.entries().iter().any(|(_, c)| c.status == CheckStatus::Fail)
    }
}

/// Worst (smallest) value of `f` over `points`, with its location.
/// Points where `f` returns `None` are skipped.
fn worst<F>(points: &[Point], f: F) -> (f64, Option<Point>)
where
    F: Fn(Point) -> Option<f64> + Sync,
{
    let vals: Vec<Option<f64>> = points.par_iter().map(|&p| f(p)).collect();
    let mut best = (f64::INFINITY, None);
    for (p, v) in points.iter().zip(vals) {
        if let Some(v) = v {
            if v < best.0 {
                best = (v, Some(*p));
            }
        }
    }
    best
}

/// Runs every check on an `n × n` grid (`n` is raised to at least 100).
pub fn check_assumptions(model: &CostModel, grid_resolution: usize) -> AssumptionReport {
    let res = grid_resolution.max(100);
    let f = *model.frame();
    let pts = grid_points(&f, res);
    let c0 = model.eval(Point::ORIGIN);
    let cb1 = model.eval(f.vertex(Cell::One));

    let (m, w) = worst(&pts, |p| {
        let d = Cell::ALL.map(|l| p.dist(f.vertex(l)));
        let c = model.costs(p);
        let mut slack = f64::INFINITY;
        for l in 0..3 {
            for k in 0..3 {
                if d[l] < d[k] - 1e-9 {
                    slack = slack.min(c[k] - c[l]);
                }
            }
        }
        slack.is_finite().then_some(slack)
    });
    let nearest_bin_cheapest = AssumptionCheck::strict(m, w);

    let (m, w) = worst(&pts, |p| Some(-(model.eval(p) - model.eval(reflect_axis1(p))).abs()));
    let residual = -m;
    let axial_symmetry = AssumptionCheck {
        status: if residual < SYMMETRY_TOL { CheckStatus::Pass } else { CheckStatus::Fail },
        witness: if residual < SYMMETRY_TOL { None } else { w },
        margin: SYMMETRY_TOL - residual,
        note: None,
    };
    let lipschitz_estimate = lipschitz_near_rays(model, &f, &pts, res);
    let axial_symmetry = axial_symmetry.with_note(format!(
        "max reflection residual {residual:e}; Lipschitz estimate near the boundary rays {lipschitz_estimate}"
    ));

    let levels = check_level_sets_monotone(model, 360, 1000);
    let null_level_sets = AssumptionCheck {
        status: levels.status,
        witness: levels.witness,
        margin: 0.0,
        note: Some(levels.summary()),
    };

    let continuity = continuity_check(model, &f, res);

    let (m, w) = worst(&pts, |p| {
        let near_special = p.norm() < 1e-9 || p.dist(f.vertex(Cell::One)) < 1e-9;
        if near_special || f.voronoi_cell_unchecked(p) != Cell::One {
            return None;
        }
        let c = model.eval(p);
        Some((c - cb1).min(c0 - c))
    });
    let cell_extrema = AssumptionCheck::strict(m, w);

    let (m, w) = worst(&pts, |p| (p.norm() >= CENTER_BALL).then(|| c0 / 3.0 - model.balanced_load(p)));
    let load_peak_at_center = AssumptionCheck::strict(m, w).with_note(format!(
        "L(0) - c(0)/3 = {:e}",
        model.balanced_load(Point::ORIGIN) - c0 / 3.0
    ));

    let center_below_cell_integral = match integral_t2(model) {
        Ok(v) => AssumptionCheck::strict(v - c0 / 3.0, None)
            .with_note(format!("c(0)/3 = {}, integral over T2 = {v}", c0 / 3.0)),
        Err(e) => AssumptionCheck {
            status: CheckStatus::Indeterminate,
            witness: None,
            margin: f64::NAN,
            note: Some(e.to_string()),
        },
    };

    AssumptionReport {
        model: model.label().to_string(),
        grid_resolution: res,
        nearest_bin_cheapest,
        axial_symmetry,
        lipschitz_estimate,
        null_level_sets,
        continuity,
        cell_extrema,
        load_peak_at_center,
        center_below_cell_integral,
    }
}

fn lipschitz_near_rays(model: &CostModel, f: &TriangleFrame, pts: &[Point], res: usize) -> f64 {
    let band = f.side / 20.0;
    let h = f.side / res as f64 * 0.5;
    let rays = [Point::new(0.5 * 3f64.sqrt(), 0.5), Point::new(0.0, -1.0)];
    let dist_to_ray = |p: Point, d: Point| {
        if p.dot(d) >= 0.0 {
            d.cross(p).abs()
        } else {
            p.norm()
        }
    };
    let vals: Vec<f64> = pts
        .par_iter()
        .map(|&p| {
            if rays.iter().all(|&d| dist_to_ray(p, d) > band) {
                return 0.0;
            }
            let c = model.eval(p);
            let mut l: f64 = 0.0;
            for e in [Point::new(h, 0.0), Point::new(0.0, h)] {
                let q = p + e;
                if f.contains(q) {
                    l = l.max((model.eval(q) - c).abs() / h);
                }
            }
            l
        })
        .collect();
    vals.into_iter().fold(0.0, f64::max)
}

/// Largest difference between horizontally or vertically adjacent grid
/// values, with the location of the pair.
fn max_jump(model: &CostModel, f: &TriangleFrame, res: usize) -> (f64, Option<Point>) {
    let (x0, y0) = (-0.5 * f.side, -0.5 * f.lambda);
    let (hx, hy) = (f.side / res as f64, 1.5 * f.lambda / res as f64);
    let rows: Vec<(f64, Option<Point>)> = (0..res)
        .into_par_iter()
        .map(|i| {
            let mut best = (0.0, None);
            for k in 0..res {
                let p = Point::new(x0 + (k as f64 + 0.5) * hx, y0 + (i as f64 + 0.5) * hy);
                if !f.contains(p) {
                    continue;
                }
                let c = model.eval(p);
                for q in [p + Point::new(hx, 0.0), p + Point::new(0.0, hy)] {
                    if f.contains(q) {
                        let j = (model.eval(q) - c).abs();
                        if j > best.0 {
                            best = (j, Some(p));
                        }
                    }
                }
            }
            best
        })
        .collect();
    rows.into_iter()
        .fold((0.0, None), |a, b| if b.0 > a.0 { b } else { a })
}

fn continuity_check(model: &CostModel, f: &TriangleFrame, res: usize) -> AssumptionCheck {
    let (coarse, _) = max_jump(model, f, res);
    let (fine, at) = max_jump(model, f, 2 * res);
    let margin = 0.6 * coarse - fine;
    AssumptionCheck {
        status: if margin >= 0.0 { CheckStatus::Pass } else { CheckStatus::Fail },
        witness: if margin >= 0.0 { None } else { at },
        margin,
        note: Some(format!("max neighbour jump {coarse:e} at n = {res}, {fine:e} at n = {}", 2 * res)),
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct LevelSetReport {
    pub status: CheckStatus,
    /// Centre from which every scanned ray piece was strictly monotone.
    pub center: Option<Point>,
    pub rays_scanned: usize,
    pub monotone_pieces: usize,
    pub flat_pieces: usize,
    pub nonmonotone_pieces: usize,
    pub witness: Option<Point>,
}

impl LevelSetReport {
    pub fn summary(&self) -> String {
        let center = match self.center {
            Some(c) => format!("({}, {})", c.x, c.y),
            None => "none".to_string(),
        };
        format!(
            "{} rays: {} monotone, {} flat, {} non-monotone pieces; monotone centre {center}",
            self.rays_scanned, self.monotone_pieces, self.flat_pieces, self.nonmonotone_pieces
        )
    }
}

#[derive(Default)]
struct ScanTally {
    rays: usize,
    monotone: usize,
    flat: usize,
    nonmonotone: usize,
    rays_with_flat: usize,
    witness: Option<Point>,
}

/// Region label used to cut rays into pieces: `l` inside the cap disc
/// around `B_l`, `0` elsewhere.
fn cap_region(f: &TriangleFrame, kink: Option<f64>, p: Point) -> usize {
    match kink {
        Some(k) => Cell::ALL
            .iter()
            .position(|&l| p.dist(f.vertex(l)) < k)
            .map_or(0, |i| i + 1),
        None => 0,
    }
}

/// Largest `r` with `center + r·u` in the closed triangle.
fn reach(f: &TriangleFrame, center: Point, u: Point) -> f64 {
    let w0 = f.barycentric(center);
    let w1 = f.barycentric(center + u);
    let mut r = f64::INFINITY;
    for k in 0..3 {
        let g = w1[k] - w0[k];
        if g < 0.0 {
            r = r.min(w0[k].max(0.0) / -g);
        }
    }
    r
}

fn scan_center(model: &CostModel, center: Point, ray_count: usize, steps: usize) -> ScanTally {
    let f = model.frame();
    let kink = model.kink_radius();
    let per_ray: Vec<ScanTally> = (0..ray_count)
        .into_par_iter()
        .map(|k| {
            let mut t = ScanTally::default();
            let u = Point::polar(1.0, 2.0 * PI * k as f64 / ray_count as f64);
            let rmax = reach(f, center, u);
            if !(rmax > 1e-9) {
                return t;
            }
            t.rays = 1;
            let samples: Vec<(Point, usize, f64)> = (0..=steps)
                .map(|i| {
                    let p = center + u * (rmax * i as f64 / steps as f64);
                    (p, cap_region(f, kink, p), model.eval(p))
                })
                .collect();
            let mut start = 0;
            let mut had_flat = false;
            while start < samples.len() {
                let mut end = start + 1;
                while end < samples.len() && samples[end].1 == samples[start].1 {
                    end += 1;
                }
                if end - start >= 2 {
                    let diffs = samples[start..end].windows(2).map(|w| w[1].2 - w[0].2);
                    let (mut up, mut down, mut zero) = (false, false, None);
                    for (i, d) in diffs.enumerate() {
                        if d > 0.0 {
                            up = true;
                        } else if d < 0.0 {
                            down = true;
                        } else if zero.is_none() {
                            zero = Some(samples[start + i].0);
                        }
                    }
                    if let Some(p) = zero {
                        t.flat += 1;
                        had_flat = true;
                        t.witness.get_or_insert(p);
                    } else if up && down {
                        t.nonmonotone += 1;
                        t.witness.get_or_insert(samples[start].0);
                    } else {
                        t.monotone += 1;
                    }
                }
                start = end;
            }
            t.rays_with_flat = had_flat as usize;
            t
        })
        .collect();
    per_ray.into_iter().fold(ScanTally::default(), |mut a, b| {
        a.rays += b.rays;
        a.monotone += b.monotone;
        a.flat += b.flat;
        a.nonmonotone += b.nonmonotone;
        a.rays_with_flat += b.rays_with_flat;
        if a.witness.is_none() {
            a.witness = b.witness;
        }
        a
    })
}

/// Scans `c` along rays from the origin and from each vertex, cut into
/// pieces where the SINR caps are constant. Passes when some centre gives
/// strictly monotone pieces everywhere; fails when every scanned ray from
/// every centre contains a flat piece; otherwise indeterminate.
pub fn check_level_sets_monotone(model: &CostModel, ray_count: usize, steps: usize) -> LevelSetReport {
    let f = model.frame();
    let centers = [Point::ORIGIN, f.vertex(Cell::One), f.vertex(Cell::Two), f.vertex(Cell::Three)];
    let tallies: Vec<(Point, ScanTally)> = centers
        .iter()
        .map(|&c| (c, scan_center(model, c, ray_count.max(1), steps.max(2))))
        .collect();
    let good = tallies
        .iter()
        .find(|(_, t)| t.rays > 0 && t.flat == 0 && t.nonmonotone == 0);
    let all_flat = tallies.iter().all(|(_, t)| t.rays_with_flat == t.rays);
    let (center, chosen) = match good {
        Some((c, t)) => (Some(*c), t),
        None => (None, &tallies[0].1),
    };
    let status = if good.is_some() {
        CheckStatus::Pass
    } else if all_flat {
        CheckStatus::Fail
    } else {
        CheckStatus::Indeterminate
    };
    LevelSetReport {
        status,
        center,
        rays_scanned: chosen.rays,
        monotone_pieces: chosen.monotone,
        flat_pieces: chosen.flat,
        nonmonotone_pieces: chosen.nonmonotone,
        witness: if good.is_some() { None } else { chosen.witness },
    }
}

/// Smallest candidate cap `b` for which `c(0)/3 < ∫_{T2} c` holds for the
/// SINR cost with the given exponent and noise level.
pub fn scan_b_threshold(alpha: f64, a: f64, candidates: &[f64]) -> Result<f64, CostError> {
    if !(alpha.is_finite() && alpha > 2.0 && a.is_finite() && a > 0.0) {
        return Err(CostError::InvalidParams(format!(
            "need alpha > 2 and a > 0, got alpha = {alpha}, a = {a}"
        )));
    }
    let mut sorted: Vec<f64> = candidates.iter().copied().filter(|b| b.is_finite()).collect();
    sorted.sort_by(f64::total_cmp);
    for b in sorted {
        let Ok(params) = SinrParams::new(alpha, a, b) else {
            continue;
        };
        let model = sinr_cost(params);
        let c0 = model.eval(Point::ORIGIN);
        if let Ok(v) = integral_t2(&model) {
            if c0 / 3.0 < v {
                return Ok(b);
            }
        }
    }
    Err(CostError::NoneFound)
}
