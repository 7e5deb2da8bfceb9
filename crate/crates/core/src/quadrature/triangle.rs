//! Adaptive cubature over polygons: fan triangulation, a degree-5
//! seven-point rule per triangle and longest-edge bisection.

use std::cmp::Ordering;
use std::collections::BinaryHeap;

use super::{IntegrationResult, QuadratureError};
use crate::geometry::Point;

/// Default cap on the number of live triangles.
pub const DEFAULT_TRIANGLE_BUDGET: usize = 1_000_000;

const INITIAL_LEVELS: usize = 10;

struct Rule {
    points: [[f64; 3]; 7],
    weights: [f64; 7],
}

fn rule() -> Rule {
    let s = 15f64.sqrt();
    let (a1, b1) = ((9.0 - 2.0 * s) / 21.0, (6.0 + s) / 21.0);
    let (a2, b2) = ((9.0 + 2.0 * s) / 21.0, (6.0 - s) / 21.0);
    let (w1, w2) = ((155.0 + s) / 1200.0, (155.0 - s) / 1200.0);
    let third = 1.0 / 3.0;
    Rule {
        points: [
            [third, third, third],
            [a1, b1, b1],
            [b1, a1, b1],
            [b1, b1, a1],
            [a2, b2, b2],
            [b2, a2, b2],
            [b2, b2, a2],
        ],
        weights: [0.225, w1, w1, w1, w2, w2, w2],
    }
}

#[derive(Clone, Copy)]
struct Tri {
    v: [Point; 3],
    /// Rule applied to the triangle itself.
    coarse: f64,
    /// Rule applied to its two longest-edge halves.
    fine: f64,
    /// Creation index, for deterministic ordering.
    id: usize,
}

impl Tri {
    fn error(&self) -> f64 {
        (self.fine - self.coarse).abs()
    }
}

impl PartialEq for Tri {
    fn eq(&self, o: &Self) -> bool {
        self.cmp(o) == Ordering::Equal
    }
}
impl Eq for Tri {}
impl PartialOrd for Tri {
    fn partial_cmp(&self, o: &Self) -> Option<Ordering> {
        Some(self.cmp(o))
    }
}
impl Ord for Tri {
    fn cmp(&self, o: &Self) -> Ordering {
        self.error()
            .total_cmp(&o.error())
            .then_with(|| o.id.cmp(&self.id))
    }
}

fn area(v: &[Point; 3]) -> f64 {
    0.5 * (v[1] - v[0]).cross(v[2] - v[0]).abs()
}

fn apply<F: Fn(Point) -> f64>(f: &F, r: &Rule, v: &[Point; 3]) -> f64 {
    let s: f64 = r
        .points
        .iter()
        .zip(r.weights)
        .map(|(b, w)| w * f(v[0] * b[0] + v[1] * b[1] + v[2] * b[2]))
        .sum();
    area(v) * s
}

/// Splits at the midpoint of the longest edge.
fn bisect(v: &[Point; 3]) -> [[Point; 3]; 2] {
    let lens = [v[1].dist(v[2]), v[2].dist(v[0]), v[0].dist(v[1])];
    let mut k = 0;
    for i in 1..3 {
        if lens[i] > lens[k] {
            k = i;
        }
    }
    // Edge opposite vertex k.
    let (p, q, r) = (v[k], v[(k + 1) % 3], v[(k + 2) % 3]);
    let m = (q + r) * 0.5;
    [[p, q, m], [p, m, r]]
}

fn make<F: Fn(Point) -> f64>(f: &F, r: &Rule, v: [Point; 3], id: usize) -> Tri {
    let coarse = apply(f, r, &v);
    let fine = bisect(&v).iter().map(|h| apply(f, r, h)).sum();
    Tri { v, coarse, fine, id }
}

/// Integrates `f` over a simple polygon.
pub fn integrate_polygon<F: Fn(Point) -> f64>(
    f: F,
    polygon: &[Point],
    abs_tol: f64,
    rel_tol: f64,
) -> Result<IntegrationResult, QuadratureError> {
    integrate_polygon_with_budget(f, polygon, abs_tol, rel_tol, DEFAULT_TRIANGLE_BUDGET)
}

pub fn integrate_polygon_with_budget<F: Fn(Point) -> f64>(
    f: F,
    polygon: &[Point],
    abs_tol: f64,
    rel_tol: f64,
    max_triangles: usize,
) -> Result<IntegrationResult, QuadratureError> {
    if polygon.len() < 3 {
        return Err(QuadratureError::DegeneratePolygon(polygon.len()));
    }
    let r = rule();
    let mut heap = BinaryHeap::new();
    let mut next_id = 0;
    for i in 1..polygon.len() - 1 {
        let mut level = vec![[polygon[0], polygon[i], polygon[i + 1]]];
        if area(&level[0]) == 0.0 {
            continue;
        }
        // A few uniform levels first, so that the two-level error estimate
        // is not fooled by a kink passing between all nodes of a large
        // triangle.
        for _ in 0..INITIAL_LEVELS {
            level = level.iter().flat_map(bisect).collect();
        }
        for v in level {
            heap.push(make(&f, &r, v, next_id));
            next_id += 1;
        }
    }
    let (mut value, mut error) = heap
        .iter()
        .fold((0.0, 0.0), |(s, e), t| (s + t.fine, e + t.error()));
    loop {
        if error <= abs_tol.max(rel_tol * value.abs()) {
            let mut tris: Vec<&Tri> = heap.iter().collect();
            tris.sort_by_key(|t| t.id);
            let exact_value: f64 = tris.iter().map(|t| t.fine).sum();
            let exact_error: f64 = tris.iter().map(|t| t.error()).sum();
            if exact_error <= abs_tol.max(rel_tol * exact_value.abs()) {
                return Ok(IntegrationResult {
                    value: exact_value,
                    error_estimate: exact_error,
                    cells_used: heap.len(),
                });
            }
            value = exact_value;
            error = exact_error;
        }
        if heap.len() >= max_triangles {
            return Err(QuadratureError::BudgetExceeded { limit: max_triangles });
        }
        let worst = heap.pop().expect("non-empty triangulation");
        value -= worst.fine;
        error -= worst.error();
        for h in bisect(&worst.v) {
            let t = make(&f, &r, h, next_id);
            next_id += 1;
            value += t.fine;
            error += t.error();
            heap.push(t);
        }
    }
}
