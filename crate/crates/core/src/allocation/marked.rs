//! Greedy allocation under an SINR cost with random fading marks.
//!
//! Object `k` carries a mark `Z_k = (z_1, z_2, z_3)`, `z_l` being the fading
//! power of its link to `B_l`, and
//! `c_l(x, z) = (a + Σ_{m≠l} min(b, z_m d_m^{-α})) / min(b, z_l d_l^{-α})`.

use rand::Rng;
use rand_distr::{Distribution, Exp1};

use super::{AllocationError, Assignment, LoadTriple};
use crate::cost::SinrParams;
use crate::geometry::{Cell, Point, TriangleFrame};

#[derive(Debug, Clone, Copy)]
pub struct MarkedSinr {
    pub params: SinrParams,
    pub frame: TriangleFrame,
}

impl MarkedSinr {
    pub fn new(params: SinrParams) -> Self {
        MarkedSinr { params, frame: crate::geometry::frame() }
    }

    fn gain(&self, mark: f64, d: f64) -> f64 {
        self.params.b.min(mark * d.powf(-self.params.alpha))
    }

    /// `c_l(x, z)`.
    pub fn cost(&self, l: Cell, x: Point, marks: [f64; 3]) -> f64 {
        self.costs(x, marks)[l.index()]
    }

    pub fn costs(&self, x: Point, marks: [f64; 3]) -> [f64; 3] {
        let g = Cell::ALL.map(|m| self.gain(marks[m.index()], x.dist(self.frame.vertex(m))));
        let total: f64 = g.iter().sum();
        g.map(|gl| (self.params.a + total - gl) / gl)
    }

    /// Unit-mean exponential marks, the Rayleigh fading law.
    pub fn sample_marks<R: Rng + ?Sized>(rng: &mut R) -> [f64; 3] {
        [0; 3].map(|_| Exp1.sample(rng))
    }
}

/// `bins[k] = argmin_l c_l(X_k, Z_k)`, with the loads of that assignment.
/// Exactly equal minimal costs are reported as [`AllocationError::TieDetected`].
pub fn marked_greedy(
    points: &[Point],
    marks: &[[f64; 3]],
    model: &MarkedSinr,
) -> Result<(Assignment, LoadTriple), AllocationError> {
    assign(points, marks, model, true)
}

/// As [`marked_greedy`], but equal minimal costs go to the lowest-numbered
/// bin. Ties have positive probability: when two gains saturate at the cap
/// `b`, the two costs coincide.
pub fn marked_greedy_lowest_tie(
    points: &[Point],
    marks: &[[f64; 3]],
    model: &MarkedSinr,
) -> Result<(Assignment, LoadTriple), AllocationError> {
    assign(points, marks, model, false)
}

fn assign(
    points: &[Point],
    marks: &[[f64; 3]],
    model: &MarkedSinr,
    reject_ties: bool,
) -> Result<(Assignment, LoadTriple), AllocationError> {
    if points.len() != marks.len() {
        return Err(AllocationError::LengthMismatch {
            expected: points.len(),
            got: marks.len(),
        });
    }
    let mut loads = [0.0; 3];
    let mut bins = Vec::with_capacity(points.len());
    for (k, (&p, &z)) in points.iter().zip(marks).enumerate() {
        model.frame.check_inside(p)?;
        if z.iter().any(|&v| !(v > 0.0 && v.is_finite())) {
            return Err(AllocationError::InvalidInstance(format!("mark {k} is not positive: {z:?}")));
        }
        let c = model.costs(p, z);
        let best = (0..3).fold(0, |m, l| if c[l] < c[m] { l } else { m });
        if let Some(other) = (0..3).find(|&l| reject_ties && l != best && c[l] == c[best]) {
            return Err(AllocationError::TieDetected {
                object: k,
                first: Cell::from_index(best.min(other)),
                second: Cell::from_index(best.max(other)),
            });
        }
        loads[best] += c[best];
        bins.push(Cell::from_index(best));
    }
    Ok((Assignment { bins }, LoadTriple::new(loads)))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::cost::sinr_cost;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn model() -> MarkedSinr {
        MarkedSinr::new(SinrParams::new(2.5, 1.0, 10.0).unwrap())
    }

    #[test]
    fn unit_marks_reduce_to_sinr_cost() {
        let mm = model();
        let plain = sinr_cost(mm.params);
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let pts: Vec<Point> = (0..2000).map(|_| mm.frame.sample_uniform(&mut rng)).collect();
        for &p in &pts {
            let a = mm.costs(p, [1.0; 3]);
            let b = plain.costs(p);
            for l in 0..3 {
                assert!((a[l] - b[l]).abs() <= 1e-12 * b[l]);
            }
        }
        let marks = vec![[1.0; 3]; pts.len()];
        let (a, _) = marked_greedy(&pts, &marks, &mm).unwrap();
        for (k, &p) in pts.iter().enumerate() {
            assert_eq!(a.bins[k], mm.frame.voronoi_cell(p).unwrap());
        }
    }

    #[test]
    fn single_point_takes_argmin() {
        let mm = model();
        let p = Point::new(0.1, 0.1);
        let z = [0.2, 3.0, 1.0];
        let (a, lt) = marked_greedy(&[p], &[z], &mm).unwrap();
        let c = mm.costs(p, z);
        let best = a.bins[0].index();
        assert!(c.iter().all(|&v| v >= c[best]));
        assert_eq!(lt.rho, c[best]);
    }

    #[test]
    fn rotation_relabels_marks() {
        let mm = model();
        let x = Point::new(0.13, -0.21);
        let z = [0.7, 1.9, 0.4];
        let c = mm.costs(x, z);
        // c_2(x, z) = c_1(j²x, (z2, z3, z1))
        let c2 = mm.costs(x.mul_j2(), [z[1], z[2], z[0]])[0];
        assert!((c[1] - c2).abs() < 1e-12 * c2);
        let c3 = mm.costs(x.mul_j(), [z[2], z[0], z[1]])[0];
        assert!((c[2] - c3).abs() < 1e-12 * c3);
    }

    #[test]
    fn ties_and_bad_marks_are_reported() {
        let mm = model();
        let origin = Point::ORIGIN;
        assert!(matches!(
            marked_greedy(&[origin], &[[1.0; 3]], &mm),
            Err(AllocationError::TieDetected { object: 0, .. })
        ));
        assert!(marked_greedy(&[origin], &[[0.0, 1.0, 1.0]], &mm).is_err());
        assert!(marked_greedy(&[origin], &[], &mm).is_err());
    }

    #[test]
    fn saturated_gains_tie_and_go_to_the_lowest_bin() {
        let mm = model();
        // Large marks saturate every gain at `b`, making all costs equal.
        let p = Point::new(0.0, 0.1);
        let z = [1e6; 3];
        assert!(matches!(marked_greedy(&[p], &[z], &mm), Err(AllocationError::TieDetected { .. })));
        let (a, loads) = marked_greedy_lowest_tie(&[p], &[z], &mm).unwrap();
        assert_eq!(a.bins, vec![Cell::One]);
        assert_eq!(loads.loads[1], 0.0);
    }

    #[test]
    fn marks_are_unit_exponential() {
        let mut rng = ChaCha8Rng::seed_from_u64(6);
        let n = 100_000;
        let mean: f64 = (0..n).map(|_| MarkedSinr::sample_marks(&mut rng)[1]).sum::<f64>() / n as f64;
        assert!((mean - 1.0).abs() < 0.02);
    }
}
