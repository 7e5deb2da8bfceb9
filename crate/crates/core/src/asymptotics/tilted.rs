//! Exact sampling from `P_θ(dx) ∝ e^{θc(x)} dx` on `T1`.

use rand::Rng;

use super::AsymptoticsError;
use crate::cost::CostModel;
use crate::geometry::{Cell, Point};
use crate::quadrature::THETA_CAP;

/// Rejection sampler with uniform proposals on `T1`.
#[derive(Debug, Clone)]
pub struct TiltedSampler {
    model: CostModel,
    theta: f64,
    /// `θ·c` at the envelope, `θ·c(0)` for `θ > 0` and `θ·c(B1)` otherwise.
    log_envelope: f64,
    proposals: u64,
    accepted: u64,
}

impl TiltedSampler {
    pub fn new(model: &CostModel, theta: f64) -> Result<Self, AsymptoticsError> {
        if !(theta.is_finite() && theta.abs() <= THETA_CAP) {
            return Err(AsymptoticsError::InvalidParams(format!("tilt {theta} outside [-{THETA_CAP}, {THETA_CAP}]")));
        }
        let reference = if theta > 0.0 { model.cell_max() } else { model.cell_min() };
        Ok(TiltedSampler {
            model: model.clone(),
            theta,
            log_envelope: theta * reference,
            proposals: 0,
            accepted: 0,
        })
    }

    pub fn theta(&self) -> f64 {
        self.theta
    }

    /// Accepted over proposed, so far.
    pub fn acceptance_rate(&self) -> f64 {
        if self.proposals == 0 {
            return f64::NAN;
        }
        self.accepted as f64 / self.proposals as f64
    }

    /// A point of `T1` and its cost.
    pub fn sample<R: Rng + ?Sized>(&mut self, rng: &mut R) -> Result<(Point, f64), AsymptoticsError> {
        let f = *self.model.frame();
        loop {
            let p = f.sample_in_cell(Cell::One, rng);
            let c = self.model.eval(p);
            let log_ratio = self.theta * c - self.log_envelope;
            self.proposals += 1;
            if log_ratio > 1e-9 * self.log_envelope.abs().max(1.0) {
                return Err(AsymptoticsError::EnvelopeError { x: p.x, y: p.y, excess: log_ratio });
            }
            if rng.gen::<f64>() < log_ratio.exp() {
                self.accepted += 1;
                return Ok((p, c));
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::cost::{custom_cost, radial_cost};
    use crate::quadrature::scaled_moments;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn zero_tilt_is_uniform_on_the_cell() {
        let model = radial_cost(2.0).unwrap();
        let f = *model.frame();
        let mut s = TiltedSampler::new(&model, 0.0).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        // The two halves of the kite have equal area.
        let n = 40_000;
        let mut left = 0usize;
        for _ in 0..n {
            let (p, _) = s.sample(&mut rng).unwrap();
            assert_eq!(f.voronoi_cell(p).unwrap(), Cell::One);
            if p.cross(f.vertex(Cell::One)) > 0.0 {
                left += 1;
            }
        }
        let chi2 = 2.0 * (left as f64 - n as f64 / 2.0).powi(2) / (n as f64 / 2.0);
        assert!(chi2 < 10.83);
        assert_eq!(s.acceptance_rate(), 1.0);
    }

    #[test]
    fn mean_matches_moments_and_grows() {
        let model = radial_cost(2.0).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let mut previous = 0.0;
        for theta in [1.0, 5.0, 20.0] {
            let mut s = TiltedSampler::new(&model, theta).unwrap();
            let n = 100_000;
            let cs: Vec<f64> = (0..n).map(|_| s.sample(&mut rng).unwrap().1).collect();
            let mean = cs.iter().sum::<f64>() / n as f64;
            let sd = (cs.iter().map(|c| (c - mean).powi(2)).sum::<f64>() / (n - 1) as f64).sqrt();
            let sm = scaled_moments(&model, theta).unwrap();
            assert!((mean - sm.mean()).abs() < 4.0 * sd / (n as f64).sqrt());
            // acceptance = ∫ e^{θc} / (area · envelope)
            let expected = 3.0 * sm.scaled[0];
            assert!((s.acceptance_rate() - expected).abs() < 0.01 * expected + 0.002);
            assert!(mean > previous);
            previous = mean;
        }
        assert!(previous < model.cell_max());
    }

    #[test]
    fn bad_envelope_is_reported() {
        // A narrow bump centred between the nodes of the 400 × 400 extrema
        // grid, with a zero Lipschitz bound: the estimated maximum misses it.
        let f = crate::geometry::frame();
        let (hx, hy) = (f.side / 400.0, 1.5 * f.lambda / 400.0);
        let centre = Point::new(-0.5 * f.side + 220.0 * hx, -0.5 * f.lambda + 100.0 * hy);
        assert_eq!(f.voronoi_cell(centre).unwrap(), Cell::One);
        let model = custom_cost("bump", move |p: Point| 1.0 + 50.0 * (-(p - centre).norm_sq() * 1e6).exp(), 0.0);
        assert!(model.cell_max() < 2.0);
        let mut s = TiltedSampler::new(&model, 1.0).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(6);
        let saw_error = (0..2_000_000).any(|_| s.sample(&mut rng).is_err());
        assert!(saw_error);
    }
}
