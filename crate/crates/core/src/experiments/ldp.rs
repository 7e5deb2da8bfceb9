//! Tail probabilities `P(ρ̄_n ≥ nt)` and their exponential decay rate.
//!
//! The importance-sampling proposal tilts one bin: each object lands in
//! `T1` with probability `m0(η)/(m0(η) + 2/3)` and is then drawn from
//! `P_η`, otherwise it is uniform on `T2 ∪ T3`. The weight is the inverse of
//! the equal mixture of the three single-bin tilts,
//! `3 / Σ_l exp(η L_l − nΛ̄(η))`, which is bounded by `3e^{−nJ̄(t)}` on the
//! event. Event and weight are invariant under relabelling the bins by
//! rotation, so drawing from the bin-1 component alone gives the mixture
//! estimator.

use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::{tags, trial_rng, Estimator, ExperimentConfig, ExperimentError, SummaryStats};
use crate::asymptotics::{RateFunction, TiltedSampler};
use crate::cost::CostModel;
use crate::geometry::Cell;
use crate::quadrature::scaled_moments;

const MIN_NAIVE_HITS: usize = 50;
const MAX_TILTED_REL_SE: f64 = 0.1;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TailEstimate {
    pub n: usize,
    pub estimator: Estimator,
    pub replications: usize,
    pub p_hat: f64,
    pub stderr: f64,
    /// Replications in which the event occurred.
    pub hits: usize,
    /// Whether the estimate is precise enough for the slope fit.
    pub usable: bool,
}

impl TailEstimate {
    pub fn ci95(&self) -> (f64, f64) {
        (self.p_hat - 1.96 * self.stderr, self.p_hat + 1.96 * self.stderr)
    }

    pub fn overlaps(&self, other: &TailEstimate) -> bool {
        let (a, b) = self.ci95();
        let (c, d) = other.ci95();
        a <= d && c <= b
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LdpFit {
    pub t: f64,
    pub gamma: f64,
    /// `J̄(t)`.
    pub reference_rate: f64,
    /// `η_t`.
    pub eta: f64,
    pub estimates: Vec<TailEstimate>,
    /// Slope of `−log p̂_n` regressed on `n` with an intercept.
    pub slope: f64,
    pub slope_stderr: f64,
    pub intercept: f64,
    /// Naive and tilted estimates at the smallest `n`.
    pub cross_check: Option<(TailEstimate, TailEstimate)>,
}

impl LdpFit {
    pub fn relative_slope_error(&self) -> f64 {
        (self.slope - self.reference_rate).abs() / self.reference_rate
    }
}

/// The `t > γ` with `J̄(t) = rate`, by bisection.
pub fn threshold_for_rate(rf: &RateFunction, rate: f64) -> Result<f64, ExperimentError> {
    let (_, high) = rf.endpoints();
    let (mut lo, mut hi) = (rf.gamma(), rf.gamma() + 0.999 * (high - rf.gamma()));
    if rf.rate_jbar(hi)? < rate {
        return Err(ExperimentError::Config(format!("no threshold reaches rate {rate}")));
    }
    for _ in 0..60 {
        let mid = 0.5 * (lo + hi);
        if rf.rate_jbar(mid)? < rate {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Ok(0.5 * (lo + hi))
}

fn greedy_max_load<R: Rng + ?Sized>(model: &CostModel, n: usize, rng: &mut R) -> f64 {
    let f = model.frame();
    let mut loads = [0.0; 3];
    for _ in 0..n {
        let p = f.sample_uniform(rng);
        let l = f.voronoi_cell_unchecked(p);
        loads[l.index()] += model.eval_cell(l, p);
    }
    loads[0].max(loads[1]).max(loads[2])
}

fn naive(
    model: &CostModel,
    n: usize,
    t: f64,
    replications: usize,
    seed: u64,
) -> TailEstimate {
    let threshold = n as f64 * t;
    let hits = (0..replications)
        .into_par_iter()
        .filter(|&i| {
            let mut rng = trial_rng(seed, tags::LDP_NAIVE | ((n as u64) << 8), i as u64);
            greedy_max_load(model, n, &mut rng) >= threshold
        })
        .count();
    let p = hits as f64 / replications as f64;
    TailEstimate {
        n,
        estimator: Estimator::Naive,
        replications,
        p_hat: p,
        stderr: (p * (1.0 - p) / replications as f64).sqrt(),
        hits,
        usable: hits >= MIN_NAIVE_HITS,
    }
}

struct Tilt {
    eta: f64,
    /// `Λ̄(η)`.
    lambda_bar: f64,
    /// Probability that a proposed object lies in `T1`.
    p_first: f64,
}

fn tilted(model: &CostModel, n: usize, t: f64, tilt: &Tilt, replications: usize, seed: u64) -> Result<TailEstimate, ExperimentError> {
    let threshold = n as f64 * t;
    let nf = n as f64;
    let f = *model.frame();
    let values: Vec<(f64, bool)> = (0..replications)
        .into_par_iter()
        .map(|i| {
            let mut rng = trial_rng(seed, tags::LDP_TILTED | ((n as u64) << 8), i as u64);
            let mut sampler = TiltedSampler::new(model, tilt.eta)?;
            let mut loads = [0.0; 3];
            for _ in 0..n {
                if rng.gen::<f64>() < tilt.p_first {
                    loads[0] += sampler.sample(&mut rng)?.1;
                } else {
                    let l = if rng.gen::<bool>() { Cell::Two } else { Cell::Three };
                    let p = f.sample_in_cell(l, &mut rng);
                    loads[l.index()] += model.eval_cell(l, p);
                }
            }
            let hit = loads.iter().any(|&l| l >= threshold);
            if !hit {
                return Ok((0.0, false));
            }
            let logs = loads.map(|l| tilt.eta * l - nf * tilt.lambda_bar);
            let top = logs[0].max(logs[1]).max(logs[2]);
            let lse = top + logs.iter().map(|v| (v - top).exp()).sum::<f64>().ln();
            Ok(((3f64.ln() - lse).exp(), true))
        })
        .collect::<Result<_, ExperimentError>>()?;
    let weights: Vec<f64> = values.iter().map(|v| v.0).collect();
    let stats = SummaryStats::from_slice(&weights);
    let hits = values.iter().filter(|v| v.1).count();
    let usable = stats.mean > 0.0 && stats.stderr <= MAX_TILTED_REL_SE * stats.mean;
    Ok(TailEstimate {
        n,
        estimator: Estimator::Tilted,
        replications,
        p_hat: stats.mean,
        stderr: stats.stderr,
        hits,
        usable,
    })
}

/// Least-squares line `y = a + b x`; returns `(b, se(b), a)`.
fn fit_line(xs: &[f64], ys: &[f64]) -> (f64, f64, f64) {
    let k = xs.len() as f64;
    let mx = xs.iter().sum::<f64>() / k;
    let my = ys.iter().sum::<f64>() / k;
    let sxx: f64 = xs.iter().map(|x| (x - mx).powi(2)).sum();
    let sxy: f64 = xs.iter().zip(ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    let slope = sxy / sxx;
    let intercept = my - slope * mx;
    let rss: f64 = xs.iter().zip(ys).map(|(x, y)| (y - intercept - slope * x).powi(2)).sum();
    let se = if xs.len() > 2 { (rss / (k - 2.0) / sxx).sqrt() } else { f64::NAN };
    (slope, se, intercept)
}

pub fn run_ldp(config: &ExperimentConfig) -> Result<LdpFit, ExperimentError> {
    config.validate()?;
    let model = config.model.build()?;
    let rf = RateFunction::new(&model)?;
    let (_, high) = rf.endpoints();
    let t = match config.ldp_threshold {
        Some(t) => t,
        None => threshold_for_rate(&rf, config.target_rate)?,
    };
    if !(t > rf.gamma() && t < high) {
        return Err(ExperimentError::Config(format!(
            "threshold t = {t} must lie in (gamma, c(0)) = ({}, {high})",
            rf.gamma()
        )));
    }
    let reference_rate = rf.rate_jbar(t)?;
    let eta = rf.solve_eta(t)?.theta;
    let sm = scaled_moments(&model, eta)?;
    let lambda_bar = sm.log_m0_plus(2.0 / 3.0);
    let tilt = Tilt { eta, lambda_bar, p_first: (sm.log_m0() - lambda_bar).exp() };

    let mut ns = config.n_values.clone();
    ns.sort_unstable();
    let estimates = ns
        .iter()
        .map(|&n| match config.estimator {
            Estimator::Naive => Ok(naive(&model, n, t, config.replications, config.seed)),
            Estimator::Tilted => tilted(&model, n, t, &tilt, config.replications, config.seed),
        })
        .collect::<Result<Vec<_>, ExperimentError>>()?;
    let cross_check = if config.naive_replications > 0 {
        let n = ns[0];
        let nv = match config.estimator {
            Estimator::Naive => estimates[0].clone(),
            Estimator::Tilted => naive(&model, n, t, config.naive_replications, config.seed),
        };
        let tl = match config.estimator {
            Estimator::Tilted => estimates[0].clone(),
            Estimator::Naive => tilted(&model, n, t, &tilt, config.replications, config.seed)?,
        };
        Some((nv, tl))
    } else {
        None
    };

    let usable: Vec<&TailEstimate> = estimates.iter().filter(|e| e.usable).collect();
    if usable.len() < 2 {
        return Err(ExperimentError::InsufficientTailHits { usable: usable.len() });
    }
    let xs: Vec<f64> = usable.iter().map(|e| e.n as f64).collect();
    let ys: Vec<f64> = usable.iter().map(|e| -e.p_hat.ln()).collect();
    let (slope, slope_stderr, intercept) = fit_line(&xs, &ys);
    Ok(LdpFit {
        t,
        gamma: rf.gamma(),
        reference_rate,
        eta,
        estimates,
        slope,
        slope_stderr,
        intercept,
        cross_check,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::cost::ModelSpec;

    #[test]
    fn line_fit_recovers_exact_line() {
        let xs = [1.0, 2.0, 3.0, 4.0];
        let ys: Vec<f64> = xs.iter().map(|x| 0.5 + 0.25 * x).collect();
        let (b, se, a) = fit_line(&xs, &ys);
        assert!((b - 0.25).abs() < 1e-14 && (a - 0.5).abs() < 1e-14 && se < 1e-12);
    }

    #[test]
    fn threshold_hits_target_rate() {
        let model = "radial:2".parse::<ModelSpec>().unwrap().build().unwrap();
        let rf = RateFunction::new(&model).unwrap();
        let t = threshold_for_rate(&rf, 0.02).unwrap();
        assert!(t > rf.gamma());
        assert!((rf.rate_jbar(t).unwrap() - 0.02).abs() < 1e-9);
    }

    #[test]
    fn tilted_and_naive_agree_at_small_n() {
        let spec: ModelSpec = "radial:2".parse().unwrap();
        let mut c = ExperimentConfig::new(spec, vec![30, 60], 20_000, 3);
        c.naive_replications = 100_000;
        let fit = run_ldp(&c).unwrap();
        let (nv, tl) = fit.cross_check.clone().unwrap();
        assert!(nv.overlaps(&tl), "{nv:?} {tl:?}");
        assert!(fit.slope > 0.0);
    }

    #[test]
    fn threshold_below_gamma_is_rejected() {
        let spec: ModelSpec = "radial:2".parse().unwrap();
        let mut c = ExperimentConfig::new(spec, vec![10, 20], 10, 3);
        c.ldp_threshold = Some(0.2);
        assert!(matches!(run_ldp(&c), Err(ExperimentError::Config(_))));
    }
}
