//! Law of large numbers, CLT, mean drift, bridge moments and the
//! concentration of the cone-sweep allocation.

use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::{tags, trial_rng, ExperimentConfig, ExperimentError, SummaryStats};
use crate::allocation::{
    allocate_recursive, bridge_from_loads, greedy_loads, marked_greedy_lowest_tie, solve_fractional, Instance, MarkedSinr,
    DEFAULT_LP_CAP,
};
use crate::asymptotics::{clt_params, limit_law_suboptimal, CltParams};
use crate::cost::{CostModel, SinrParams};
use crate::quadrature::gamma;

pub const SAMPLES_CSV_HEADER: &str = "trial,n,rho_bar,rho_hat,rho_lp,w1,w2,w3";

/// One replication: greedy, cone-sweep and (optionally) LP loads.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Sample {
    pub trial: usize,
    pub n: usize,
    pub rho_bar: f64,
    pub rho_hat: f64,
    pub rho_lp: Option<f64>,
    /// Bridge statistic of the greedy loads.
    pub w: [f64; 3],
    /// Final load spread of the cone sweep.
    pub hat_spread: f64,
    pub hat_steps: usize,
}

impl Sample {
    pub fn to_csv(&self) -> String {
        format!(
            "{},{},{},{},{},{},{},{}",
            self.trial,
            self.n,
            self.rho_bar,
            self.rho_hat,
            self.rho_lp.map(|v| v.to_string()).unwrap_or_default(),
            self.w[0],
            self.w[1],
            self.w[2]
        )
    }
}

pub fn samples_csv(samples: &[Sample]) -> String {
    let mut out = String::from(SAMPLES_CSV_HEADER);
    out.push('\n');
    for s in samples {
        out.push_str(&s.to_csv());
        out.push('\n');
    }
    out
}

fn stream_tag(tag: u64, n: usize) -> u64 {
    tag | ((n as u64) << 8)
}

pub fn run_trial<R: Rng + ?Sized>(
    model: &CostModel,
    n: usize,
    gamma: f64,
    with_lp: bool,
    trial: usize,
    rng: &mut R,
) -> Result<Sample, ExperimentError> {
    let inst = Instance::sample(model, n, rng)?;
    let greedy = greedy_loads(&inst);
    let (_, hat, trace) = allocate_recursive(&inst)?;
    let rho_lp = if with_lp && n <= DEFAULT_LP_CAP {
        Some(solve_fractional(&inst)?.objective)
    } else {
        None
    };
    Ok(Sample {
        trial,
        n,
        rho_bar: greedy.rho,
        rho_hat: hat.rho,
        rho_lp,
        w: bridge_from_loads(&greedy, n, gamma),
        hat_spread: hat.spread(),
        hat_steps: trace.step_count,
    })
}

fn run_trials(
    config: &ExperimentConfig,
    model: &CostModel,
    n: usize,
    gamma: f64,
    tag: u64,
) -> Result<Vec<Sample>, ExperimentError> {
    (0..config.replications)
        .into_par_iter()
        .map(|i| {
            let mut rng = trial_rng(config.seed, stream_tag(tag, n), i as u64);
            run_trial(model, n, gamma, config.with_lp, i, &mut rng)
        })
        .collect()
}

fn scaled(samples: &[Sample], gamma: f64, f: impl Fn(&Sample) -> f64) -> Vec<f64> {
    samples
        .iter()
        .map(|s| {
            let n = s.n as f64;
            (f(s) - n * gamma) / n.sqrt()
        })
        .collect()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LlnRow {
    pub n: usize,
    pub gamma: f64,
    pub rho_bar_over_n: f64,
    pub rho_hat_over_n: f64,
    pub rho_lp_over_n: Option<f64>,
    pub err_bar: f64,
    pub err_hat: f64,
    pub hat_steps: usize,
}

/// One run per `n`; LP bound included when `with_lp` is set and `n` is
/// within the LP cap.
pub fn run_lln(config: &ExperimentConfig) -> Result<Vec<LlnRow>, ExperimentError> {
    config.validate()?;
    let model = config.model.build()?;
    let g = gamma(&model)?;
    config
        .n_values
        .par_iter()
        .map(|&n| {
            let mut rng = trial_rng(config.seed, stream_tag(tags::LLN, n), 0);
            let s = run_trial(&model, n, g, config.with_lp, 0, &mut rng)?;
            let nf = n as f64;
            Ok(LlnRow {
                n,
                gamma: g,
                rho_bar_over_n: s.rho_bar / nf,
                rho_hat_over_n: s.rho_hat / nf,
                rho_lp_over_n: s.rho_lp.map(|v| v / nf),
                err_bar: (s.rho_bar / nf - g).abs(),
                err_hat: (s.rho_hat / nf - g).abs(),
                hat_steps: s.hat_steps,
            })
        })
        .collect()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CltReport {
    pub n: usize,
    pub replications: usize,
    pub params: CltParams,
    /// `(ρ̂_n − nγ)/√n`.
    pub hat: SummaryStats,
    /// `(ρ̄_n − nγ)/√n`.
    pub bar: SummaryStats,
    /// `(ρ̄_n − ρ̂_n)/√n`.
    pub difference: SummaryStats,
    /// `(ρ̃_n − nγ)/√n`, when the LP was solved.
    pub lp: Option<SummaryStats>,
    /// Draws of the limit law of the greedy statistic.
    pub oracle: SummaryStats,
    /// Smallest observed `(ρ̄_n − ρ̂_n)/√n`.
    pub min_difference: f64,
    #[serde(skip)]
    pub samples: Vec<Sample>,
}

pub fn run_clt(config: &ExperimentConfig) -> Result<Vec<CltReport>, ExperimentError> {
    config.validate()?;
    let model = config.model.build()?;
    let params = clt_params(&model)?;
    let g = params.gamma;
    let mut out = Vec::new();
    for &n in &config.n_values {
        let samples = run_trials(config, &model, n, g, tags::CLT)?;
        let hat = scaled(&samples, g, |s| s.rho_hat);
        let bar = scaled(&samples, g, |s| s.rho_bar);
        let diff: Vec<f64> = samples.iter().map(|s| (s.rho_bar - s.rho_hat) / (n as f64).sqrt()).collect();
        let lp = if samples.iter().all(|s| s.rho_lp.is_some()) {
            Some(SummaryStats::from_slice(&scaled(&samples, g, |s| s.rho_lp.unwrap_or(f64::NAN))))
        } else {
            None
        };
        let mut rng = trial_rng(config.seed, stream_tag(tags::ORACLE, n), 0);
        let draws: Vec<f64> = (0..config.oracle_draws)
            .map(|_| limit_law_suboptimal(&params, &mut rng).suboptimal)
            .collect();
        out.push(CltReport {
            n,
            replications: config.replications,
            params,
            hat: SummaryStats::with_quantiles(&hat),
            bar: SummaryStats::with_quantiles(&bar),
            min_difference: diff.iter().copied().fold(f64::INFINITY, f64::min),
            difference: SummaryStats::from_slice(&diff),
            lp,
            oracle: SummaryStats::from_slice(&draws),
            samples,
        });
    }
    Ok(out)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DriftRow {
    pub n: usize,
    /// `(ρ̄_n − nγ)/√n`, tending to `m` in mean.
    pub bar: SummaryStats,
    /// `(ρ̂_n − nγ)/√n`, tending to 0 in mean.
    pub hat: SummaryStats,
    pub m: f64,
    pub drift_difference: f64,
}

pub fn run_mean_drift(config: &ExperimentConfig) -> Result<Vec<DriftRow>, ExperimentError> {
    config.validate()?;
    let model = config.model.build()?;
    let params = clt_params(&model)?;
    let g = params.gamma;
    config
        .n_values
        .iter()
        .map(|&n| {
            let samples = run_trials(config, &model, n, g, tags::DRIFT)?;
            let bar = SummaryStats::from_slice(&scaled(&samples, g, |s| s.rho_bar));
            let hat = SummaryStats::from_slice(&scaled(&samples, g, |s| s.rho_hat));
            Ok(DriftRow { n, drift_difference: bar.mean - hat.mean, bar, hat, m: params.m })
        })
        .collect()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Prop31Row {
    pub n: usize,
    pub alpha: f64,
    /// `n^{1/2 − 2α}`.
    pub bound: f64,
    pub replications: usize,
    pub violations: usize,
    pub frequency: f64,
    /// Largest `|3(ρ̂_n − nγ)/√n − Σ w_l|` seen.
    pub max_abs_statistic: f64,
    /// Whether every sweep ended with spread `≤ 2‖c‖∞`.
    pub spreads_ok: bool,
}

pub fn run_prop31(config: &ExperimentConfig) -> Result<Vec<Prop31Row>, ExperimentError> {
    config.validate()?;
    let model = config.model.build()?;
    let g = gamma(&model)?;
    let limit = 2.0 * model.sup_norm() * (1.0 + 1e-12);
    config
        .n_values
        .iter()
        .map(|&n| {
            let samples = run_trials(config, &model, n, g, tags::PROP31)?;
            let nf = n as f64;
            let bound = nf.powf(0.5 - 2.0 * config.alpha_recursion);
            let stats: Vec<f64> = samples
                .iter()
                .map(|s| 3.0 * (s.rho_hat - nf * g) / nf.sqrt() - s.w.iter().sum::<f64>())
                .collect();
            let violations = stats.iter().filter(|d| d.abs() > bound).count();
            Ok(Prop31Row {
                n,
                alpha: config.alpha_recursion,
                bound,
                replications: samples.len(),
                violations,
                frequency: violations as f64 / samples.len() as f64,
                max_abs_statistic: stats.iter().fold(0.0, |m, d| m.max(d.abs())),
                spreads_ok: samples.iter().all(|s| s.hat_spread <= limit),
            })
        })
        .collect()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BridgeReport {
    pub n: usize,
    pub replications: usize,
    pub gamma: f64,
    pub sigma2: f64,
    /// `w_l` per bin.
    pub w: [SummaryStats; 3],
    /// `w_l²` per bin.
    pub w_squared: [SummaryStats; 3],
    /// `σ²/3 − γ²/(9n)`.
    pub stated_second_moment: f64,
    /// `σ² − γ²`, the variance of one summand `c_l(X)1{X ∈ T_l}`.
    pub exact_second_moment: f64,
}

/// Replicates the bridge statistic of the greedy loads.
pub fn run_bridge(config: &ExperimentConfig) -> Result<Vec<BridgeReport>, ExperimentError> {
    config.validate()?;
    let model = config.model.build()?;
    let params = clt_params(&model)?;
    let g = params.gamma;
    config
        .n_values
        .iter()
        .map(|&n| {
            let ws: Vec<[f64; 3]> = (0..config.replications)
                .into_par_iter()
                .map(|i| {
                    let mut rng = trial_rng(config.seed, stream_tag(tags::BRIDGE, n), i as u64);
                    let inst = Instance::sample(&model, n, &mut rng)?;
                    Ok(bridge_from_loads(&greedy_loads(&inst), n, g))
                })
                .collect::<Result<_, ExperimentError>>()?;
            let per_bin = |f: &dyn Fn(f64) -> f64| {
                [0, 1, 2].map(|l| SummaryStats::from_slice(&ws.iter().map(|w| f(w[l])).collect::<Vec<_>>()))
            };
            Ok(BridgeReport {
                n,
                replications: config.replications,
                gamma: g,
                sigma2: params.sigma2,
                w: per_bin(&|v| v),
                w_squared: per_bin(&|v| v * v),
                stated_second_moment: params.sigma2 / 3.0 - g * g / (9.0 * n as f64),
                exact_second_moment: params.sigma2 - g * g,
            })
        })
        .collect()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MarkedLlnReport {
    pub n: usize,
    pub rho_over_n: f64,
    pub loads_over_n: [f64; 3],
}

/// Greedy allocation under Rayleigh-faded SINR costs, one run.
pub fn run_marked_lln(params: SinrParams, n: usize, seed: u64) -> Result<MarkedLlnReport, ExperimentError> {
    let model = MarkedSinr::new(params);
    let mut rng = trial_rng(seed, stream_tag(tags::MARKED, n), 0);
    let mut points = Vec::with_capacity(n);
    let mut marks = Vec::with_capacity(n);
    for _ in 0..n {
        points.push(model.frame.sample_uniform(&mut rng));
        marks.push(MarkedSinr::sample_marks(&mut rng));
    }
    let (_, loads) = marked_greedy_lowest_tie(&points, &marks, &model)?;
    let nf = n as f64;
    Ok(MarkedLlnReport { n, rho_over_n: loads.rho / nf, loads_over_n: loads.loads.map(|l| l / nf) })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::cost::ModelSpec;

    fn config(n: Vec<usize>, r: usize) -> ExperimentConfig {
        let spec: ModelSpec = "radial:2".parse().unwrap();
        let mut c = ExperimentConfig::new(spec, n, r, 11);
        c.oracle_draws = 10_000;
        c
    }

    #[test]
    fn constant_cost_lln_is_max_count() {
        let spec: ModelSpec = "const:1".parse().unwrap();
        let c = ExperimentConfig::new(spec, vec![3000], 1, 5);
        let row = &run_lln(&c).unwrap()[0];
        assert!((row.rho_bar_over_n - 1.0 / 3.0).abs() < 0.03);
        assert!((row.rho_bar_over_n * 3000.0).fract() == 0.0);
    }

    #[test]
    fn lln_rows_are_close_to_gamma() {
        let mut c = config(vec![500, 10_000], 1);
        c.with_lp = true;
        let rows = run_lln(&c).unwrap();
        assert!(rows[0].rho_lp_over_n.is_some());
        assert!(rows[1].rho_lp_over_n.is_none());
        let r = &rows[1];
        assert!(r.err_bar < 0.05 * r.gamma && r.err_hat < 0.05 * r.gamma);
        assert!((r.rho_bar_over_n - r.rho_hat_over_n).abs() <= 0.05 * r.gamma);
        let lp = rows[0].rho_lp_over_n.unwrap();
        assert!(lp <= rows[0].rho_hat_over_n && lp <= rows[0].rho_bar_over_n);
    }

    #[test]
    fn outputs_are_reproducible() {
        let c = config(vec![200], 40);
        let a = run_clt(&c).unwrap();
        let b = run_clt(&c).unwrap();
        assert_eq!(samples_csv(&a[0].samples), samples_csv(&b[0].samples));
        assert_eq!(a[0].hat, b[0].hat);
        let pool = rayon::ThreadPoolBuilder::new().num_threads(3).build().unwrap();
        let c2 = pool.install(|| run_clt(&c).unwrap());
        assert_eq!(samples_csv(&a[0].samples), samples_csv(&c2[0].samples));
        assert!(a[0].min_difference >= -2.0 * 3.1 / (200f64).sqrt());
    }

    #[test]
    fn bridge_mean_is_zero() {
        let c = config(vec![50], 4000);
        let rep = &run_bridge(&c).unwrap()[0];
        for l in 0..3 {
            assert!(rep.w[l].mean_within(0.0, 4.0));
            let sq = &rep.w_squared[l];
            assert!(sq.mean_within(rep.exact_second_moment, 4.0), "{l}: {} vs {}", sq.mean, rep.exact_second_moment);
        }
    }

    #[test]
    fn prop31_rows() {
        let c = config(vec![1000], 20);
        let rows = run_prop31(&c).unwrap();
        assert!(rows[0].spreads_ok);
        assert!((rows[0].bound - 1000f64.powf(-0.1)).abs() < 1e-15);
    }
}
