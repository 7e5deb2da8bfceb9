use serde::Serialize;
use triload::asymptotics::{clt_params, RateFunction, RateRow};
use triload::cost::{check_assumptions, scan_b_threshold, AssumptionReport};
use triload::experiments::{
    run_bridge, run_clt, run_ldp, run_lln, run_mean_drift, run_prop31, samples_csv, CltReport, ExperimentError,
    Sample,
};
use triload::{CostError, ModelSpec};

use crate::config::{CliConfig, CommandKind};
use crate::output::{csv, emit, num, Summary};
use crate::{CliError, Report};

const SINR_B_CANDIDATES: [f64; 4] = [10.0, 1e2, 1e3, 1e4];

fn experiment_error(e: ExperimentError) -> CliError {
    match e {
        ExperimentError::Config(m) => CliError::Usage(m),
        other => CliError::Numeric(other.to_string()),
    }
}

fn numeric<E: std::fmt::Display>(e: E) -> CliError {
    CliError::Numeric(e.to_string())
}

fn finish<T: Serialize>(
    cfg: &CliConfig,
    accepted: bool,
    line: String,
    results: T,
    csvs: &[(&str, String)],
) -> Result<Report, CliError> {
    emit(cfg, &Summary::new(cfg, accepted, line.clone(), results), csvs)?;
    Ok(Report { line, accepted, data_on_stdout: cfg.out.is_none() && matches!(cfg.command, CommandKind::Rates | CommandKind::Check) })
}

pub fn dispatch(cfg: &CliConfig) -> Result<Report, CliError> {
    match cfg.command {
        CommandKind::Rates => rates(cfg),
        CommandKind::Check => check(cfg),
        CommandKind::Simulate => simulate(cfg),
        CommandKind::Clt => clt(cfg),
        CommandKind::Ldp => ldp(cfg),
        CommandKind::Drift => drift(cfg),
        CommandKind::Prop31 => prop31(cfg),
        CommandKind::Bridge => bridge(cfg),
    }
}

/// Default abscissae: an even grid from `c(B1)/3` to just past `c(0)`.
fn default_grid(rf: &RateFunction, points: usize) -> Vec<f64> {
    let (low, high) = rf.endpoints();
    let (a, b) = (low / 3.0, 1.05 * high);
    (0..points).map(|i| a + (b - a) * i as f64 / (points - 1) as f64).collect()
}

fn rates(cfg: &CliConfig) -> Result<Report, CliError> {
    let model = cfg.model_spec()?.build().map_err(numeric)?;
    let rf = RateFunction::new(&model).map_err(numeric)?;
    let ys = if cfg.y.is_empty() { default_grid(&rf, cfg.points) } else { cfg.y.clone() };
    let rows = ys
        .iter()
        .map(|&y| rf.table_row(y).map_err(|e| CliError::Numeric(format!("rate solver failed at y = {y}: {e}"))))
        .collect::<Result<Vec<RateRow>, CliError>>()?;
    let body = csv(RateRow::CSV_HEADER, rows.iter().map(RateRow::to_csv));
    let line = format!("rates {}: {} rows, gamma = {}", cfg.model, rows.len(), rf.gamma());
    if cfg.out.is_none() {
        print!("{body}");
    }

    #[derive(Serialize)]
    struct Results {
        gamma: f64,
        endpoints: (f64, f64),
        rows: usize,
    }
    let results = Results { gamma: rf.gamma(), endpoints: rf.endpoints(), rows: rows.len() };
    finish(cfg, true, line, results, &[("rates.csv", body)])
}

fn check(cfg: &CliConfig) -> Result<Report, CliError> {
    let spec = cfg.model_spec()?;
    let model = spec.build().map_err(numeric)?;
    let report = check_assumptions(&model, cfg.resolution);
    let b_threshold = match spec {
        ModelSpec::Sinr { alpha, a, .. } => Some(match scan_b_threshold(alpha, a, &SINR_B_CANDIDATES) {
            Ok(b) => Ok(b),
            Err(CostError::NoneFound) => Err("no candidate cap is admissible".to_string()),
            Err(e) => Err(e.to_string()),
        }),
        _ => None,
    };
    let failing: Vec<String> = report
        .entries()
        .iter()
        .filter(|(_, c)| c.status == triload::cost::CheckStatus::Fail)
        .map(|(name, c)| match c.witness {
            Some(p) => format!("{name} at ({}, {})", p.x, p.y),
            None => name.to_string(),
        })
        .collect();
    let accepted = !report.any_fail();
    let line = if accepted {
        format!("check {}: no failing assumption", cfg.model)
    } else {
        format!("check {}: failing {}", cfg.model, failing.join(", "))
    };
    if cfg.out.is_none() {
        println!("{}", serde_json::to_string_pretty(&report).map_err(numeric)?);
    }

    #[derive(Serialize)]
    struct Results {
        report: AssumptionReport,
        #[serde(skip_serializing_if = "Option::is_none")]
        b_threshold: Option<Result<f64, String>>,
    }
    finish(cfg, accepted, line, Results { report, b_threshold }, &[])
}

fn simulate(cfg: &CliConfig) -> Result<Report, CliError> {
    let ec = cfg.experiment_config()?;
    let model = ec.model.build().map_err(numeric)?;
    let params = clt_params(&model).map_err(numeric)?;
    let rows = run_lln(&ec).map_err(experiment_error)?;
    let mut accepted = true;
    let mut parts = Vec::new();
    for r in &rows {
        // Relative tolerance; by default four standard deviations of the
        // fluctuation scale.
        let tol = cfg.tol.unwrap_or(4.0 * params.sigma() / (params.gamma * (r.n as f64).sqrt()));
        let ok = r.err_bar <= tol * r.gamma && r.err_hat <= tol * r.gamma;
        accepted &= ok;
        parts.push(format!(
            "n={}: gamma {:.6}, greedy {:.6}, sweep {:.6}, tol {:.2}%{}",
            r.n,
            r.gamma,
            r.rho_bar_over_n,
            r.rho_hat_over_n,
            100.0 * tol,
            if ok { "" } else { " FAIL" }
        ));
    }
    let body = csv(
        "n,gamma,rho_bar_over_n,rho_hat_over_n,rho_lp_over_n,err_bar,err_hat,hat_steps",
        rows.iter().map(|r| {
            format!(
                "{},{},{},{},{},{},{},{}",
                r.n,
                r.gamma,
                r.rho_bar_over_n,
                r.rho_hat_over_n,
                num(r.rho_lp_over_n),
                r.err_bar,
                r.err_hat,
                r.hat_steps
            )
        }),
    );
    finish(cfg, accepted, format!("simulate {}", parts.join("; ")), rows, &[("lln.csv", body)])
}

fn clt(cfg: &CliConfig) -> Result<Report, CliError> {
    let ec = cfg.experiment_config()?;
    let reports = run_clt(&ec).map_err(experiment_error)?;
    let tol = cfg.tol.unwrap_or(0.1);
    let mut accepted = true;
    let mut parts = Vec::new();
    for r in &reports {
        let p = &r.params;
        let var_ok = (r.hat.variance - p.var_opt).abs() <= tol * p.var_opt;
        let mean_ok = r.bar.mean_within(p.m, 4.0);
        let oracle_ok = (r.bar.variance - r.oracle.variance).abs() <= tol * r.oracle.variance;
        accepted &= var_ok && mean_ok && oracle_ok;
        parts.push(format!(
            "n={}: sweep variance {:.5} vs sigma^2/3-gamma^2 {:.5} (tol {}%){}; greedy mean {:.4} +- {:.4} vs m {:.4}{}; greedy variance {:.4} vs limit law {:.4}{}",
            r.n,
            r.hat.variance,
            p.var_opt,
            100.0 * tol,
            mark(var_ok),
            r.bar.mean,
            r.bar.stderr,
            p.m,
            mark(mean_ok),
            r.bar.variance,
            r.oracle.variance,
            mark(oracle_ok)
        ));
    }
    let samples: Vec<Sample> = reports.iter().flat_map(|r| r.samples.iter().cloned()).collect();
    let body = samples_csv(&samples);
    let results: Vec<&CltReport> = reports.iter().collect();
    finish(cfg, accepted, format!("clt {}", parts.join("; ")), results, &[("samples.csv", body)])
}

fn mark(ok: bool) -> &'static str {
    if ok {
        ""
    } else {
        " FAIL"
    }
}

fn ldp(cfg: &CliConfig) -> Result<Report, CliError> {
    let ec = cfg.experiment_config()?;
    let fit = run_ldp(&ec).map_err(experiment_error)?;
    let tol = cfg.tol.unwrap_or(0.25);
    let slope_ok = fit.relative_slope_error() <= tol;
    let overlap = fit.cross_check.as_ref().map(|(a, b)| a.overlaps(b));
    let accepted = slope_ok && overlap.unwrap_or(true);
    let line = format!(
        "ldp t={}: slope {:.5} +- {:.5} vs Jbar(t) {:.5} ({:.1}% off, tol {}%){}; naive/tilted CIs {}",
        fit.t,
        fit.slope,
        fit.slope_stderr,
        fit.reference_rate,
        100.0 * fit.relative_slope_error(),
        100.0 * tol,
        mark(slope_ok),
        match overlap {
            Some(true) => "overlap",
            Some(false) => "disjoint FAIL",
            None => "not compared",
        }
    );
    let body = csv(
        "n,estimator,replications,p_hat,stderr,hits,usable",
        fit.estimates.iter().map(|e| {
            format!(
                "{},{},{},{},{},{},{}",
                e.n,
                serde_json::to_value(e.estimator).ok().and_then(|v| v.as_str().map(String::from)).unwrap_or_default(),
                e.replications,
                e.p_hat,
                e.stderr,
                e.hits,
                e.usable
            )
        }),
    );
    finish(cfg, accepted, line, &fit, &[("ldp.csv", body)])
}

fn drift(cfg: &CliConfig) -> Result<Report, CliError> {
    let ec = cfg.experiment_config()?;
    let rows = run_mean_drift(&ec).map_err(experiment_error)?;
    let k = cfg.tol.unwrap_or(4.0);
    let mut accepted = true;
    let mut parts = Vec::new();
    for r in &rows {
        let bar_ok = r.bar.mean_within(r.m, k);
        let hat_ok = r.hat.mean_within(0.0, k);
        accepted &= bar_ok && hat_ok;
        parts.push(format!(
            "n={}: greedy drift {:.4} +- {:.4} vs m {:.4}{}; sweep drift {:.4} +- {:.4} vs 0{} ({k} SE)",
            r.n,
            r.bar.mean,
            r.bar.stderr,
            r.m,
            mark(bar_ok),
            r.hat.mean,
            r.hat.stderr,
            mark(hat_ok)
        ));
    }
    let body = csv(
        "n,bar_mean,bar_stderr,hat_mean,hat_stderr,m,drift_difference",
        rows.iter().map(|r| {
            format!(
                "{},{},{},{},{},{},{}",
                r.n, r.bar.mean, r.bar.stderr, r.hat.mean, r.hat.stderr, r.m, r.drift_difference
            )
        }),
    );
    finish(cfg, accepted, format!("drift {}", parts.join("; ")), &rows, &[("drift.csv", body)])
}

fn prop31(cfg: &CliConfig) -> Result<Report, CliError> {
    let mut ec = cfg.experiment_config()?;
    ec.n_values.sort_unstable();
    let rows = run_prop31(&ec).map_err(experiment_error)?;
    let tol = cfg.tol.unwrap_or(0.05);
    let monotone = rows.windows(2).all(|w| w[1].frequency <= w[0].frequency);
    let last_ok = rows.last().is_some_and(|r| r.frequency <= tol);
    let accepted = monotone && last_ok;
    let freqs: Vec<String> = rows.iter().map(|r| format!("n={}: {:.3}", r.n, r.frequency)).collect();
    let line = format!(
        "prop31 alpha={}: violation frequency {}{}; largest n within {}{}",
        cfg.alpha,
        freqs.join(", "),
        if monotone { " (nonincreasing)" } else { " (increasing FAIL)" },
        tol,
        mark(last_ok)
    );
    let body = csv(
        "n,alpha,bound,replications,violations,frequency,max_abs_statistic,spreads_ok",
        rows.iter().map(|r| {
            format!(
                "{},{},{},{},{},{},{},{}",
                r.n, r.alpha, r.bound, r.replications, r.violations, r.frequency, r.max_abs_statistic, r.spreads_ok
            )
        }),
    );
    finish(cfg, accepted, line, &rows, &[("prop31.csv", body)])
}

fn bridge(cfg: &CliConfig) -> Result<Report, CliError> {
    let ec = cfg.experiment_config()?;
    let reports = run_bridge(&ec).map_err(experiment_error)?;
    let k = cfg.tol.unwrap_or(4.0);
    let mut accepted = true;
    let mut parts = Vec::new();
    for r in &reports {
        let ok = r.w_squared.iter().all(|s| s.mean_within(r.exact_second_moment, k));
        accepted &= ok;
        parts.push(format!(
            "n={}: E[w^2] = [{:.4}, {:.4}, {:.4}] vs sigma^2-gamma^2 {:.4}{} ({k} SE); sigma^2/3-gamma^2/(9n) = {:.4}",
            r.n,
            r.w_squared[0].mean,
            r.w_squared[1].mean,
            r.w_squared[2].mean,
            r.exact_second_moment,
            mark(ok),
            r.stated_second_moment
        ));
    }
    let body = csv(
        "n,bin,w_mean,w_stderr,w2_mean,w2_stderr,exact_second_moment,stated_second_moment",
        reports.iter().flat_map(|r| {
            (0..3).map(move |l| {
                format!(
                    "{},{},{},{},{},{},{},{}",
                    r.n,
                    l + 1,
                    r.w[l].mean,
                    r.w[l].stderr,
                    r.w_squared[l].mean,
                    r.w_squared[l].stderr,
                    r.exact_second_moment,
                    r.stated_second_moment
                )
            })
        }),
    );
    finish(cfg, accepted, format!("bridge {}", parts.join("; ")), &reports, &[("bridge.csv", body)])
}
