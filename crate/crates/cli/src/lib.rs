//! Command-line front end: flag parsing, config files, dispatch to the
//! experiment drivers and machine-readable outputs.
//!
//! Exit codes: 0 ok, 1 acceptance failure, 2 numeric failure, 64 usage.

mod commands;
mod config;
mod output;

use std::ffi::OsString;
use std::path::PathBuf;

use clap::{Args, Parser, Subcommand};
use thiserror::Error;

pub use config::{CliConfig, CommandKind, ConfigError};
pub use output::{config_hash, Summary};

pub const EXIT_OK: i32 = 0;
pub const EXIT_ACCEPTANCE: i32 = 1;
pub const EXIT_NUMERIC: i32 = 2;
pub const EXIT_USAGE: i32 = 64;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("usage: {0}")]
    Usage(String),
    #[error("numeric failure: {0}")]
    Numeric(String),
    #[error("i/o error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Usage(_) => EXIT_USAGE,
            CliError::Numeric(_) | CliError::Io { .. } => EXIT_NUMERIC,
        }
    }
}

impl From<ConfigError> for CliError {
    fn from(e: ConfigError) -> Self {
        CliError::Usage(e.to_string())
    }
}

#[derive(Debug, Parser)]
#[command(name = "triload", version, about = "Min-max load allocation on the triangle: simulations and rate functions")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Tabulate the rate functions J and Jbar.
    Rates(RatesArgs),
    /// Check the structural assumptions of a cost model.
    Check(CheckArgs),
    /// Single-run law of large numbers for the greedy and cone-sweep loads.
    Simulate(ExperimentArgs),
    /// Replicate the central limit statistics.
    Clt(ExperimentArgs),
    /// Estimate tail probabilities and fit their decay rate.
    Ldp(ExperimentArgs),
    /// Mean drift of the scaled loads.
    Drift(ExperimentArgs),
    /// Violation frequency of the cone-sweep concentration bound.
    Prop31(ExperimentArgs),
    /// Second moments of the bridge statistic.
    Bridge(ExperimentArgs),
    /// Execute a JSON config file (as embedded in every summary).
    Run(RunArgs),
}

#[derive(Debug, Args)]
pub struct CommonArgs {
    /// Cost model: radial:<scale>, sinr:<alpha>,<a>,<b> or const:<kappa>.
    #[arg(long, default_value = "radial:2")]
    pub model: String,
    /// Output directory for CSV and JSON files.
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// Worker threads; never changes results.
    #[arg(long, env = "TRILOAD_THREADS")]
    pub threads: Option<usize>,
}

#[derive(Debug, Args)]
pub struct RatesArgs {
    #[command(flatten)]
    pub common: CommonArgs,
    /// Explicit y values (comma separated); defaults to an even grid.
    #[arg(long, value_delimiter = ',')]
    pub y: Vec<f64>,
    /// Number of points in the default grid.
    #[arg(long, default_value_t = 41)]
    pub points: usize,
}

#[derive(Debug, Args)]
pub struct CheckArgs {
    #[command(flatten)]
    pub common: CommonArgs,
    /// Grid resolution of the checks.
    #[arg(long, default_value_t = 300)]
    pub resolution: usize,
}

#[derive(Debug, Args)]
pub struct ExperimentArgs {
    #[command(flatten)]
    pub common: CommonArgs,
    #[arg(long, default_value_t = 1)]
    pub seed: u64,
    /// Problem sizes (comma separated).
    #[arg(long, value_delimiter = ',')]
    pub n: Vec<usize>,
    /// Replications per problem size.
    #[arg(long = "R", visible_alias = "replications")]
    pub replications: Option<usize>,
    /// Tail threshold for `ldp`.
    #[arg(long)]
    pub t: Option<f64>,
    /// Concentration exponent in (1/4, 1/2).
    #[arg(long, default_value_t = 0.3)]
    pub alpha: f64,
    /// Acceptance tolerance; its meaning depends on the command.
    #[arg(long)]
    pub tol: Option<f64>,
    /// Also solve the LP relaxation in every trial.
    #[arg(long)]
    pub lp: bool,
    /// Tail estimator for `ldp`: tilted or naive.
    #[arg(long)]
    pub estimator: Option<String>,
    /// Replications of the naive cross-check in `ldp` (0 disables it).
    #[arg(long = "naive-R")]
    pub naive_replications: Option<usize>,
}

#[derive(Debug, Args)]
pub struct RunArgs {
    pub config: PathBuf,
    /// Overrides the thread count in the file.
    #[arg(long, env = "TRILOAD_THREADS")]
    pub threads: Option<usize>,
    /// Overrides the output directory in the file.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

/// Result of a successful command.
#[derive(Debug)]
pub struct Report {
    /// One-line human summary.
    pub line: String,
    pub accepted: bool,
    /// Data was printed to stdout, so the summary goes to stderr.
    pub data_on_stdout: bool,
}

/// Resolves the flags of any command into a config.
pub fn resolve(command: Command) -> Result<CliConfig, CliError> {
    let cfg = match command {
        Command::Rates(a) => {
            let mut c = CliConfig::new(CommandKind::Rates, a.common.model);
            c.out = a.common.out;
            c.threads = a.common.threads;
            c.y = a.y;
            c.points = a.points;
            c
        }
        Command::Check(a) => {
            let mut c = CliConfig::new(CommandKind::Check, a.common.model);
            c.out = a.common.out;
            c.threads = a.common.threads;
            c.resolution = a.resolution;
            c
        }
        Command::Simulate(a) => experiment(CommandKind::Simulate, a)?,
        Command::Clt(a) => experiment(CommandKind::Clt, a)?,
        Command::Ldp(a) => experiment(CommandKind::Ldp, a)?,
        Command::Drift(a) => experiment(CommandKind::Drift, a)?,
        Command::Prop31(a) => experiment(CommandKind::Prop31, a)?,
        Command::Bridge(a) => experiment(CommandKind::Bridge, a)?,
        Command::Run(a) => {
            let text = std::fs::read_to_string(&a.config).map_err(|source| CliError::Io {
                path: a.config.clone(),
                source,
            })?;
            let mut c = CliConfig::from_config_or_summary(&text)?;
            if a.threads.is_some() {
                c.threads = a.threads;
            }
            if a.out.is_some() {
                c.out = a.out;
            }
            c
        }
    };
    cfg.validate()?;
    Ok(cfg)
}

fn experiment(kind: CommandKind, a: ExperimentArgs) -> Result<CliConfig, CliError> {
    let mut c = CliConfig::new(kind, a.common.model);
    c.out = a.common.out;
    c.threads = a.common.threads;
    c.seed = a.seed;
    if !a.n.is_empty() {
        c.n = a.n;
    }
    if let Some(r) = a.replications {
        c.replications = r;
    }
    c.t = a.t;
    c.alpha = a.alpha;
    c.tol = a.tol;
    c.with_lp = a.lp;
    if let Some(e) = a.estimator {
        c.estimator = e.parse::<config::EstimatorName>()?.into();
    }
    if let Some(r) = a.naive_replications {
        c.naive_replications = r;
    }
    Ok(c)
}

/// Runs a resolved config on a pool of the requested size.
pub fn execute(cfg: &CliConfig) -> Result<Report, CliError> {
    let mut builder = rayon::ThreadPoolBuilder::new();
    if let Some(k) = cfg.threads {
        builder = builder.num_threads(k);
    }
    let pool = builder
        .build()
        .map_err(|e| CliError::Usage(format!("cannot build a pool of {:?} threads: {e}", cfg.threads)))?;
    pool.install(|| commands::dispatch(cfg))
}

/// Parses arguments, runs the command and returns the process exit code.
pub fn run_from_args<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { EXIT_USAGE } else { EXIT_OK };
        }
    };
    let result = resolve(cli.command).and_then(|cfg| execute(&cfg));
    match result {
        Ok(report) => {
            if report.data_on_stdout {
                eprintln!("{}", report.line);
            } else {
                println!("{}", report.line);
            }
            if report.accepted {
                EXIT_OK
            } else {
                EXIT_ACCEPTANCE
            }
        }
        Err(e) => {
            eprintln!("triload: {e}");
            e.exit_code()
        }
    }
}
