use std::fmt;
use std::path::PathBuf;
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use thiserror::Error;
use triload::experiments::{Estimator, ExperimentConfig};
use triload::ModelSpec;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ConfigError {
    #[error("{0}")]
    Invalid(String),
    #[error("malformed config JSON: {0}")]
    Json(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum CommandKind {
    Rates,
    Check,
    Simulate,
    Clt,
    Ldp,
    Drift,
    Prop31,
    Bridge,
}

impl CommandKind {
    pub fn name(self) -> &'static str {
        match self {
            CommandKind::Rates => "rates",
            CommandKind::Check => "check",
            CommandKind::Simulate => "simulate",
            CommandKind::Clt => "clt",
            CommandKind::Ldp => "ldp",
            CommandKind::Drift => "drift",
            CommandKind::Prop31 => "prop31",
            CommandKind::Bridge => "bridge",
        }
    }

    fn is_experiment(self) -> bool {
        !matches!(self, CommandKind::Rates | CommandKind::Check)
    }

    /// Default problem sizes and replication count.
    fn defaults(self) -> (Vec<usize>, usize) {
        match self {
            CommandKind::Rates | CommandKind::Check => (Vec::new(), 0),
            CommandKind::Simulate => (vec![100_000], 1),
            CommandKind::Clt => (vec![2000], 2000),
            CommandKind::Ldp => (vec![100, 200, 400, 800], 50_000),
            CommandKind::Drift => (vec![4000], 500),
            CommandKind::Prop31 => (vec![1000, 10_000], 200),
            CommandKind::Bridge => (vec![100], 10_000),
        }
    }
}

impl fmt::Display for CommandKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

fn parse_estimator(s: &str) -> Result<Estimator, ConfigError> {
    match s {
        "naive" => Ok(Estimator::Naive),
        "tilted" => Ok(Estimator::Tilted),
        _ => Err(ConfigError::Invalid(format!("unknown estimator {s:?} (expected naive or tilted)"))),
    }
}

/// Parsed estimator name, so flags and files share one spelling.
pub struct EstimatorName(pub Estimator);

impl FromStr for EstimatorName {
    type Err = ConfigError;
    fn from_str(s: &str) -> Result<Self, ConfigError> {
        parse_estimator(s).map(EstimatorName)
    }
}

impl From<EstimatorName> for Estimator {
    fn from(e: EstimatorName) -> Self {
        e.0
    }
}

fn default_points() -> usize {
    41
}

fn default_resolution() -> usize {
    300
}

fn default_alpha() -> f64 {
    0.3
}

fn default_naive() -> usize {
    1_000_000
}

/// Fully resolved command configuration. Every summary embeds one, and
/// `triload run` replays it.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CliConfig {
    pub command: CommandKind,
    pub model: String,
    #[serde(default)]
    pub seed: u64,
    #[serde(default)]
    pub n: Vec<usize>,
    #[serde(default)]
    pub replications: usize,
    #[serde(default)]
    pub t: Option<f64>,
    #[serde(default = "default_alpha")]
    pub alpha: f64,
    #[serde(default)]
    pub tol: Option<f64>,
    #[serde(default)]
    pub with_lp: bool,
    #[serde(default)]
    pub estimator: Estimator,
    #[serde(default = "default_naive")]
    pub naive_replications: usize,
    /// Rate-table abscissae; an even grid when empty.
    #[serde(default)]
    pub y: Vec<f64>,
    #[serde(default = "default_points")]
    pub points: usize,
    #[serde(default = "default_resolution")]
    pub resolution: usize,
    #[serde(default)]
    pub out: Option<PathBuf>,
    #[serde(default)]
    pub threads: Option<usize>,
}

impl CliConfig {
    pub fn new(command: CommandKind, model: impl Into<String>) -> Self {
        let (n, replications) = command.defaults();
        CliConfig {
            command,
            model: model.into(),
            seed: 1,
            n,
            replications,
            t: None,
            alpha: default_alpha(),
            tol: None,
            with_lp: false,
            estimator: Estimator::default(),
            naive_replications: default_naive(),
            y: Vec::new(),
            points: default_points(),
            resolution: default_resolution(),
            out: None,
            threads: None,
        }
    }

    pub fn from_json(text: &str) -> Result<Self, ConfigError> {
        serde_json::from_str(text).map_err(|e| ConfigError::Json(e.to_string()))
    }

    /// Accepts either a bare config or a command summary embedding one.
    pub fn from_config_or_summary(text: &str) -> Result<Self, ConfigError> {
        let value: serde_json::Value = serde_json::from_str(text).map_err(|e| ConfigError::Json(e.to_string()))?;
        let inner = match value.get("config") {
            Some(c) if value.get("config_hash").is_some() => c.clone(),
            _ => value,
        };
        serde_json::from_value(inner).map_err(|e| ConfigError::Json(e.to_string()))
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("config serialises")
    }

    pub fn model_spec(&self) -> Result<ModelSpec, ConfigError> {
        self.model.parse().map_err(|e: triload::CostError| ConfigError::Invalid(e.to_string()))
    }

    /// The config with the fields that cannot affect results cleared.
    pub fn provenance(&self) -> CliConfig {
        CliConfig { out: None, threads: None, ..self.clone() }
    }

    pub fn validate(&self) -> Result<(), ConfigError> {
        let bad = |m: String| Err(ConfigError::Invalid(m));
        let spec = self.model_spec()?;
        spec.build().map_err(|e| ConfigError::Invalid(e.to_string()))?;
        if self.threads == Some(0) {
            return bad("--threads must be at least 1".into());
        }
        if let Some(tol) = self.tol {
            if !(tol.is_finite() && tol > 0.0) {
                return bad(format!("--tol {tol} must be positive"));
            }
        }
        if let Some(t) = self.t {
            if !t.is_finite() {
                return bad(format!("--t {t} must be finite"));
            }
        }
        match self.command {
            CommandKind::Rates => {
                if self.y.is_empty() && self.points < 2 {
                    return bad("the rate grid needs at least 2 points".into());
                }
                if self.y.iter().any(|y| !y.is_finite()) {
                    return bad("y values must be finite".into());
                }
            }
            CommandKind::Check => {
                if self.resolution == 0 {
                    return bad("--resolution must be positive".into());
                }
            }
            _ => {
                self.experiment_config()?
                    .validate()
                    .map_err(|e| ConfigError::Invalid(e.to_string()))?;
            }
        }
        Ok(())
    }

    /// The library-level configuration of an experiment command.
    pub fn experiment_config(&self) -> Result<ExperimentConfig, ConfigError> {
        if !self.command.is_experiment() {
            return Err(ConfigError::Invalid(format!("{} is not an experiment", self.command)));
        }
        let mut c = ExperimentConfig::new(self.model_spec()?, self.n.clone(), self.replications, self.seed);
        c.alpha_recursion = self.alpha;
        c.ldp_threshold = self.t;
        c.estimator = self.estimator;
        c.naive_replications = self.naive_replications;
        c.with_lp = self.with_lp;
        Ok(c)
    }
}
