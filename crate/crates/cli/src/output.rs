use std::path::Path;

use serde::Serialize;
use sha2::{Digest, Sha256};

use crate::config::CliConfig;
use crate::CliError;

/// SHA-256 of the compact JSON of the result-relevant config fields.
pub fn config_hash(cfg: &CliConfig) -> String {
    let json = serde_json::to_string(&cfg.provenance()).expect("config serialises");
    hex::encode(Sha256::digest(json.as_bytes()))
}

/// The JSON summary written by every command.
#[derive(Debug, Serialize)]
pub struct Summary<T: Serialize> {
    pub command: String,
    pub config: CliConfig,
    pub config_hash: String,
    pub accepted: bool,
    pub summary: String,
    pub results: T,
}

impl<T: Serialize> Summary<T> {
    pub fn new(cfg: &CliConfig, accepted: bool, summary: String, results: T) -> Self {
        Summary {
            command: cfg.command.name().to_string(),
            config: cfg.provenance(),
            config_hash: config_hash(cfg),
            accepted,
            summary,
            results,
        }
    }
}

fn write(path: &Path, contents: &str) -> Result<(), CliError> {
    std::fs::write(path, contents).map_err(|source| CliError::Io { path: path.to_path_buf(), source })
}

/// Writes `<command>.json` and the given CSV files into the output
/// directory, if one was requested.
pub fn emit<T: Serialize>(cfg: &CliConfig, summary: &Summary<T>, csvs: &[(&str, String)]) -> Result<(), CliError> {
    let Some(dir) = &cfg.out else {
        return Ok(());
    };
    std::fs::create_dir_all(dir).map_err(|source| CliError::Io { path: dir.clone(), source })?;
    let mut json = serde_json::to_string_pretty(summary)
        .map_err(|e| CliError::Numeric(format!("cannot serialise summary: {e}")))?;
    json.push('\n');
    write(&dir.join(format!("{}.json", cfg.command.name())), &json)?;
    for (name, body) in csvs {
        write(&dir.join(name), body)?;
    }
    Ok(())
}

/// CSV with a header line and LF line endings.
pub fn csv(header: &str, rows: impl IntoIterator<Item = String>) -> String {
    let mut s = String::from(header);
    s.push('\n');
    for r in rows {
        s.push_str(&r);
        s.push('\n');
    }
    s
}

/// Shortest round-trip rendering; empty for missing values.
pub fn num(v: Option<f64>) -> String {
    v.map(|v| format!("{v}")).unwrap_or_default()
}
