use std::fs;
use std::path::{Path, PathBuf};
use std::time::{SystemTime, UNIX_EPOCH};

use crate::config::ExperimentConfig;
use crate::error::{CliError, CliResult};

pub const REPORT_JSON: &str = "report.json";
pub const TRAJECTORY_CSV: &str = "trajectory.csv";
pub const SWEEP_CSV: &str = "sweep.csv";
pub const GAPS_CSV: &str = "gaps.csv";

/// The one `#` line that precedes every CSV: config hash and wall-clock time.
/// It is the only part of an artifact that differs between identical runs.
pub fn csv_header(cfg: &ExperimentConfig) -> String {
    let secs = SystemTime::now()
        .duration_since(UNIX_EPOCH)
        .map(|d| d.as_secs())
        .unwrap_or(0);
    format!("# config_hash={} timestamp={secs}\n", cfg.hash())
}

pub fn write_artifact(dir: &Path, name: &str, contents: &[u8]) -> CliResult<PathBuf> {
    fs::create_dir_all(dir).map_err(|e| CliError::io(dir, e))?;
    let path = dir.join(name);
    fs::write(&path, contents).map_err(|e| CliError::io(&path, e))?;
    Ok(path)
}

pub fn write_json<T: serde::Serialize>(dir: &Path, name: &str, value: &T) -> CliResult<PathBuf> {
    let mut text = serde_json::to_string_pretty(value).expect("report serializes");
    text.push('\n');
    write_artifact(dir, name, text.as_bytes())
}
