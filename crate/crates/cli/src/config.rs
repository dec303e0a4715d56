//! Experiment configuration: JSON file, overridden flag by flag.

use std::fs;
use std::path::{Path, PathBuf};

use adiabat::matcore::{bloch_operator, bloch_vector};
use adiabat::{Error, HamiltonianSchedule, Schedule64};
use clap::{Args, ValueEnum};
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::{CliError, CliResult};

pub const DEFAULT_GRID_SIZE: usize = 2001;
pub const MIN_GRID_SIZE: usize = 101;
pub const DEFAULT_SWEEP_TIMES: [f64; 5] = [50.0, 100.0, 200.0, 400.0, 800.0];

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, ValueEnum)]
#[serde(rename_all = "lowercase")]
pub enum ScheduleKind {
    /// Great-circle qubit path with constant gap 2.
    Geodesic,
    /// Straight line `(1−s)σz + s·n·σ`.
    Linear,
    /// Samples read from `--file`.
    Tabulated,
    /// Seeded random linear interpolation of dimension `--dim`.
    Random,
    /// Time-independent `n·σ` (σz at θ = 0).
    Constant,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ExperimentConfig {
    pub kind: ScheduleKind,
    pub theta: Option<f64>,
    pub alpha: f64,
    pub epsilon: f64,
    pub branch: usize,
    pub grid_size: usize,
    /// Steps per unit of total time; defaults to `10·max‖H‖`.
    pub steps_per_unit_time: Option<f64>,
    pub seed: u64,
    pub dim: usize,
    pub file: Option<PathBuf>,
    pub t_override: Option<f64>,
    pub times: Vec<f64>,
    pub threads: Option<usize>,
    pub out: PathBuf,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        Self {
            kind: ScheduleKind::Geodesic,
            theta: None,
            alpha: 0.0,
            epsilon: 0.1,
            branch: 0,
            grid_size: DEFAULT_GRID_SIZE,
            steps_per_unit_time: None,
            seed: 42,
            dim: 4,
            file: None,
            t_override: None,
            times: DEFAULT_SWEEP_TIMES.to_vec(),
            threads: None,
            out: PathBuf::from("."),
        }
    }
}

/// Flags shared by every subcommand. Each one, when given, replaces the
/// corresponding value from `--config`.
#[derive(Debug, Clone, Default, Args)]
pub struct ConfigArgs {
    /// JSON file with any subset of the options below.
    #[arg(long)]
    pub config: Option<PathBuf>,
    #[arg(long, value_enum)]
    pub kind: Option<ScheduleKind>,
    /// Polar angle of the target Bloch vector, radians.
    #[arg(long, allow_hyphen_values = true)]
    pub theta: Option<f64>,
    /// Azimuth of the target Bloch vector, radians.
    #[arg(long, allow_hyphen_values = true)]
    pub alpha: Option<f64>,
    #[arg(long, allow_hyphen_values = true)]
    pub epsilon: Option<f64>,
    /// Index of the tracked eigenvalue in the ascending spectrum of H(0).
    #[arg(long)]
    pub branch: Option<usize>,
    #[arg(long)]
    pub grid_size: Option<usize>,
    #[arg(long, allow_hyphen_values = true)]
    pub steps_per_unit_time: Option<f64>,
    #[arg(long)]
    pub seed: Option<u64>,
    #[arg(long)]
    pub dim: Option<usize>,
    /// Tabulated schedule JSON.
    #[arg(long)]
    pub file: Option<PathBuf>,
    /// Lower limit on the evolution time.
    #[arg(long, allow_hyphen_values = true)]
    pub t_override: Option<f64>,
    /// Output directory.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

impl ConfigArgs {
    pub fn resolve(&self) -> CliResult<ExperimentConfig> {
        let mut cfg = match &self.config {
            Some(path) => load_config_file(path)?,
            None => ExperimentConfig::default(),
        };
        if let Some(v) = self.kind {
            cfg.kind = v;
        }
        if self.theta.is_some() {
            cfg.theta = self.theta;
        }
        if let Some(v) = self.alpha {
            cfg.alpha = v;
        }
        if let Some(v) = self.epsilon {
            cfg.epsilon = v;
        }
        if let Some(v) = self.branch {
            cfg.branch = v;
        }
        if let Some(v) = self.grid_size {
            cfg.grid_size = v;
        }
        if self.steps_per_unit_time.is_some() {
            cfg.steps_per_unit_time = self.steps_per_unit_time;
        }
        if let Some(v) = self.seed {
            cfg.seed = v;
        }
        if let Some(v) = self.dim {
            cfg.dim = v;
        }
        if self.file.is_some() {
            cfg.file = self.file.clone();
        }
        if self.t_override.is_some() {
            cfg.t_override = self.t_override;
        }
        if let Some(v) = &self.out {
            cfg.out = v.clone();
        }
        cfg.validate()?;
        Ok(cfg)
    }
}

fn load_config_file(path: &Path) -> CliResult<ExperimentConfig> {
    let text = fs::read_to_string(path).map_err(|e| CliError::io(path, e))?;
    serde_json::from_str(&text).map_err(|e| CliError::ConfigFile {
        path: path.to_path_buf(),
        message: e.to_string(),
    })
}

fn invalid(msg: String) -> CliError {
    CliError::Core(Error::ConfigInvalid(msg))
}

impl ExperimentConfig {
    pub fn validate(&self) -> CliResult<()> {
        if !(self.epsilon > 0.0 && self.epsilon <= 1.0) {
            return Err(invalid(format!("epsilon must lie in (0, 1], got {}", self.epsilon)));
        }
        if self.grid_size < MIN_GRID_SIZE {
            return Err(invalid(format!(
                "grid size must be at least {MIN_GRID_SIZE}, got {}",
                self.grid_size
            )));
        }
        if let Some(v) = self.steps_per_unit_time {
            if !(v > 0.0 && v.is_finite()) {
                return Err(invalid(format!("steps per unit time must be positive, got {v}")));
            }
        }
        if let Some(t) = self.t_override {
            if !(t >= 0.0 && t.is_finite()) {
                return Err(invalid(format!("t-override must be finite and nonnegative, got {t}")));
            }
        }
        if self.times.iter().any(|t| !(*t > 0.0 && t.is_finite())) {
            return Err(invalid("sweep times must be positive".into()));
        }
        if self.threads == Some(0) {
            return Err(invalid("threads must be positive".into()));
        }
        match self.kind {
            ScheduleKind::Geodesic | ScheduleKind::Linear if self.theta.is_none() => {
                Err(invalid("--theta is required for this schedule kind".into()))
            }
            ScheduleKind::Tabulated if self.file.is_none() => {
                Err(invalid("--file is required for tabulated schedules".into()))
            }
            _ => Ok(()),
        }
    }

    pub fn build_schedule(&self) -> CliResult<Schedule64> {
        let theta = self.theta.unwrap_or(0.0);
        let sched = match self.kind {
            ScheduleKind::Geodesic => HamiltonianSchedule::geodesic(theta, self.alpha)?,
            ScheduleKind::Linear => HamiltonianSchedule::linear_qubit(theta, self.alpha)?,
            ScheduleKind::Random => HamiltonianSchedule::random_linear(self.dim, self.seed)?,
            ScheduleKind::Constant => {
                HamiltonianSchedule::constant(bloch_operator(bloch_vector(theta, self.alpha)))?
            }
            ScheduleKind::Tabulated => {
                let path = self.file.as_ref().expect("validated");
                let text = fs::read_to_string(path).map_err(|e| CliError::io(path, e))?;
                HamiltonianSchedule::from_json(&text)?
            }
        };
        Ok(sched)
    }

    /// First 16 hex digits of the SHA-256 of the canonical JSON form.
    pub fn hash(&self) -> String {
        let canonical = serde_json::to_string(self).expect("config serializes");
        let digest = Sha256::digest(canonical.as_bytes());
        digest.iter().take(8).map(|b| format!("{b:02x}")).collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn flags_override_file() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("c.json");
        fs::write(&path, r#"{"kind": "linear", "theta": 1.0, "epsilon": 0.2}"#).unwrap();
        let args = ConfigArgs {
            config: Some(path),
            epsilon: Some(0.05),
            ..Default::default()
        };
        let cfg = args.resolve().unwrap();
        assert_eq!(cfg.kind, ScheduleKind::Linear);
        assert_eq!(cfg.theta, Some(1.0));
        assert_eq!(cfg.epsilon, 0.05);
        assert_eq!(cfg.grid_size, DEFAULT_GRID_SIZE);
    }

    #[test]
    fn unknown_file_keys_rejected() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("c.json");
        fs::write(&path, r#"{"kind": "geodesic", "tehta": 1.0}"#).unwrap();
        let args = ConfigArgs {
            config: Some(path),
            ..Default::default()
        };
        assert_eq!(args.resolve().unwrap_err().exit_code(), 2);
    }

    #[test]
    fn validation() {
        let base = ExperimentConfig {
            theta: Some(1.0),
            ..Default::default()
        };
        assert!(base.validate().is_ok());
        for bad in [
            ExperimentConfig { epsilon: 0.0, ..base.clone() },
            ExperimentConfig { epsilon: 1.5, ..base.clone() },
            ExperimentConfig { grid_size: 100, ..base.clone() },
            ExperimentConfig { theta: None, ..base.clone() },
            ExperimentConfig { kind: ScheduleKind::Tabulated, ..base.clone() },
            ExperimentConfig { t_override: Some(-1.0), ..base.clone() },
            ExperimentConfig { steps_per_unit_time: Some(0.0), ..base.clone() },
        ] {
            let err = bad.validate().unwrap_err();
            assert_eq!(err.exit_code(), 2, "{bad:?}");
            assert_eq!(err.kind(), "ConfigInvalid");
        }
    }

    #[test]
    fn hash_is_stable_and_sensitive() {
        let a = ExperimentConfig {
            theta: Some(1.0),
            ..Default::default()
        };
        assert_eq!(a.hash(), a.clone().hash());
        assert_eq!(a.hash().len(), 16);
        let b = ExperimentConfig { theta: Some(1.5), ..a.clone() };
        assert_ne!(a.hash(), b.hash());
    }

    #[test]
    fn constant_defaults_to_sigma_z() {
        let cfg = ExperimentConfig {
            kind: ScheduleKind::Constant,
            ..Default::default()
        };
        let h = cfg.build_schedule().unwrap().eval(0.3).unwrap();
        assert!((&h - &adiabat::matcore::pauli_z()).max_abs() < 1e-15);
    }
}
