use std::io;
use std::path::PathBuf;

use serde_json::json;
use thiserror::Error;

pub const EXIT_OK: i32 = 0;
pub const EXIT_VALIDATION: i32 = 2;
pub const EXIT_NUMERICAL: i32 = 3;
pub const EXIT_CHECK_FAILED: i32 = 4;

#[derive(Debug, Error)]
pub enum CliError {
    #[error(transparent)]
    Core(#[from] adiabat::Error),
    #[error("{path}: {source}")]
    Io { path: PathBuf, source: io::Error },
    #[error("config file {path}: {message}")]
    ConfigFile { path: PathBuf, message: String },
    #[error("{0}")]
    CheckFailed(String),
}

impl CliError {
    pub fn io(path: impl Into<PathBuf>, source: io::Error) -> Self {
        CliError::Io {
            path: path.into(),
            source,
        }
    }

    pub fn kind(&self) -> &'static str {
        match self {
            CliError::Core(e) => e.kind(),
            CliError::Io { .. } => "Io",
            CliError::ConfigFile { .. } => "ConfigInvalid",
            CliError::CheckFailed(_) => "CheckFailed",
        }
    }

    pub fn exit_code(&self) -> i32 {
        use adiabat::Error as E;
        match self {
            CliError::Core(E::GapCollapse { .. } | E::ContinuityLoss { .. } | E::NumericalFailure(_)) => {
                EXIT_NUMERICAL
            }
            CliError::Core(_) | CliError::Io { .. } | CliError::ConfigFile { .. } => EXIT_VALIDATION,
            CliError::CheckFailed(_) => EXIT_CHECK_FAILED,
        }
    }

    /// Single-line machine-readable description.
    pub fn to_json(&self) -> String {
        json!({
            "schema": 1,
            "error": { "kind": self.kind(), "message": self.to_string() },
            "exit_code": self.exit_code(),
        })
        .to_string()
    }
}

pub type CliResult<T> = std::result::Result<T, CliError>;
