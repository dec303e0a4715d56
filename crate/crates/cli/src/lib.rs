//! Command-line experiments: bound-driven state preparation, `1/T` sweeps,
//! the inequality suite and gap scans. Artifacts land in `--out`.

pub mod checks;
pub mod commands;
pub mod config;
pub mod error;
pub mod experiment;
pub mod output;

use std::io::{self, Write};

use clap::{Args, Parser, Subcommand};

pub use config::{ConfigArgs, ExperimentConfig, ScheduleKind};
pub use error::{CliError, CliResult};
use error::{EXIT_CHECK_FAILED, EXIT_OK};

#[derive(Debug, Parser)]
#[command(name = "adiabat", version, about = "Adiabatic evolution experiments")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Propagate at the applicable bound time and compare the error with ε.
    Prepare(ConfigArgs),
    /// Error against total time; writes sweep.csv.
    Sweep(SweepArgs),
    /// Run the inequality and identity suite.
    Verify(ConfigArgs),
    /// Eigenvalue flow and gap; writes gaps.csv.
    GapScan(ConfigArgs),
}

#[derive(Debug, Clone, Args)]
pub struct SweepArgs {
    #[command(flatten)]
    pub common: ConfigArgs,
    /// Comma-separated total times.
    #[arg(long, value_delimiter = ',')]
    pub times: Option<Vec<f64>>,
    /// Worker threads (default: available parallelism).
    #[arg(long)]
    pub threads: Option<usize>,
}

impl SweepArgs {
    pub fn resolve(&self) -> CliResult<ExperimentConfig> {
        let mut cfg = self.common.resolve()?;
        if let Some(t) = &self.times {
            cfg.times = t.clone();
        }
        if self.threads.is_some() {
            cfg.threads = self.threads;
        }
        cfg.validate()?;
        Ok(cfg)
    }
}

/// Runs one command, printing the table to `out` and any error as one JSON
/// line to `err`. Returns the process exit code.
pub fn run(cli: &Cli, out: &mut dyn Write, err: &mut dyn Write) -> i32 {
    let outcome = match &cli.command {
        Command::Prepare(a) => a.resolve().and_then(|c| commands::prepare(&c, out)).map(|r| r.passed),
        Command::Sweep(a) => a.resolve().and_then(|c| commands::sweep(&c, out)).map(|r| r.passed),
        Command::Verify(a) => a.resolve().and_then(|c| commands::verify(&c, out)).map(|r| r.passed),
        Command::GapScan(a) => a.resolve().and_then(|c| commands::gap_scan(&c, out)).map(|r| r.passed),
    };
    let result = outcome.and_then(|passed| {
        if passed {
            Ok(())
        } else {
            Err(CliError::CheckFailed("one or more checks failed".into()))
        }
    });
    match result {
        Ok(()) => EXIT_OK,
        Err(e) => {
            let _ = writeln!(err, "{}", e.to_json());
            e.exit_code()
        }
    }
}

pub fn main_with_args<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { error::EXIT_VALIDATION } else { EXIT_OK };
            let _ = e.print();
            return code;
        }
    };
    let stdout = io::stdout();
    let stderr = io::stderr();
    let code = run(&cli, &mut stdout.lock(), &mut stderr.lock());
    debug_assert!(code == EXIT_OK || (2..=EXIT_CHECK_FAILED).contains(&code));
    code
}
