//! The four subcommands. Each writes its artifacts, prints a short table to
//! `out`, and returns a report whose `passed` flag decides the exit code.

use std::io::Write;
use std::sync::atomic::{AtomicUsize, Ordering};
use std::sync::Mutex;
use std::thread;

use adiabat::bounds::BoundReport;
use adiabat::matcore::eig_hermitian;
use adiabat::propagator::least_squares_slope;
use adiabat::schedule::{presets, uniform_grid};
use adiabat::{Error, ScheduleKindTag};
use serde::Serialize;

use crate::checks::{self, CheckResult};
use crate::config::{ExperimentConfig, ScheduleKind};
use crate::error::{CliError, CliResult};
use crate::experiment::{Advisory, Experiment, NormSummary, Theorem};
use crate::output::{self, csv_header, write_artifact, write_json};

/// Errors at or below this are rounding noise, whatever `T` is.
pub const ERROR_FLOOR: f64 = 1e-9;
/// Allowed difference between scanned and closed-form gaps.
pub const GAP_COLUMN_TOL: f64 = 1e-9;

fn io_err(e: std::io::Error) -> CliError {
    CliError::io("<stdout>", e)
}

#[derive(Debug, Clone, Serialize)]
pub struct PrepareReport {
    pub schema: u32,
    pub command: &'static str,
    pub config_hash: String,
    pub config: ExperimentConfig,
    pub theorem: Theorem,
    pub bounds: BoundReport<f64>,
    pub norms: NormSummary,
    pub min_gap: f64,
    pub min_gap_s: f64,
    pub gamma_constant: bool,
    pub total_time: f64,
    pub steps: usize,
    pub error: f64,
    pub passed: bool,
    pub advisories: Vec<Advisory>,
}

/// Runs at `T = max(bound, t_override)` and compares the error with ε.
pub fn prepare(cfg: &ExperimentConfig, out: &mut dyn Write) -> CliResult<PrepareReport> {
    let exp = Experiment::new(cfg)?;
    let total_time = exp.bound_time().max(cfg.t_override.unwrap_or(0.0));
    let run = exp.propagate(total_time, None)?;

    let mut csv = csv_header(cfg).into_bytes();
    run.write_trajectory_csv(&mut csv)
        .map_err(|e| CliError::io(output::TRAJECTORY_CSV, e))?;
    write_artifact(&cfg.out, output::TRAJECTORY_CSV, &csv)?;

    let (min_gap_s, min_gap) = exp.track.argmin_gap();
    let report = PrepareReport {
        schema: 1,
        command: "prepare",
        config_hash: cfg.hash(),
        config: cfg.clone(),
        theorem: exp.theorem,
        bounds: exp.bounds,
        norms: exp.norms.clone(),
        min_gap,
        min_gap_s,
        gamma_constant: exp.theorem == Theorem::Theorem1,
        total_time,
        steps: run.config.steps,
        error: run.error,
        passed: run.error <= cfg.epsilon,
        advisories: exp.advisories.clone(),
    };
    write_json(&cfg.out, output::REPORT_JSON, &report)?;

    print_advisories(out, &report.advisories)?;
    if report.norms.discrepancy {
        writeln!(out, "warning: closed-form and scanned derivative norms differ by more than 1%")
            .map_err(io_err)?;
    }
    let b = &report.bounds;
    writeln!(
        out,
        "min gap {:.6} at s = {:.4}; ‖H′‖ = {:.6}, ‖H″‖ = {:.6}",
        min_gap, min_gap_s, b.h1_max, b.h2_max
    )
    .map_err(io_err)?;
    writeln!(
        out,
        "T bounds: theorem1 {:.4}  theorem2 {:.4}  relaxed {:.4}  ar2004 {:.4e}",
        b.t_theorem1, b.t_theorem2, b.t_relaxed, b.t_ar2004
    )
    .map_err(io_err)?;
    writeln!(
        out,
        "{:?} applies; T = {:.4}, {} steps; error {:.6e} vs ε = {} → {}",
        report.theorem,
        total_time,
        report.steps,
        report.error,
        cfg.epsilon,
        if report.passed { "ok" } else { "FAIL" }
    )
    .map_err(io_err)?;
    Ok(report)
}

#[derive(Debug, Clone, Serialize)]
pub struct SweepRow {
    pub total_time: f64,
    pub steps: usize,
    pub error: f64,
    pub error_times_t: f64,
    pub within_bound: bool,
}

#[derive(Debug, Clone, Serialize)]
pub struct SweepReport {
    pub c_h: f64,
    pub theorem: Theorem,
    pub rows: Vec<SweepRow>,
    /// Log-log slope of the running-max error envelope, when there is
    /// something above rounding noise to fit.
    pub envelope_slope: Option<f64>,
    pub passed: bool,
}

/// Propagates once per `T` on worker threads and checks `error·T ≤ C_H`.
pub fn sweep(cfg: &ExperimentConfig, out: &mut dyn Write) -> CliResult<SweepReport> {
    if cfg.times.is_empty() {
        return Err(Error::ConfigInvalid("sweep needs at least one time".into()).into());
    }
    let exp = Experiment::new(cfg)?;
    let c_h = exp.error_constant();

    let mut times = cfg.times.clone();
    times.sort_by(|a, b| a.total_cmp(b));
    let threads = cfg
        .threads
        .unwrap_or_else(|| thread::available_parallelism().map_or(1, |n| n.get()))
        .min(times.len());

    let next = AtomicUsize::new(0);
    let results: Mutex<Vec<Option<CliResult<SweepRow>>>> =
        Mutex::new((0..times.len()).map(|_| None).collect());
    thread::scope(|scope| {
        for _ in 0..threads {
            scope.spawn(|| loop {
                let i = next.fetch_add(1, Ordering::Relaxed);
                let Some(&t) = times.get(i) else { break };
                let row = exp.propagate(t, Some(usize::MAX)).map(|run| SweepRow {
                    total_time: t,
                    steps: run.config.steps,
                    error: run.error,
                    error_times_t: run.error * t,
                    within_bound: run.error * t <= c_h || run.error <= ERROR_FLOOR,
                });
                results.lock().unwrap()[i] = Some(row);
            });
        }
    });
    let rows = results
        .into_inner()
        .unwrap()
        .into_iter()
        .map(|r| r.expect("every index claimed"))
        .collect::<CliResult<Vec<_>>>()?;

    let envelope_slope = envelope_slope(&rows);
    let report = SweepReport {
        c_h,
        theorem: exp.theorem,
        passed: rows.iter().all(|r| r.within_bound),
        rows,
        envelope_slope,
    };

    let mut csv = csv_header(cfg);
    csv.push_str("T,steps,error,error_times_T,c_h,within_bound\n");
    for r in &report.rows {
        csv.push_str(&format!(
            "{},{},{},{},{},{}\n",
            r.total_time, r.steps, r.error, r.error_times_t, c_h, r.within_bound
        ));
    }
    write_artifact(&cfg.out, output::SWEEP_CSV, csv.as_bytes())?;

    print_advisories(out, &exp.advisories)?;
    writeln!(out, "{:>10} {:>10} {:>14} {:>12}  C_H = {:.4}", "T", "steps", "error", "error·T", c_h)
        .map_err(io_err)?;
    for r in &report.rows {
        writeln!(
            out,
            "{:>10} {:>10} {:>14.6e} {:>12.6} {}",
            r.total_time,
            r.steps,
            r.error,
            r.error_times_t,
            if r.within_bound { "ok" } else { "FAIL" }
        )
        .map_err(io_err)?;
    }
    match report.envelope_slope {
        Some(slope) => writeln!(out, "envelope slope {slope:.4}"),
        None => writeln!(out, "envelope slope n/a (errors at rounding level)"),
    }
    .map_err(io_err)?;
    Ok(report)
}

/// Least-squares slope of `log max_{T′ ≥ T} error(T′)` against `log T`.
pub fn envelope_slope(rows: &[SweepRow]) -> Option<f64> {
    if rows.len() < 2 {
        return None;
    }
    let mut env = vec![0.0; rows.len()];
    let mut running = 0.0f64;
    for (i, r) in rows.iter().enumerate().rev() {
        running = running.max(r.error);
        env[i] = running;
    }
    if env.iter().any(|&e| e <= ERROR_FLOOR) {
        return None;
    }
    let xs: Vec<f64> = rows.iter().map(|r| r.total_time.ln()).collect();
    let ys: Vec<f64> = env.iter().map(|e| e.ln()).collect();
    Some(least_squares_slope(&xs, &ys))
}

#[derive(Debug, Clone, Serialize)]
pub struct VerifyReport {
    pub schema: u32,
    pub command: &'static str,
    pub config_hash: String,
    pub config: ExperimentConfig,
    pub checks: Vec<CheckResult>,
    pub advisories: Vec<Advisory>,
    pub passed: bool,
}

pub fn verify(cfg: &ExperimentConfig, out: &mut dyn Write) -> CliResult<VerifyReport> {
    let exp = Experiment::new(cfg)?;
    let results = checks::run_suite(&exp)?;
    let report = VerifyReport {
        schema: 1,
        command: "verify",
        config_hash: cfg.hash(),
        config: cfg.clone(),
        passed: checks::all_passed(&results),
        checks: results,
        advisories: exp.advisories.clone(),
    };
    write_json(&cfg.out, output::REPORT_JSON, &report)?;

    print_advisories(out, &report.advisories)?;
    writeln!(out, "{:<24} {:>14} {:>14} {:>14}  result", "check", "value", "limit", "margin")
        .map_err(io_err)?;
    for c in &report.checks {
        writeln!(
            out,
            "{:<24} {:>14.6e} {:>14.6e} {:>14.6e}  {}",
            c.name,
            c.value,
            c.limit,
            c.margin,
            if c.passed { "pass" } else { "FAIL" }
        )
        .map_err(io_err)?;
    }
    Ok(report)
}

#[derive(Debug, Clone, Serialize)]
pub struct GapScanReport {
    pub min_gap: f64,
    pub min_gap_s: f64,
    /// Largest `|gap − closed-form gap|`, for the linear preset only.
    pub closed_form_max_diff: Option<f64>,
    pub passed: bool,
}

/// Eigenvalue flow by index on the grid; no tracking, so zero gaps are data.
pub fn gap_scan(cfg: &ExperimentConfig, out: &mut dyn Write) -> CliResult<GapScanReport> {
    let sched = cfg.build_schedule()?;
    let dim = sched.dim();
    if cfg.branch >= dim {
        return Err(Error::ConfigInvalid(format!(
            "branch {} out of range for dimension {dim}",
            cfg.branch
        ))
        .into());
    }
    let closed = (cfg.kind == ScheduleKind::Linear && sched.kind() == ScheduleKindTag::LinearInterpolation)
        .then(|| cfg.theta.expect("validated"));

    let mut csv = csv_header(cfg);
    let mut cols = vec!["s".to_string()];
    cols.extend((0..dim).map(|i| format!("lambda{i}")));
    cols.push("gap".into());
    if closed.is_some() {
        cols.push("gap_closed_form".into());
    }
    csv.push_str(&cols.join(","));
    csv.push('\n');

    let mut min = (0.0, f64::INFINITY);
    let mut max_diff = 0.0f64;
    for s in uniform_grid::<f64>(cfg.grid_size)? {
        let eig = eig_hermitian(&sched.eval(s)?)?;
        let ev = &eig.eigenvalues;
        let gap = ev
            .iter()
            .enumerate()
            .filter(|&(j, _)| j != cfg.branch)
            .map(|(_, e)| (e - ev[cfg.branch]).abs())
            .fold(f64::INFINITY, f64::min);
        if gap < min.1 {
            min = (s, gap);
        }
        csv.push_str(&s.to_string());
        for e in ev {
            csv.push_str(&format!(",{e}"));
        }
        csv.push_str(&format!(",{gap}"));
        if let Some(theta) = closed {
            let g = presets::linear_qubit_gap(theta, s);
            max_diff = max_diff.max((g - gap).abs());
            csv.push_str(&format!(",{g}"));
        }
        csv.push('\n');
    }
    write_artifact(&cfg.out, output::GAPS_CSV, csv.as_bytes())?;

    let report = GapScanReport {
        min_gap: min.1,
        min_gap_s: min.0,
        closed_form_max_diff: closed.map(|_| max_diff),
        passed: closed.is_none() || max_diff <= GAP_COLUMN_TOL,
    };
    writeln!(out, "min gap {:.12} at s = {}", report.min_gap, report.min_gap_s).map_err(io_err)?;
    if let Some(d) = report.closed_form_max_diff {
        writeln!(
            out,
            "max |gap − closed form| = {d:.3e} ({})",
            if report.passed { "ok" } else { "FAIL" }
        )
        .map_err(io_err)?;
    }
    Ok(report)
}

fn print_advisories(out: &mut dyn Write, advisories: &[Advisory]) -> CliResult<()> {
    for a in advisories {
        writeln!(out, "advisory ({}): {}", a.kind, a.message).map_err(io_err)?;
    }
    Ok(())
}
