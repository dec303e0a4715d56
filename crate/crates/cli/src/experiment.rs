//! Shared setup: schedule, tracked branch, γ-shifted copy, derivative norms
//! and the applicable time bound.

use adiabat::bounds::BoundReport;
use adiabat::matcore::eig_hermitian;
use adiabat::propagator::{propagate, PropagationConfig, NORM_SCAN_GRID};
use adiabat::schedule::derivative_norms;
use adiabat::spectral::{shift_schedule, track};
use adiabat::{EigenTrack64, Error, PropagationResult64, Schedule64, ScheduleKindTag};
use serde::Serialize;

use crate::config::ExperimentConfig;
use crate::error::{CliError, CliResult};

/// `γ(s)` counts as constant when it varies by less than this.
pub const GAMMA_CONSTANT_TOL: f64 = 1e-9;
/// Relative disagreement between closed-form and scanned norms worth flagging.
pub const NORM_DISCREPANCY: f64 = 0.01;
/// Tabulated schedules with fewer raw samples get a continuity advisory.
pub const MIN_TABULATED_SAMPLES: usize = 11;
/// Hard ceiling on propagation steps.
pub const MAX_STEPS: usize = 200_000_000;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Theorem {
    /// Constant tracked eigenvalue.
    Theorem1,
    /// General case.
    Theorem2,
}

#[derive(Debug, Clone, Serialize)]
pub struct NormSummary {
    pub closed_form: Option<(f64, f64)>,
    pub scanned: (f64, f64),
    /// Pair fed to the bounds: closed form when available.
    pub used: (f64, f64),
    pub discrepancy: bool,
}

#[derive(Debug, Clone, Serialize)]
pub struct Advisory {
    pub kind: &'static str,
    pub message: String,
}

pub struct Experiment {
    pub config: ExperimentConfig,
    pub schedule: Schedule64,
    pub track: EigenTrack64,
    /// `Ĥ = H − γ𝟙` on the track grid.
    pub shifted: Schedule64,
    pub shifted_track: EigenTrack64,
    pub norms: NormSummary,
    pub theorem: Theorem,
    pub bounds: BoundReport<f64>,
    pub advisories: Vec<Advisory>,
}

impl Experiment {
    pub fn new(config: &ExperimentConfig) -> CliResult<Self> {
        let schedule = config.build_schedule()?;
        let advisories = tabulated_advisories(&schedule, config.branch)?;
        let track = track(&schedule, config.branch, config.grid_size)?;

        let scanned = derivative_norms(&schedule, config.grid_size)?;
        let scanned = (scanned.h1_max, scanned.h2_max);
        let closed_form = schedule.closed_form_norms();
        let used = closed_form.unwrap_or(scanned);
        let discrepancy = closed_form.is_some_and(|(c1, c2)| {
            rel_diff(c1, scanned.0) > NORM_DISCREPANCY || rel_diff(c2, scanned.1) > NORM_DISCREPANCY
        });
        let norms = NormSummary {
            closed_form,
            scanned,
            used,
            discrepancy,
        };

        check_resolved(&track, used.0)?;

        let shifted = shift_schedule(&schedule, &track)?;
        let shifted_track = adiabat::spectral::track(&shifted, config.branch, config.grid_size)?;

        let theorem = if track.gamma_is_constant(GAMMA_CONSTANT_TOL) {
            Theorem::Theorem1
        } else {
            Theorem::Theorem2
        };
        let bounds = BoundReport::new(config.epsilon, track.min_gap, used.0, used.1)?;
        Ok(Self {
            config: config.clone(),
            schedule,
            track,
            shifted,
            shifted_track,
            norms,
            theorem,
            bounds,
            advisories,
        })
    }

    /// Bound from the theorem that applies to this branch.
    pub fn bound_time(&self) -> f64 {
        match self.theorem {
            Theorem::Theorem1 => self.bounds.t_theorem1,
            Theorem::Theorem2 => self.bounds.t_theorem2,
        }
    }

    /// `C_H = ε·T_bound`, the constant in `error ≤ C_H/T`.
    pub fn error_constant(&self) -> f64 {
        self.bound_time() * self.config.epsilon
    }

    /// Step count for total time `t`: `⌈t·steps_per_unit_time⌉`, with the
    /// default rate `10·max‖Ĥ‖` and never below the stability rule's minimum.
    pub fn steps_for(&self, t: f64) -> CliResult<usize> {
        let max_norm = self.shifted.max_norm(NORM_SCAN_GRID)?;
        let steps = match self.config.steps_per_unit_time {
            Some(rate) => ((t * rate).ceil() as usize).max(1),
            None => PropagationConfig::min_steps(t, max_norm),
        };
        if steps > MAX_STEPS {
            return Err(Error::ConfigInvalid(format!(
                "T = {t} needs {steps} steps, above the limit of {MAX_STEPS}"
            ))
            .into());
        }
        Ok(steps)
    }

    /// Propagates under `Ĥ`, so the error excludes the dynamic phase.
    pub fn propagate(&self, t: f64, stride: Option<usize>) -> CliResult<PropagationResult64> {
        let steps = self.steps_for(t)?;
        let mut cfg = PropagationConfig::new(t, steps);
        if let Some(stride) = stride {
            cfg = cfg.with_stride(stride);
        }
        Ok(propagate(&self.shifted, &self.shifted_track, &cfg)?)
    }
}

fn rel_diff(a: f64, b: f64) -> f64 {
    let scale = a.abs().max(b.abs());
    if scale == 0.0 {
        0.0
    } else {
        (a - b).abs() / scale
    }
}

/// An avoided crossing narrower than one grid step cannot be followed
/// adiabatically on the grid; treat it as a collapsed gap.
fn check_resolved(track: &EigenTrack64, h1: f64) -> CliResult<()> {
    let (s, gap) = track.argmin_gap();
    if gap < track.step() * h1 {
        return Err(CliError::Core(Error::GapCollapse { s, gap }));
    }
    Ok(())
}

/// Continuity warnings for coarse tabulated input: too few samples, or a
/// raw-sample eigenvector overlap below the continuation threshold.
fn tabulated_advisories(sched: &Schedule64, branch: usize) -> CliResult<Vec<Advisory>> {
    if sched.kind() != ScheduleKindTag::Tabulated {
        return Ok(Vec::new());
    }
    let samples = sched.samples().expect("tabulated schedule");
    let mut out = Vec::new();
    if samples.len() < MIN_TABULATED_SAMPLES {
        out.push(Advisory {
            kind: "ContinuityLoss",
            message: format!(
                "only {} samples; interpolation may not follow the branch (use at least {MIN_TABULATED_SAMPLES})",
                samples.len()
            ),
        });
    }
    if branch >= sched.dim() {
        return Ok(out);
    }
    let mut prev = None;
    let mut worst = (1.0f64, 0.0f64);
    for (s, h) in &samples {
        let eig = eig_hermitian(h)?;
        let v = eig.eigenvectors[branch].clone();
        if let Some(p) = &prev {
            let o = adiabat::StateVector64::inner(p, &v).norm();
            if o < worst.0 {
                worst = (o, *s);
            }
        }
        prev = Some(v);
    }
    if worst.0 < adiabat::spectral::MIN_OVERLAP {
        out.push(Advisory {
            kind: "ContinuityLoss",
            message: format!(
                "raw-sample eigenvector overlap {:.3} at s = {} is below {}; refine the table",
                worst.0,
                worst.1,
                adiabat::spectral::MIN_OVERLAP
            ),
        });
    }
    Ok(out)
}
