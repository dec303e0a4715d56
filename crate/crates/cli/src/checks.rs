//! Inequality and identity suite run by `verify`.
//!
//! Every check reports the worst value found, the limit it is held to, and a
//! margin that is nonnegative exactly when the check passes.

use adiabat::matcore::operator_norm;
use adiabat::propagator::{
    check_integral_representation, check_phase_lemma, convergence_order, ConvergenceOrder,
    PropagationConfig, NORM_SCAN_GRID,
};
use adiabat::spectral::{
    chain_norm_quantities, gamma_d1, gamma_d2, hellmann_feynman, phi_derivatives, ChainNorms,
};
use adiabat::{EigenTrack64, Schedule64};
use serde::Serialize;

use crate::error::CliResult;
use crate::experiment::Experiment;

/// Slack allowed on the resolvent chain inequalities.
pub const CHAIN_SLACK: f64 = 1e-4;
pub const HF_TOL: f64 = 1e-5;
pub const GAUGE_TOL: f64 = 1e-6;
pub const RESOLVENT_TOL: f64 = 1e-9;
pub const RESOLVENT_PHI_TOL: f64 = 1e-10;
pub const SHIFTED_ZERO_TOL: f64 = 1e-9;
pub const GAMMA1_SLACK: f64 = 1e-6;
pub const GAMMA2_SLACK: f64 = 1e-4;
/// Evolution time for the propagation-based checks unless overridden.
pub const DEFAULT_CHECK_TIME: f64 = 20.0;
pub const INTEGRAL_MIN_STEPS: usize = 20_000;
pub const ORDER_RANGE: (f64, f64) = (-2.3, -1.7);

#[derive(Debug, Clone, Serialize)]
pub struct CheckResult {
    pub name: &'static str,
    pub value: f64,
    pub limit: f64,
    pub margin: f64,
    pub passed: bool,
}

impl CheckResult {
    /// `value ≤ limit`
    fn at_most(name: &'static str, value: f64, limit: f64) -> Self {
        let margin = limit - value;
        Self {
            name,
            value,
            limit,
            margin,
            passed: margin >= 0.0,
        }
    }

    /// Smallest `bound − value` over the grid, which may dip to `−slack`.
    fn margin_at_least(name: &'static str, worst_margin: f64, slack: f64) -> Self {
        Self {
            name,
            value: worst_margin,
            limit: -slack,
            margin: worst_margin + slack,
            passed: worst_margin + slack >= 0.0,
        }
    }
}

pub fn all_passed(checks: &[CheckResult]) -> bool {
    checks.iter().all(|c| c.passed)
}

pub fn run_suite(exp: &Experiment) -> CliResult<Vec<CheckResult>> {
    let sched = &exp.schedule;
    let track = &exp.track;
    let mut out = frame_checks(sched, track)?;
    out.extend(chain_checks(sched, track)?);
    out.extend(derivative_checks(sched, track)?);
    out.extend(propagation_checks(exp)?);
    Ok(out)
}

/// Eigen-equation residual, resolvent identities and the discrete gauge.
pub fn frame_checks(sched: &Schedule64, track: &EigenTrack64) -> CliResult<Vec<CheckResult>> {
    let mut eig_margin = f64::INFINITY;
    let mut eig_worst = 0.0f64;
    let mut inverse = 0.0f64;
    let mut annihilate = 0.0f64;
    let mut gauge = 0.0f64;
    for (k, f) in track.frames.iter().enumerate() {
        let h = sched.eval(f.s)?;
        let r = (&h.apply(&f.phi) - &f.phi.scale_real(f.gamma)).norm();
        let tol = 1e-9 * f.spectral_radius().max(1.0);
        if tol - r < eig_margin {
            eig_margin = tol - r;
            eig_worst = r;
        }
        let shifted = h.shift_diagonal(-f.gamma);
        let defect = &f.resolvent.matmul(&shifted) - &f.complement();
        inverse = inverse.max(operator_norm(&defect)?);
        annihilate = annihilate.max(f.resolvent.apply(&f.phi).norm());
        let (phi1, _) = phi_derivatives(track, k)?;
        gauge = gauge.max(phi1.inner(&f.phi).norm());
    }
    Ok(vec![
        CheckResult {
            name: "eigen_residual",
            value: eig_worst,
            limit: eig_worst + eig_margin,
            margin: eig_margin,
            passed: eig_margin >= 0.0,
        },
        CheckResult::at_most("resolvent_inverse", inverse, RESOLVENT_TOL),
        CheckResult::at_most("resolvent_kills_phi", annihilate, RESOLVENT_PHI_TOL),
        CheckResult::at_most("gauge_orthogonality", gauge, GAUGE_TOL),
    ])
}

/// The `‖φ′‖` bound and the three resolvent chain inequalities, with the
/// γ-shift applied internally, at every grid point.
pub fn chain_checks(sched: &Schedule64, track: &EigenTrack64) -> CliResult<Vec<CheckResult>> {
    let norms = (0..track.grid_size())
        .map(|k| chain_norm_quantities(sched, track, k))
        .collect::<adiabat::Result<Vec<ChainNorms<f64>>>>()?;
    let names = ["phi1_bound", "r_phi1_bound", "rp_phi1_bound", "r_phi2_bound"];
    Ok(names
        .iter()
        .enumerate()
        .map(|(i, name)| {
            let worst = norms
                .iter()
                .map(|c| c.margins()[i])
                .fold(f64::INFINITY, f64::min);
            CheckResult::margin_at_least(name, worst, CHAIN_SLACK)
        })
        .collect())
}

/// Hellmann–Feynman agreement and the `|γ′|`, `|γ″|` bounds at interior points.
pub fn derivative_checks(sched: &Schedule64, track: &EigenTrack64) -> CliResult<Vec<CheckResult>> {
    let mut hf = 0.0f64;
    let mut g1 = f64::INFINITY;
    let mut g2 = f64::INFINITY;
    for k in 1..track.grid_size() - 1 {
        let f = &track.frames[k];
        let (fd, exact) = hellmann_feynman(sched, track, k)?;
        hf = hf.max((fd - exact).abs());
        let n1 = operator_norm(&sched.eval_d1(f.s)?)?;
        let n2 = operator_norm(&sched.eval_d2(f.s)?)?;
        g1 = g1.min(n1 - gamma_d1(track, k)?.abs());
        g2 = g2.min(n2 + 4.0 * n1 * n1 / f.gap - gamma_d2(track, k)?.abs());
    }
    Ok(vec![
        CheckResult::at_most("hellmann_feynman", hf, HF_TOL),
        CheckResult::margin_at_least("gamma1_bound", g1, GAMMA1_SLACK),
        CheckResult::margin_at_least("gamma2_bound", g2, GAMMA2_SLACK),
    ])
}

/// Shifted branch at zero, integral representation, phase lemma and the
/// stepper's convergence order.
pub fn propagation_checks(exp: &Experiment) -> CliResult<Vec<CheckResult>> {
    let t = exp.config.t_override.unwrap_or(DEFAULT_CHECK_TIME);
    let zero = exp
        .shifted_track
        .frames
        .iter()
        .map(|f| f.gamma.abs())
        .fold(0.0, f64::max);

    let shifted_norm = exp.shifted.max_norm(NORM_SCAN_GRID)?;
    let intervals = exp.shifted_track.grid_size() - 1;
    let needed = PropagationConfig::min_steps(t, shifted_norm).max(INTEGRAL_MIN_STEPS);
    let steps = needed.div_ceil(intervals) * intervals;
    let integral = check_integral_representation(
        &exp.shifted,
        &exp.shifted_track,
        &PropagationConfig::new(t, steps),
    )?;

    let raw_norm = exp.schedule.max_norm(NORM_SCAN_GRID)?;
    let lemma_cfg = PropagationConfig::at_stability_limit(t, raw_norm.max(shifted_norm));
    let lemma = check_phase_lemma(&exp.schedule, &exp.track, &lemma_cfg)?;

    let base = PropagationConfig::min_steps(t, raw_norm).max(1000);
    let order = convergence_order(&exp.schedule, &exp.track, t, &[base, 2 * base, 4 * base])?;
    let order_check = match order {
        ConvergenceOrder::Fitted { slope, .. } => {
            let (lo, hi) = ORDER_RANGE;
            CheckResult {
                name: "convergence_order",
                value: slope,
                limit: hi,
                margin: (slope - lo).min(hi - slope),
                passed: (lo..=hi).contains(&slope),
            }
        }
        // Exact stepping (e.g. commuting H(s)) leaves nothing to fit.
        ConvergenceOrder::NotApplicable => CheckResult {
            name: "convergence_order",
            value: f64::NAN,
            limit: ORDER_RANGE.1,
            margin: 0.0,
            passed: true,
        },
    };

    Ok(vec![
        CheckResult::at_most("shifted_branch_zero", zero, SHIFTED_ZERO_TOL),
        CheckResult::at_most("integral_representation", integral.residual, integral.tolerance),
        CheckResult::at_most(
            "phase_lemma_fidelity",
            lemma.fidelity_defect,
            adiabat::propagator::PHASE_LEMMA_FIDELITY_TOL,
        ),
        CheckResult::at_most(
            "phase_lemma_phase",
            lemma.phase_defect,
            adiabat::propagator::PHASE_LEMMA_PHASE_TOL,
        ),
        order_check,
    ])
}

