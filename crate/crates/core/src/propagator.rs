//! Schrödinger propagation under `H(t/T)` in units with ħ = 1.
//!
//! Each step applies `exp(−i·T·Δs·H(s_k + Δs/2))`, the exponential of the
//! Hamiltonian at the interval midpoint. The scheme is second order in `Δs`
//! and every step is exactly unitary.

use std::io::{self, Write};

use num_complex::Complex;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::matcore::{exp_i_hermitian, ComplexMatrix, MatrixRecord, StateVector};
use crate::scalar::Real;
use crate::schedule::HamiltonianSchedule;
use crate::spectral::{phi_derivatives, shift_schedule, EigenTrack};

/// Minimum number of steps per unit of `T·max‖H‖`.
pub const STEPS_PER_PHASE: f64 = 10.0;
/// Smallest admissible step count.
pub const MIN_STEPS: usize = 10;
/// Grid used to estimate `max_s ‖H(s)‖` for the stability rule.
pub const NORM_SCAN_GRID: usize = 1001;

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct PropagationConfig<T> {
    /// Total evolution time `T`.
    pub total_time: T,
    pub steps: usize,
    /// Keep every `sample_stride`-th state (and unitary) of the trajectory.
    pub sample_stride: usize,
    pub store_unitaries: bool,
}

impl<T: Real> PropagationConfig<T> {
    pub fn new(total_time: T, steps: usize) -> Self {
        Self {
            total_time,
            steps,
            sample_stride: (steps / 1000).max(1),
            store_unitaries: false,
        }
    }

    /// Smallest step count allowed by the stability rule
    /// `steps ≥ 10·T·max‖H‖` (and at least ten).
    pub fn min_steps(total_time: T, max_norm: T) -> usize {
        // Relative slack keeps rounding noise in `max_norm` from adding a step.
        let raw = T::lit(STEPS_PER_PHASE) * total_time * max_norm;
        let needed = (raw * (T::one() - T::tol(1e-12))).ceil();
        needed.to_usize().unwrap_or(usize::MAX).max(MIN_STEPS)
    }

    /// Config at the stability-rule step count.
    pub fn at_stability_limit(total_time: T, max_norm: T) -> Self {
        Self::new(total_time, Self::min_steps(total_time, max_norm))
    }

    pub fn with_stride(mut self, stride: usize) -> Self {
        self.sample_stride = stride;
        self
    }

    pub fn with_unitaries(mut self, store: bool) -> Self {
        self.store_unitaries = store;
        self
    }

    pub fn validate(&self, max_norm: T) -> Result<()> {
        if !(self.total_time >= T::zero() && self.total_time.is_finite()) {
            return Err(Error::ConfigInvalid(format!(
                "total time must be finite and nonnegative, got {}",
                self.total_time
            )));
        }
        if self.sample_stride == 0 {
            return Err(Error::ConfigInvalid("sample stride must be positive".into()));
        }
        let needed = Self::min_steps(self.total_time, max_norm);
        if self.steps < needed {
            return Err(Error::ConfigInvalid(format!(
                "{} steps violate the stability rule (need at least {needed} for T = {}, max‖H‖ = {})",
                self.steps, self.total_time, max_norm
            )));
        }
        Ok(())
    }
}

#[derive(Debug, Clone)]
pub struct PropagationResult<T> {
    /// `ψ(1)`
    pub psi_final: StateVector<T>,
    /// Gauge-fixed target `φ(1)` taken from the track.
    pub phi_final: StateVector<T>,
    /// `‖φ(1) − ψ(1)‖`
    pub error: T,
    pub trajectory: Vec<(T, StateVector<T>)>,
    /// Sampled `U(s, 0)`, when requested.
    pub unitaries: Option<Vec<(T, ComplexMatrix<T>)>>,
    pub config: PropagationConfig<T>,
}

impl<T: Real> PropagationResult<T> {
    /// Writes `s, psi0_re, psi0_im, …` rows.
    pub fn write_trajectory_csv<W: Write>(&self, mut w: W) -> io::Result<()> {
        let dim = self.psi_final.dim();
        let mut header = vec!["s".to_string()];
        for i in 0..dim {
            header.push(format!("psi{i}_re"));
            header.push(format!("psi{i}_im"));
        }
        writeln!(w, "{}", header.join(","))?;
        for (s, psi) in &self.trajectory {
            write!(w, "{s}")?;
            for z in psi.amplitudes() {
                write!(w, ",{},{}", z.re, z.im)?;
            }
            writeln!(w)?;
        }
        Ok(())
    }

    /// Stored unitaries as `{"schema": 1, "dim": n, "unitaries": [{"s", "re", "im"}]}`.
    pub fn unitaries_json(&self) -> Option<String> {
        #[derive(Serialize)]
        struct Entry<T> {
            s: T,
            #[serde(flatten)]
            matrix: MatrixRecord<T>,
        }
        #[derive(Serialize)]
        struct Dump<T> {
            schema: u32,
            dim: usize,
            unitaries: Vec<Entry<T>>,
        }
        let unitaries = self.unitaries.as_ref()?;
        let dump = Dump {
            schema: 1,
            dim: self.psi_final.dim(),
            unitaries: unitaries
                .iter()
                .map(|(s, u)| Entry {
                    s: *s,
                    matrix: MatrixRecord::from(u),
                })
                .collect(),
        };
        serde_json::to_string_pretty(&dump).ok()
    }
}

/// Evolves `φ(0)` from the track under `sched` for total time `T`.
pub fn propagate<T: Real>(
    sched: &HamiltonianSchedule<T>,
    track: &EigenTrack<T>,
    cfg: &PropagationConfig<T>,
) -> Result<PropagationResult<T>> {
    if sched.dim() != track.dim() {
        return Err(Error::DimensionMismatch {
            expected: sched.dim(),
            got: track.dim(),
        });
    }
    cfg.validate(sched.max_norm(NORM_SCAN_GRID)?)?;

    let steps = cfg.steps;
    let n_steps = T::from_usize(steps).unwrap();
    let ds = T::one() / n_steps;
    let half = T::lit(0.5);
    let phase = -cfg.total_time * ds;

    let mut psi = track.frames[0].phi.clone();
    let mut u_acc = ComplexMatrix::identity(sched.dim());
    let mut trajectory = vec![(T::zero(), psi.clone())];
    let mut unitaries = cfg
        .store_unitaries
        .then(|| vec![(T::zero(), u_acc.clone())]);

    for k in 0..steps {
        let s_mid = (T::from_usize(k).unwrap() + half) / n_steps;
        let step = exp_i_hermitian(&sched.eval(s_mid)?, phase)?;
        psi = step.apply(&psi);
        let done = k + 1;
        if let Some(us) = unitaries.as_mut() {
            u_acc = step.matmul(&u_acc);
            if done % cfg.sample_stride == 0 || done == steps {
                us.push((s_at(done, steps), u_acc.clone()));
            }
        }
        if done % cfg.sample_stride == 0 || done == steps {
            trajectory.push((s_at(done, steps), psi.clone()));
        }
    }

    let phi_final = track.frames[track.grid_size() - 1].phi.clone();
    let error = phi_final.distance(&psi);
    Ok(PropagationResult {
        psi_final: psi,
        phi_final,
        error,
        trajectory,
        unitaries,
        config: *cfg,
    })
}

fn s_at<T: Real>(k: usize, steps: usize) -> T {
    if k == steps {
        T::one()
    } else {
        T::from_usize(k).unwrap() / T::from_usize(steps).unwrap()
    }
}

/// Both sides of `φ(1) − ψ(1) = ∫₀¹ U(1,s) φ′(s) ds`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct IntegralCheck<T> {
    pub lhs_norm: T,
    pub rhs_norm: T,
    pub residual: T,
    /// `max(1e-3, 10/steps)`
    pub tolerance: T,
}

impl<T: Real> IntegralCheck<T> {
    pub fn passed(&self) -> bool {
        self.residual <= self.tolerance
    }
}

/// Compares the propagated deviation with the trapezoidal quadrature of
/// `U(1,s)φ′(s)`, where `U(1,s) = U(1,0)·U(s,0)†` comes from the stored
/// forward products. The schedule should have its tracked eigenvalue at zero,
/// and `cfg.steps` must be a multiple of the track's interval count.
pub fn check_integral_representation<T: Real>(
    sched: &HamiltonianSchedule<T>,
    track: &EigenTrack<T>,
    cfg: &PropagationConfig<T>,
) -> Result<IntegralCheck<T>> {
    let intervals = track.grid_size() - 1;
    if !cfg.steps.is_multiple_of(intervals) {
        return Err(Error::ConfigInvalid(format!(
            "steps ({}) must be a multiple of the track's {intervals} grid intervals",
            cfg.steps
        )));
    }
    let run_cfg = cfg.with_stride(cfg.steps / intervals).with_unitaries(true);
    let run = propagate(sched, track, &run_cfg)?;
    let us = run.unitaries.as_ref().expect("unitaries requested");
    debug_assert_eq!(us.len(), track.grid_size());

    let u_end = &us[us.len() - 1].1;
    let h = track.step();
    let half = T::lit(0.5);
    let mut rhs = StateVector::zeros(track.dim());
    for (k, (_, u_s)) in us.iter().enumerate() {
        let (phi1, _) = phi_derivatives(track, k)?;
        let w = if k == 0 || k == intervals { h * half } else { h };
        let u_1s = u_end.matmul(&u_s.adjoint());
        rhs += &u_1s.apply(&phi1).scale_real(w);
    }
    let lhs = &run.phi_final - &run.psi_final;
    let steps = T::from_usize(cfg.steps).unwrap();
    Ok(IntegralCheck {
        lhs_norm: lhs.norm(),
        rhs_norm: rhs.norm(),
        residual: lhs.distance(&rhs),
        tolerance: T::lit(1e-3).max(T::lit(10.0) / steps),
    })
}

/// Overlap between evolutions under `H` and `Ĥ = H − γ𝟙`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct PhaseLemmaCheck<T> {
    /// `|1 − |⟨ψ̂(1)|ψ(1)⟩||`
    pub fidelity_defect: T,
    /// Wrapped `|arg⟨ψ̂(1)|ψ(1)⟩ − g(T)|`
    pub phase_defect: T,
    pub measured_phase: T,
    /// `g(T) = −T·∫₀¹ γ(s) ds`
    pub expected_phase: T,
}

pub const PHASE_LEMMA_FIDELITY_TOL: f64 = 1e-8;
pub const PHASE_LEMMA_PHASE_TOL: f64 = 1e-4;

impl<T: Real> PhaseLemmaCheck<T> {
    pub fn passed(&self) -> bool {
        self.fidelity_defect <= T::lit(PHASE_LEMMA_FIDELITY_TOL)
            && self.phase_defect <= T::lit(PHASE_LEMMA_PHASE_TOL)
    }
}

/// Propagates under `H` and under its γ-shifted counterpart and measures how
/// far the final states are from differing by the phase `e^{−i g(T)}`.
pub fn check_phase_lemma<T: Real>(
    sched: &HamiltonianSchedule<T>,
    track: &EigenTrack<T>,
    cfg: &PropagationConfig<T>,
) -> Result<PhaseLemmaCheck<T>> {
    let shifted = shift_schedule(sched, track)?;
    let plain = propagate(sched, track, cfg)?;
    let hat = propagate(&shifted, track, cfg)?;
    let z = hat.psi_final.inner(&plain.psi_final);
    let expected = -cfg.total_time * track.gamma_integral();
    let measured = z.arg();
    Ok(PhaseLemmaCheck {
        fidelity_defect: (T::one() - z.norm()).abs(),
        phase_defect: wrap_angle(measured - expected).abs(),
        measured_phase: measured,
        expected_phase: expected,
    })
}

/// Maps an angle into `(−π, π]`.
pub fn wrap_angle<T: Real>(x: T) -> T {
    let tau = T::TAU();
    let mut y = x % tau;
    if y > T::PI() {
        y = y - tau;
    } else if y <= -T::PI() {
        y = y + tau;
    }
    y
}

#[derive(Debug, Clone, PartialEq)]
pub enum ConvergenceOrder<T> {
    /// Slope of `log‖ψ_N(1) − ψ_ref(1)‖` against `log N`, with the raw errors.
    Fitted { slope: T, errors: Vec<T> },
    /// All differences sit at rounding level; nothing to fit.
    NotApplicable,
}

impl<T: Real> ConvergenceOrder<T> {
    pub fn slope(&self) -> Option<T> {
        match self {
            ConvergenceOrder::Fitted { slope, .. } => Some(*slope),
            ConvergenceOrder::NotApplicable => None,
        }
    }
}

/// Self-convergence study against a reference run at four times the largest
/// step count.
pub fn convergence_order<T: Real>(
    sched: &HamiltonianSchedule<T>,
    track: &EigenTrack<T>,
    total_time: T,
    steps_list: &[usize],
) -> Result<ConvergenceOrder<T>> {
    if steps_list.len() < 3 {
        return Err(Error::ConfigInvalid("need at least three step counts".into()));
    }
    if steps_list.windows(2).any(|w| w[1] <= w[0]) {
        return Err(Error::ConfigInvalid("step counts must be strictly increasing".into()));
    }
    let max_norm = sched.max_norm(NORM_SCAN_GRID)?;
    for &n in steps_list {
        PropagationConfig::new(total_time, n).validate(max_norm)?;
    }
    let finest = 4 * steps_list[steps_list.len() - 1];
    let reference = propagate(sched, track, &PropagationConfig::new(total_time, finest))?.psi_final;
    let errors = steps_list
        .iter()
        .map(|&n| {
            let run = propagate(sched, track, &PropagationConfig::new(total_time, n))?;
            Ok(run.psi_final.distance(&reference))
        })
        .collect::<Result<Vec<T>>>()?;

    let noise = T::epsilon().sqrt() * T::lit(1e-4);
    if errors.iter().all(|&e| e <= noise) {
        return Ok(ConvergenceOrder::NotApplicable);
    }
    let xs: Vec<T> = steps_list.iter().map(|&n| T::from_usize(n).unwrap().ln()).collect();
    let ys: Vec<T> = errors.iter().map(|e| e.ln()).collect();
    Ok(ConvergenceOrder::Fitted {
        slope: least_squares_slope(&xs, &ys),
        errors,
    })
}

/// Ordinary least-squares slope of `ys` against `xs`.
pub fn least_squares_slope<T: Real>(xs: &[T], ys: &[T]) -> T {
    let n = T::from_usize(xs.len()).unwrap();
    let mx = xs.iter().copied().sum::<T>() / n;
    let my = ys.iter().copied().sum::<T>() / n;
    let sxy: T = xs.iter().zip(ys).map(|(&x, &y)| (x - mx) * (y - my)).sum();
    let sxx: T = xs.iter().map(|&x| (x - mx) * (x - mx)).sum();
    sxy / sxx
}

/// `e^{iθ}` helper for tests and callers comparing phases.
pub fn unit_phase<T: Real>(theta: T) -> Complex<T> {
    Complex::from_polar(T::one(), theta)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::matcore::pauli_z;
    use crate::spectral::track;
    use approx::assert_abs_diff_eq;
    use std::f64::consts::PI;

    type S = HamiltonianSchedule<f64>;

    #[test]
    fn stability_rule() {
        assert_eq!(PropagationConfig::<f64>::min_steps(100.0, 2.0), 2000);
        assert_eq!(PropagationConfig::<f64>::min_steps(0.0, 2.0), 10);
        let cfg = PropagationConfig::new(100.0, 1999);
        assert!(matches!(cfg.validate(2.0), Err(Error::ConfigInvalid(_))));
        assert!(PropagationConfig::new(100.0, 2000).validate(2.0).is_ok());
        assert!(PropagationConfig::new(-1.0, 2000).validate(2.0).is_err());
        assert!(PropagationConfig::new(1.0, 100).with_stride(0).validate(1.0).is_err());
    }

    #[test]
    fn constant_sigma_z_picks_up_dynamic_phase() {
        let c = S::constant(pauli_z()).unwrap();
        // Upper branch is |0⟩ with eigenvalue +1.
        let t = track(&c, 1, 11).unwrap();
        let total = 3.0;
        let run = propagate(&c, &t, &PropagationConfig::new(total, 100)).unwrap();
        let expected = StateVector::basis(2, 0).scale(unit_phase(-total));
        assert!(run.psi_final.distance(&expected) < 1e-12);
        assert_abs_diff_eq!(run.error, (Complex::new(1.0, 0.0) - unit_phase(-total)).norm(), epsilon = 1e-12);

        let shifted = S::constant(pauli_z::<f64>().shift_diagonal(-1.0)).unwrap();
        let t = track(&shifted, 1, 11).unwrap();
        let run = propagate(&shifted, &t, &PropagationConfig::new(total, 100)).unwrap();
        assert!(run.error <= 1e-9);
    }

    #[test]
    fn unitarity_and_composition() {
        let g = S::geodesic(1.0, 0.3).unwrap();
        let t = track(&g, 0, 101).unwrap();
        let cfg = PropagationConfig::new(10.0, 1000).with_stride(100).with_unitaries(true);
        let run = propagate(&g, &t, &cfg).unwrap();
        assert_abs_diff_eq!(run.psi_final.norm(), 1.0, epsilon = 1e-10);
        let us = run.unitaries.as_ref().unwrap();
        assert_eq!(us.len(), 11);
        let u_end = &us[10].1;
        assert!(u_end.unitarity_defect() <= 1e-9);
        for (_, u_s) in us {
            assert!(u_s.unitarity_defect() <= 1e-10);
            let u_1s = u_end.matmul(&u_s.adjoint());
            assert!((&u_1s.matmul(u_s) - u_end).max_abs() <= 1e-9);
        }
        assert_eq!(run.trajectory.len(), 11);
        assert!(run.unitaries_json().unwrap().contains("\"schema\": 1"));
    }

    #[test]
    fn geodesic_pi_at_theorem1_time() {
        let theta = PI;
        let eps = 0.01;
        let total = (2.0 * theta + 3.0 * theta * theta) / (4.0 * eps);
        let g = S::geodesic(theta, 0.0).unwrap();
        let t = track(&g, 0, 2001).unwrap();
        let sh = shift_schedule(&g, &t).unwrap();
        let ts = track(&sh, 0, 2001).unwrap();
        let cfg = PropagationConfig::at_stability_limit(total, sh.max_norm(NORM_SCAN_GRID).unwrap());
        let run = propagate(&sh, &ts, &cfg).unwrap();
        assert!(run.error <= eps, "error {}", run.error);
    }

    #[test]
    fn integral_representation_geodesic() {
        let g = S::geodesic(1.0, 0.0).unwrap();
        let t = track(&g, 0, 2001).unwrap();
        let sh = shift_schedule(&g, &t).unwrap();
        let ts = track(&sh, 0, 2001).unwrap();
        let chk = check_integral_representation(&sh, &ts, &PropagationConfig::new(50.0, 20000)).unwrap();
        assert!(chk.residual <= 1e-3, "{chk:?}");
        assert!(chk.lhs_norm > 1e-3);
        assert!(chk.passed());
        assert!(check_integral_representation(&sh, &ts, &PropagationConfig::new(50.0, 20001)).is_err());
    }

    #[test]
    fn integral_representation_constant() {
        let c = S::constant(pauli_z::<f64>().shift_diagonal(1.0)).unwrap();
        let t = track(&c, 0, 11).unwrap();
        let chk = check_integral_representation(&c, &t, &PropagationConfig::new(5.0, 200)).unwrap();
        assert!(chk.lhs_norm <= 1e-9 && chk.rhs_norm <= 1e-9);
    }

    #[test]
    fn phase_lemma_geodesic() {
        let g = S::geodesic(1.0, 0.0).unwrap();
        let t = track(&g, 0, 2001).unwrap();
        let cfg = PropagationConfig::at_stability_limit(10.0, 2.0);
        let chk = check_phase_lemma(&g, &t, &cfg).unwrap();
        assert_abs_diff_eq!(chk.expected_phase, 10.0, epsilon = 1e-9);
        assert!(chk.passed(), "{chk:?}");
    }

    #[test]
    fn phase_lemma_zero_branch() {
        let c = S::constant(pauli_z::<f64>().shift_diagonal(1.0)).unwrap();
        let t = track(&c, 0, 101).unwrap();
        let chk = check_phase_lemma(&c, &t, &PropagationConfig::new(4.0, 200)).unwrap();
        assert!(chk.fidelity_defect <= 1e-10 && chk.phase_defect <= 1e-10);
    }

    #[test]
    fn phase_lemma_linear() {
        let l = S::linear_qubit(PI / 2.0, 0.0).unwrap();
        let t = track(&l, 0, 2001).unwrap();
        let cfg = PropagationConfig::at_stability_limit(20.0, 2.0);
        let chk = check_phase_lemma(&l, &t, &cfg).unwrap();
        assert!(chk.fidelity_defect <= 1e-8, "{chk:?}");
        assert!(chk.phase_defect <= 1e-4, "{chk:?}");
    }

    #[test]
    fn convergence_is_second_order() {
        let g = S::geodesic(1.0, 0.0).unwrap();
        let t = track(&g, 0, 101).unwrap();
        let order = convergence_order(&g, &t, 20.0, &[1000, 2000, 4000]).unwrap();
        let slope = order.slope().unwrap();
        assert!((-2.3..=-1.7).contains(&slope), "slope {slope}");

        let c = S::constant(pauli_z()).unwrap();
        let t = track(&c, 0, 11).unwrap();
        assert_eq!(
            convergence_order(&c, &t, 20.0, &[1000, 2000, 4000]).unwrap(),
            ConvergenceOrder::NotApplicable
        );
        assert!(convergence_order(&c, &t, 20.0, &[1000, 2000]).is_err());
        assert!(convergence_order(&c, &t, 20.0, &[1000, 1000, 4000]).is_err());
        assert!(convergence_order(&c, &t, 20.0, &[100, 2000, 4000]).is_err());
    }

    #[test]
    fn wrap_angle_range() {
        assert_abs_diff_eq!(wrap_angle(10.0), 10.0 - 4.0 * PI, epsilon = 1e-12);
        assert_abs_diff_eq!(wrap_angle(-3.5), -3.5 + 2.0 * PI, epsilon = 1e-12);
        assert_abs_diff_eq!(wrap_angle(PI), PI, epsilon = 0.0);
    }

    #[test]
    fn trajectory_csv_layout() {
        let g = S::geodesic(0.5, 0.0).unwrap();
        let t = track(&g, 0, 11).unwrap();
        let run = propagate(&g, &t, &PropagationConfig::new(1.0, 20).with_stride(10)).unwrap();
        let mut buf = Vec::new();
        run.write_trajectory_csv(&mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        assert_eq!(text.lines().next().unwrap(), "s,psi0_re,psi0_im,psi1_re,psi1_im");
        assert_eq!(text.lines().count(), 4);
    }
}
