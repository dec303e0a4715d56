//! Closed-form sufficient evolution times.
//!
//! Every bound takes the target accuracy `ε`, the minimum gap `λ` and the
//! derivative norms `h1 = max‖H′‖`, `h2 = max‖H″‖` as plain scalars, so callers
//! may feed either closed forms or grid-scanned values.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::scalar::Real;
use crate::schedule::HamiltonianSchedule;
use crate::spectral::{chain_norm_quantities, EigenTrack};

fn check_inputs<T: Real>(eps: T, lambda: T, h1: T, h2: T) -> Result<()> {
    if !(eps > T::zero() && eps.is_finite()) {
        return Err(Error::DomainError(format!("epsilon must be positive, got {eps}")));
    }
    if !(lambda > T::zero() && lambda.is_finite()) {
        return Err(Error::DomainError(format!("minimum gap must be positive, got {lambda}")));
    }
    if !(h1 >= T::zero() && h2 >= T::zero() && h1.is_finite() && h2.is_finite()) {
        return Err(Error::DomainError(format!(
            "derivative norms must be finite and nonnegative, got {h1}, {h2}"
        )));
    }
    Ok(())
}

/// `(2h1 + h2)/(ελ²) + 4h1²/(ελ³)`
pub fn theorem1_time<T: Real>(eps: T, lambda: T, h1: T, h2: T) -> Result<T> {
    check_inputs(eps, lambda, h1, h2)?;
    let l2 = lambda * lambda;
    Ok((T::lit(2.0) * h1 + h2) / (eps * l2) + T::lit(4.0) * h1 * h1 / (eps * l2 * lambda))
}

/// `(4h1 + 2h2)/(ελ²) + 20h1²/(ελ³)`; holds without a constant eigenvalue.
pub fn theorem2_time<T: Real>(eps: T, lambda: T, h1: T, h2: T) -> Result<T> {
    check_inputs(eps, lambda, h1, h2)?;
    let l2 = lambda * lambda;
    Ok((T::lit(4.0) * h1 + T::lit(2.0) * h2) / (eps * l2)
        + T::lit(20.0) * h1 * h1 / (eps * l2 * lambda))
}

/// Earlier bound `10⁵/(ε²λ³)·max(h1·h2, h1³/λ)`.
pub fn ar2004_time<T: Real>(eps: T, lambda: T, h1: T, h2: T) -> Result<T> {
    check_inputs(eps, lambda, h1, h2)?;
    let m = (h1 * h2).max(h1 * h1 * h1 / lambda);
    Ok(T::lit(1e5) / (eps * eps * lambda * lambda * lambda) * m)
}

/// `60/(ελ²)·max(h1, h2, h1²/λ)`, a simpler upper bound on [`theorem2_time`].
pub fn relaxed_time<T: Real>(eps: T, lambda: T, h1: T, h2: T) -> Result<T> {
    check_inputs(eps, lambda, h1, h2)?;
    let m = h1.max(h2).max(h1 * h1 / lambda);
    Ok(T::lit(60.0) / (eps * lambda * lambda) * m)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BoundReport<T> {
    pub epsilon: T,
    pub lambda_min: T,
    pub h1_max: T,
    pub h2_max: T,
    pub t_theorem1: T,
    pub t_theorem2: T,
    pub t_ar2004: T,
    pub t_relaxed: T,
}

impl<T: Real> BoundReport<T> {
    pub const SCHEMA: u32 = 1;

    pub fn new(epsilon: T, lambda_min: T, h1_max: T, h2_max: T) -> Result<Self> {
        if epsilon > T::one() {
            return Err(Error::DomainError(format!("epsilon must lie in (0, 1], got {epsilon}")));
        }
        Ok(Self {
            epsilon,
            lambda_min,
            h1_max,
            h2_max,
            t_theorem1: theorem1_time(epsilon, lambda_min, h1_max, h2_max)?,
            t_theorem2: theorem2_time(epsilon, lambda_min, h1_max, h2_max)?,
            t_ar2004: ar2004_time(epsilon, lambda_min, h1_max, h2_max)?,
            t_relaxed: relaxed_time(epsilon, lambda_min, h1_max, h2_max)?,
        })
    }

    /// JSON object with every field plus `"schema": 1`.
    pub fn to_json_value(&self) -> serde_json::Value {
        let mut v = serde_json::to_value(self).expect("plain struct serializes");
        v["schema"] = Self::SCHEMA.into();
        v
    }
}

/// One grid point of the per-`s` resolvent bounds.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ProfilePoint<T> {
    pub s: T,
    /// `‖Ĥ′‖/λ²`, bounding `‖Rφ′‖`
    pub rhs1: T,
    /// `2‖Ĥ′‖²/λ³`, bounding `‖R′φ′‖`
    pub rhs2: T,
    /// `‖Ĥ″‖/λ² + 2‖Ĥ′‖²/λ³`, bounding `‖Rφ″‖`
    pub rhs3: T,
}

/// Evaluates the three resolvent bounds at every track grid point using the
/// actual shifted derivative norms there.
pub fn bound_profile<T: Real>(
    sched: &HamiltonianSchedule<T>,
    track: &EigenTrack<T>,
) -> Result<Vec<ProfilePoint<T>>> {
    (0..track.grid_size())
        .map(|k| {
            let c = chain_norm_quantities(sched, track, k)?;
            Ok(ProfilePoint {
                s: c.s,
                rhs1: c.bound_r_phi1,
                rhs2: c.bound_rp_phi1,
                rhs3: c.bound_r_phi2,
            })
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::matcore::pauli_z;
    use crate::schedule::presets;
    use crate::spectral::track;
    use approx::assert_relative_eq;
    use proptest::prelude::*;
    use std::f64::consts::PI;

    #[test]
    fn theorem1_examples() {
        for &theta in &[0.3, 1.0, 2.0, PI] {
            for &eps in &[0.01, 0.1, 0.5] {
                let t = theorem1_time(eps, 2.0, theta, theta * theta).unwrap();
                assert_relative_eq!(t, (2.0 * theta + 3.0 * theta * theta) / (4.0 * eps), max_relative = 1e-12);
            }
        }
        assert_eq!(theorem1_time(0.1, 2.0, 0.0, 0.0).unwrap(), 0.0);
        assert!((theorem1_time(0.01, 2.0, PI, PI * PI).unwrap() - 897.30).abs() < 0.01);
    }

    #[test]
    fn theorem2_examples() {
        for &theta in &[0.2, 1.0, PI / 2.0, 2.5] {
            let eps = 0.05;
            let (lam, h1) = (presets::linear_qubit_min_gap(theta), presets::linear_qubit_h1(theta));
            let tn = (theta / 2.0).tan();
            let closed = (2.0 * tn + 10.0 * tn * tn) / (eps * (theta / 2.0).cos());
            assert_relative_eq!(theorem2_time(eps, lam, h1, 0.0).unwrap(), closed, max_relative = 1e-12);
        }
        assert_eq!(theorem2_time(0.1, 1.0, 0.0, 0.0).unwrap(), 0.0);
        let t = theorem2_time(0.05, 2.0 * (PI / 4.0).cos(), 2.0 * (PI / 4.0).sin(), 0.0).unwrap();
        assert!((t - 339.41).abs() < 0.01, "{t}");
    }

    #[test]
    fn ar2004_and_relaxed_examples() {
        let ar = ar2004_time(0.01, 2.0, 1.0, 1.0).unwrap();
        assert_relative_eq!(ar, 1.25e8, max_relative = 1e-12);
        assert_eq!(ar2004_time(0.01, 2.0, 0.0, 1.0).unwrap(), 0.0);
        assert!(ar / theorem1_time(0.01, 2.0, 1.0, 1.0).unwrap() >= 1e5);
        assert_relative_eq!(relaxed_time(0.1, 2.0, 1.0, 1.0).unwrap(), 150.0, max_relative = 1e-12);
        assert_eq!(relaxed_time(0.1, 2.0, 0.0, 0.0).unwrap(), 0.0);
    }

    #[test]
    fn domain_errors() {
        for f in [theorem1_time::<f64>, theorem2_time, ar2004_time, relaxed_time] {
            assert!(matches!(f(0.0, 1.0, 1.0, 1.0), Err(Error::DomainError(_))));
            assert!(matches!(f(0.1, 0.0, 1.0, 1.0), Err(Error::DomainError(_))));
            assert!(matches!(f(0.1, -1.0, 1.0, 1.0), Err(Error::DomainError(_))));
            assert!(matches!(f(0.1, 1.0, -1.0, 1.0), Err(Error::DomainError(_))));
        }
        assert!(BoundReport::new(1.5, 1.0, 1.0, 1.0).is_err());
    }

    #[test]
    fn report_json_has_schema_and_fields() {
        let r = BoundReport::new(0.1, 2.0, 1.0, 1.0).unwrap();
        assert!(r.t_theorem1 <= r.t_theorem2);
        let v = r.to_json_value();
        assert_eq!(v["schema"], 1);
        for key in ["epsilon", "lambda_min", "h1_max", "h2_max", "t_theorem1", "t_theorem2", "t_ar2004", "t_relaxed"] {
            assert!(v[key].is_number(), "{key}");
        }
    }

    #[test]
    fn profile_constant_is_zero() {
        let c = HamiltonianSchedule::constant(pauli_z::<f64>()).unwrap();
        let t = track(&c, 0, 101).unwrap();
        for p in bound_profile(&c, &t).unwrap() {
            assert_eq!((p.rhs1, p.rhs2, p.rhs3), (0.0, 0.0, 0.0));
        }
    }

    #[test]
    fn profile_geodesic() {
        // ‖Ĥ′‖ = θ = 1, λ = 2 everywhere.
        let g = HamiltonianSchedule::<f64>::geodesic(1.0, 0.0).unwrap();
        let t = track(&g, 0, 201).unwrap();
        for p in bound_profile(&g, &t).unwrap() {
            assert!((p.rhs1 - 0.25).abs() < 1e-9, "{p:?}");
            assert!((p.rhs2 - 0.25).abs() < 1e-9, "{p:?}");
            assert!((p.rhs3 - 0.5).abs() < 1e-6, "{p:?}");
        }
    }

    #[test]
    fn profile_linear_midpoint() {
        let theta = PI / 2.0;
        let l = HamiltonianSchedule::<f64>::linear_qubit(theta, 0.0).unwrap();
        let t = track(&l, 0, 201).unwrap();
        let prof = bound_profile(&l, &t).unwrap();
        let mid = &prof[100];
        assert!((mid.s - 0.5).abs() < 1e-15);
        let c = chain_norm_quantities(&l, &t, 100).unwrap();
        assert!((c.gap - 2f64.sqrt()).abs() < 1e-12);
        assert_relative_eq!(mid.rhs1, c.h1 / 2.0, max_relative = 1e-12);
        // At the symmetric point γ′ = 0, so ‖Ĥ′‖ = ‖H′‖ = 2 sin(θ/2).
        assert_relative_eq!(c.h1, presets::linear_qubit_h1(theta), max_relative = 1e-6);
    }

    fn inputs() -> impl Strategy<Value = (f64, f64, f64, f64)> {
        (1e-3..1.0f64, 1e-2..10.0f64, 0.0..10.0f64, 0.0..10.0f64)
    }

    proptest! {
        #[test]
        fn monotone((eps, lam, h1, h2) in inputs(), bump in 1.0..2.0f64) {
            for f in [theorem1_time::<f64>, theorem2_time, ar2004_time, relaxed_time] {
                let base = f(eps, lam, h1, h2).unwrap();
                let slack = 1e-12 * base.max(1.0);
                prop_assert!(f(eps * bump, lam, h1, h2).unwrap() <= base + slack);
                prop_assert!(f(eps, lam * bump, h1, h2).unwrap() <= base + slack);
                prop_assert!(f(eps, lam, h1 * bump, h2).unwrap() >= base - slack);
                prop_assert!(f(eps, lam, h1, h2 * bump).unwrap() >= base - slack);
            }
        }

        #[test]
        fn relaxed_dominates_theorem2((eps, lam, h1, h2) in inputs()) {
            let t2 = theorem2_time(eps, lam, h1, h2).unwrap();
            let r = relaxed_time(eps, lam, h1, h2).unwrap();
            prop_assert!(r >= t2 - 1e-9 * t2.max(1.0));
            prop_assert!(theorem1_time(eps, lam, h1, h2).unwrap() <= t2);
        }
    }
}
