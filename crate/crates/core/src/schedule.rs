//! Hamiltonian paths `s ↦ H(s)` on `s ∈ [0, 1]` and their derivatives.

use num_complex::Complex;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::matcore::{
    bloch_operator, bloch_vector, eig_hermitian, operator_norm, pauli_x, pauli_y, pauli_z,
    ComplexMatrix,
};
use crate::scalar::Real;

/// Finite-difference step for first derivatives of tabulated schedules.
pub const FD_STEP_D1: f64 = 1e-5;
/// Finite-difference step for second derivatives of tabulated schedules.
pub const FD_STEP_D2: f64 = 1e-4;
/// Default number of points in derivative-norm scans.
pub const DEFAULT_NORM_GRID: usize = 1001;

const COVERAGE_TOL: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum ScheduleKindTag {
    LinearInterpolation,
    QubitGeodesic,
    Tabulated,
}

#[derive(Debug, Clone)]
enum Path<T> {
    Linear {
        h0: ComplexMatrix<T>,
        h1: ComplexMatrix<T>,
        delta: ComplexMatrix<T>,
    },
    Geodesic {
        theta: T,
        alpha: T,
    },
    Tabulated(Spline<T>),
}

/// An evaluable Hermitian path with first and second derivatives.
#[derive(Debug, Clone)]
pub struct HamiltonianSchedule<T> {
    dim: usize,
    path: Path<T>,
}

impl<T: Real> HamiltonianSchedule<T> {
    /// `H(s) = (1 − s)·H0 + s·H1`
    pub fn linear(h0: ComplexMatrix<T>, h1: ComplexMatrix<T>) -> Result<Self> {
        if h0.dim() != h1.dim() {
            return Err(Error::DimensionMismatch {
                expected: h0.dim(),
                got: h1.dim(),
            });
        }
        h0.check_hermitian()?;
        h1.check_hermitian()?;
        let delta = &h1 - &h0;
        Ok(Self {
            dim: h0.dim(),
            path: Path::Linear { h0, h1, delta },
        })
    }

    /// `H(s) ≡ h`
    pub fn constant(h: ComplexMatrix<T>) -> Result<Self> {
        Self::linear(h.clone(), h)
    }

    /// Straight line from `σz` to `n⃗(θ, α)·σ⃗`.
    ///
    /// `θ = π` is accepted here; the path then passes through `H(1/2) = 0`
    /// and gap-dependent routines will refuse it.
    pub fn linear_qubit(theta: T, alpha: T) -> Result<Self> {
        check_angles(theta, alpha)?;
        Self::linear(pauli_z(), bloch_operator(bloch_vector(theta, alpha)))
    }

    /// Great-circle path `H(s) = n⃗(sθ, α)·σ⃗` from `σz` to `n⃗(θ, α)·σ⃗`.
    pub fn geodesic(theta: T, alpha: T) -> Result<Self> {
        check_angles(theta, alpha)?;
        Ok(Self {
            dim: 2,
            path: Path::Geodesic { theta, alpha },
        })
    }

    /// Entrywise natural cubic spline through Hermitian samples.
    ///
    /// Sample positions must be strictly increasing and cover `[0, 1]`.
    pub fn tabulated(samples: Vec<(T, ComplexMatrix<T>)>) -> Result<Self> {
        let spline = Spline::new(samples)?;
        Ok(Self {
            dim: spline.dim(),
            path: Path::Tabulated(spline),
        })
    }

    /// Random linear interpolation between two Hermitian endpoints.
    ///
    /// Each endpoint is `V·diag(−1, d₁, …, d_{n−1})·V†` with Haar-like `V`
    /// and `d_k` uniform in `[0, 1]`, so both ends have a ground gap of at
    /// least one and unit operator norm. The interior gap is not controlled.
    pub fn random_linear(dim: usize, seed: u64) -> Result<Self> {
        if dim < 2 {
            return Err(Error::ConfigInvalid("random schedules need dim ≥ 2".into()));
        }
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let h0 = random_endpoint(dim, &mut rng)?;
        let h1 = random_endpoint(dim, &mut rng)?;
        Self::linear(h0, h1)
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let file: TabulatedFile<T> =
            serde_json::from_str(text).map_err(|e| Error::Parse(e.to_string()))?;
        let samples = file
            .samples
            .into_iter()
            .map(|smp| {
                let m = ComplexMatrix::from_parts(&smp.re, &smp.im)?;
                if m.dim() != file.dim {
                    return Err(Error::DimensionMismatch {
                        expected: file.dim,
                        got: m.dim(),
                    });
                }
                Ok((smp.s, m))
            })
            .collect::<Result<Vec<_>>>()?;
        Self::tabulated(samples)
    }

    /// Samples this schedule on a uniform grid into the tabulated JSON layout.
    pub fn to_json(&self, grid_size: usize) -> Result<String> {
        let samples = uniform_grid::<T>(grid_size)?
            .into_iter()
            .map(|s| {
                let h = self.eval(s)?;
                Ok(TabulatedSample {
                    s,
                    re: h.real_part(),
                    im: h.imag_part(),
                })
            })
            .collect::<Result<Vec<_>>>()?;
        serde_json::to_string(&TabulatedFile {
            dim: self.dim,
            samples,
        })
        .map_err(|e| Error::Parse(e.to_string()))
    }

    #[inline]
    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn kind(&self) -> ScheduleKindTag {
        match self.path {
            Path::Linear { .. } => ScheduleKindTag::LinearInterpolation,
            Path::Geodesic { .. } => ScheduleKindTag::QubitGeodesic,
            Path::Tabulated(_) => ScheduleKindTag::Tabulated,
        }
    }

    /// Number of raw samples backing a tabulated schedule.
    pub fn sample_count(&self) -> Option<usize> {
        match &self.path {
            Path::Tabulated(sp) => Some(sp.knots.len()),
            _ => None,
        }
    }

    /// Raw `(s, H)` samples of a tabulated schedule.
    pub fn samples(&self) -> Option<Vec<(T, ComplexMatrix<T>)>> {
        match &self.path {
            Path::Tabulated(sp) => Some(
                sp.knots
                    .iter()
                    .copied()
                    .zip(sp.values.iter().cloned())
                    .collect(),
            ),
            _ => None,
        }
    }

    pub fn eval(&self, s: T) -> Result<ComplexMatrix<T>> {
        check_range(s)?;
        let h = match &self.path {
            Path::Linear { h0, delta, .. } => {
                let mut h = h0.clone();
                h += &delta.scale_real(s);
                h
            }
            Path::Geodesic { theta, alpha } => geodesic_at(*theta, *alpha, s),
            Path::Tabulated(sp) => sp.eval(s),
        };
        h.check_hermitian()?;
        Ok(h)
    }

    /// `H′(s)`: analytic for the presets, central differences (clamped
    /// one-sided at the ends) of the spline for tabulated schedules.
    pub fn eval_d1(&self, s: T) -> Result<ComplexMatrix<T>> {
        check_range(s)?;
        match &self.path {
            Path::Linear { delta, .. } => Ok(delta.clone()),
            Path::Geodesic { theta, alpha } => {
                let (st, ct) = (s * *theta).sin_cos();
                let mut m = transverse(*alpha).scale_real(ct);
                m -= &pauli_z::<T>().scale_real(st);
                Ok(m.scale_real(*theta))
            }
            Path::Tabulated(sp) => Ok(first_difference(|x| sp.eval(x), s, T::lit(FD_STEP_D1))),
        }
    }

    /// `H″(s)`, same conventions as [`Self::eval_d1`].
    pub fn eval_d2(&self, s: T) -> Result<ComplexMatrix<T>> {
        check_range(s)?;
        match &self.path {
            Path::Linear { .. } => Ok(ComplexMatrix::zeros(self.dim)),
            Path::Geodesic { theta, alpha } => {
                Ok(geodesic_at(*theta, *alpha, s).scale_real(-*theta * *theta))
            }
            Path::Tabulated(sp) => Ok(second_difference(|x| sp.eval(x), s, T::lit(FD_STEP_D2))),
        }
    }

    /// Exact `(‖H′‖, ‖H″‖)` where a closed form exists.
    pub fn closed_form_norms(&self) -> Option<(T, T)> {
        match &self.path {
            Path::Linear { delta, .. } => Some((operator_norm(delta).ok()?, T::zero())),
            Path::Geodesic { theta, .. } => Some((*theta, *theta * *theta)),
            Path::Tabulated(_) => None,
        }
    }

    /// Maximum of `‖H(s)‖` on a uniform grid.
    pub fn max_norm(&self, grid_size: usize) -> Result<T> {
        uniform_grid::<T>(grid_size)?
            .into_iter()
            .try_fold(T::zero(), |acc, s| Ok(acc.max(operator_norm(&self.eval(s)?)?)))
    }

    /// Endpoint matrices of a linear schedule.
    pub fn endpoints(&self) -> Option<(&ComplexMatrix<T>, &ComplexMatrix<T>)> {
        match &self.path {
            Path::Linear { h0, h1, .. } => Some((h0, h1)),
            _ => None,
        }
    }
}

/// Global derivative norms found by a grid scan.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DerivativeNorms<T> {
    pub h1_max: T,
    pub h2_max: T,
    pub grid_size: usize,
}

/// Scans `‖H′(s)‖` and `‖H″(s)‖` on `grid_size` uniform points including
/// both endpoints. The maxima are lower bounds on the true suprema.
pub fn derivative_norms<T: Real>(
    sched: &HamiltonianSchedule<T>,
    grid_size: usize,
) -> Result<DerivativeNorms<T>> {
    let grid = uniform_grid::<T>(grid_size)?;
    let mut h1_max = T::zero();
    let mut h2_max = T::zero();
    for s in grid {
        h1_max = h1_max.max(operator_norm(&sched.eval_d1(s)?)?);
        h2_max = h2_max.max(operator_norm(&sched.eval_d2(s)?)?);
    }
    Ok(DerivativeNorms {
        h1_max,
        h2_max,
        grid_size,
    })
}

/// `grid_size` equally spaced points from 0 to 1 inclusive.
pub fn uniform_grid<T: Real>(grid_size: usize) -> Result<Vec<T>> {
    if grid_size < 2 {
        return Err(Error::ConfigInvalid(format!(
            "grid size must be at least 2, got {grid_size}"
        )));
    }
    let last = T::from_usize(grid_size - 1).unwrap();
    Ok((0..grid_size)
        .map(|k| {
            if k == grid_size - 1 {
                T::one()
            } else {
                T::from_usize(k).unwrap() / last
            }
        })
        .collect())
}

/// Closed forms for the two qubit-preparation paths.
pub mod presets {
    use crate::scalar::Real;

    /// Eigenvalues `γ±(s) = ±√(1 − 2(1−s)s(1−cos θ))` of the straight path.
    pub fn linear_qubit_eigenvalue<T: Real>(theta: T, s: T) -> T {
        let two = T::lit(2.0);
        (T::one() - two * (T::one() - s) * s * (T::one() - theta.cos()))
            .max(T::zero())
            .sqrt()
    }

    /// `λ(s) = 2√(1 − 2(1−s)s(1−cos θ))`
    pub fn linear_qubit_gap<T: Real>(theta: T, s: T) -> T {
        T::lit(2.0) * linear_qubit_eigenvalue(theta, s)
    }

    /// `λ = 2 cos(θ/2)`, attained at `s = 1/2`.
    pub fn linear_qubit_min_gap<T: Real>(theta: T) -> T {
        T::lit(2.0) * (theta / T::lit(2.0)).cos()
    }

    /// `‖H′‖ = 2 sin(θ/2)`
    pub fn linear_qubit_h1<T: Real>(theta: T) -> T {
        T::lit(2.0) * (theta / T::lit(2.0)).sin()
    }

    /// Geodesic path: `(λ, ‖H′‖, ‖H″‖) = (2, θ, θ²)`.
    pub fn geodesic_constants<T: Real>(theta: T) -> (T, T, T) {
        (T::lit(2.0), theta, theta * theta)
    }
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(bound = "T: Real")]
struct TabulatedFile<T> {
    dim: usize,
    samples: Vec<TabulatedSample<T>>,
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(bound = "T: Real")]
struct TabulatedSample<T> {
    s: T,
    re: Vec<Vec<T>>,
    im: Vec<Vec<T>>,
}

fn check_range<T: Real>(s: T) -> Result<()> {
    if s >= T::zero() && s <= T::one() {
        Ok(())
    } else {
        Err(Error::OutOfRange { s: s.as_f64() })
    }
}

fn check_angles<T: Real>(theta: T, alpha: T) -> Result<()> {
    if !(theta >= T::zero() && theta <= T::PI()) {
        return Err(Error::DomainError(format!("theta = {theta} outside [0, π]")));
    }
    if !(alpha >= T::zero() && alpha < T::TAU()) {
        return Err(Error::DomainError(format!("alpha = {alpha} outside [0, 2π)")));
    }
    Ok(())
}

/// `cos α σx + sin α σy`
fn transverse<T: Real>(alpha: T) -> ComplexMatrix<T> {
    let (sa, ca) = alpha.sin_cos();
    let mut m = pauli_x::<T>().scale_real(ca);
    m += &pauli_y::<T>().scale_real(sa);
    m
}

fn geodesic_at<T: Real>(theta: T, alpha: T, s: T) -> ComplexMatrix<T> {
    let (st, ct) = (s * theta).sin_cos();
    let mut m = transverse(alpha).scale_real(st);
    m += &pauli_z::<T>().scale_real(ct);
    m
}

fn random_endpoint<T: Real>(dim: usize, rng: &mut ChaCha8Rng) -> Result<ComplexMatrix<T>> {
    let mut g = ComplexMatrix::<T>::zeros(dim);
    let mut normal = || T::lit(rng.sample::<f64, _>(StandardNormal));
    for i in 0..dim {
        g[(i, i)] = Complex::new(normal(), T::zero());
        for j in (i + 1)..dim {
            let z = Complex::new(normal(), normal());
            g[(i, j)] = z;
            g[(j, i)] = z.conj();
        }
    }
    let basis = eig_hermitian(&g)?.eigenvectors;
    let mut levels = vec![-T::one()];
    levels.extend((1..dim).map(|_| T::lit(rng.random::<f64>())));
    let mut out = ComplexMatrix::zeros(dim);
    for (lam, v) in levels.iter().zip(&basis) {
        out += &ComplexMatrix::outer(v, v).scale_real(*lam);
    }
    Ok(out.hermitian_part())
}

/// Second-order first derivative; one-sided when the stencil leaves `[0, 1]`.
pub(crate) fn first_difference<T: Real, F>(f: F, s: T, h: T) -> ComplexMatrix<T>
where
    F: Fn(T) -> ComplexMatrix<T>,
{
    let two = T::lit(2.0);
    if s - h < T::zero() {
        let mut m = f(s + h).scale_real(T::lit(4.0));
        m -= &f(s).scale_real(T::lit(3.0));
        m -= &f(s + two * h);
        m.scale_real(T::one() / (two * h))
    } else if s + h > T::one() {
        let mut m = f(s).scale_real(T::lit(3.0));
        m -= &f(s - h).scale_real(T::lit(4.0));
        m += &f(s - two * h);
        m.scale_real(T::one() / (two * h))
    } else {
        (&f(s + h) - &f(s - h)).scale_real(T::one() / (two * h))
    }
}

/// Second-order second derivative; one-sided when the stencil leaves `[0, 1]`.
pub(crate) fn second_difference<T: Real, F>(f: F, s: T, h: T) -> ComplexMatrix<T>
where
    F: Fn(T) -> ComplexMatrix<T>,
{
    let two = T::lit(2.0);
    let three = T::lit(3.0);
    let inv = T::one() / (h * h);
    if s - h < T::zero() {
        let mut m = f(s).scale_real(two);
        m -= &f(s + h).scale_real(T::lit(5.0));
        m += &f(s + two * h).scale_real(T::lit(4.0));
        m -= &f(s + three * h);
        m.scale_real(inv)
    } else if s + h > T::one() {
        let mut m = f(s).scale_real(two);
        m -= &f(s - h).scale_real(T::lit(5.0));
        m += &f(s - two * h).scale_real(T::lit(4.0));
        m -= &f(s - three * h);
        m.scale_real(inv)
    } else {
        let mut m = f(s + h);
        m += &f(s - h);
        m -= &f(s).scale_real(two);
        m.scale_real(inv)
    }
}

/// Matrix-valued natural cubic spline.
#[derive(Debug, Clone)]
struct Spline<T> {
    knots: Vec<T>,
    values: Vec<ComplexMatrix<T>>,
    curvature: Vec<ComplexMatrix<T>>,
}

impl<T: Real> Spline<T> {
    fn new(samples: Vec<(T, ComplexMatrix<T>)>) -> Result<Self> {
        if samples.len() < 2 {
            return Err(Error::ConfigInvalid(
                "tabulated schedule needs at least two samples".into(),
            ));
        }
        let dim = samples[0].1.dim();
        for (s, m) in &samples {
            if m.dim() != dim {
                return Err(Error::DimensionMismatch {
                    expected: dim,
                    got: m.dim(),
                });
            }
            if !s.is_finite() {
                return Err(Error::Parse("non-finite sample position".into()));
            }
            m.check_hermitian()?;
        }
        if samples.windows(2).any(|w| w[1].0 <= w[0].0) {
            return Err(Error::ConfigInvalid(
                "sample positions must be strictly increasing".into(),
            ));
        }
        let tol = T::lit(COVERAGE_TOL);
        let first = samples[0].0;
        let last = samples[samples.len() - 1].0;
        if first > tol {
            return Err(Error::InterpolationGap { s: 0.0 });
        }
        if last < T::one() - tol {
            return Err(Error::InterpolationGap { s: 1.0 });
        }

        let (knots, values): (Vec<T>, Vec<ComplexMatrix<T>>) = samples.into_iter().unzip();
        let curvature = natural_curvature(&knots, &values);
        Ok(Self {
            knots,
            values,
            curvature,
        })
    }

    fn dim(&self) -> usize {
        self.values[0].dim()
    }

    fn eval(&self, s: T) -> ComplexMatrix<T> {
        let n = self.knots.len();
        let s = s.max(self.knots[0]).min(self.knots[n - 1]);
        let i = match self
            .knots
            .binary_search_by(|k| k.partial_cmp(&s).expect("finite knot"))
        {
            Ok(i) => return self.values[i].clone(),
            Err(i) => i.clamp(1, n - 1) - 1,
        };
        let h = self.knots[i + 1] - self.knots[i];
        let a = (self.knots[i + 1] - s) / h;
        let b = T::one() - a;
        let c6 = h * h / T::lit(6.0);
        let mut m = self.values[i].scale_real(a);
        m += &self.values[i + 1].scale_real(b);
        m += &self.curvature[i].scale_real((a * a * a - a) * c6);
        m += &self.curvature[i + 1].scale_real((b * b * b - b) * c6);
        m
    }
}

/// Second derivatives at the knots with zero curvature at both ends
/// (tridiagonal solve, matrix-valued right-hand side).
fn natural_curvature<T: Real>(knots: &[T], values: &[ComplexMatrix<T>]) -> Vec<ComplexMatrix<T>> {
    let n = knots.len();
    let dim = values[0].dim();
    let mut out = vec![ComplexMatrix::zeros(dim); n];
    if n < 3 {
        return out;
    }
    let m = n - 2;
    let h: Vec<T> = knots.windows(2).map(|w| w[1] - w[0]).collect();
    let six = T::lit(6.0);
    let mut diag = Vec::with_capacity(m);
    let mut rhs = Vec::with_capacity(m);
    for i in 1..n - 1 {
        diag.push(T::lit(2.0) * (h[i - 1] + h[i]));
        let slope_r = (&values[i + 1] - &values[i]).scale_real(T::one() / h[i]);
        let slope_l = (&values[i] - &values[i - 1]).scale_real(T::one() / h[i - 1]);
        rhs.push((&slope_r - &slope_l).scale_real(six));
    }
    // Thomas algorithm: sub-diagonal h[i-1], super-diagonal h[i] for row i.
    for k in 1..m {
        let w = h[k] / diag[k - 1];
        diag[k] = diag[k] - w * h[k];
        let prev = rhs[k - 1].scale_real(w);
        rhs[k] -= &prev;
    }
    let mut sol = vec![ComplexMatrix::zeros(dim); m];
    sol[m - 1] = rhs[m - 1].scale_real(T::one() / diag[m - 1]);
    for k in (0..m - 1).rev() {
        let next = sol[k + 1].scale_real(h[k + 1]);
        sol[k] = (&rhs[k] - &next).scale_real(T::one() / diag[k]);
    }
    for (k, c) in sol.into_iter().enumerate() {
        out[k + 1] = c;
    }
    out
}
