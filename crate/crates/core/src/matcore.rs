//! Dense complex linear algebra for small Hermitian systems.
//!
//! Matrices here are tiny (dimension at most a few dozen), so everything is
//! stored densely in row-major order and the Hermitian eigensolver is a cyclic
//! complex Jacobi iteration, which yields eigenvectors orthonormal to working
//! precision. The matrix exponential of a Hermitian generator is assembled
//! from that decomposition and is therefore unitary to rounding.

use std::fmt;
use std::ops::{Add, AddAssign, Index, IndexMut, Mul, Neg, Sub, SubAssign};

use num_complex::Complex;
use num_traits::{One, Zero};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::scalar::Real;

const MAX_JACOBI_SWEEPS: usize = 64;
/// Relative tolerance for the Hermiticity predicate.
pub const HERMITIAN_TOL: f64 = 1e-12;
/// Allowed deviation of a physical state's norm from one.
pub const NORM_TOL: f64 = 1e-10;

#[derive(Clone, PartialEq)]
pub struct ComplexMatrix<T> {
    dim: usize,
    data: Vec<Complex<T>>,
}

impl<T: Real> ComplexMatrix<T> {
    pub fn zeros(dim: usize) -> Self {
        assert!(dim >= 1, "matrix dimension must be positive");
        Self {
            dim,
            data: vec![Complex::zero(); dim * dim],
        }
    }

    pub fn identity(dim: usize) -> Self {
        let mut m = Self::zeros(dim);
        for i in 0..dim {
            m[(i, i)] = Complex::one();
        }
        m
    }

    pub fn from_fn(dim: usize, mut f: impl FnMut(usize, usize) -> Complex<T>) -> Self {
        let mut m = Self::zeros(dim);
        for i in 0..dim {
            for j in 0..dim {
                m[(i, j)] = f(i, j);
            }
        }
        m
    }

    /// Builds a matrix from row slices; rows must form a square array.
    pub fn from_rows(rows: &[Vec<Complex<T>>]) -> Result<Self> {
        let dim = rows.len();
        if dim == 0 {
            return Err(Error::Parse("matrix has no rows".into()));
        }
        if let Some(bad) = rows.iter().find(|r| r.len() != dim) {
            return Err(Error::DimensionMismatch {
                expected: dim,
                got: bad.len(),
            });
        }
        Ok(Self {
            dim,
            data: rows.iter().flatten().copied().collect(),
        })
    }

    /// Builds a matrix from separate real and imaginary row arrays.
    pub fn from_parts(re: &[Vec<T>], im: &[Vec<T>]) -> Result<Self> {
        if re.len() != im.len() {
            return Err(Error::DimensionMismatch {
                expected: re.len(),
                got: im.len(),
            });
        }
        let rows = re
            .iter()
            .zip(im)
            .map(|(r, i)| {
                if r.len() != i.len() {
                    return Err(Error::DimensionMismatch {
                        expected: r.len(),
                        got: i.len(),
                    });
                }
                Ok(r.iter().zip(i).map(|(&a, &b)| Complex::new(a, b)).collect())
            })
            .collect::<Result<Vec<Vec<_>>>>()?;
        Self::from_rows(&rows)
    }

    pub fn diagonal(values: &[T]) -> Self {
        let mut m = Self::zeros(values.len());
        for (i, &v) in values.iter().enumerate() {
            m[(i, i)] = Complex::new(v, T::zero());
        }
        m
    }

    /// `|v⟩⟨w|`
    pub fn outer(v: &StateVector<T>, w: &StateVector<T>) -> Self {
        assert_eq!(v.dim(), w.dim());
        Self::from_fn(v.dim(), |i, j| v[i] * w[j].conj())
    }

    #[inline]
    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn entries(&self) -> &[Complex<T>] {
        &self.data
    }

    pub fn real_part(&self) -> Vec<Vec<T>> {
        self.rows().map(|r| r.iter().map(|z| z.re).collect()).collect()
    }

    pub fn imag_part(&self) -> Vec<Vec<T>> {
        self.rows().map(|r| r.iter().map(|z| z.im).collect()).collect()
    }

    fn rows(&self) -> impl Iterator<Item = &[Complex<T>]> {
        self.data.chunks(self.dim)
    }

    pub fn adjoint(&self) -> Self {
        Self::from_fn(self.dim, |i, j| self[(j, i)].conj())
    }

    pub fn scale(&self, c: Complex<T>) -> Self {
        Self {
            dim: self.dim,
            data: self.data.iter().map(|&z| z * c).collect(),
        }
    }

    pub fn scale_real(&self, c: T) -> Self {
        Self {
            dim: self.dim,
            data: self.data.iter().map(|&z| z * c).collect(),
        }
    }

    /// `A + c·𝟙`
    pub fn shift_diagonal(&self, c: T) -> Self {
        let mut m = self.clone();
        for i in 0..self.dim {
            m[(i, i)].re = m[(i, i)].re + c;
        }
        m
    }

    pub fn matmul(&self, other: &Self) -> Self {
        assert_eq!(self.dim, other.dim, "matmul dimension mismatch");
        let n = self.dim;
        let mut out = Self::zeros(n);
        for i in 0..n {
            for k in 0..n {
                let a = self.data[i * n + k];
                if a.is_zero() {
                    continue;
                }
                for j in 0..n {
                    out.data[i * n + j] = out.data[i * n + j] + a * other.data[k * n + j];
                }
            }
        }
        out
    }

    pub fn apply(&self, v: &StateVector<T>) -> StateVector<T> {
        assert_eq!(self.dim, v.dim(), "matrix-vector dimension mismatch");
        StateVector::new(
            self.rows()
                .map(|row| {
                    row.iter()
                        .zip(v.amplitudes())
                        .fold(Complex::zero(), |acc, (&a, &x)| acc + a * x)
                })
                .collect(),
        )
    }

    pub fn trace(&self) -> Complex<T> {
        (0..self.dim).map(|i| self[(i, i)]).fold(Complex::zero(), |a, b| a + b)
    }

    /// Largest entry modulus, `‖A‖_max`.
    pub fn max_abs(&self) -> T {
        self.data.iter().map(|z| z.norm()).fold(T::zero(), T::max)
    }

    pub fn frobenius(&self) -> T {
        self.data.iter().map(|z| z.norm_sqr()).sum::<T>().sqrt()
    }

    pub fn is_finite(&self) -> bool {
        self.data.iter().all(|z| z.re.is_finite() && z.im.is_finite())
    }

    /// `‖A − A†‖_max`
    pub fn hermiticity_deviation(&self) -> T {
        let n = self.dim;
        let mut dev = T::zero();
        for i in 0..n {
            for j in i..n {
                dev = dev.max((self[(i, j)] - self[(j, i)].conj()).norm());
            }
        }
        dev
    }

    pub fn is_hermitian(&self) -> bool {
        self.check_hermitian().is_ok()
    }

    /// Hermiticity predicate `‖A − A†‖_max ≤ 1e-12·max(1, ‖A‖_max)`.
    pub fn check_hermitian(&self) -> Result<()> {
        if !self.is_finite() {
            return Err(Error::NumericalFailure("non-finite matrix entry".into()));
        }
        let dev = self.hermiticity_deviation();
        let tol = T::tol(HERMITIAN_TOL) * self.max_abs().max(T::one());
        if dev <= tol {
            Ok(())
        } else {
            Err(Error::NotHermitian {
                deviation: dev.as_f64(),
            })
        }
    }

    /// `(A + A†)/2`, used to clear rounding asymmetry from products that are
    /// Hermitian in exact arithmetic.
    pub fn hermitian_part(&self) -> Self {
        let half = T::lit(0.5);
        Self::from_fn(self.dim, |i, j| (self[(i, j)] + self[(j, i)].conj()) * half)
    }

    /// Operator-norm distance of `A†A` from the identity.
    pub fn unitarity_defect(&self) -> T {
        let gram = self.adjoint().matmul(self).hermitian_part();
        let diff = &gram - &Self::identity(self.dim);
        operator_norm(&diff).unwrap_or_else(|_| T::infinity())
    }
}

impl<T: Real> Index<(usize, usize)> for ComplexMatrix<T> {
    type Output = Complex<T>;
    #[inline]
    fn index(&self, (i, j): (usize, usize)) -> &Complex<T> {
        &self.data[i * self.dim + j]
    }
}

impl<T: Real> IndexMut<(usize, usize)> for ComplexMatrix<T> {
    #[inline]
    fn index_mut(&mut self, (i, j): (usize, usize)) -> &mut Complex<T> {
        &mut self.data[i * self.dim + j]
    }
}

macro_rules! elementwise {
    ($tr:ident, $f:ident, $op:tt) => {
        impl<'a, T: Real> $tr<&'a ComplexMatrix<T>> for &'a ComplexMatrix<T> {
            type Output = ComplexMatrix<T>;
            fn $f(self, rhs: &'a ComplexMatrix<T>) -> ComplexMatrix<T> {
                assert_eq!(self.dim, rhs.dim, "matrix dimension mismatch");
                ComplexMatrix {
                    dim: self.dim,
                    data: self.data.iter().zip(&rhs.data).map(|(&a, &b)| a $op b).collect(),
                }
            }
        }
        impl<T: Real> $tr for ComplexMatrix<T> {
            type Output = ComplexMatrix<T>;
            fn $f(self, rhs: ComplexMatrix<T>) -> ComplexMatrix<T> {
                (&self).$f(&rhs)
            }
        }
    };
}
elementwise!(Add, add, +);
elementwise!(Sub, sub, -);

impl<T: Real> AddAssign<&ComplexMatrix<T>> for ComplexMatrix<T> {
    fn add_assign(&mut self, rhs: &ComplexMatrix<T>) {
        assert_eq!(self.dim, rhs.dim);
        for (a, &b) in self.data.iter_mut().zip(&rhs.data) {
            *a = *a + b;
        }
    }
}

impl<T: Real> SubAssign<&ComplexMatrix<T>> for ComplexMatrix<T> {
    fn sub_assign(&mut self, rhs: &ComplexMatrix<T>) {
        assert_eq!(self.dim, rhs.dim);
        for (a, &b) in self.data.iter_mut().zip(&rhs.data) {
            *a = *a - b;
        }
    }
}

impl<'a, T: Real> Mul<&'a ComplexMatrix<T>> for &'a ComplexMatrix<T> {
    type Output = ComplexMatrix<T>;
    fn mul(self, rhs: &'a ComplexMatrix<T>) -> ComplexMatrix<T> {
        self.matmul(rhs)
    }
}

impl<'a, T: Real> Mul<&'a StateVector<T>> for &'a ComplexMatrix<T> {
    type Output = StateVector<T>;
    fn mul(self, rhs: &'a StateVector<T>) -> StateVector<T> {
        self.apply(rhs)
    }
}

impl<T: Real> Neg for &ComplexMatrix<T> {
    type Output = ComplexMatrix<T>;
    fn neg(self) -> ComplexMatrix<T> {
        self.scale_real(-T::one())
    }
}

impl<T: fmt::Debug> fmt::Debug for ComplexMatrix<T> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "ComplexMatrix({}x{})", self.dim, self.dim)?;
        for row in self.data.chunks(self.dim) {
            writeln!(f, "  {row:?}")?;
        }
        Ok(())
    }
}

/// Real/imaginary row arrays, the on-disk layout for matrices in JSON files.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct MatrixRecord<T> {
    pub re: Vec<Vec<T>>,
    pub im: Vec<Vec<T>>,
}

impl<T: Real> From<&ComplexMatrix<T>> for MatrixRecord<T> {
    fn from(m: &ComplexMatrix<T>) -> Self {
        Self {
            re: m.real_part(),
            im: m.imag_part(),
        }
    }
}

#[derive(Clone, PartialEq)]
pub struct StateVector<T> {
    amps: Vec<Complex<T>>,
}

impl<T: Real> StateVector<T> {
    pub fn new(amps: Vec<Complex<T>>) -> Self {
        assert!(!amps.is_empty(), "state vector dimension must be positive");
        Self { amps }
    }

    pub fn zeros(dim: usize) -> Self {
        Self::new(vec![Complex::zero(); dim])
    }

    /// Computational basis vector `|k⟩`.
    pub fn basis(dim: usize, k: usize) -> Self {
        let mut v = Self::zeros(dim);
        v.amps[k] = Complex::one();
        v
    }

    pub fn from_real(values: &[T]) -> Self {
        Self::new(values.iter().map(|&x| Complex::new(x, T::zero())).collect())
    }

    #[inline]
    pub fn dim(&self) -> usize {
        self.amps.len()
    }

    pub fn amplitudes(&self) -> &[Complex<T>] {
        &self.amps
    }

    pub fn norm(&self) -> T {
        self.amps.iter().map(|z| z.norm_sqr()).sum::<T>().sqrt()
    }

    pub fn normalized(&self) -> Result<Self> {
        let n = self.norm();
        if n <= T::zero() || !n.is_finite() {
            return Err(Error::NotNormalized { norm: n.as_f64() });
        }
        Ok(self.scale_real(T::one() / n))
    }

    pub fn check_normalized(&self) -> Result<()> {
        let n = self.norm();
        if (n - T::one()).abs() <= T::tol(NORM_TOL) {
            Ok(())
        } else {
            Err(Error::NotNormalized { norm: n.as_f64() })
        }
    }

    /// `⟨self|other⟩`, antilinear in `self`.
    pub fn inner(&self, other: &Self) -> Complex<T> {
        assert_eq!(self.dim(), other.dim(), "inner product dimension mismatch");
        self.amps
            .iter()
            .zip(&other.amps)
            .fold(Complex::zero(), |acc, (&a, &b)| acc + a.conj() * b)
    }

    pub fn scale(&self, c: Complex<T>) -> Self {
        Self::new(self.amps.iter().map(|&z| z * c).collect())
    }

    pub fn scale_real(&self, c: T) -> Self {
        Self::new(self.amps.iter().map(|&z| z * c).collect())
    }

    /// `‖self − other‖`
    pub fn distance(&self, other: &Self) -> T {
        (self - other).norm()
    }

    /// Fixes the global phase so the first amplitude of modulus above
    /// `sqrt(ε)·‖v‖` is real and positive.
    pub fn canonical_phase(&self) -> Self {
        let cutoff = T::epsilon().sqrt() * self.norm();
        match self.amps.iter().find(|z| z.norm() > cutoff) {
            Some(&z) => self.scale(z.conj() / z.norm()),
            None => self.clone(),
        }
    }
}

impl<T: Real> Index<usize> for StateVector<T> {
    type Output = Complex<T>;
    #[inline]
    fn index(&self, i: usize) -> &Complex<T> {
        &self.amps[i]
    }
}

impl<T: Real> IndexMut<usize> for StateVector<T> {
    #[inline]
    fn index_mut(&mut self, i: usize) -> &mut Complex<T> {
        &mut self.amps[i]
    }
}

impl<'a, T: Real> Add<&'a StateVector<T>> for &'a StateVector<T> {
    type Output = StateVector<T>;
    fn add(self, rhs: &'a StateVector<T>) -> StateVector<T> {
        assert_eq!(self.dim(), rhs.dim());
        StateVector::new(self.amps.iter().zip(&rhs.amps).map(|(&a, &b)| a + b).collect())
    }
}

impl<'a, T: Real> Sub<&'a StateVector<T>> for &'a StateVector<T> {
    type Output = StateVector<T>;
    fn sub(self, rhs: &'a StateVector<T>) -> StateVector<T> {
        assert_eq!(self.dim(), rhs.dim());
        StateVector::new(self.amps.iter().zip(&rhs.amps).map(|(&a, &b)| a - b).collect())
    }
}

impl<T: Real> AddAssign<&StateVector<T>> for StateVector<T> {
    fn add_assign(&mut self, rhs: &StateVector<T>) {
        assert_eq!(self.dim(), rhs.dim());
        for (a, &b) in self.amps.iter_mut().zip(&rhs.amps) {
            *a = *a + b;
        }
    }
}

impl<T: fmt::Debug> fmt::Debug for StateVector<T> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "StateVector{:?}", self.amps)
    }
}

/// Spectral decomposition `A = Σ λ_k |v_k⟩⟨v_k|` with ascending eigenvalues.
#[derive(Debug, Clone)]
pub struct EigenDecomposition<T> {
    pub eigenvalues: Vec<T>,
    pub eigenvectors: Vec<StateVector<T>>,
}

impl<T: Real> EigenDecomposition<T> {
    pub fn dim(&self) -> usize {
        self.eigenvalues.len()
    }

    /// `V diag(λ) V†`
    pub fn reconstruct(&self) -> ComplexMatrix<T> {
        self.spectral_sum(|lam| Complex::new(lam, T::zero()))
    }

    /// `Σ f(λ_k) |v_k⟩⟨v_k|`
    pub fn spectral_sum(&self, mut f: impl FnMut(T) -> Complex<T>) -> ComplexMatrix<T> {
        let n = self.dim();
        let mut out = ComplexMatrix::zeros(n);
        for (&lam, v) in self.eigenvalues.iter().zip(&self.eigenvectors) {
            let w = f(lam);
            if w.is_zero() {
                continue;
            }
            for i in 0..n {
                let vi = v[i] * w;
                for j in 0..n {
                    out[(i, j)] = out[(i, j)] + vi * v[j].conj();
                }
            }
        }
        out
    }

    /// Matrix whose columns are the eigenvectors.
    pub fn vectors(&self) -> ComplexMatrix<T> {
        ComplexMatrix::from_fn(self.dim(), |i, j| self.eigenvectors[j][i])
    }

    /// `exp(i·c·A)` from the stored decomposition.
    pub fn exp_i(&self, c: T) -> ComplexMatrix<T> {
        self.spectral_sum(|lam| Complex::from_polar(T::one(), c * lam))
    }
}

/// Eigendecomposition of a Hermitian matrix by cyclic complex Jacobi sweeps.
///
/// Eigenvalues are sorted ascending and every eigenvector carries the
/// canonical phase (first significant amplitude real positive).
pub fn eig_hermitian<T: Real>(a: &ComplexMatrix<T>) -> Result<EigenDecomposition<T>> {
    a.check_hermitian()?;
    let n = a.dim();
    let mut m = a.hermitian_part();
    let mut v = ComplexMatrix::<T>::identity(n);
    let scale = m.frobenius();
    let target = T::epsilon() * scale;

    let mut converged = n == 1 || scale.is_zero();
    for _ in 0..MAX_JACOBI_SWEEPS {
        if converged {
            break;
        }
        let off = off_diagonal_norm(&m);
        if off <= target {
            converged = true;
            break;
        }
        for p in 0..n {
            for q in (p + 1)..n {
                jacobi_rotate(&mut m, &mut v, p, q);
            }
        }
    }
    if !converged && off_diagonal_norm(&m) > target {
        return Err(Error::NumericalFailure(format!(
            "Jacobi eigensolver did not converge in {MAX_JACOBI_SWEEPS} sweeps"
        )));
    }

    let mut pairs: Vec<(T, StateVector<T>)> = (0..n)
        .map(|k| {
            let col = StateVector::new((0..n).map(|i| v[(i, k)]).collect());
            (m[(k, k)].re, col.canonical_phase())
        })
        .collect();
    pairs.sort_by(|x, y| x.0.partial_cmp(&y.0).expect("finite eigenvalues"));
    let (eigenvalues, eigenvectors) = pairs.into_iter().unzip();
    Ok(EigenDecomposition {
        eigenvalues,
        eigenvectors,
    })
}

fn off_diagonal_norm<T: Real>(m: &ComplexMatrix<T>) -> T {
    let n = m.dim();
    let mut acc = T::zero();
    for p in 0..n {
        for q in (p + 1)..n {
            acc = acc + m[(p, q)].norm_sqr();
        }
    }
    (acc + acc).sqrt()
}

/// One unitary rotation `G = diag(1, e^{-iφ})·[[c, s], [-s, c]]` in the
/// `(p, q)` plane that annihilates `m[p][q] = |b|e^{iφ}`.
fn jacobi_rotate<T: Real>(m: &mut ComplexMatrix<T>, v: &mut ComplexMatrix<T>, p: usize, q: usize) {
    let b = m[(p, q)];
    let abs_b = b.norm();
    if abs_b.is_zero() {
        return;
    }
    let n = m.dim();
    let phase = b / abs_b;
    let phase_conj = phase.conj();
    let app = m[(p, p)].re;
    let aqq = m[(q, q)].re;
    let theta = (aqq - app) / (abs_b + abs_b);
    let t = if theta.abs() > T::lit(1e150) {
        T::one() / (theta + theta)
    } else {
        let mag = T::one() / (theta.abs() + (theta * theta + T::one()).sqrt());
        if theta < T::zero() {
            -mag
        } else {
            mag
        }
    };
    let c = T::one() / (T::one() + t * t).sqrt();
    let s = t * c;

    // columns: A ← A·G
    for k in 0..n {
        let x = m[(k, p)];
        let y = m[(k, q)];
        m[(k, p)] = x * c - y * phase_conj * s;
        m[(k, q)] = x * s + y * phase_conj * c;
    }
    // rows: A ← G†·A
    for k in 0..n {
        let x = m[(p, k)];
        let y = m[(q, k)];
        m[(p, k)] = x * c - y * phase * s;
        m[(q, k)] = x * s + y * phase * c;
    }
    m[(p, q)] = Complex::zero();
    m[(q, p)] = Complex::zero();
    m[(p, p)].im = T::zero();
    m[(q, q)].im = T::zero();

    for k in 0..n {
        let x = v[(k, p)];
        let y = v[(k, q)];
        v[(k, p)] = x * c - y * phase_conj * s;
        v[(k, q)] = x * s + y * phase_conj * c;
    }
}

/// Largest singular value. Hermitian input uses its spectrum directly;
/// anything else goes through the spectrum of `A†A`.
pub fn operator_norm<T: Real>(a: &ComplexMatrix<T>) -> Result<T> {
    if !a.is_finite() {
        return Err(Error::NumericalFailure("non-finite matrix entry".into()));
    }
    if a.max_abs().is_zero() {
        return Ok(T::zero());
    }
    if a.is_hermitian() {
        let eig = eig_hermitian(a)?;
        let lo = eig.eigenvalues[0].abs();
        let hi = eig.eigenvalues[eig.dim() - 1].abs();
        return Ok(lo.max(hi));
    }
    let gram = a.adjoint().matmul(a).hermitian_part();
    let eig = eig_hermitian(&gram)?;
    Ok(eig.eigenvalues[eig.dim() - 1].max(T::zero()).sqrt())
}

/// `exp(i·c·A)` for Hermitian `A`, exact up to the eigensolver's rounding.
pub fn exp_i_hermitian<T: Real>(a: &ComplexMatrix<T>, c: T) -> Result<ComplexMatrix<T>> {
    Ok(eig_hermitian(a)?.exp_i(c))
}

/// Rank-one projector `|v⟩⟨v|` onto a normalized vector.
pub fn projector<T: Real>(v: &StateVector<T>) -> Result<ComplexMatrix<T>> {
    v.check_normalized()?;
    Ok(ComplexMatrix::outer(v, v))
}

pub fn pauli_x<T: Real>() -> ComplexMatrix<T> {
    let (o, z) = (Complex::one(), Complex::zero());
    ComplexMatrix::from_rows(&[vec![z, o], vec![o, z]]).unwrap()
}

pub fn pauli_y<T: Real>() -> ComplexMatrix<T> {
    let z = Complex::zero();
    let i = Complex::i();
    ComplexMatrix::from_rows(&[vec![z, -i], vec![i, z]]).unwrap()
}

pub fn pauli_z<T: Real>() -> ComplexMatrix<T> {
    ComplexMatrix::diagonal(&[T::one(), -T::one()])
}

/// `n⃗·σ⃗ = n_x σx + n_y σy + n_z σz`
pub fn bloch_operator<T: Real>(n: [T; 3]) -> ComplexMatrix<T> {
    let [nx, ny, nz] = n;
    let mut m = pauli_z::<T>().scale_real(nz);
    m += &pauli_x::<T>().scale_real(nx);
    m += &pauli_y::<T>().scale_real(ny);
    m
}

/// Bloch vector `n⃗(θ, α) = (sin θ cos α, sin θ sin α, cos θ)`.
pub fn bloch_vector<T: Real>(theta: T, alpha: T) -> [T; 3] {
    [
        theta.sin() * alpha.cos(),
        theta.sin() * alpha.sin(),
        theta.cos(),
    ]
}
