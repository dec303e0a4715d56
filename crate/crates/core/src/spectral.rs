//! Eigenbranch tracking along a schedule.
//!
//! A branch is followed by maximal overlap with the previous frame, and each
//! new eigenvector is rotated by the phase of that overlap so consecutive
//! vectors have a real positive inner product. This discrete parallel
//! transport converges to the gauge `⟨φ′(s)|φ(s)⟩ = 0` as the grid is refined.
//! Derivatives of `φ` and `γ` are taken by finite differences over the
//! gauge-fixed grid, never through the resolvent identities they are later
//! checked against.

use std::io::{self, Write};

use num_complex::Complex;
use num_traits::Zero;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::matcore::{eig_hermitian, operator_norm, ComplexMatrix, EigenDecomposition, StateVector};
use crate::scalar::Real;
use crate::schedule::{uniform_grid, HamiltonianSchedule};

/// Default grid for verification runs.
pub const DEFAULT_TRACK_GRID: usize = 2001;
/// Smallest admissible `|⟨φ_k|φ_{k+1}⟩|` between consecutive frames.
pub const MIN_OVERLAP: f64 = 0.7;
/// A gap below `GAP_COLLAPSE_TOL·max(1, ‖H(s)‖)` counts as a crossing.
pub const GAP_COLLAPSE_TOL: f64 = 1e-9;

/// Spectral data of `H(s)` at one grid point.
#[derive(Debug, Clone)]
pub struct SpectralFrame<T> {
    pub s: T,
    pub eigenvalues: Vec<T>,
    pub tracked_index: usize,
    /// Gauge-fixed tracked eigenvector `φ(s)`.
    pub phi: StateVector<T>,
    pub gamma: T,
    /// Distance from `γ(s)` to the nearest other eigenvalue.
    pub gap: T,
    /// `R(s) = Σ_{j≠k} (γ_j − γ)⁻¹ |v_j⟩⟨v_j|`
    pub resolvent: ComplexMatrix<T>,
}

impl<T: Real> SpectralFrame<T> {
    /// `P(s) = |φ⟩⟨φ|`
    pub fn projector(&self) -> ComplexMatrix<T> {
        ComplexMatrix::outer(&self.phi, &self.phi)
    }

    /// `Q(s) = 𝟙 − P(s)`
    pub fn complement(&self) -> ComplexMatrix<T> {
        &ComplexMatrix::identity(self.phi.dim()) - &self.projector()
    }

    /// Largest eigenvalue modulus, `‖H(s)‖`.
    pub fn spectral_radius(&self) -> T {
        let lo = self.eigenvalues[0].abs();
        let hi = self.eigenvalues[self.eigenvalues.len() - 1].abs();
        lo.max(hi)
    }
}

/// A tracked eigenbranch on a uniform grid.
#[derive(Debug, Clone)]
pub struct EigenTrack<T> {
    pub frames: Vec<SpectralFrame<T>>,
    /// `λ = min_s λ(s)`
    pub min_gap: T,
    pub branch: usize,
}

impl<T: Real> EigenTrack<T> {
    pub fn grid_size(&self) -> usize {
        self.frames.len()
    }

    /// Grid spacing.
    pub fn step(&self) -> T {
        T::one() / T::from_usize(self.frames.len() - 1).unwrap()
    }

    pub fn dim(&self) -> usize {
        self.frames[0].phi.dim()
    }

    pub fn s_values(&self) -> Vec<T> {
        self.frames.iter().map(|f| f.s).collect()
    }

    pub fn gammas(&self) -> Vec<T> {
        self.frames.iter().map(|f| f.gamma).collect()
    }

    /// Grid point where the gap is smallest, with that gap.
    pub fn argmin_gap(&self) -> (T, T) {
        self.frames
            .iter()
            .map(|f| (f.s, f.gap))
            .fold((T::zero(), T::infinity()), |best, cur| if cur.1 < best.1 { cur } else { best })
    }

    /// Whether `γ(s)` stays within `tol` of `γ(0)` on the whole grid.
    pub fn gamma_is_constant(&self, tol: T) -> bool {
        let g0 = self.frames[0].gamma;
        self.frames.iter().all(|f| (f.gamma - g0).abs() <= tol)
    }

    /// `∫₀¹ γ(s) ds` by the trapezoidal rule on the track grid.
    pub fn gamma_integral(&self) -> T {
        trapezoid(&self.gammas(), self.step())
    }

    /// Writes `s, gamma, gap, phi0_re, phi0_im, …` rows.
    pub fn write_csv<W: Write>(&self, mut w: W) -> io::Result<()> {
        let mut header = vec!["s".to_string(), "gamma".into(), "gap".into()];
        for i in 0..self.dim() {
            header.push(format!("phi{i}_re"));
            header.push(format!("phi{i}_im"));
        }
        writeln!(w, "{}", header.join(","))?;
        for f in &self.frames {
            write!(w, "{},{},{}", f.s, f.gamma, f.gap)?;
            for z in f.phi.amplitudes() {
                write!(w, ",{},{}", z.re, z.im)?;
            }
            writeln!(w)?;
        }
        Ok(())
    }
}

/// Follows eigenbranch `branch` (index in the ascending spectrum of `H(0)`)
/// across `grid_size` uniform points by maximal-overlap continuation.
pub fn track<T: Real>(
    sched: &HamiltonianSchedule<T>,
    branch: usize,
    grid_size: usize,
) -> Result<EigenTrack<T>> {
    track_with(sched, branch, grid_size, |_, _| {})
}

/// [`track`] with a hook applied to every raw eigendecomposition before the
/// gauge is fixed; used to confirm the gauge does not depend on the
/// eigensolver's phase convention.
pub(crate) fn track_with<T: Real, F>(
    sched: &HamiltonianSchedule<T>,
    branch: usize,
    grid_size: usize,
    mut hook: F,
) -> Result<EigenTrack<T>>
where
    F: FnMut(usize, &mut EigenDecomposition<T>),
{
    if branch >= sched.dim() {
        return Err(Error::ConfigInvalid(format!(
            "branch {branch} out of range for dimension {}",
            sched.dim()
        )));
    }
    let grid = uniform_grid::<T>(grid_size)?;
    let mut frames: Vec<SpectralFrame<T>> = Vec::with_capacity(grid_size);
    let min_overlap = T::lit(MIN_OVERLAP);

    for (k, &s) in grid.iter().enumerate() {
        let h = sched.eval(s)?;
        let mut eig = eig_hermitian(&h)?;
        hook(k, &mut eig);

        let (idx, phi) = match frames.last() {
            None => (branch, eig.eigenvectors[branch].canonical_phase()),
            Some(prev) => {
                let (idx, z) = eig
                    .eigenvectors
                    .iter()
                    .map(|v| prev.phi.inner(v))
                    .enumerate()
                    .fold((0, Complex::zero()), |best: (usize, Complex<T>), (j, z)| {
                        if z.norm() > best.1.norm() {
                            (j, z)
                        } else {
                            best
                        }
                    });
                let overlap = z.norm();
                if overlap < min_overlap {
                    return Err(Error::ContinuityLoss {
                        s: s.as_f64(),
                        overlap: overlap.as_f64(),
                    });
                }
                (idx, eig.eigenvectors[idx].scale(z.conj() / overlap))
            }
        };

        let gamma = eig.eigenvalues[idx];
        let gap = eig
            .eigenvalues
            .iter()
            .enumerate()
            .filter(|&(j, _)| j != idx)
            .map(|(_, &l)| (l - gamma).abs())
            .fold(T::infinity(), T::min);
        let radius = eig.eigenvalues[0].abs().max(eig.eigenvalues[eig.dim() - 1].abs());
        if gap < T::tol(GAP_COLLAPSE_TOL) * radius.max(T::one()) {
            return Err(Error::GapCollapse {
                s: s.as_f64(),
                gap: gap.as_f64(),
            });
        }
        let resolvent = resolvent_from(&eig, idx);
        frames.push(SpectralFrame {
            s,
            eigenvalues: eig.eigenvalues,
            tracked_index: idx,
            phi,
            gamma,
            gap,
            resolvent,
        });
    }

    let min_gap = frames.iter().map(|f| f.gap).fold(T::infinity(), T::min);
    Ok(EigenTrack {
        frames,
        min_gap,
        branch,
    })
}

fn resolvent_from<T: Real>(eig: &EigenDecomposition<T>, idx: usize) -> ComplexMatrix<T> {
    let gamma = eig.eigenvalues[idx];
    let n = eig.dim();
    let mut r = ComplexMatrix::zeros(n);
    for (j, (&l, v)) in eig.eigenvalues.iter().zip(&eig.eigenvectors).enumerate() {
        if j == idx {
            continue;
        }
        r += &ComplexMatrix::outer(v, v).scale_real(T::one() / (l - gamma));
    }
    r.hermitian_part()
}

/// Finite-difference weights for derivative orders `0..=m` at `z` on nodes
/// `x` (Fornberg's recurrence). Entry `[j][d]` multiplies `f(x_j)`.
fn fornberg(z: f64, x: &[f64], m: usize) -> Vec<Vec<f64>> {
    let n = x.len();
    let mut c = vec![vec![0.0; m + 1]; n];
    let mut c1 = 1.0;
    let mut c4 = x[0] - z;
    c[0][0] = 1.0;
    for i in 1..n {
        let mn = i.min(m);
        let mut c2 = 1.0;
        let c5 = c4;
        c4 = x[i] - z;
        for j in 0..i {
            let c3 = x[i] - x[j];
            c2 *= c3;
            if j == i - 1 {
                for d in (1..=mn).rev() {
                    c[i][d] = c1 * (d as f64 * c[i - 1][d - 1] - c5 * c[i - 1][d]) / c2;
                }
                c[i][0] = -c1 * c5 * c[i - 1][0] / c2;
            }
            for d in (1..=mn).rev() {
                c[j][d] = (c4 * c[j][d] - d as f64 * c[j][d - 1]) / c3;
            }
            c[j][0] = c4 * c[j][0] / c3;
        }
        c1 = c2;
    }
    c
}

/// Weights in units of `1/h^order` for the `order`-th derivative at grid
/// point `k` of `n`, fourth-order accurate whenever the grid allows: five
/// centered points inside, a shifted window of `4 + order` points at the ends.
fn stencil<T: Real>(n: usize, k: usize, order: usize) -> Vec<(usize, T)> {
    let centered = k >= 2 && k + 2 < n;
    let width = if centered { 5 } else { (4 + order).min(n) };
    let first = k.saturating_sub(width / 2).min(n - width);
    let nodes: Vec<f64> = (first..first + width).map(|i| i as f64).collect();
    let w = fornberg(k as f64, &nodes, order);
    (first..first + width)
        .zip(w)
        .map(|(i, row)| (i, T::lit(row[order])))
        .filter(|&(_, wt)| wt != T::zero())
        .collect()
}

fn stencil_d1<T: Real>(n: usize, k: usize) -> Vec<(usize, T)> {
    stencil(n, k, 1)
}

fn stencil_d2<T: Real>(n: usize, k: usize) -> Vec<(usize, T)> {
    stencil(n, k, 2)
}

fn check_index<T: Real>(track: &EigenTrack<T>, k: usize) -> Result<()> {
    if k < track.grid_size() {
        Ok(())
    } else {
        Err(Error::DomainError(format!(
            "grid index {k} out of range (grid size {})",
            track.grid_size()
        )))
    }
}

// Derivative weights sum to zero, so differencing against the value at `k`
// changes nothing analytically but makes constant data give exact zeros.
fn combine_vectors<T: Real>(
    track: &EigenTrack<T>,
    k: usize,
    stencil: &[(usize, T)],
    scale: T,
) -> StateVector<T> {
    let centre = &track.frames[k].phi;
    let mut acc = StateVector::zeros(track.dim());
    for &(i, w) in stencil {
        acc += &(&track.frames[i].phi - centre).scale_real(w * scale);
    }
    acc
}

fn combine_scalars<T: Real>(track: &EigenTrack<T>, k: usize, stencil: &[(usize, T)], scale: T) -> T {
    let centre = track.frames[k].gamma;
    stencil
        .iter()
        .map(|&(i, w)| (track.frames[i].gamma - centre) * w * scale)
        .fold(T::zero(), |a, b| a + b)
}

/// `(φ′(s_k), φ″(s_k))` by finite differences of the gauge-fixed grid.
pub fn phi_derivatives<T: Real>(
    track: &EigenTrack<T>,
    k: usize,
) -> Result<(StateVector<T>, StateVector<T>)> {
    check_index(track, k)?;
    let n = track.grid_size();
    let h = track.step();
    let phi1 = combine_vectors(track, k, &stencil_d1(n, k), T::one() / h);
    let phi2 = combine_vectors(track, k, &stencil_d2(n, k), T::one() / (h * h));
    Ok((phi1, phi2))
}

/// `γ′(s_k)` by finite differences.
pub fn gamma_d1<T: Real>(track: &EigenTrack<T>, k: usize) -> Result<T> {
    check_index(track, k)?;
    Ok(combine_scalars(track, k, &stencil_d1(track.grid_size(), k), T::one() / track.step()))
}

/// `γ″(s_k)` by finite differences.
pub fn gamma_d2<T: Real>(track: &EigenTrack<T>, k: usize) -> Result<T> {
    check_index(track, k)?;
    let h = track.step();
    Ok(combine_scalars(track, k, &stencil_d2(track.grid_size(), k), T::one() / (h * h)))
}

/// `(γ′_fd, ⟨φ|H′|φ⟩)` at grid point `k`.
pub fn hellmann_feynman<T: Real>(
    sched: &HamiltonianSchedule<T>,
    track: &EigenTrack<T>,
    k: usize,
) -> Result<(T, T)> {
    let fd = gamma_d1(track, k)?;
    let frame = &track.frames[k];
    let d1 = sched.eval_d1(frame.s)?;
    let z = frame.phi.inner(&d1.apply(&frame.phi));
    if z.im.abs() > T::tol(1e-10) * d1.max_abs().max(T::one()) {
        return Err(Error::NumericalFailure(format!(
            "expectation of H′ has imaginary part {}",
            z.im
        )));
    }
    Ok((fd, z.re))
}

/// Computed chain norms at one grid point next to their upper bounds.
///
/// The bounds use the derivatives of the γ-shifted path
/// `Ĥ(s) = H(s) − γ(s)𝟙`, i.e. `Ĥ′ = H′ − γ′𝟙` and `Ĥ″ = H″ − γ″𝟙`. On an
/// already shifted schedule the correction terms vanish.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ChainNorms<T> {
    pub s: T,
    pub gap: T,
    /// `‖Ĥ′(s)‖`
    pub h1: T,
    /// `‖Ĥ″(s)‖`
    pub h2: T,
    /// `‖φ′(s)‖`
    pub phi1_norm: T,
    /// `‖R(s)φ′(s)‖`
    pub r_phi1: T,
    /// `‖R′(s)φ′(s)‖`
    pub rp_phi1: T,
    /// `‖R(s)φ″(s)‖`
    pub r_phi2: T,
    /// `‖Ĥ′‖/λ(s)`, bound on `‖φ′‖`
    pub bound_phi1: T,
    /// `‖Ĥ′‖/λ²`
    pub bound_r_phi1: T,
    /// `2‖Ĥ′‖²/λ³`
    pub bound_rp_phi1: T,
    /// `‖Ĥ″‖/λ² + 2‖Ĥ′‖²/λ³`
    pub bound_r_phi2: T,
}

impl<T: Real> ChainNorms<T> {
    /// `(bound − value)` for `[‖φ′‖, ‖Rφ′‖, ‖R′φ′‖, ‖Rφ″‖]`; nonnegative when
    /// the inequality holds.
    pub fn margins(&self) -> [T; 4] {
        [
            self.bound_phi1 - self.phi1_norm,
            self.bound_r_phi1 - self.r_phi1,
            self.bound_rp_phi1 - self.rp_phi1,
            self.bound_r_phi2 - self.r_phi2,
        ]
    }
}

/// Shifted first and second derivative at grid point `k`.
pub(crate) fn shifted_derivatives<T: Real>(
    sched: &HamiltonianSchedule<T>,
    track: &EigenTrack<T>,
    k: usize,
) -> Result<(ComplexMatrix<T>, ComplexMatrix<T>)> {
    let s = track.frames[k].s;
    let (_, gamma1) = hellmann_feynman(sched, track, k)?;
    let gamma2 = gamma_d2(track, k)?;
    let h1 = sched.eval_d1(s)?.shift_diagonal(-gamma1);
    let h2 = sched.eval_d2(s)?.shift_diagonal(-gamma2);
    Ok((h1, h2))
}

/// Evaluates `‖Rφ′‖`, `‖R′φ′‖`, `‖Rφ″‖` and their bounds at grid point `k`,
/// with `R′ = −RP′ − P′R − RĤ′R` and `P′ = |φ′⟩⟨φ| + |φ⟩⟨φ′|`.
pub fn chain_norm_quantities<T: Real>(
    sched: &HamiltonianSchedule<T>,
    track: &EigenTrack<T>,
    k: usize,
) -> Result<ChainNorms<T>> {
    check_index(track, k)?;
    let frame = &track.frames[k];
    let (phi1, phi2) = phi_derivatives(track, k)?;
    let (hh1, hh2) = shifted_derivatives(sched, track, k)?;
    let r = &frame.resolvent;

    let p1 = &ComplexMatrix::outer(&phi1, &frame.phi) + &ComplexMatrix::outer(&frame.phi, &phi1);
    let mut r_prime = -&r.matmul(&p1);
    r_prime -= &p1.matmul(r);
    r_prime -= &r.matmul(&hh1).matmul(r);

    let n1 = operator_norm(&hh1)?;
    let n2 = operator_norm(&hh2)?;
    let gap = frame.gap;
    let two = T::lit(2.0);
    Ok(ChainNorms {
        s: frame.s,
        gap,
        h1: n1,
        h2: n2,
        phi1_norm: phi1.norm(),
        r_phi1: r.apply(&phi1).norm(),
        rp_phi1: r_prime.apply(&phi1).norm(),
        r_phi2: r.apply(&phi2).norm(),
        bound_phi1: n1 / gap,
        bound_r_phi1: n1 / (gap * gap),
        bound_rp_phi1: two * n1 * n1 / (gap * gap * gap),
        bound_r_phi2: n2 / (gap * gap) + two * n1 * n1 / (gap * gap * gap),
    })
}

/// `Ĥ(s) = H(s) − γ(s)𝟙` sampled on the track grid, as a tabulated schedule.
pub fn shift_schedule<T: Real>(
    sched: &HamiltonianSchedule<T>,
    track: &EigenTrack<T>,
) -> Result<HamiltonianSchedule<T>> {
    if sched.dim() != track.dim() {
        return Err(Error::DimensionMismatch {
            expected: sched.dim(),
            got: track.dim(),
        });
    }
    let samples = track
        .frames
        .iter()
        .map(|f| Ok((f.s, sched.eval(f.s)?.shift_diagonal(-f.gamma))))
        .collect::<Result<Vec<_>>>()?;
    HamiltonianSchedule::tabulated(samples)
}

pub(crate) fn trapezoid<T: Real>(values: &[T], h: T) -> T {
    let n = values.len();
    if n < 2 {
        return T::zero();
    }
    let inner: T = values[1..n - 1].iter().copied().sum();
    h * (inner + (values[0] + values[n - 1]) * T::lit(0.5))
}
