//! Numerical laboratory for adiabatic quantum evolution.
//!
//! The crate propagates states under slowly varying Hamiltonians `H(t/T)`,
//! follows a non-degenerate eigenbranch along the path with a parallel
//! transport gauge, and evaluates closed-form evolution-time bounds against
//! the measured deviation `‖φ(1) − ψ(1)‖`.
//!
//! All numerics are generic over [`Real`] (`f32` or `f64`); the `*64`
//! aliases below fix the double-precision instantiation used by the CLI.

pub mod bounds;
pub mod error;
pub mod matcore;
pub mod propagator;
pub mod scalar;
pub mod schedule;
pub mod spectral;

pub use error::{Error, Result};
pub use matcore::{ComplexMatrix, EigenDecomposition, StateVector};
pub use scalar::Real;
pub use schedule::{DerivativeNorms, HamiltonianSchedule, ScheduleKindTag};

pub type ComplexMatrix64 = ComplexMatrix<f64>;
pub type ComplexMatrix32 = ComplexMatrix<f32>;
pub type StateVector64 = StateVector<f64>;
pub type StateVector32 = StateVector<f32>;
pub type Schedule64 = HamiltonianSchedule<f64>;
pub type Schedule32 = HamiltonianSchedule<f32>;



pub use bounds::BoundReport;
pub use propagator::{PropagationConfig, PropagationResult};
pub use spectral::EigenTrack;

pub type EigenTrack64 = EigenTrack<f64>;
pub type PropagationResult64 = PropagationResult<f64>;
pub type BoundReport64 = BoundReport<f64>;
