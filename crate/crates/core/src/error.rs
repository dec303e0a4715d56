use thiserror::Error;

/// Failure modes shared across the crate.
///
/// Numeric payloads are stored as `f64` regardless of the scalar type the
/// computation ran in, so errors can be reported and serialized uniformly.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("matrix is not Hermitian (max deviation {deviation:e})")]
    NotHermitian { deviation: f64 },
    #[error("state vector is not normalized (norm {norm})")]
    NotNormalized { norm: f64 },
    #[error("numerical failure: {0}")]
    NumericalFailure(String),
    #[error("schedule parameter s = {s} is outside [0, 1]")]
    OutOfRange { s: f64 },
    #[error("tabulated schedule has no samples covering s = {s}")]
    InterpolationGap { s: f64 },
    #[error("spectral gap collapsed to {gap:e} at s = {s}")]
    GapCollapse { s: f64, gap: f64 },
    #[error("eigenbranch continuity lost at s = {s} (overlap {overlap:.4}); try doubling the grid size")]
    ContinuityLoss { s: f64, overlap: f64 },
    #[error("invalid configuration: {0}")]
    ConfigInvalid(String),
    #[error("domain error: {0}")]
    DomainError(String),
    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },
    #[error("malformed input: {0}")]
    Parse(String),
}

impl Error {
    /// Short machine-readable tag, used in error reports.
    pub fn kind(&self) -> &'static str {
        match self {
            Error::NotHermitian { .. } => "NotHermitian",
            Error::NotNormalized { .. } => "NotNormalized",
            Error::NumericalFailure(_) => "NumericalFailure",
            Error::OutOfRange { .. } => "OutOfRange",
            Error::InterpolationGap { .. } => "InterpolationGap",
            Error::GapCollapse { .. } => "GapCollapse",
            Error::ContinuityLoss { .. } => "ContinuityLoss",
            Error::ConfigInvalid(_) => "ConfigInvalid",
            Error::DomainError(_) => "DomainError",
            Error::DimensionMismatch { .. } => "DimensionMismatch",
            Error::Parse(_) => "Parse",
        }
    }
}

pub type Result<T> = std::result::Result<T, Error>;
