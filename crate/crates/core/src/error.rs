use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("invalid truncation: {0}")]
    InvalidTruncation(String),

    #[error("truncation tail mass {tail:.3e} exceeds tolerance {tolerance:.3e} (n_max = {n_max})")]
    TruncationTail { tail: f64, tolerance: f64, n_max: usize },

    #[error("dimension mismatch: {left} vs {right}")]
    DimensionMismatch { left: usize, right: usize },

    #[error("expectation value has imaginary residue {residue:.3e}; state is corrupted")]
    ImaginaryExpectation { residue: f64 },

    #[error("unsupported moment power {0}; expected 1 or 2")]
    UnsupportedPower(u32),

    #[error("norm drift {drift:.3e} exceeds {limit:.1e}: {context}")]
    NormDrift { drift: f64, limit: f64, context: String },

    #[error("trace drift {drift:.3e} exceeds {limit:.1e} at t = {t}")]
    TraceDrift { drift: f64, limit: f64, t: f64 },

    #[error("hermiticity drift {drift:.3e} exceeds {limit:.1e} at t = {t}")]
    HermiticityDrift { drift: f64, limit: f64, t: f64 },

    #[error("non-finite coordinates at t = {t}; time step too large")]
    NonFinite { t: f64 },

    #[error("pulse windows overlap: [{a0}, {a1}] and [{b0}, {b1}]")]
    OverlappingPulses { a0: f64, a1: f64, b0: f64, b1: f64 },

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("sample times must be strictly increasing and not precede the start time")]
    InvalidSampleTimes,

    #[error("series undersampled: {points_per_tc:.1} points per collapse time, need {required}")]
    Undersampled { points_per_tc: f64, required: f64 },

    #[error("time series do not overlap")]
    DisjointSeries,

    #[error("phase-space grid captures only {integral:.6} of the distribution")]
    CoverageDeficit { integral: f64 },
}

impl Error {
    /// True for failures that signal an inadequate numerical setting (time step,
    /// truncation) rather than bad input.
    pub fn is_numerical(&self) -> bool {
        matches!(
            self,
            Error::TruncationTail { .. }
                | Error::ImaginaryExpectation { .. }
                | Error::NormDrift { .. }
                | Error::TraceDrift { .. }
                | Error::HermiticityDrift { .. }
                | Error::NonFinite { .. }
                | Error::CoverageDeficit { .. }
        )
    }
}
