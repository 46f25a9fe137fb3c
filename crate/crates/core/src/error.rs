use thiserror::Error;

/// Errors raised by the laboratory.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("invalid parameter `{name}`: {reason}")]
    InvalidParameter { name: &'static str, reason: String },

    #[error("memory kernel has zero mass on (tau1, tau2)")]
    ZeroKernelMass,

    #[error("matrix is not symmetric (|m12 - m21| = {0:e})")]
    NotSymmetric(f64),

    #[error("length condition violated: L = {length} >= sqrt(3b/a)*pi = {critical}")]
    LengthConditionViolated { length: f64, critical: f64 },

    #[error("certificate `{0}` failed")]
    CertificateFailed(&'static str),

    #[error("radius r = {r} exceeds r_max = {r_max}")]
    RadiusTooLarge { r: f64, r_max: f64 },

    #[error("quadrature did not converge (achieved error estimate {achieved:e}, requested {requested:e})")]
    QuadratureNotConverged { achieved: f64, requested: f64 },

    #[error("grid too small: N = {n}, need at least {min}")]
    GridTooSmall { n: usize, min: usize },

    #[error("insufficient history: need lag {needed}, buffer holds {available}")]
    InsufficientHistory { needed: f64, available: f64 },

    #[error("singular linear system: {0}")]
    SingularSystem(String),

    #[error("non-finite state at step {step} (t = {time})")]
    NonFinite { step: usize, time: f64 },

    #[error("nothing to fit: no positive energy in the fit window")]
    NothingToFit,

    #[error("too few records for a fit: {found} (need {needed})")]
    TooFewRecords { found: usize, needed: usize },

    #[error("requires a linear-only trajectory")]
    RequiresLinear,

    #[error("eigensolver did not converge for L = {0}")]
    EigenNotConverged(f64),
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn invalid(name: &'static str, reason: impl Into<String>) -> Error {
    Error::InvalidParameter {
        name,
        reason: reason.into(),
    }
}
