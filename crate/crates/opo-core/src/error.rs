//! Crate-wide error type.

use thiserror::Error;

#[derive(Error, Debug, Clone, PartialEq)]
pub enum Error {
    #[error("loss rate gamma[{0}] must be strictly positive")]
    NonPositiveLossRate(usize),

    #[error("coupling {0} must be non-negative")]
    NegativeCoupling(&'static str),

    #[error("parameters are not in the symmetric case: {0}")]
    AsymmetricParams(String),

    #[error("state has {got} components but {expected} were required")]
    ShapeMismatch { expected: usize, got: usize },

    #[error("drive sits within the marginal band of a threshold")]
    MarginalDrive,

    #[error("operation requires regime {expected}, solution is {got}")]
    WrongRegime { expected: &'static str, got: &'static str },

    #[error("eigenvalue iteration did not converge")]
    NoConvergence,

    #[error("Fock dimension {dim} exceeds the cap {cap}")]
    DimensionCap { dim: usize, cap: usize },

    #[error("top-level Fock population {population:.3e} exceeds {threshold:.3e}; result untrusted")]
    CutoffSaturation { population: f64, threshold: f64 },

    #[error("trajectory became non-finite or diverged at t = {t}")]
    NonFinite { t: f64 },

    #[error("trajectory not at steady state (drift norm {drift_norm:.3e}) when required")]
    NotAtSteadyState { drift_norm: f64 },

    #[error("ensemble of {n} trajectories is too small (need at least {min})")]
    InsufficientEnsemble { n: usize, min: usize },

    #[error("intensity too small to extract a phase-diffusion rate")]
    ZeroIntensity,

    #[error("invalid configuration: {0}")]
    InvalidConfig(String),

    #[error("scenario parse error: {0}")]
    Scenario(String),
}

pub type Result<T> = std::result::Result<T, Error>;
