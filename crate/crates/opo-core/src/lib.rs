//! Simulation and stability analysis of a five-mode resonant cascaded
//! optical parametric oscillator: a driven cavity in which a χ⁽²⁾ crystal
//! splits the pump (mode 0) into a signal/idler pair (1, 2) and a second
//! crystal splits the intermediate pump (2) into a further pair (3, 4).
//!
//! The crate provides:
//! - mean-field, positive-P and truncated-Wigner equations of motion
//!   ([`model`]),
//! - closed-form steady states with two oscillation thresholds
//!   ([`analytic`]),
//! - linearized drift matrices, eigenvalue and Routh-Hurwitz stability
//!   tests, and phase-diffusion rates ([`stability`]),
//! - deterministic and stochastic integrators with a reproducible parallel
//!   ensemble runner ([`integrate`]),
//! - a truncated-Fock-space master-equation oracle for low photon numbers
//!   ([`oracle`]),
//! - scenario files and protocols reproducing the characteristic dynamics
//!   ([`experiments`], [`scenario`]),
//! - the executable acceptance checks behind `opo verify` ([`acceptance`]).

pub mod acceptance;
pub mod analytic;
pub mod error;
pub mod experiments;
pub mod integrate;
pub mod linalg;
pub mod model;
pub mod oracle;
pub mod params;
pub mod scenario;
pub mod stability;
pub mod state;

pub use analytic::{Regime, RegimeSolution, SweepPoint};
pub use error::{Error, Result};
pub use integrate::{
    EnsembleStats, InitialState, IntegratorConfig, MomentSeries, Observable, Scheme, Trajectory,
};
pub use linalg::CMatrix;
pub use model::NoisePair;
pub use oracle::{DensityMatrix, FockConfig};
pub use params::{DimensionlessParams, SystemParams, Topology};
pub use scenario::{Protocol, Scenario};
pub use stability::{LinearSubsystem, StabilityReport, Verdict};
pub use state::{PhaseSpaceState, Representation};
