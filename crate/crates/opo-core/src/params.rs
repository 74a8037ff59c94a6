//! System parameters, validation and dimensionless scaling.
//!
//! Rates follow the amplitude-decay convention: a free mode obeys
//! α̇ᵢ = −γᵢ αᵢ, so intensities decay at 2γᵢ.

use num_complex::Complex64;

use crate::error::{Error, Result};

/// Relative tolerance for the symmetric-case preconditions
/// (γ₁ = γ₂ = γ₃ = γ₄ and χ₁ = χ₂).
pub const SYMMETRY_REL_TOL: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Topology {
    /// Five distinguishable modes: 0 → 1 + 2, then 2 → 3 + 4.
    Nondegenerate,
    /// Modes 1, 3, 4 identified; the state collapses to modes 0, 1, 2 with
    /// 2 → 1 + 1 in the second stage.
    Degenerate,
}

impl Topology {
    /// Number of distinct cavity modes.
    pub fn n_modes(self) -> usize {
        match self {
            Topology::Nondegenerate => 5,
            Topology::Degenerate => 3,
        }
    }
}

/// Loss rates, couplings, drive and optional detunings of the cascaded
/// cavity.
#[derive(Debug, Clone, PartialEq)]
pub struct SystemParams {
    /// Loss rates γ₀..γ₄ (only γ₀..γ₂ apply to the degenerate topology).
    pub gamma: [f64; 5],
    /// First-stage coupling χ₁ (0 → 1 + 2).
    pub chi1: f64,
    /// Second-stage coupling χ₂ (2 → 3 + 4, or 2 → 1 + 1 degenerate).
    pub chi2: f64,
    /// Complex drive amplitude E₀ on mode 0.
    pub drive: Complex64,
    /// Detunings Δ₀..Δ₄, zero by default.
    pub detuning: [f64; 5],
    pub topology: Topology,
}

impl SystemParams {
    /// Symmetric nondegenerate set: γ₁ = γ₂ = γ₃ = γ₄ = `gamma`,
    /// χ₁ = χ₂ = `chi`, real drive.
    pub fn symmetric(gamma0: f64, gamma: f64, chi: f64, drive: f64) -> Self {
        Self {
            gamma: [gamma0, gamma, gamma, gamma, gamma],
            chi1: chi,
            chi2: chi,
            drive: Complex64::new(drive, 0.0),
            detuning: [0.0; 5],
            topology: Topology::Nondegenerate,
        }
    }

    pub fn n_modes(&self) -> usize {
        self.topology.n_modes()
    }

    pub fn with_drive(mut self, drive: Complex64) -> Self {
        self.drive = drive;
        self
    }

    /// Validate the invariants: γᵢ > 0 for every active mode, χ₁, χ₂ ≥ 0.
    pub fn validate(&self) -> Result<()> {
        for i in 0..self.n_modes() {
            if !(self.gamma[i] > 0.0) {
                return Err(Error::NonPositiveLossRate(i));
            }
        }
        if !(self.chi1 >= 0.0) {
            return Err(Error::NegativeCoupling("chi1"));
        }
        if !(self.chi2 >= 0.0) {
            return Err(Error::NegativeCoupling("chi2"));
        }
        Ok(())
    }

    /// Mean non-pump loss rate; the reference γ for scales such as the
    /// default seed amplitude when the parameters are not symmetric.
    pub fn gamma_signal_mean(&self) -> f64 {
        let n = self.n_modes();
        self.gamma[1..n].iter().sum::<f64>() / (n - 1) as f64
    }

    pub fn chi_mean(&self) -> f64 {
        0.5 * (self.chi1 + self.chi2)
    }

    fn rel_eq(a: f64, b: f64) -> bool {
        (a - b).abs() <= SYMMETRY_REL_TOL * a.abs().max(b.abs())
    }

    /// The symmetric case underlying every closed form: equal non-pump
    /// losses and equal couplings, nondegenerate topology.
    pub fn require_symmetric(&self) -> Result<(f64, f64, f64)> {
        if self.topology != Topology::Nondegenerate {
            return Err(Error::AsymmetricParams(
                "degenerate topology has no closed-form steady states".into(),
            ));
        }
        let g = self.gamma;
        for i in 2..5 {
            if !Self::rel_eq(g[1], g[i]) {
                return Err(Error::AsymmetricParams(format!(
                    "gamma[1] = {} but gamma[{}] = {}",
                    g[1], i, g[i]
                )));
            }
        }
        if !Self::rel_eq(self.chi1, self.chi2) {
            return Err(Error::AsymmetricParams(format!(
                "chi1 = {} but chi2 = {}",
                self.chi1, self.chi2
            )));
        }
        Ok((g[0], g[1], self.chi1))
    }
}

/// The three dimensionless numbers that fix the scaled dynamics, plus the
/// time-scale factor γ (τ = γ·t).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DimensionlessParams {
    /// g = χ/γ.
    pub g: f64,
    /// γ_r = γ₀/γ.
    pub gamma_r: f64,
    /// ε = |E₀| / |E_thr,1| with |E_thr,1| = γ₀γ/χ.
    pub epsilon: f64,
    /// γ itself, converting t to τ = γ·t.
    pub tau_scale: f64,
}

/// Reduce a symmetric parameter set to (g, γ_r, ε, γ).
pub fn to_dimensionless(p: &SystemParams) -> Result<DimensionlessParams> {
    p.validate()?;
    let (gamma0, gamma, chi) = p.require_symmetric()?;
    let e_thr1 = gamma0 * gamma / chi;
    Ok(DimensionlessParams {
        g: chi / gamma,
        gamma_r: gamma0 / gamma,
        epsilon: p.drive.norm() / e_thr1,
        tau_scale: gamma,
    })
}
