//! Drift and noise evaluators for the cascaded-OPO equations of motion.
//!
//! Classical (mean-field):
//!   α̇₀ = −γ₀α₀ + E₀ − χ₁α₁α₂
//!   α̇₁ = −γ₁α₁ + χ₁α₀α₂*
//!   α̇₂ = −γ₂α₂ + χ₁α₀α₁* − χ₂α₃α₄
//!   α̇₃ = −γ₃α₃ + χ₂α₂α₄*
//!   α̇₄ = −γ₄α₄ + χ₂α₂α₃*
//! with an optional −iΔⱼαⱼ detuning on each mode. The positive-P drift has
//! the same form with the independent α⁺ in place of α*, plus the mirrored
//! conjugate-sector equations (E₀ ↔ E₀*). The truncated Wigner drift is the
//! classical form; its noise is additive, √γᵢ per mode.
//!
//! Degenerate topology (modes 1 ≡ 3 ≡ 4, second stage 2 → 1 + 1, coupling
//! written with the χ₂/2 two-photon convention):
//!   α̇₁ += χ₂α₂α₁*,   α̇₂ −= (χ₂/2)α₁².
//!
//! Positive-P noise enters as pair-correlated channels: modes (1,2) share
//! the amplitude √(χ₁α₀), modes (3,4) share √(χ₂α₂), and the conjugate
//! sector carries √(χ₁α₀⁺), √(χ₂α₂⁺). Square roots take the principal
//! branch; a branch flip only changes the sign of a zero-mean noise.

use num_complex::Complex64;

use crate::error::Result;
use crate::linalg::CMatrix;
use crate::params::{SystemParams, Topology};
use crate::state::{PhaseSpaceState, Representation};

/// −(γ + iΔ)·α
#[inline]
fn decay(gamma: f64, delta: f64, a: Complex64) -> Complex64 {
    Complex64::new(-gamma, -delta) * a
}

/// −(γ − iΔ)·α⁺, the conjugate-sector version.
#[inline]
fn decay_conj(gamma: f64, delta: f64, a: Complex64) -> Complex64 {
    Complex64::new(-gamma, delta) * a
}

fn classical_nondeg(a: &[Complex64], p: &SystemParams, out: &mut [Complex64]) {
    let g = &p.gamma;
    let d = &p.detuning;
    out[0] = decay(g[0], d[0], a[0]) + p.drive - p.chi1 * (a[1] * a[2]);
    out[1] = decay(g[1], d[1], a[1]) + p.chi1 * (a[0] * a[2].conj());
    out[2] = decay(g[2], d[2], a[2]) + p.chi1 * (a[0] * a[1].conj()) - p.chi2 * (a[3] * a[4]);
    out[3] = decay(g[3], d[3], a[3]) + p.chi2 * (a[2] * a[4].conj());
    out[4] = decay(g[4], d[4], a[4]) + p.chi2 * (a[2] * a[3].conj());
}

fn classical_deg(a: &[Complex64], p: &SystemParams, out: &mut [Complex64]) {
    let g = &p.gamma;
    let d = &p.detuning;
    out[0] = decay(g[0], d[0], a[0]) + p.drive - p.chi1 * (a[1] * a[2]);
    out[1] = decay(g[1], d[1], a[1]) + p.chi1 * (a[0] * a[2].conj()) + p.chi2 * (a[2] * a[1].conj());
    out[2] = decay(g[2], d[2], a[2]) + p.chi1 * (a[0] * a[1].conj()) - 0.5 * p.chi2 * (a[1] * a[1]);
}

fn positive_p_nondeg(a: &[Complex64], p: &SystemParams, out: &mut [Complex64]) {
    let g = &p.gamma;
    let d = &p.detuning;
    // α sector
    out[0] = decay(g[0], d[0], a[0]) + p.drive - p.chi1 * (a[1] * a[2]);
    out[1] = decay(g[1], d[1], a[1]) + p.chi1 * (a[0] * a[7]);
    out[2] = decay(g[2], d[2], a[2]) + p.chi1 * (a[0] * a[6]) - p.chi2 * (a[3] * a[4]);
    out[3] = decay(g[3], d[3], a[3]) + p.chi2 * (a[2] * a[9]);
    out[4] = decay(g[4], d[4], a[4]) + p.chi2 * (a[2] * a[8]);
    // α⁺ sector: conjugate form, E₀ → E₀*
    out[5] = decay_conj(g[0], d[0], a[5]) + p.drive.conj() - p.chi1 * (a[6] * a[7]);
    out[6] = decay_conj(g[1], d[1], a[6]) + p.chi1 * (a[5] * a[2]);
    out[7] = decay_conj(g[2], d[2], a[7]) + p.chi1 * (a[5] * a[1]) - p.chi2 * (a[8] * a[9]);
    out[8] = decay_conj(g[3], d[3], a[8]) + p.chi2 * (a[7] * a[4]);
    out[9] = decay_conj(g[4], d[4], a[9]) + p.chi2 * (a[7] * a[3]);
}

fn positive_p_deg(a: &[Complex64], p: &SystemParams, out: &mut [Complex64]) {
    let g = &p.gamma;
    let d = &p.detuning;
    out[0] = decay(g[0], d[0], a[0]) + p.drive - p.chi1 * (a[1] * a[2]);
    out[1] = decay(g[1], d[1], a[1]) + p.chi1 * (a[0] * a[5]) + p.chi2 * (a[2] * a[4]);
    out[2] = decay(g[2], d[2], a[2]) + p.chi1 * (a[0] * a[4]) - 0.5 * p.chi2 * (a[1] * a[1]);
    out[3] = decay_conj(g[0], d[0], a[3]) + p.drive.conj() - p.chi1 * (a[4] * a[5]);
    out[4] = decay_conj(g[1], d[1], a[4]) + p.chi1 * (a[3] * a[2]) + p.chi2 * (a[5] * a[1]);
    out[5] = decay_conj(g[2], d[2], a[5]) + p.chi1 * (a[3] * a[1]) - 0.5 * p.chi2 * (a[4] * a[4]);
}

/// Drift evaluation on raw slices; `out.len()` must match `a.len()`.
pub(crate) fn drift_slice(
    representation: Representation,
    topology: Topology,
    a: &[Complex64],
    p: &SystemParams,
    out: &mut [Complex64],
) {
    debug_assert_eq!(a.len(), representation.n_components(topology));
    debug_assert_eq!(out.len(), a.len());
    match (representation, topology) {
        (Representation::PositiveP, Topology::Nondegenerate) => positive_p_nondeg(a, p, out),
        (Representation::PositiveP, Topology::Degenerate) => positive_p_deg(a, p, out),
        (_, Topology::Nondegenerate) => classical_nondeg(a, p, out),
        (_, Topology::Degenerate) => classical_deg(a, p, out),
    }
}

fn drift_checked(
    s: &PhaseSpaceState,
    p: &SystemParams,
    representation: Representation,
) -> Result<Vec<Complex64>> {
    s.check_shape(representation, p.topology)?;
    let mut out = vec![Complex64::new(0.0, 0.0); s.n_components()];
    drift_slice(representation, p.topology, &s.amplitudes, p, &mut out);
    Ok(out)
}

/// Mean-field derivative (α̇₀..α̇₄, or three modes for the degenerate case).
pub fn classical_drift(s: &PhaseSpaceState, p: &SystemParams) -> Result<Vec<Complex64>> {
    drift_checked(s, p, Representation::Classical)
}

/// Deterministic part of the positive-P equations over (α, α⁺).
pub fn positive_p_drift(s: &PhaseSpaceState, p: &SystemParams) -> Result<Vec<Complex64>> {
    drift_checked(s, p, Representation::PositiveP)
}

/// Truncated-Wigner drift: the classical form with α* from the stored
/// amplitudes.
pub fn wigner_drift(s: &PhaseSpaceState, p: &SystemParams) -> Result<Vec<Complex64>> {
    drift_checked(s, p, Representation::Wigner)
}

/// One pair-correlated positive-P noise channel. The two target components
/// receive ζ_a and ζ_b with ⟨ζ_a ζ_b⟩ = δ(t−t′), both scaled by
/// `amplitude`. Equal targets denote a single self-correlated real channel
/// (degenerate second stage).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NoisePair {
    pub targets: (usize, usize),
    pub amplitude: Complex64,
}

/// The stochastic coefficients of the positive-P equations at the current
/// state. Zero amplitudes are valid (noiseless vacuum).
pub fn positive_p_noise_coefficients(
    s: &PhaseSpaceState,
    p: &SystemParams,
) -> Result<Vec<NoisePair>> {
    s.check_shape(Representation::PositiveP, p.topology)?;
    Ok(noise_pairs(p.topology, &s.amplitudes, p).to_vec())
}

pub(crate) fn noise_pairs(
    topology: Topology,
    a: &[Complex64],
    p: &SystemParams,
) -> [NoisePair; 4] {
    match topology {
        Topology::Nondegenerate => [
            NoisePair { targets: (1, 2), amplitude: (p.chi1 * a[0]).sqrt() },
            NoisePair { targets: (3, 4), amplitude: (p.chi2 * a[2]).sqrt() },
            NoisePair { targets: (6, 7), amplitude: (p.chi1 * a[5]).sqrt() },
            NoisePair { targets: (8, 9), amplitude: (p.chi2 * a[7]).sqrt() },
        ],
        Topology::Degenerate => [
            NoisePair { targets: (1, 2), amplitude: (p.chi1 * a[0]).sqrt() },
            NoisePair { targets: (1, 1), amplitude: (p.chi2 * a[2]).sqrt() },
            NoisePair { targets: (4, 5), amplitude: (p.chi1 * a[3]).sqrt() },
            NoisePair { targets: (4, 4), amplitude: (p.chi2 * a[5]).sqrt() },
        ],
    }
}

/// Wigner noise amplitudes √γᵢ, one independent complex noise per mode.
pub fn wigner_noise_amplitudes(p: &SystemParams) -> Vec<f64> {
    (0..p.n_modes()).map(|i| p.gamma[i].sqrt()).collect()
}

/// Jacobian of the positive-P drift over the doubled phase space
/// (α₀..α_m, α₀⁺..α_m⁺), evaluated at `s`. Classical and Wigner states are
/// lifted with α⁺ = α*; the result is then the stability Jacobian of the
/// mean-field flow with (α, α*) treated as independent.
pub fn drift_jacobian_doubled(s: &PhaseSpaceState, p: &SystemParams) -> Result<CMatrix> {
    let lifted = s.to_positive_p();
    lifted.check_shape(Representation::PositiveP, p.topology)?;
    let a = &lifted.amplitudes;
    let n = a.len();
    let mut j = CMatrix::zeros(n);
    let g = &p.gamma;
    let d = &p.detuning;
    let c1 = Complex64::new(p.chi1, 0.0);
    let c2 = Complex64::new(p.chi2, 0.0);
    match p.topology {
        Topology::Nondegenerate => {
            // α sector
            j[(0, 0)] = Complex64::new(-g[0], -d[0]);
            j[(0, 1)] = -c1 * a[2];
            j[(0, 2)] = -c1 * a[1];
            j[(1, 1)] = Complex64::new(-g[1], -d[1]);
            j[(1, 0)] = c1 * a[7];
            j[(1, 7)] = c1 * a[0];
            j[(2, 2)] = Complex64::new(-g[2], -d[2]);
            j[(2, 0)] = c1 * a[6];
            j[(2, 6)] = c1 * a[0];
            j[(2, 3)] = -c2 * a[4];
            j[(2, 4)] = -c2 * a[3];
            j[(3, 3)] = Complex64::new(-g[3], -d[3]);
            j[(3, 2)] = c2 * a[9];
            j[(3, 9)] = c2 * a[2];
            j[(4, 4)] = Complex64::new(-g[4], -d[4]);
            j[(4, 2)] = c2 * a[8];
            j[(4, 8)] = c2 * a[2];
            // α⁺ sector
            j[(5, 5)] = Complex64::new(-g[0], d[0]);
            j[(5, 6)] = -c1 * a[7];
            j[(5, 7)] = -c1 * a[6];
            j[(6, 6)] = Complex64::new(-g[1], d[1]);
            j[(6, 5)] = c1 * a[2];
            j[(6, 2)] = c1 * a[5];
            j[(7, 7)] = Complex64::new(-g[2], d[2]);
            j[(7, 5)] = c1 * a[1];
            j[(7, 1)] = c1 * a[5];
            j[(7, 8)] = -c2 * a[9];
            j[(7, 9)] = -c2 * a[8];
            j[(8, 8)] = Complex64::new(-g[3], d[3]);
            j[(8, 7)] = c2 * a[4];
            j[(8, 4)] = c2 * a[7];
            j[(9, 9)] = Complex64::new(-g[4], d[4]);
            j[(9, 7)] = c2 * a[3];
            j[(9, 3)] = c2 * a[7];
        }
        Topology::Degenerate => {
            j[(0, 0)] = Complex64::new(-g[0], -d[0]);
            j[(0, 1)] = -c1 * a[2];
            j[(0, 2)] = -c1 * a[1];
            j[(1, 1)] = Complex64::new(-g[1], -d[1]);
            j[(1, 0)] = c1 * a[5];
            j[(1, 5)] = c1 * a[0];
            j[(1, 2)] = c2 * a[4];
            j[(1, 4)] = c2 * a[2];
            j[(2, 2)] = Complex64::new(-g[2], -d[2]);
            j[(2, 0)] = c1 * a[4];
            j[(2, 4)] = c1 * a[0];
            j[(2, 1)] = -c2 * a[1];
            j[(3, 3)] = Complex64::new(-g[0], d[0]);
            j[(3, 4)] = -c1 * a[5];
            j[(3, 5)] = -c1 * a[4];
            j[(4, 4)] = Complex64::new(-g[1], d[1]);
            j[(4, 3)] = c1 * a[2];
            j[(4, 2)] = c1 * a[3];
            j[(4, 5)] = c2 * a[1];
            j[(4, 1)] = c2 * a[5];
            j[(5, 5)] = Complex64::new(-g[2], d[2]);
            j[(5, 3)] = c1 * a[1];
            j[(5, 1)] = c1 * a[3];
            j[(5, 4)] = -c2 * a[4];
        }
    }
    Ok(j)
}
