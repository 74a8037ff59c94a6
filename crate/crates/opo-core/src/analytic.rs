//! Closed-form steady states, thresholds and regime classification for the
//! symmetric case γ₁ = γ₂ = γ₃ = γ₄ ≡ γ, χ₁ = χ₂ ≡ χ.
//!
//! Two thresholds split the drive axis into three regimes:
//!   |E_thr,1|² = γ₀²γ²/χ²,     |E_thr,2|² = |E_thr,1|²·(1 + γ/γ₀)².
//!
//! Below threshold only the pump is occupied, n₀⁰ = |E₀|²/γ₀². Between the
//! thresholds the pump clamps at n₀⁰ = γ²/χ² and
//! n₁⁰ = n₂⁰ = |E₀|/χ − γ₀γ/χ². Above the second threshold
//! n₀⁰ = n₁⁰ = |E₀|²/(γ₀+γ)², n₂⁰ = γ²/χ², n₃⁰ = n₄⁰ = n₁⁰ − n₂⁰, with the
//! bookkeeping identity n₁⁰ = n₂⁰ + n₃⁰.

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::params::SystemParams;
use crate::state::{PhaseSpaceState, Representation};

/// Relative half-width of the marginal band around each threshold.
pub const MARGINAL_REL_TOL: f64 = 1e-9;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Regime {
    BelowThreshold,
    FirstAbove,
    SecondAbove,
    /// |E₀|² within the marginal band of a threshold; closed forms would
    /// linearize to a zero eigenvalue there.
    Marginal,
}

impl Regime {
    pub fn label(self) -> &'static str {
        match self {
            Regime::BelowThreshold => "below-threshold",
            Regime::FirstAbove => "first-above-threshold",
            Regime::SecondAbove => "second-above-threshold",
            Regime::Marginal => "marginal",
        }
    }
}

/// One linear relation among the mode phases:
/// Σ coeffs[i]·φᵢ = target (radians). The drive phase enters through the
/// target value.
#[derive(Debug, Clone, PartialEq)]
pub struct PhaseConstraint {
    pub coeffs: Vec<f64>,
    pub target: f64,
    pub label: String,
}

/// A phase combination with no steady value (free to diffuse).
#[derive(Debug, Clone, PartialEq)]
pub struct FreePhase {
    pub coeffs: Vec<f64>,
    pub label: String,
}

/// Closed-form steady state of one regime.
#[derive(Debug, Clone, PartialEq)]
pub struct RegimeSolution {
    pub regime: Regime,
    /// n₀⁰..n₄⁰ in photon-number units.
    pub intensities: [f64; 5],
    pub phase_constraints: Vec<PhaseConstraint>,
    pub free_phases: Vec<FreePhase>,
    /// (|E_thr,1|², |E_thr,2|²).
    pub thresholds: (f64, f64),
}

/// (|E_thr,1|², |E_thr,2|²) for a symmetric parameter set.
pub fn thresholds(p: &SystemParams) -> Result<(f64, f64)> {
    p.validate()?;
    let (gamma0, gamma, chi) = p.require_symmetric()?;
    let thr1 = (gamma0 * gamma / chi).powi(2);
    let ratio = 1.0 + gamma / gamma0;
    Ok((thr1, thr1 * ratio * ratio))
}

/// Threshold drive amplitudes (|E_thr,1|, |E_thr,2|) extended to unequal
/// loss rates; used to normalize scenario drives. Reduces to the square
/// roots of [`thresholds`] in the symmetric case. For the degenerate
/// topology the second-stage pair (3,4) is replaced by two copies of
/// mode 1.
pub fn generalized_threshold_amplitudes(p: &SystemParams) -> Result<(f64, f64)> {
    p.validate()?;
    if p.chi1 <= 0.0 || p.chi2 <= 0.0 {
        return Err(Error::InvalidConfig("thresholds need positive couplings".into()));
    }
    let g = &p.gamma;
    let (g3, g4) = match p.topology {
        crate::params::Topology::Nondegenerate => (g[3], g[4]),
        crate::params::Topology::Degenerate => (g[1], g[1]),
    };
    let e1 = g[0] * (g[1] * g[2]).sqrt() / p.chi1;
    // Second threshold: the regime-2 intermediate-pump intensity reaches the
    // (3,4)-pair instability at χ₂²n₂⁰ = γ₃γ₄.
    let e2 = e1 + p.chi1 * (g[2] / g[1]).sqrt() * g3 * g4 / (p.chi2 * p.chi2);
    Ok((e1, e2))
}

/// Strict three-way classification with a marginal band of relative width
/// [`MARGINAL_REL_TOL`] around each threshold.
pub fn classify_regime(p: &SystemParams) -> Result<Regime> {
    let (thr1, thr2) = thresholds(p)?;
    let e2 = p.drive.norm_sqr();
    if (e2 - thr1).abs() <= MARGINAL_REL_TOL * thr1 || (e2 - thr2).abs() <= MARGINAL_REL_TOL * thr2
    {
        return Ok(Regime::Marginal);
    }
    Ok(if e2 < thr1 {
        Regime::BelowThreshold
    } else if e2 < thr2 {
        Regime::FirstAbove
    } else {
        Regime::SecondAbove
    })
}

fn phi_constraint(coeffs: [f64; 5], target: f64, label: &str) -> PhaseConstraint {
    PhaseConstraint { coeffs: coeffs.to_vec(), target, label: label.into() }
}

/// Closed-form steady state for the regime selected by the drive.
pub fn steady_state(p: &SystemParams) -> Result<RegimeSolution> {
    let (thr1, thr2) = thresholds(p)?;
    let regime = classify_regime(p)?;
    let (gamma0, gamma, chi) = p.require_symmetric()?;
    let e_abs = p.drive.norm();
    let phi_drive = if e_abs > 0.0 { p.drive.arg() } else { 0.0 };

    let pump_phase = phi_constraint([1.0, 0.0, 0.0, 0.0, 0.0], phi_drive, "phi0 = phi_drive");
    let pair1_phase =
        phi_constraint([-1.0, 1.0, 1.0, 0.0, 0.0], 0.0, "phi1 + phi2 - phi0 = 0");
    let pair2_phase =
        phi_constraint([0.0, 0.0, -1.0, 1.0, 1.0], 0.0, "phi3 + phi4 - phi2 = 0");
    let free12 = FreePhase { coeffs: vec![0.0, 1.0, -1.0, 0.0, 0.0], label: "phi1 - phi2".into() };
    let free34 = FreePhase { coeffs: vec![0.0, 0.0, 0.0, 1.0, -1.0], label: "phi3 - phi4".into() };

    match regime {
        Regime::Marginal => Err(Error::MarginalDrive),
        Regime::BelowThreshold => Ok(RegimeSolution {
            regime,
            intensities: [e_abs * e_abs / (gamma0 * gamma0), 0.0, 0.0, 0.0, 0.0],
            phase_constraints: vec![pump_phase],
            free_phases: vec![],
            thresholds: (thr1, thr2),
        }),
        Regime::FirstAbove => {
            let n0 = gamma * gamma / (chi * chi);
            let n1 = e_abs / chi - gamma0 * gamma / (chi * chi);
            Ok(RegimeSolution {
                regime,
                intensities: [n0, n1, n1, 0.0, 0.0],
                phase_constraints: vec![pump_phase, pair1_phase],
                free_phases: vec![free12],
                thresholds: (thr1, thr2),
            })
        }
        Regime::SecondAbove => {
            let n1 = e_abs * e_abs / ((gamma0 + gamma) * (gamma0 + gamma));
            let n2 = gamma * gamma / (chi * chi);
            let n3 = n1 - n2;
            Ok(RegimeSolution {
                regime,
                intensities: [n1, n1, n2, n3, n3],
                phase_constraints: vec![pump_phase, pair1_phase, pair2_phase],
                free_phases: vec![free12, free34],
                thresholds: (thr1, thr2),
            })
        }
    }
}

/// Regime-2 intensities evaluated from the closed form regardless of the
/// actual regime; the linearized α̃ block built on these localizes the
/// second threshold.
pub fn regime2_intensities_unchecked(p: &SystemParams) -> Result<(f64, f64)> {
    let (gamma0, gamma, chi) = p.require_symmetric()?;
    let n0 = gamma * gamma / (chi * chi);
    let n1 = p.drive.norm() / chi - gamma0 * gamma / (chi * chi);
    Ok((n0, n1))
}

/// Instantiate a classical state from a solution, fixing the free phases
/// (defaults to zero when `free` is empty). Free-phase order follows
/// `RegimeSolution::free_phases`.
pub fn concrete_state(sol: &RegimeSolution, p: &SystemParams, free: &[f64]) -> PhaseSpaceState {
    let phi_drive = if p.drive.norm() > 0.0 { p.drive.arg() } else { 0.0 };
    let n = &sol.intensities;
    let f12 = free.first().copied().unwrap_or(0.0);
    let f34 = free.get(1).copied().unwrap_or(0.0);
    let mut phases = [0.0f64; 5];
    phases[0] = phi_drive;
    match sol.regime {
        Regime::BelowThreshold | Regime::Marginal => {}
        Regime::FirstAbove => {
            phases[1] = 0.5 * (phi_drive + f12);
            phases[2] = 0.5 * (phi_drive - f12);
        }
        Regime::SecondAbove => {
            phases[1] = 0.5 * (phi_drive + f12);
            phases[2] = 0.5 * (phi_drive - f12);
            phases[3] = 0.5 * (phases[2] + f34);
            phases[4] = 0.5 * (phases[2] - f34);
        }
    }
    let amps = (0..5)
        .map(|i| Complex64::from_polar(n[i].max(0.0).sqrt(), phases[i]))
        .collect();
    PhaseSpaceState::new(Representation::Classical, amps)
}

/// One row of the Fig.-2-style sweep: intensities scaled by the critical
/// pump intensity n₀,cr⁰ = γ²/χ².
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SweepPoint {
    pub epsilon_sq: f64,
    /// nᵢ⁰ / n₀,cr⁰ for i = 0..4.
    pub scaled: [f64; 5],
}

/// Steady-state intensity curves over a grid of ε² = |E₀|²/|E_thr,1|².
/// Grid points at a threshold take the upper regime's formula; the curves
/// are continuous there.
pub fn sweep_curve(p_template: &SystemParams, epsilon_sq_grid: &[f64]) -> Result<Vec<SweepPoint>> {
    p_template.validate()?;
    let (gamma0, gamma, _chi) = p_template.require_symmetric()?;
    let gr = gamma0 / gamma;
    let thr2_eps_sq = {
        let r = 1.0 + 1.0 / gr;
        r * r
    };
    let mut out = Vec::with_capacity(epsilon_sq_grid.len());
    for &e2 in epsilon_sq_grid {
        if e2 < 0.0 {
            return Err(Error::InvalidConfig(format!("epsilon^2 grid value {e2} < 0")));
        }
        let scaled = if e2 < 1.0 {
            [e2, 0.0, 0.0, 0.0, 0.0]
        } else if e2 < thr2_eps_sq {
            let n1 = gr * (e2.sqrt() - 1.0);
            [1.0, n1, n1, 0.0, 0.0]
        } else {
            let n1 = e2 * gr * gr / ((gr + 1.0) * (gr + 1.0));
            [n1, n1, 1.0, n1 - 1.0, n1 - 1.0]
        };
        out.push(SweepPoint { epsilon_sq: e2, scaled });
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::classical_drift;
    use rand::Rng;
    use rand::SeedableRng;

    #[test]
    fn threshold_ratio_at_gamma_r_ten() {
        let p = SystemParams::symmetric(10.0, 1.0, 0.1, 1.0);
        let (t1, t2) = thresholds(&p).unwrap();
        assert!((t2 / t1 - 1.21).abs() < 1e-12);
    }

    #[test]
    fn first_threshold_hand_value() {
        let p = SystemParams::symmetric(10.0, 1.0, 0.1, 1.0);
        let (t1, _) = thresholds(&p).unwrap();
        assert!((t1 - 1.0e4).abs() < 1e-9);
    }

    #[test]
    fn thresholds_scale_inverse_chi_squared() {
        let a = SystemParams::symmetric(10.0, 1.0, 0.1, 1.0);
        let b = SystemParams::symmetric(10.0, 1.0, 0.2, 1.0);
        let (a1, a2) = thresholds(&a).unwrap();
        let (b1, b2) = thresholds(&b).unwrap();
        assert!((b1 - a1 / 4.0).abs() < 1e-9 * a1);
        assert!((b2 - a2 / 4.0).abs() < 1e-9 * a2);
    }

    #[test]
    fn generalized_reduces_to_symmetric() {
        let p = SystemParams::symmetric(10.0, 1.0, 0.1, 1.0);
        let (t1, t2) = thresholds(&p).unwrap();
        let (e1, e2) = generalized_threshold_amplitudes(&p).unwrap();
        assert!((e1 * e1 - t1).abs() < 1e-9 * t1);
        assert!((e2 * e2 - t2).abs() < 1e-9 * t2);
    }

    fn with_eps_sq(gamma0: f64, gamma: f64, chi: f64, eps_sq: f64) -> SystemParams {
        let e_thr1 = gamma0 * gamma / chi;
        SystemParams::symmetric(gamma0, gamma, chi, eps_sq.sqrt() * e_thr1)
    }

    #[test]
    fn regime_classification() {
        assert_eq!(classify_regime(&with_eps_sq(10.0, 1.0, 0.1, 0.5)).unwrap(), Regime::BelowThreshold);
        assert_eq!(classify_regime(&with_eps_sq(10.0, 1.0, 0.1, 1.1)).unwrap(), Regime::FirstAbove);
        assert_eq!(classify_regime(&with_eps_sq(10.0, 1.0, 0.1, 1.5)).unwrap(), Regime::SecondAbove);
        assert_eq!(classify_regime(&with_eps_sq(10.0, 1.0, 0.1, 1.0)).unwrap(), Regime::Marginal);
    }

    #[test]
    fn steady_state_below_threshold() {
        let p = SystemParams::symmetric(10.0, 1.0, 0.1, 50.0);
        let sol = steady_state(&p).unwrap();
        assert_eq!(sol.regime, Regime::BelowThreshold);
        assert!((sol.intensities[0] - 25.0).abs() < 1e-12);
        assert!(sol.intensities[1..].iter().all(|&n| n == 0.0));
    }

    #[test]
    fn steady_state_regime_two() {
        let p = SystemParams::symmetric(10.0, 1.0, 0.1, 105.0);
        let sol = steady_state(&p).unwrap();
        assert_eq!(sol.regime, Regime::FirstAbove);
        assert!((sol.intensities[0] - 100.0).abs() < 1e-9);
        assert!((sol.intensities[1] - 50.0).abs() < 1e-9);
        assert!((sol.intensities[2] - 50.0).abs() < 1e-9);
        assert_eq!(sol.intensities[3], 0.0);
        assert_eq!(sol.free_phases.len(), 1);
    }

    #[test]
    fn steady_state_regime_three_and_conservation() {
        let p = SystemParams::symmetric(10.0, 1.0, 0.1, 220.0);
        let sol = steady_state(&p).unwrap();
        assert_eq!(sol.regime, Regime::SecondAbove);
        assert!((sol.intensities[0] - 400.0).abs() < 1e-9);
        assert!((sol.intensities[1] - 400.0).abs() < 1e-9);
        assert!((sol.intensities[2] - 100.0).abs() < 1e-9);
        assert!((sol.intensities[3] - 300.0).abs() < 1e-9);
        assert_eq!(sol.intensities[3], sol.intensities[4]);
        assert!((sol.intensities[1] - sol.intensities[2] - sol.intensities[3]).abs() < 1e-12);
    }

    #[test]
    fn marginal_drive_refused() {
        let p = with_eps_sq(10.0, 1.0, 0.1, 1.0);
        assert_eq!(steady_state(&p).unwrap_err(), Error::MarginalDrive);
    }

    #[test]
    fn conservation_over_random_symmetric_draws() {
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(17);
        for _ in 0..1000 {
            let gamma: f64 = rng.random_range(0.05..4.0);
            let gr: f64 = rng.random_range(1.5..60.0);
            let chi: f64 = rng.random_range(0.01..1.0);
            let thr2_eps = 1.0 + 1.0 / gr;
            let eps: f64 = rng.random_range(thr2_eps * 1.01..thr2_eps * 10.0);
            let p = with_eps_sq(gr * gamma, gamma, chi, eps * eps);
            let sol = steady_state(&p).unwrap();
            assert_eq!(sol.regime, Regime::SecondAbove);
            let (n1, n2, n3) = (sol.intensities[1], sol.intensities[2], sol.intensities[3]);
            assert!(
                (n1 - (n2 + n3)).abs() <= 4.0 * f64::EPSILON * n1,
                "conservation violated: n1={n1} n2={n2} n3={n3}"
            );
        }
    }

    #[test]
    fn monotone_n1_above_first_threshold() {
        let mut last = 0.0;
        for k in 1..200 {
            let drive = 100.0 + k as f64 * 0.05; // stays inside regime 2 until 110
            if drive * drive >= 1.21e4 {
                break;
            }
            let p = SystemParams::symmetric(10.0, 1.0, 0.1, drive);
            let sol = steady_state(&p).unwrap();
            assert!(sol.intensities[1] > last);
            last = sol.intensities[1];
        }
    }

    #[test]
    fn sweep_continuity_and_pinned_points() {
        let p = SystemParams::symmetric(10.0, 1.0, 0.1, 0.0);
        let grid = [0.0, 1.0 - 1e-12, 1.0, 1.0 + 1e-12, 1.21, 1.21 + 1e-12, 2.0];
        let pts = sweep_curve(&p, &grid).unwrap();
        assert!(pts[0].scaled.iter().all(|&x| x == 0.0));
        // Continuity at the first threshold: n₀ equals 1 on both sides.
        assert!((pts[1].scaled[0] - 1.0).abs() < 1e-10);
        assert!((pts[2].scaled[0] - 1.0).abs() < 1e-10);
        assert!((pts[3].scaled[0] - 1.0).abs() < 1e-10);
        // Second-threshold onset: n₃ = 0 exactly at ε² = 1.21 for γ_r = 10.
        assert_eq!(pts[4].scaled[3], 0.0);
        // Continuity of n₁ across the second threshold.
        let n1_left = 10.0 * (1.21f64.sqrt() - 1.0);
        assert!((pts[4].scaled[1] - n1_left).abs() < 1e-9);
    }

    #[test]
    fn sweep_second_differences_bounded_away_from_thresholds() {
        let p = SystemParams::symmetric(10.0, 1.0, 0.1, 0.0);
        let n = 400;
        let grid: Vec<f64> = (0..=n).map(|k| 2.0 * k as f64 / n as f64).collect();
        let pts = sweep_curve(&p, &grid).unwrap();
        let h = 2.0 / n as f64;
        let thr2 = 1.21;
        for w in pts.windows(3) {
            let mid = w[1].epsilon_sq;
            // Skip the two cells containing the kinks.
            if (mid - 1.0).abs() <= 1.5 * h || (mid - thr2).abs() <= 1.5 * h {
                continue;
            }
            for i in 0..5 {
                let dd = w[2].scaled[i] - 2.0 * w[1].scaled[i] + w[0].scaled[i];
                assert!(
                    dd.abs() < 50.0 * h * h + 1e-12,
                    "kink away from thresholds at eps_sq={mid}, mode {i}: {dd}"
                );
            }
        }
    }

    #[test]
    fn concrete_states_are_fixed_points() {
        for drive in [50.0, 105.0, 220.0] {
            let p = SystemParams::symmetric(10.0, 1.0, 0.1, drive);
            let sol = steady_state(&p).unwrap();
            for free in [[0.0, 0.0], [0.7, -1.1]] {
                let s = concrete_state(&sol, &p, &free);
                let d = classical_drift(&s, &p).unwrap();
                let max = d.iter().map(|z| z.norm()).fold(0.0f64, f64::max);
                assert!(max < 1e-10, "drive {drive}, free {free:?}: residual {max}");
            }
        }
    }

    #[test]
    fn concrete_state_respects_drive_phase() {
        let p = SystemParams::symmetric(10.0, 1.0, 0.1, 0.0)
            .with_drive(Complex64::from_polar(220.0, 0.9));
        let sol = steady_state(&p).unwrap();
        let s = concrete_state(&sol, &p, &[0.0, 0.0]);
        let d = classical_drift(&s, &p).unwrap();
        let max = d.iter().map(|z| z.norm()).fold(0.0f64, f64::max);
        assert!(max < 1e-10, "residual {max}");
        assert!((s.amplitudes[0].arg() - 0.9).abs() < 1e-12);
    }
}
