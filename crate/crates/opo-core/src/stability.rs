//! Linearized stability analysis of the three regimes.
//!
//! Every subsystem matrix is expressed in units of γ (entries divided by
//! the common signal loss rate), so "-2" on the δn₋ diagonal means −2γ in
//! physical units. Coefficients follow the published linearizations
//! verbatim, including the regime-2 (δφ₀, δφ₊) block whose −2χ entry mixes
//! dimensional factors; stability verdicts are insensitive to that entry
//! for a strongly damped pump.
//!
//! Noise-correlation matrices store the steady-state second moments of the
//! corresponding noise terms. They are kept signed — phase-sum noises have
//! negative second moments in the positive-P representation — and feed
//! analytic formulas only, never a sampler.

use num_complex::Complex64;

use crate::analytic::{Regime, RegimeSolution};
use crate::error::{Error, Result};
use crate::linalg::{self, CMatrix};
use crate::params::SystemParams;

/// Eigenvalue real parts within ±`STABILITY_TOL` of zero are structural
/// (phase diffusion), not numerical noise.
pub const STABILITY_TOL: f64 = 1e-12;

/// Adiabatic-elimination proxy for γ₀ ≫ γ in the regime-3 analysis.
pub const MIN_GAMMA_RATIO_REGIME3: f64 = 5.0;

/// Re-export: dense eigenvalues of a small (≤ 10×10) matrix.
pub use crate::linalg::eigenvalues as eigenvalues_dense;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Verdict {
    Stable,
    Marginal,
    Unstable,
}

/// One linearized block: drift matrix (units of γ), its variables, and the
/// steady-state noise second moments in matching order.
#[derive(Debug, Clone)]
pub struct LinearSubsystem {
    pub name: String,
    pub matrix: CMatrix,
    pub variables: Vec<String>,
    pub noise_correlations: Vec<Vec<f64>>,
}

impl LinearSubsystem {
    fn new(name: &str, matrix: CMatrix, variables: &[&str], noise: Vec<Vec<f64>>) -> Self {
        assert_eq!(matrix.dim(), variables.len());
        Self {
            name: name.into(),
            matrix,
            variables: variables.iter().map(|s| s.to_string()).collect(),
            noise_correlations: noise,
        }
    }

    pub fn eigenvalues(&self) -> Result<Vec<Complex64>> {
        linalg::eigenvalues(&self.matrix)
    }
}

/// Verdict from a spectrum: any real part above +tol is unstable, any
/// real part inside ±tol is marginal, otherwise stable.
pub fn classify_eigenvalues(eigs: &[Complex64]) -> Verdict {
    if eigs.iter().any(|l| l.re > STABILITY_TOL) {
        Verdict::Unstable
    } else if eigs.iter().any(|l| l.re.abs() <= STABILITY_TOL) {
        Verdict::Marginal
    } else {
        Verdict::Stable
    }
}

/// Per-regime stability summary.
#[derive(Debug, Clone)]
pub struct StabilityReport {
    pub regime: Regime,
    pub subsystems: Vec<(LinearSubsystem, Vec<Complex64>, Verdict)>,
    /// (phase combination, diffusion rate in inverse time units).
    pub diffusing_phases: Vec<(String, f64)>,
    pub overall_stable: bool,
    pub warnings: Vec<String>,
}

fn zeros(n: usize) -> Vec<Vec<f64>> {
    vec![vec![0.0; n]; n]
}

/// Below-threshold drift matrix A⁰ over (α₁, α₂, α₁⁺, α₂⁺): diagonal −1,
/// anti-diagonal ε, in units of γ.
pub fn below_threshold_matrix(eps: f64) -> LinearSubsystem {
    assert!(eps >= 0.0, "epsilon must be non-negative");
    let m = CMatrix::from_real_rows(&[
        &[-1.0, 0.0, 0.0, eps],
        &[0.0, -1.0, eps, 0.0],
        &[0.0, eps, -1.0, 0.0],
        &[eps, 0.0, 0.0, -1.0],
    ]);
    // Pair-correlated pump-mediated noise, √ε per channel.
    let mut noise = zeros(4);
    noise[0][1] = eps;
    noise[1][0] = eps;
    noise[2][3] = eps;
    noise[3][2] = eps;
    LinearSubsystem::new(
        "below-threshold signal/idler",
        m,
        &["d_alpha1", "d_alpha2", "d_alpha1+", "d_alpha2+"],
        noise,
    )
}

/// The regime-2 (δα̃₃, δα̃₄, δα̃₃⁺, δα̃₄⁺) block built from the closed-form
/// n₁⁰ without a regime gate, for threshold localization by bisection.
pub fn regime2_tilde_alpha_block(p: &SystemParams) -> Result<LinearSubsystem> {
    let (gamma0, gamma, chi) = p.require_symmetric()?;
    let _ = gamma0;
    let (_n0, n1) = crate::analytic::regime2_intensities_unchecked(p)?;
    let k = chi * n1.max(0.0).sqrt() / gamma;
    let m = CMatrix::from_real_rows(&[
        &[-1.0, 0.0, 0.0, k],
        &[0.0, -1.0, k, 0.0],
        &[0.0, k, -1.0, 0.0],
        &[k, 0.0, 0.0, -1.0],
    ]);
    let f34 = chi * n1.max(0.0).sqrt();
    let mut noise = zeros(4);
    noise[0][1] = f34;
    noise[1][0] = f34;
    noise[2][3] = f34;
    noise[3][2] = f34;
    Ok(LinearSubsystem::new(
        "regime-2 tilde-alpha",
        m,
        &["d_ta3", "d_ta4", "d_ta3+", "d_ta4+"],
        noise,
    ))
}

/// Linearized subsystems of the first above-threshold regime, coefficients
/// as published, in units of γ.
pub fn regime2_subsystems(
    sol: &RegimeSolution,
    p: &SystemParams,
) -> Result<Vec<LinearSubsystem>> {
    if sol.regime != Regime::FirstAbove {
        return Err(Error::WrongRegime {
            expected: Regime::FirstAbove.label(),
            got: sol.regime.label(),
        });
    }
    let (gamma0, gamma, chi) = p.require_symmetric()?;
    let n1 = sol.intensities[1];
    let gr = gamma0 / gamma;

    // (δn₀, δn₊): δṅ₀ = −γ₀δn₀ − γδn₊ ; δṅ₊ = (2χn₁⁰/γ)δn₀ + F₊.
    let n_block = CMatrix::from_real_rows(&[
        &[-gr, -1.0],
        &[2.0 * chi * n1 / (gamma * gamma), 0.0],
    ]);
    let mut n_noise = zeros(2);
    n_noise[1][1] = 4.0 * gamma * n1;

    // δn₋: δṅ₋ = −2γδn₋ + F₋.
    let nm_block = CMatrix::from_real_rows(&[&[-2.0]]);
    let nm_noise = vec![vec![-4.0 * gamma * n1]];

    // (δφ₀, δφ₊): δφ̇₀ = −γ₀δφ₀ − (χ²n₁⁰/γ)δφ₊ ; δφ̇₊ = 2γδφ₀ − 2χδφ₊ + f₊.
    let phi_block = CMatrix::from_real_rows(&[
        &[-gr, -chi * chi * n1 / (gamma * gamma)],
        &[2.0, -2.0 * chi / gamma],
    ]);
    let mut phi_noise = zeros(2);
    phi_noise[1][1] = -gamma / n1;

    let ta = regime2_tilde_alpha_block(p)?;

    Ok(vec![
        LinearSubsystem::new("regime-2 intensity (dn0, dn+)", n_block, &["dn0", "dn+"], n_noise),
        LinearSubsystem::new("regime-2 intensity dn-", nm_block, &["dn-"], nm_noise),
        LinearSubsystem::new("regime-2 phase (dphi0, dphi+)", phi_block, &["dphi0", "dphi+"], phi_noise),
        ta,
    ])
}

/// Linearized subsystems of the second above-threshold regime under
/// adiabatic elimination of the pump, coefficients as published, units γ.
pub fn regime3_subsystems(
    sol: &RegimeSolution,
    p: &SystemParams,
) -> Result<Vec<LinearSubsystem>> {
    if sol.regime != Regime::SecondAbove {
        return Err(Error::WrongRegime {
            expected: Regime::SecondAbove.label(),
            got: sol.regime.label(),
        });
    }
    let (gamma0, gamma, chi) = p.require_symmetric()?;
    let n1 = sol.intensities[1];
    let n2 = sol.intensities[2];
    let n3 = sol.intensities[3];
    let e_abs = p.drive.norm();
    let gg = gamma / gamma0;

    // (δn₁, δn₂, δn₊) with δn± = δn₃ ± δn₄.
    let a11 = -(1.0 + gg);
    let a12 = (chi * chi * n1 / (gamma * gamma)) * (1.0 - gg);
    let a21 = 1.0 - gg;
    let a22 = -(1.0 + chi * chi / (gamma0 * gamma));
    let a23 = -1.0;
    let a32 = 2.0 * chi * chi * n3 / (gamma * gamma);
    let n_block = CMatrix::from_real_rows(&[
        &[a11, a12, 0.0],
        &[a21, a22, a23],
        &[0.0, a32, 0.0],
    ]);
    let mut n_noise = zeros(3);
    n_noise[0][1] = 2.0 * gamma * n1;
    n_noise[1][0] = 2.0 * gamma * n1;
    n_noise[2][2] = 4.0 * gamma * n3;

    let nm_block = CMatrix::from_real_rows(&[&[-2.0]]);
    let nm_noise = vec![vec![-4.0 * gamma * n3]];

    // (δθ₁, δθ₂).
    let sqrt_ratio = (n1 / n2).sqrt();
    let t11 = -(chi * e_abs / gamma0) * (sqrt_ratio + 1.0 / sqrt_ratio) / gamma;
    let t12 = -chi * n3 / (n2.sqrt() * gamma);
    let t21 = (chi * e_abs / gamma0) * sqrt_ratio / gamma;
    let t22 = -chi * (2.0 * n2.sqrt() - n3 / n2.sqrt()) / gamma;
    let theta_block = CMatrix::from_real_rows(&[&[t11, t12], &[t21, t22]]);
    let mut theta_noise = zeros(2);
    theta_noise[0][0] = -chi * chi / gamma;
    theta_noise[0][1] = chi * chi / (2.0 * gamma);
    theta_noise[1][0] = chi * chi / (2.0 * gamma);
    theta_noise[1][1] = -gamma / n3;

    Ok(vec![
        LinearSubsystem::new("regime-3 intensity (dn1, dn2, dn+)", n_block, &["dn1", "dn2", "dn+"], n_noise),
        LinearSubsystem::new("regime-3 intensity dn-", nm_block, &["dn-"], nm_noise),
        LinearSubsystem::new("regime-3 theta (dtheta1, dtheta2)", theta_block, &["dtheta1", "dtheta2"], theta_noise),
    ])
}

/// Routh-Hurwitz test for λ³ + a₂λ² + a₁λ + a₀: all roots have negative
/// real parts iff a₂ > 0, a₀ > 0 and a₂a₁ > a₀.
pub fn routh_hurwitz_cubic(a2: f64, a1: f64, a0: f64) -> bool {
    a2 > 0.0 && a0 > 0.0 && a2 * a1 > a0
}

/// Characteristic-polynomial coefficients (a₂, a₁, a₀) of a real 3×3
/// matrix, λ³ + a₂λ² + a₁λ + a₀.
pub fn cubic_coefficients(m: &CMatrix) -> (f64, f64, f64) {
    assert_eq!(m.dim(), 3);
    let a = |i: usize, j: usize| m[(i, j)].re;
    let tr = a(0, 0) + a(1, 1) + a(2, 2);
    let minors = a(0, 0) * a(1, 1) - a(0, 1) * a(1, 0)
        + a(0, 0) * a(2, 2) - a(0, 2) * a(2, 0)
        + a(1, 1) * a(2, 2) - a(1, 2) * a(2, 1);
    let det = a(0, 0) * (a(1, 1) * a(2, 2) - a(1, 2) * a(2, 1))
        - a(0, 1) * (a(1, 0) * a(2, 2) - a(1, 2) * a(2, 0))
        + a(0, 2) * (a(1, 0) * a(2, 1) - a(1, 1) * a(2, 0));
    (-tr, minors, -det)
}

/// Diffusion rates of the free phase combinations, in inverse time units:
/// γ/n₁⁰ for φ₁−φ₂ and (regime 3) γ/n₃⁰ for φ₃−φ₄.
pub fn phase_diffusion_rates(
    sol: &RegimeSolution,
    p: &SystemParams,
) -> Result<Vec<(String, f64)>> {
    let (_gamma0, gamma, _chi) = p.require_symmetric()?;
    match sol.regime {
        Regime::FirstAbove => {
            let n1 = sol.intensities[1];
            if n1 <= 0.0 {
                return Err(Error::ZeroIntensity);
            }
            Ok(vec![("phi1 - phi2".into(), gamma / n1)])
        }
        Regime::SecondAbove => {
            let n1 = sol.intensities[1];
            let n3 = sol.intensities[3];
            if n1 <= 0.0 || n3 <= 0.0 {
                return Err(Error::ZeroIntensity);
            }
            Ok(vec![
                ("phi1 - phi2".into(), gamma / n1),
                ("phi3 - phi4".into(), gamma / n3),
            ])
        }
        _ => Err(Error::WrongRegime { expected: "an above-threshold regime", got: sol.regime.label() }),
    }
}

/// Assemble the full stability report for a solution.
pub fn report(sol: &RegimeSolution, p: &SystemParams) -> Result<StabilityReport> {
    let (gamma0, gamma, _chi) = p.require_symmetric()?;
    let mut warnings = Vec::new();
    let subsystems_raw = match sol.regime {
        Regime::Marginal => return Err(Error::MarginalDrive),
        Regime::BelowThreshold => {
            let eps = p.drive.norm() * p.chi1 / (gamma0 * gamma);
            let beta0 = LinearSubsystem::new(
                "below-threshold pump beta0",
                CMatrix::from_real_rows(&[&[-gamma0 / gamma]]),
                &["beta0"],
                zeros(1),
            );
            let beta34 = LinearSubsystem::new(
                "below-threshold secondary pair (beta3, beta4)",
                CMatrix::from_real_rows(&[&[-1.0, 0.0], &[0.0, -1.0]]),
                &["beta3", "beta4"],
                zeros(2),
            );
            vec![below_threshold_matrix(eps), beta0, beta34]
        }
        Regime::FirstAbove => regime2_subsystems(sol, p)?,
        Regime::SecondAbove => {
            if gamma0 / gamma < MIN_GAMMA_RATIO_REGIME3 {
                warnings.push(format!(
                    "gamma0/gamma = {:.3} < {MIN_GAMMA_RATIO_REGIME3}: adiabatic elimination of the pump is unreliable here",
                    gamma0 / gamma
                ));
            }
            regime3_subsystems(sol, p)?
        }
    };
    let mut subsystems = Vec::with_capacity(subsystems_raw.len());
    let mut overall = true;
    for sub in subsystems_raw {
        let eigs = sub.eigenvalues()?;
        let verdict = classify_eigenvalues(&eigs);
        overall &= verdict == Verdict::Stable;
        subsystems.push((sub, eigs, verdict));
    }
    let diffusing_phases = match sol.regime {
        Regime::FirstAbove | Regime::SecondAbove => phase_diffusion_rates(sol, p)?,
        _ => Vec::new(),
    };
    Ok(StabilityReport { regime: sol.regime, subsystems, diffusing_phases, overall_stable: overall, warnings })
}

/// Locate the drive intensity |E₀|² where the regime-2 α̃ block loses
/// stability, bisecting its maximal eigenvalue real part.
pub fn second_threshold_by_bisection(
    p_template: &SystemParams,
    mut lo: f64,
    mut hi: f64,
    rel_tol: f64,
) -> Result<f64> {
    let max_re = |e0_sq: f64| -> Result<f64> {
        let p = p_template.clone().with_drive(Complex64::new(e0_sq.sqrt(), 0.0));
        let block = regime2_tilde_alpha_block(&p)?;
        let eigs = block.eigenvalues()?;
        Ok(linalg::max_real_part(&eigs).unwrap())
    };
    let f_lo = max_re(lo)?;
    let f_hi = max_re(hi)?;
    if f_lo >= 0.0 || f_hi <= 0.0 {
        return Err(Error::InvalidConfig(format!(
            "bisection bracket does not straddle the flip: f({lo}) = {f_lo}, f({hi}) = {f_hi}"
        )));
    }
    while (hi - lo) > rel_tol * hi {
        let mid = 0.5 * (lo + hi);
        if max_re(mid)? < 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Ok(0.5 * (lo + hi))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::analytic::steady_state;
    use crate::model::drift_jacobian_doubled;
    use proptest::prelude::*;

    fn sorted_re(mut eigs: Vec<Complex64>) -> Vec<f64> {
        let mut v: Vec<f64> = eigs.drain(..).map(|l| l.re).collect();
        v.sort_by(|a, b| a.partial_cmp(b).unwrap());
        v
    }

    #[test]
    fn below_threshold_eps_zero_is_diagonal() {
        let sub = below_threshold_matrix(0.0);
        let eigs = sub.eigenvalues().unwrap();
        for l in eigs {
            assert!((l + Complex64::new(1.0, 0.0)).norm() < 1e-12);
        }
    }

    #[test]
    fn below_threshold_half_eps_spectrum() {
        let sub = below_threshold_matrix(0.5);
        let re = sorted_re(sub.eigenvalues().unwrap());
        let want = [-1.5, -1.5, -0.5, -0.5];
        for (a, b) in re.iter().zip(want) {
            assert!((a - b).abs() < 1e-12);
        }
    }

    #[test]
    fn below_threshold_marginal_at_unit_eps() {
        let sub = below_threshold_matrix(1.0);
        let eigs = sub.eigenvalues().unwrap();
        let max = linalg::max_real_part(&eigs).unwrap();
        assert!(max.abs() < 1e-12);
        assert_eq!(classify_eigenvalues(&eigs), Verdict::Marginal);
    }

    #[test]
    fn below_threshold_closed_form_spectrum_sweep() {
        for k in 0..=40 {
            let eps = k as f64 * 0.05;
            let sub = below_threshold_matrix(eps);
            let re = sorted_re(sub.eigenvalues().unwrap());
            let want = [-1.0 - eps, -1.0 - eps, -1.0 + eps, -1.0 + eps];
            for (a, b) in re.iter().zip(want) {
                assert!((a - b).abs() < 1e-10, "eps={eps}: {a} vs {b}");
            }
        }
    }

    fn regime2_setup() -> (RegimeSolution, SystemParams) {
        let p = SystemParams::symmetric(10.0, 1.0, 0.1, 105.0);
        let sol = steady_state(&p).unwrap();
        (sol, p)
    }

    #[test]
    fn regime2_dn_minus_eigenvalue() {
        let (sol, p) = regime2_setup();
        let subs = regime2_subsystems(&sol, &p).unwrap();
        let dnm = subs.iter().find(|s| s.name.contains("dn-")).unwrap();
        let eigs = dnm.eigenvalues().unwrap();
        assert_eq!(eigs.len(), 1);
        assert!((eigs[0].re + 2.0).abs() < 1e-14);
    }

    #[test]
    fn regime2_tilde_alpha_spectrum_and_stability() {
        let (sol, p) = regime2_setup();
        let subs = regime2_subsystems(&sol, &p).unwrap();
        let ta = subs.iter().find(|s| s.name.contains("tilde")).unwrap();
        let re = sorted_re(ta.eigenvalues().unwrap());
        let k = 0.1 * 50.0f64.sqrt();
        let want = [-1.0 - k, -1.0 - k, -1.0 + k, -1.0 + k];
        for (a, b) in re.iter().zip(want) {
            assert!((a - b).abs() < 1e-10);
        }
        assert_eq!(classify_eigenvalues(&ta.eigenvalues().unwrap()), Verdict::Stable);
        // All regime-2 subsystems stable at this drive.
        for s in &subs {
            assert_ne!(classify_eigenvalues(&s.eigenvalues().unwrap()), Verdict::Unstable, "{}", s.name);
        }
    }

    #[test]
    fn tilde_alpha_zero_eigenvalue_at_second_threshold() {
        let p0 = SystemParams::symmetric(10.0, 1.0, 0.1, 0.0);
        let (_, thr2) = crate::analytic::thresholds(&p0).unwrap();
        let p = p0.with_drive(Complex64::new(thr2.sqrt(), 0.0));
        let block = regime2_tilde_alpha_block(&p).unwrap();
        let max = linalg::max_real_part(&block.eigenvalues().unwrap()).unwrap();
        assert!(max.abs() < 1e-9, "max real part {max}");
    }

    #[test]
    fn bisection_localizes_second_threshold() {
        for gr in [5.0, 10.0, 50.0] {
            let p = SystemParams::symmetric(gr, 1.0, 0.1, 0.0);
            let (thr1, thr2) = crate::analytic::thresholds(&p).unwrap();
            let found =
                second_threshold_by_bisection(&p, thr1 * 1.0001, thr1 * 4.0, 1e-10).unwrap();
            assert!((found - thr2).abs() < 1e-8 * thr2, "gr={gr}: {found} vs {thr2}");
        }
    }

    fn regime3_setup() -> (RegimeSolution, SystemParams) {
        let p = SystemParams::symmetric(10.0, 1.0, 0.1, 220.0);
        let sol = steady_state(&p).unwrap();
        (sol, p)
    }

    #[test]
    fn regime3_dn_minus_eigenvalue() {
        let (sol, p) = regime3_setup();
        let subs = regime3_subsystems(&sol, &p).unwrap();
        let dnm = subs.iter().find(|s| s.name.contains("dn-")).unwrap();
        assert!((dnm.eigenvalues().unwrap()[0].re + 2.0).abs() < 1e-14);
    }

    #[test]
    fn regime3_intensity_block_routh_hurwitz() {
        let (sol, p) = regime3_setup();
        let subs = regime3_subsystems(&sol, &p).unwrap();
        let nb = subs.iter().find(|s| s.name.contains("(dn1")).unwrap();
        let (a2, a1, a0) = cubic_coefficients(&nb.matrix);
        assert!(routh_hurwitz_cubic(a2, a1, a0), "a=({a2}, {a1}, {a0})");
        // Cross-check against the spectrum.
        let max = linalg::max_real_part(&nb.eigenvalues().unwrap()).unwrap();
        assert!(max < 0.0);
    }

    #[test]
    fn regime3_theta_block_stable() {
        let (sol, p) = regime3_setup();
        let subs = regime3_subsystems(&sol, &p).unwrap();
        let tb = subs.iter().find(|s| s.name.contains("theta")).unwrap();
        let eigs = tb.eigenvalues().unwrap();
        assert!(eigs.iter().all(|l| l.re < 0.0), "{eigs:?}");
    }

    #[test]
    fn wrong_regime_is_refused() {
        let (sol2, p2) = regime2_setup();
        assert!(matches!(regime3_subsystems(&sol2, &p2), Err(Error::WrongRegime { .. })));
        let (sol3, p3) = regime3_setup();
        assert!(matches!(regime2_subsystems(&sol3, &p3), Err(Error::WrongRegime { .. })));
    }

    #[test]
    fn routh_hurwitz_examples() {
        assert!(routh_hurwitz_cubic(3.0, 3.0, 1.0)); // (λ+1)³
        assert!(!routh_hurwitz_cubic(2.0, -1.0, -2.0)); // root at +1
        assert!(!routh_hurwitz_cubic(1.0, 1.0, 2.0)); // complex pair, positive real part
    }

    #[test]
    fn phase_diffusion_hand_rates() {
        let (sol, p) = regime2_setup();
        let rates = phase_diffusion_rates(&sol, &p).unwrap();
        assert_eq!(rates.len(), 1);
        assert!((rates[0].1 - 0.02).abs() < 1e-12);

        let (sol3, p3) = regime3_setup();
        let rates3 = phase_diffusion_rates(&sol3, &p3).unwrap();
        assert!((rates3[1].1 - 1.0 / 300.0).abs() < 1e-12);
        // Rates vanish as the drive (and hence the intensities) grow.
        let p_big = SystemParams::symmetric(10.0, 1.0, 0.1, 50_000.0);
        let sol_big = steady_state(&p_big).unwrap();
        let rates_big = phase_diffusion_rates(&sol_big, &p_big).unwrap();
        assert!(rates_big.iter().all(|(_, r)| *r < 1e-5));
    }

    #[test]
    fn full_jacobian_has_phase_zero_mode_in_regime2() {
        // Linearizing around a fixed φ₁−φ₂ exposes the diffusion direction
        // as a (numerically) zero eigenvalue of the doubled Jacobian.
        let (sol, p) = regime2_setup();
        let s = crate::analytic::concrete_state(&sol, &p, &[0.3]);
        let j = drift_jacobian_doubled(&s, &p).unwrap();
        let eigs = linalg::eigenvalues(&j).unwrap();
        let min_abs_re = eigs.iter().map(|l| l.re.abs()).fold(f64::INFINITY, f64::min);
        assert!(min_abs_re < 1e-8, "smallest |Re| = {min_abs_re:e}");
    }

    #[test]
    fn report_collects_everything() {
        let (sol, p) = regime3_setup();
        let rep = report(&sol, &p).unwrap();
        assert_eq!(rep.subsystems.len(), 3);
        assert_eq!(rep.diffusing_phases.len(), 2);
        assert!(rep.warnings.is_empty());
        let p_low = SystemParams::symmetric(3.0, 1.0, 0.1, 0.0);
        let (_, thr2) = crate::analytic::thresholds(&p_low).unwrap();
        let p_low = p_low.with_drive(Complex64::new((2.0 * thr2).sqrt(), 0.0));
        let sol_low = steady_state(&p_low).unwrap();
        let rep_low = report(&sol_low, &p_low).unwrap();
        assert_eq!(rep_low.warnings.len(), 1);
    }

    proptest! {
        #[test]
        fn routh_hurwitz_matches_companion_roots(
            a2 in -3.0f64..3.0,
            a1 in -3.0f64..3.0,
            a0 in -3.0f64..3.0,
        ) {
            let comp = CMatrix::companion(&[a0, a1, a2]);
            let eigs = linalg::eigenvalues(&comp).unwrap();
            let max = linalg::max_real_part(&eigs).unwrap();
            prop_assume!(max.abs() >= 1e-9);
            prop_assert_eq!(routh_hurwitz_cubic(a2, a1, a0), max < 0.0);
        }
    }
}
