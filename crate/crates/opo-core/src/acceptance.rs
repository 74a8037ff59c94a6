//! Executable acceptance checks: the quantitative gates behind
//! `opo verify` and the `acceptance` integration-test target.
//!
//! Each check pins its tolerance in code and reports a one-line summary.
//! `quick` mode shrinks ensemble sizes and widens the statistical
//! tolerances as documented per check; deterministic checks are unchanged.

use std::time::Instant;

use num_complex::Complex64;
use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::analytic;
use crate::error::Result;
use crate::experiments::{
    self, detect_dynamics_class, dominant_frequency, estimate_diffusion_slope, DynamicsClass,
    FixedPointOptions,
};
use crate::integrate::{
    multilevel_weak_probe, run_ensemble, simulate, InitialState, IntegratorConfig, Observable,
    Scheme,
};
use crate::linalg;
use crate::oracle::{evolve_master, expect, DensityMatrix, EvolveOptions, FockConfig};
use crate::params::SystemParams;
use crate::scenario;
use crate::stability::{
    self, below_threshold_matrix, classify_eigenvalues, cubic_coefficients, regime3_subsystems,
    routh_hurwitz_cubic, second_threshold_by_bisection, Verdict,
};
use crate::state::{PhaseSpaceState, Representation};

#[derive(Debug, Clone)]
pub struct CriterionOutcome {
    pub id: &'static str,
    pub title: &'static str,
    pub passed: bool,
    pub detail: String,
    pub runtime_s: f64,
}

fn outcome(
    id: &'static str,
    title: &'static str,
    started: Instant,
    result: Result<(bool, String)>,
) -> CriterionOutcome {
    let runtime_s = started.elapsed().as_secs_f64();
    match result {
        Ok((passed, detail)) => CriterionOutcome { id, title, passed, detail, runtime_s },
        Err(e) => CriterionOutcome {
            id,
            title,
            passed: false,
            detail: format!("error: {e}"),
            runtime_s,
        },
    }
}

/// A1 — closed-form thresholds (ε²_thr,1 = 1, ε²_thr,2 = 1.21 at
/// γ₀/γ = 10) and long-time classical integration matching the analytic
/// steady-state intensities to 1e-6 relative across both thresholds.
pub fn a1_threshold_structure(_quick: bool) -> CriterionOutcome {
    let t0 = Instant::now();
    let run = || -> Result<(bool, String)> {
        let p = SystemParams::symmetric(10.0, 1.0, 0.1, 0.0);
        let (thr1, thr2) = analytic::thresholds(&p)?;
        let closed_ok = (thr1 - 1.0e4).abs() <= 1e-12 * 1.0e4
            && (thr2 / thr1 - 1.21).abs() <= 1e-12 * 1.21;
        let grid = [0.25, 0.5, 0.9, 1.05, 1.15, 1.5, 2.0];
        let rows = experiments::threshold_sweep(&p, &grid, None)?;
        let mut worst = 0.0f64;
        for row in &rows {
            worst = worst.max(row.rel_gap.unwrap_or(f64::INFINITY));
        }
        let passed = closed_ok && worst < 1e-6;
        Ok((
            passed,
            format!(
                "thr ratio {:.12}; numeric-vs-analytic worst gap {worst:.3e} over {} drives (tol 1e-6)",
                thr2 / thr1,
                grid.len()
            ),
        ))
    };
    outcome("A1", "threshold structure, analytic vs numeric", t0, run())
}

/// A2 — regime-3 bookkeeping n₁⁰ = n₂⁰ + n₃⁰: machine precision
/// analytically, 1e-6 relative at numeric fixed points. 100 random
/// symmetric parameter draws (quick: 20).
pub fn a2_regime3_conservation(quick: bool) -> CriterionOutcome {
    let t0 = Instant::now();
    let n_draws = if quick { 20 } else { 100 };
    let run = || -> Result<(bool, String)> {
        let mut rng = ChaCha8Rng::seed_from_u64(271);
        let mut worst_analytic = 0.0f64;
        let mut worst_numeric = 0.0f64;
        for _ in 0..n_draws {
            let gamma: f64 = rng.random_range(0.3..1.5);
            let gr: f64 = rng.random_range(5.0..25.0);
            let chi: f64 = rng.random_range(0.02..0.4);
            let thr2_eps = 1.0 + 1.0 / gr;
            let eps: f64 = rng.random_range(1.15 * thr2_eps..3.0 * thr2_eps);
            let e_thr1 = gr * gamma * gamma / chi;
            let p = SystemParams::symmetric(gr * gamma, gamma, chi, eps * e_thr1);
            let sol = analytic::steady_state(&p)?;
            let (n1, n2, n3) = (sol.intensities[1], sol.intensities[2], sol.intensities[3]);
            worst_analytic = worst_analytic.max((n1 - (n2 + n3)).abs() / n1);
            let fp = experiments::numeric_fixed_point(&p, &FixedPointOptions::for_params(&p))?;
            let m1 = fp.state.amplitudes[1].norm_sqr();
            let m2 = fp.state.amplitudes[2].norm_sqr();
            let m3 = fp.state.amplitudes[3].norm_sqr();
            worst_numeric = worst_numeric.max((m1 - m2 - m3).abs() / m1);
        }
        let passed = worst_analytic <= 4.0 * f64::EPSILON && worst_numeric < 1e-6;
        Ok((
            passed,
            format!(
                "{n_draws} draws: analytic worst {worst_analytic:.2e} (tol 4eps), numeric worst {worst_numeric:.2e} (tol 1e-6)"
            ),
        ))
    };
    outcome("A2", "regime-3 conservation n1 = n2 + n3", t0, run())
}

/// A3 — below-threshold spectrum {−1±ε} doubled to 1e-10 and the verdict
/// flip across ε = 1.
pub fn a3_below_threshold_spectrum(_quick: bool) -> CriterionOutcome {
    let t0 = Instant::now();
    let run = || -> Result<(bool, String)> {
        let mut worst = 0.0f64;
        for eps in [0.0, 0.3, 0.7, 0.99, 1.01] {
            let sub = below_threshold_matrix(eps);
            let mut re: Vec<f64> = sub.eigenvalues()?.iter().map(|l| l.re).collect();
            re.sort_by(|a, b| a.partial_cmp(b).unwrap());
            let want = [-1.0 - eps, -1.0 - eps, -1.0 + eps, -1.0 + eps];
            for (got, w) in re.iter().zip(want) {
                worst = worst.max((got - w).abs());
            }
        }
        let stable_below =
            classify_eigenvalues(&below_threshold_matrix(0.99).eigenvalues()?) == Verdict::Stable;
        let unstable_above =
            classify_eigenvalues(&below_threshold_matrix(1.01).eigenvalues()?) == Verdict::Unstable;
        let passed = worst < 1e-10 && stable_below && unstable_above;
        Ok((
            passed,
            format!(
                "spectrum error {worst:.2e} (tol 1e-10); verdict flip across eps=1: {}",
                stable_below && unstable_above
            ),
        ))
    };
    outcome("A3", "below-threshold drift spectrum and flip", t0, run())
}

/// A4 — bisection on the regime-2 α̃-block maximal eigenvalue localizes
/// the second threshold to 1e-8 relative for γ₀/γ ∈ {5, 10, 50}.
pub fn a4_second_threshold_bisection(_quick: bool) -> CriterionOutcome {
    let t0 = Instant::now();
    let run = || -> Result<(bool, String)> {
        let mut worst = 0.0f64;
        for gr in [5.0, 10.0, 50.0] {
            let p = SystemParams::symmetric(gr, 1.0, 0.1, 0.0);
            let (thr1, thr2) = analytic::thresholds(&p)?;
            let found = second_threshold_by_bisection(&p, thr1 * 1.0001, thr1 * 4.0, 1e-11)?;
            worst = worst.max((found - thr2).abs() / thr2);
        }
        Ok((worst < 1e-8, format!("worst relative localization error {worst:.2e} (tol 1e-8)")))
    };
    outcome("A4", "second threshold located by linearization", t0, run())
}

/// A5 — Routh-Hurwitz verdict against companion-matrix roots: 1000 random
/// cubics (quick: 300) plus 100 regime-3 intensity blocks (quick: 30),
/// excluding |max Re λ| < 1e-9.
pub fn a5_routh_hurwitz_cross_validation(quick: bool) -> CriterionOutcome {
    let t0 = Instant::now();
    let (n_cubics, n_blocks) = if quick { (300, 30) } else { (1000, 100) };
    let run = || -> Result<(bool, String)> {
        let mut rng = ChaCha8Rng::seed_from_u64(577);
        let mut checked = 0usize;
        let mut mismatches = 0usize;
        for _ in 0..n_cubics {
            let a2: f64 = rng.random_range(-3.0..3.0);
            let a1: f64 = rng.random_range(-3.0..3.0);
            let a0: f64 = rng.random_range(-3.0..3.0);
            let eigs = linalg::eigenvalues(&linalg::CMatrix::companion(&[a0, a1, a2]))?;
            let max_re = linalg::max_real_part(&eigs).unwrap();
            if max_re.abs() < 1e-9 {
                continue;
            }
            checked += 1;
            if routh_hurwitz_cubic(a2, a1, a0) != (max_re < 0.0) {
                mismatches += 1;
            }
        }
        for _ in 0..n_blocks {
            let gamma: f64 = rng.random_range(0.3..1.5);
            let gr: f64 = rng.random_range(5.0..30.0);
            let chi: f64 = rng.random_range(0.02..0.4);
            let thr2_eps = 1.0 + 1.0 / gr;
            let eps: f64 = rng.random_range(1.1 * thr2_eps..4.0 * thr2_eps);
            let e_thr1 = gr * gamma * gamma / chi;
            let p = SystemParams::symmetric(gr * gamma, gamma, chi, eps * e_thr1);
            let sol = analytic::steady_state(&p)?;
            let subs = regime3_subsystems(&sol, &p)?;
            let block = subs.iter().find(|s| s.name.contains("(dn1")).unwrap();
            let (c2, c1, c0) = cubic_coefficients(&block.matrix);
            let max_re = linalg::max_real_part(&block.eigenvalues()?).unwrap();
            if max_re.abs() < 1e-9 {
                continue;
            }
            checked += 1;
            if routh_hurwitz_cubic(c2, c1, c0) != (max_re < 0.0) {
                mismatches += 1;
            }
        }
        Ok((
            mismatches == 0,
            format!("{checked} verdicts compared, {mismatches} mismatches"),
        ))
    };
    outcome("A5", "Routh-Hurwitz vs companion roots", t0, run())
}

/// A6 — truncated-Wigner vacuum moment: undriven, uncoupled ensemble gives
/// ⟨|αᵢ|²⟩ = 0.500 within 3 standard errors for every mode. 10⁴
/// trajectories (quick: 2000).
pub fn a6_wigner_vacuum_moment(quick: bool) -> CriterionOutcome {
    let t0 = Instant::now();
    let n_traj = if quick { 2000 } else { 10_000 };
    let run = || -> Result<(bool, String)> {
        let mut p = SystemParams::symmetric(1.0, 1.0, 0.0, 0.0);
        p.chi1 = 0.0;
        p.chi2 = 0.0;
        let cfg = IntegratorConfig {
            scheme: Scheme::EulerMaruyama,
            representation: Representation::Wigner,
            dt: 2e-3,
            t_end: 10.0,
            record_stride: 25,
            seed: 606,
            initial: InitialState::State(PhaseSpaceState::zero(
                Representation::Wigner,
                crate::params::Topology::Nondegenerate,
            )),
        };
        let obs: Vec<Observable> = (0..5).map(Observable::Intensity).collect();
        let stats = run_ensemble(&p, &cfg, n_traj, &obs, Some(5.0))?;
        let mut detail = String::new();
        let mut passed = true;
        for m in 0..5 {
            let (mean, _var, se) = stats.moments[m].window.unwrap();
            let ok = (mean.re - 0.5).abs() <= 3.0 * se;
            passed &= ok;
            detail.push_str(&format!("n{m}={:.4}±{:.4} ", mean.re, se));
        }
        detail.push_str("(target 0.500, 3 se)");
        Ok((passed, detail))
    };
    outcome("A6", "Wigner vacuum half-photon moment", t0, run())
}

/// A7 — positive-P ensemble against the master-equation oracle below
/// threshold (ε ≈ 0.3, g = 0.5, γ_r = 2, cutoffs (3,2,2,2,2)):
/// ⟨â₁†â₁⟩, ⟨â₂†â₂⟩, ⟨â₃†â₃⟩ and Re/Im ⟨â₁â₃â₄⟩ within 3 combined
/// standard errors. "Combined" joins the ensemble's statistical error with
/// the oracle's truncation uncertainty, the latter estimated as the change
/// under raising every cutoff by one. 10⁴ trajectories (quick: 2500, with
/// the truncation estimate taken against the cheaper one-step-lower
/// cutoffs, which widens it).
pub fn a7_oracle_agreement(quick: bool) -> CriterionOutcome {
    let t0 = Instant::now();
    let n_traj = if quick { 2500 } else { 10_000 };
    let run = || -> Result<(bool, String)> {
        let p = SystemParams::symmetric(2.0, 1.0, 0.5, 1.2);
        let fock = FockConfig::new(&[3, 2, 2, 2, 2]);
        // The pinned cutoffs put ~5e-3 of population in the pump's top
        // level at this drive; the saturation gate is raised accordingly
        // and the observed value reported.
        let opts = EvolveOptions::new(5e-3, 12.0).with_saturation_threshold(2e-2);
        let rho = evolve_master(&DensityMatrix::vacuum(&fock), &p, &fock, &opts)?;
        let moments_of = |rho: &DensityMatrix, cfg: &FockConfig| -> [Complex64; 4] {
            [
                expect(rho, cfg, &[(1, true), (1, false)]),
                expect(rho, cfg, &[(2, true), (2, false)]),
                expect(rho, cfg, &[(3, true), (3, false)]),
                expect(rho, cfg, &[(1, false), (3, false), (4, false)]),
            ]
        };
        let oracle = moments_of(&rho, &fock);
        let top_pop = rho.max_top_level_population(&fock);
        // Truncation uncertainty from a neighboring resolution.
        let other = if quick {
            let small = FockConfig::new(&[2, 1, 1, 1, 1]);
            let rho_s = evolve_master(&DensityMatrix::vacuum(&small), &p, &small, &opts)?;
            moments_of(&rho_s, &small)
        } else {
            let big = FockConfig::new(&[4, 3, 3, 3, 3]);
            let opts_big = EvolveOptions::new(1e-2, 10.0).with_saturation_threshold(2e-2);
            let rho_b = evolve_master(&DensityMatrix::vacuum(&big), &p, &big, &opts_big)?;
            moments_of(&rho_b, &big)
        };
        let trunc: Vec<f64> = oracle.iter().zip(&other).map(|(a, b)| (a - b).norm()).collect();

        let cfg = IntegratorConfig {
            scheme: Scheme::Heun,
            representation: Representation::PositiveP,
            dt: 1e-3,
            t_end: 12.0,
            record_stride: 50,
            seed: 707,
            initial: InitialState::State(PhaseSpaceState::zero(
                Representation::PositiveP,
                crate::params::Topology::Nondegenerate,
            )),
        };
        let obs = [
            Observable::Intensity(1),
            Observable::Intensity(2),
            Observable::Intensity(3),
            Observable::Triple,
        ];
        let stats = run_ensemble(&p, &cfg, n_traj, &obs, Some(8.0))?;
        let mut passed = true;
        let mut detail = String::new();
        for (idx, label) in [(0usize, "n1"), (1, "n2"), (2, "n3")] {
            let (mean, _v, se) = stats.moments[idx].window.unwrap();
            let sigma = se.hypot(trunc[idx]);
            let ok = (mean.re - oracle[idx].re).abs() <= 3.0 * sigma;
            passed &= ok;
            detail.push_str(&format!(
                "{label}={:.4}±{:.4} (oracle {:.4}±{:.4}) ",
                mean.re, se, oracle[idx].re, trunc[idx]
            ));
        }
        let (tmean, _tv, tse) = stats.moments[3].window.unwrap();
        let tsigma = tse.hypot(trunc[3]);
        let re_ok = (tmean.re - oracle[3].re).abs() <= 3.0 * tsigma;
        let im_ok = (tmean.im - oracle[3].im).abs() <= 3.0 * tsigma;
        passed &= re_ok && im_ok;
        detail.push_str(&format!(
            "triple={:.4}{:+.4}i±{:.4} (oracle {:.4}{:+.4}i±{:.4}); top-level pop {:.1e}; discarded {}",
            tmean.re,
            tmean.im,
            tse,
            oracle[3].re,
            oracle[3].im,
            trunc[3],
            top_pop,
            stats.n_discarded
        ));
        Ok((passed, detail))
    };
    outcome("A7", "positive-P vs master-equation oracle", t0, run())
}

/// A8 — phase diffusion: regime-2 ensemble with n₁⁰ = 50 gives
/// Var[φ₁−φ₂] slope = γ/n₁⁰ within 15% (quick: 25%, 300 trajectories
/// instead of 1000).
pub fn a8_phase_diffusion(quick: bool) -> CriterionOutcome {
    let t0 = Instant::now();
    let (n_traj, tol) = if quick { (300, 0.25) } else { (1000, 0.15) };
    let run = || -> Result<(bool, String)> {
        let p = SystemParams::symmetric(10.0, 1.0, 0.1, 105.0);
        let sol = analytic::steady_state(&p)?;
        let start = analytic::concrete_state(&sol, &p, &[0.0]);
        let cfg = IntegratorConfig {
            scheme: Scheme::EulerMaruyama,
            representation: Representation::Wigner,
            dt: 1e-3,
            t_end: 5.0,
            record_stride: 25,
            seed: 808,
            initial: InitialState::State(PhaseSpaceState::new(
                Representation::Wigner,
                start.amplitudes,
            )),
        };
        let obs = [Observable::PhaseDifference(1, 2)];
        let stats = run_ensemble(&p, &cfg, n_traj, &obs, None)?;
        let (slope, se) =
            estimate_diffusion_slope(&stats, Observable::PhaseDifference(1, 2), (0.5, 5.0), 0.1)?;
        let expected = phase_diffusion_expected(&p)?;
        let rel = (slope - expected).abs() / expected;
        Ok((
            rel <= tol,
            format!(
                "slope {slope:.5} ± {se:.5} vs gamma/n1 = {expected:.5} (rel dev {:.1}%, tol {:.0}%)",
                100.0 * rel,
                100.0 * tol
            ),
        ))
    };
    outcome("A8", "phase-diffusion rate of phi1 - phi2", t0, run())
}

fn phase_diffusion_expected(p: &SystemParams) -> Result<f64> {
    let sol = analytic::steady_state(p)?;
    Ok(stability::phase_diffusion_rates(&sol, p)?[0].1)
}

/// A9 — dynamics classes: fig3 converges with θ₁ = θ₂ = 0, fig6 keeps
/// spiking and its dominant frequency grows with the drive ratio, the
/// low-γ₀ fig8-bottom case grows without reverting.
pub fn a9_dynamics_classes(_quick: bool) -> CriterionOutcome {
    let t0 = Instant::now();
    let run = || -> Result<(bool, String)> {
        let fig3 = scenario::load("fig3")?;
        let traj3 = simulate(&fig3.params, &fig3.config)?;
        let class3 = detect_dynamics_class(&traj3, 200.0)?;
        let ph3 = experiments::phase_observables(&traj3);
        let theta_end =
            ph3.theta1.last().unwrap().abs().max(ph3.theta2.last().unwrap().abs());
        let fig3_ok = class3 == DynamicsClass::ConvergedFixedPoint && theta_end < 1e-4;

        let fig6 = scenario::load("fig6")?;
        let traj6 = simulate(&fig6.params, &fig6.config)?;
        let class6 = detect_dynamics_class(&traj6, 320.0)?;
        let f_58 = spiking_frequency(&traj6);
        let mut fig6_hi = fig6.clone();
        let (_e1, e2) = analytic::generalized_threshold_amplitudes(&fig6.params)?;
        fig6_hi.params.drive = Complex64::new(7.0 * e2, 0.0);
        let traj6_hi = simulate(&fig6_hi.params, &fig6_hi.config)?;
        let f_70 = spiking_frequency(&traj6_hi);
        let fig6_ok = class6 == DynamicsClass::PersistentOscillation
            && matches!((f_58, f_70), (Some(a), Some(b)) if b > a);

        let fig8 = scenario::load("fig8-bottom")?;
        let traj8 = simulate(&fig8.params, &fig8.config)?;
        let class8 = detect_dynamics_class(&traj8, 400.0)?;
        let fig8_ok = class8 == DynamicsClass::GrowingOscillation;

        Ok((
            fig3_ok && fig6_ok && fig8_ok,
            format!(
                "fig3: {class3:?} |theta|_end {theta_end:.1e}; fig6: {class6:?} f(5.8)={:?} f(7.0)={:?}; fig8-bottom: {class8:?}",
                f_58, f_70
            ),
        ))
    };
    outcome("A9", "dynamics-class reproduction", t0, run())
}

fn spiking_frequency(traj: &crate::integrate::Trajectory) -> Option<f64> {
    // Spectral peak of the intermediate-pump intensity over the second half.
    let series = experiments::intensity_series(traj, 2);
    let half = series.len() / 2;
    let dt_sample = traj.times[1] - traj.times[0];
    dominant_frequency(&series[half..], dt_sample)
}

/// A10 — perturbation recovery: the fig9 kick (100%, real+imaginary)
/// returns to the pre-kick amplitudes within 1e-3 relative with θ₁, θ₂
/// back at 0; the fig11 real-part-only kick (> 50%) swings the
/// intermediate-pump phase through ≈ ±π before recovering.
pub fn a10_perturbation_recovery(_quick: bool) -> CriterionOutcome {
    let t0 = Instant::now();
    let run = || -> Result<(bool, String)> {
        let fig9 = scenario::load("fig9")?;
        let out9 = experiments::run_perturbation(&fig9)?;
        let both_ok = out9.report.amplitudes_recovered && out9.report.thetas_recovered;

        let fig11 = scenario::load("fig11")?;
        let out11 = experiments::run_perturbation(&fig11)?;
        let excursion = out11.report.max_phi2_excursion;
        let real_ok = out11.report.amplitudes_recovered
            && out11.report.thetas_recovered
            && excursion > 2.5;
        Ok((
            both_ok && real_ok,
            format!(
                "fig9 recovery at t={:?} thetas ({:.1e}, {:.1e}); fig11 phi2 excursion {excursion:.2} rad (theta2 swing {:.2}) then thetas ({:.1e}, {:.1e})",
                out9.report.recovery_time,
                out9.report.theta1_final,
                out9.report.theta2_final,
                out11.report.max_theta2_excursion,
                out11.report.theta1_final,
                out11.report.theta2_final
            ),
        ))
    };
    outcome("A10", "perturbation recovery and pi excursion", t0, run())
}

/// A11 — integrator orders: RK4 global error shrinks ×16 ± 20% under dt
/// halving on the fig3 parameters; Euler-Maruyama weak bias of ⟨n₁⟩ halves
/// (±25%) under dt halving on the A7 configuration (quick: ±35%, fewer
/// trajectories).
pub fn a11_integrator_orders(quick: bool) -> CriterionOutcome {
    let t0 = Instant::now();
    let run = || -> Result<(bool, String)> {
        // RK4: fig3 parameters, horizon in the smooth pump-buildup phase.
        let fig3 = scenario::load("fig3")?;
        let p = fig3.params.clone();
        let t_end = 60.0;
        let dt0 = 0.05;
        let final_state = |dt: f64| -> Result<Vec<Complex64>> {
            let cfg = IntegratorConfig {
                scheme: Scheme::Rk4,
                representation: Representation::Classical,
                dt,
                t_end,
                record_stride: (t_end / dt).round() as usize,
                seed: 42,
                initial: InitialState::VacuumSeed { amplitude: None, randomize_phases: true },
            };
            Ok(simulate(&p, &cfg)?.final_state().amplitudes)
        };
        let coarse = final_state(dt0)?;
        let half = final_state(dt0 / 2.0)?;
        let reference = final_state(dt0 / 8.0)?;
        let l2 = |a: &[Complex64], b: &[Complex64]| -> f64 {
            a.iter().zip(b).map(|(x, y)| (x - y).norm_sqr()).sum::<f64>().sqrt()
        };
        let e_coarse = l2(&coarse, &reference);
        let e_half = l2(&half, &reference);
        let rk4_ratio = e_coarse / e_half;
        let rk4_ok = (rk4_ratio - 16.0).abs() <= 0.2 * 16.0;

        // Euler-Maruyama weak order 1 on the A7 configuration: common
        // Brownian paths at dt, dt/2 and the dt/16 reference, started from
        // the displaced-pump mean-field point so the diffusion coefficients
        // are smooth along the dominant bias path. With a dt/16 reference
        // the ideal order-1 ratio is 15/7 ≈ 2.14.
        let (n_traj, dt_fine, em_tol) = if quick {
            (8000, 0.0025, 0.35)
        } else {
            (24000, 0.00125, 0.25)
        };
        let p7 = SystemParams::symmetric(2.0, 1.0, 0.5, 1.2);
        let mut amps = vec![Complex64::default(); 5];
        amps[0] = Complex64::new(p7.drive.re / p7.gamma[0], 0.0);
        let init = PhaseSpaceState::new(Representation::Classical, amps).to_positive_p();
        let cfg7 = IntegratorConfig {
            scheme: Scheme::EulerMaruyama,
            representation: Representation::PositiveP,
            dt: dt_fine,
            t_end: 12.0,
            record_stride: 1,
            seed: 909,
            initial: InitialState::State(init),
        };
        let levels = multilevel_weak_probe(&p7, &cfg7, &[16, 8, 1], n_traj, 1)?;
        let mean_diff = |a: &[f64], b: &[f64]| -> f64 {
            a.iter().zip(b).map(|(x, y)| x - y).sum::<f64>() / a.len() as f64
        };
        let bias_coarse = mean_diff(&levels[0], &levels[2]);
        let bias_half = mean_diff(&levels[1], &levels[2]);
        let em_ratio = bias_coarse / bias_half;
        let em_ok = (em_ratio - 2.0).abs() <= em_tol * 2.0;

        Ok((
            rk4_ok && em_ok,
            format!(
                "RK4 error ratio {rk4_ratio:.2} (target 16 ± 20%); EM weak-bias ratio {em_ratio:.2} (target 2 ± {:.0}%)",
                100.0 * em_tol
            ),
        ))
    };
    outcome("A11", "integrator convergence orders", t0, run())
}

/// The core acceptance battery (A1–A11). A12, CSV byte-determinism of the
/// command-line pipeline, lives with the command-line crate.
pub fn run_core_criteria(quick: bool) -> Vec<CriterionOutcome> {
    vec![
        a1_threshold_structure(quick),
        a2_regime3_conservation(quick),
        a3_below_threshold_spectrum(quick),
        a4_second_threshold_bisection(quick),
        a5_routh_hurwitz_cross_validation(quick),
        a6_wigner_vacuum_moment(quick),
        a7_oracle_agreement(quick),
        a8_phase_diffusion(quick),
        a9_dynamics_classes(quick),
        a10_perturbation_recovery(quick),
        a11_integrator_orders(quick),
    ]
}

#[cfg(test)]
mod tests {
    use super::*;

    // The full battery runs in the dedicated acceptance test target; here
    // only the cheapest deterministic checks guard against regressions.
    #[test]
    fn deterministic_checks_pass() {
        for c in [
            a3_below_threshold_spectrum(true),
            a4_second_threshold_bisection(true),
            a5_routh_hurwitz_cross_validation(true),
        ] {
            assert!(c.passed, "{}: {}", c.id, c.detail);
        }
    }
}
