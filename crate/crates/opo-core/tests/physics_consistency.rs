//! Cross-module consistency: dimensionless scaling, flux bookkeeping at
//! fixed points, and numeric-vs-analytic steady states.

use num_complex::Complex64;
use opo_core::analytic::{concrete_state, steady_state};
use opo_core::experiments::{numeric_fixed_point, FixedPointOptions};
use opo_core::integrate::{simulate, InitialState, IntegratorConfig, Scheme};
use opo_core::model::classical_drift;
use opo_core::params::to_dimensionless;
use opo_core::{PhaseSpaceState, Representation, SystemParams};

#[test]
fn scaled_trajectories_depend_only_on_dimensionless_numbers() {
    // Two parameter sets with identical (g, gamma_r, epsilon); trajectories
    // in scaled amplitude alpha·chi/gamma versus tau = gamma·t coincide.
    let p1 = SystemParams::symmetric(10.0, 1.0, 0.1, 150.0);
    let scale_gamma = 2.5;
    let p2 = SystemParams::symmetric(
        10.0 * scale_gamma,
        scale_gamma,
        0.4,
        150.0 * scale_gamma * scale_gamma / 4.0,
    );
    let d1 = to_dimensionless(&p1).unwrap();
    let d2 = to_dimensionless(&p2).unwrap();
    assert!((d1.g - d2.g).abs() < 1e-14);
    assert!((d1.gamma_r - d2.gamma_r).abs() < 1e-14);
    assert!((d1.epsilon - d2.epsilon).abs() < 1e-12);

    // Matching initial conditions in scaled units.
    let raw: Vec<Complex64> = vec![
        Complex64::new(0.5, 0.1),
        Complex64::new(0.02, -0.01),
        Complex64::new(-0.015, 0.005),
        Complex64::new(0.01, 0.02),
        Complex64::new(0.005, -0.02),
    ];
    let tau_end = 30.0;
    let run = |p: &SystemParams, scaled_init: &[Complex64]| -> Vec<Vec<Complex64>> {
        let (gamma, chi) = (p.gamma[1], p.chi1);
        let amps: Vec<Complex64> = scaled_init.iter().map(|z| z * gamma / chi).collect();
        let cfg = IntegratorConfig {
            scheme: Scheme::Rk4,
            representation: Representation::Classical,
            dt: 1e-3 / gamma,
            t_end: tau_end / gamma,
            record_stride: 100,
            seed: 0,
            initial: InitialState::State(PhaseSpaceState::new(
                Representation::Classical,
                amps,
            )),
        };
        let traj = simulate(p, &cfg).unwrap();
        (0..traj.n_samples())
            .map(|k| {
                (0..5)
                    .map(|m| traj.series[m][k] * chi / gamma)
                    .collect::<Vec<Complex64>>()
            })
            .collect()
    };
    let t1 = run(&p1, &raw);
    let t2 = run(&p2, &raw);
    assert_eq!(t1.len(), t2.len());
    for (row1, row2) in t1.iter().zip(&t2) {
        for (a, b) in row1.iter().zip(row2) {
            let scale = a.norm().max(1e-3);
            assert!(
                (a - b).norm() <= 1e-8 * scale,
                "scaled trajectories diverge: {a} vs {b}"
            );
        }
    }
}

#[test]
fn chi_terms_cancel_in_flux_combination_at_fixed_point() {
    // d/dt(n1 - n2 - n3) at the regime-3 fixed point vanishes identically:
    // every chi-interaction term cancels in that combination.
    let p = SystemParams::symmetric(10.0, 1.0, 0.1, 220.0);
    let sol = steady_state(&p).unwrap();
    let s = concrete_state(&sol, &p, &[0.35, -0.6]);
    let d = classical_drift(&s, &p).unwrap();
    let a = &s.amplitudes;
    let ndot = |m: usize| 2.0 * (a[m].conj() * d[m]).re;
    let combo = ndot(1) - ndot(2) - ndot(3);
    assert!(combo.abs() < 1e-10, "flux combination {combo}");
}

#[test]
fn numeric_fixed_points_reproduce_all_three_regimes() {
    for (eps_sq, regime_label) in
        [(0.5, "below"), (1.1, "first-above"), (1.8, "second-above")]
    {
        let e_thr1 = 10.0 * 1.0 / 0.1;
        let p = SystemParams::symmetric(10.0, 1.0, 0.1, (eps_sq as f64).sqrt() * e_thr1);
        let sol = steady_state(&p).unwrap();
        let fp = numeric_fixed_point(&p, &FixedPointOptions::for_params(&p)).unwrap();
        assert!(fp.converged, "{regime_label}: drift {}", fp.drift_norm);
        let nmax = sol.intensities.iter().cloned().fold(1e-12, f64::max);
        for m in 0..5 {
            let got = fp.state.amplitudes[m].norm_sqr();
            assert!(
                (got - sol.intensities[m]).abs() <= 1e-6 * nmax,
                "{regime_label}: mode {m} intensity {got} vs {}",
                sol.intensities[m]
            );
        }
    }
}

#[test]
fn free_phase_choice_does_not_move_intensities() {
    let p = SystemParams::symmetric(10.0, 1.0, 0.1, 220.0);
    let sol = steady_state(&p).unwrap();
    for free in [[0.0, 0.0], [1.1, 0.4], [-2.0, 2.7]] {
        let s = concrete_state(&sol, &p, &free);
        let cfg = IntegratorConfig {
            scheme: Scheme::Rk4,
            representation: Representation::Classical,
            dt: 1e-2,
            t_end: 50.0,
            record_stride: 100,
            seed: 0,
            initial: InitialState::State(s),
        };
        let traj = simulate(&p, &cfg).unwrap();
        let last = traj.final_state();
        for m in 0..5 {
            assert!(
                (last.amplitudes[m].norm_sqr() - sol.intensities[m]).abs() < 1e-8 * 400.0,
                "free phases {free:?} drifted mode {m}"
            );
        }
    }
}
