use num_complex::Complex64;
use opo_core::experiments::{self, detect_dynamics_class, drift_rel_norm, dominant_frequency};
use opo_core::integrate::{simulate, run_ensemble, InitialState, IntegratorConfig, Observable, Scheme, multilevel_weak_probe};
use opo_core::oracle::{evolve_master, expect, DensityMatrix, EvolveOptions, FockConfig};
use opo_core::params::SystemParams;
use opo_core::scenario;
use opo_core::state::{PhaseSpaceState, Representation};

fn trace_report(name: &str, seed_amp: Option<f64>, t_end: f64) {
    let mut sc = scenario::load(name).unwrap();
    sc.config.t_end = t_end;
    if let InitialState::VacuumSeed { ref mut amplitude, .. } = sc.config.initial {
        *amplitude = seed_amp;
    }
    let traj = simulate(&sc.params, &sc.config).unwrap();
    let drift = drift_rel_norm(&traj.final_state(), &sc.params).unwrap();
    let ph = experiments::phase_observables(&traj);
    let class = detect_dynamics_class(&traj, t_end * 0.2).unwrap();
    println!(
        "{name}: seed={seed_amp:?} t_end={t_end}: drift={drift:.2e} class={class:?} th1={:.2e} th2={:.2e}",
        ph.theta1.last().unwrap(), ph.theta2.last().unwrap()
    );
}

fn main() {
    let what = std::env::args().nth(1).unwrap_or_default();
    match what.as_str() {
        "scen" => {
            for seed_amp in [None, Some(1e-4), Some(1e-3)] {
                trace_report("fig3", seed_amp, 150.0);
                trace_report("fig3", seed_amp, 300.0);
            }
            for seed_amp in [Some(1e-3)] {
                trace_report("fig4", seed_amp, 150.0);
                trace_report("fig4", seed_amp, 300.0);
                trace_report("fig9", seed_amp, 300.0);
            }
        }
        "fig6" => {
            for ratio in [5.8, 7.0] {
                let mut sc = scenario::load("fig6").unwrap();
                let (_e1, e2) = opo_core::analytic::generalized_threshold_amplitudes(&sc.params).unwrap();
                sc.params.drive = Complex64::new(ratio * e2, 0.0);
                if let InitialState::VacuumSeed { ref mut amplitude, .. } = sc.config.initial {
                    *amplitude = Some(1e-3);
                }
                for t_end in [400.0, 800.0] {
                    sc.config.t_end = t_end;
                    let traj = simulate(&sc.params, &sc.config).unwrap();
                    let class = detect_dynamics_class(&traj, t_end * 0.4).unwrap();
                    let s = experiments::intensity_series(&traj, 2);
                    let half = &s[s.len() / 2..];
                    let dt_s = traj.times[1] - traj.times[0];
                    let f = dominant_frequency(half, dt_s);
                    let mx = half.iter().cloned().fold(0.0f64, f64::max);
                    let mn = half.iter().cloned().fold(f64::MAX, f64::min);
                    println!("fig6 ratio={ratio} t_end={t_end}: class={class:?} n2 in [{mn:.3}, {mx:.3}] f={f:?}");
                }
            }
        }
        "a7" => {
            let p = SystemParams::symmetric(2.0, 1.0, 0.5, 1.2);
            let fock = FockConfig::new(&[3, 2, 2, 2, 2]);
            let opts = EvolveOptions::new(5e-3, 12.0).with_saturation_threshold(2e-2);
            let rho = evolve_master(&DensityMatrix::vacuum(&fock), &p, &fock, &opts).unwrap();
            let o = [
                expect(&rho, &fock, &[(1, true), (1, false)]).re,
                expect(&rho, &fock, &[(2, true), (2, false)]).re,
                expect(&rho, &fock, &[(3, true), (3, false)]).re,
            ];
            let tr = expect(&rho, &fock, &[(1, false), (3, false), (4, false)]);
            println!("oracle: n1={:.5} n2={:.5} n3={:.5} triple={:.5}{:+.5}i", o[0], o[1], o[2], tr.re, tr.im);
            for (scheme, dt, label) in [
                (Scheme::EulerMaruyama, 5e-4, "EM 5e-4"),
                (Scheme::Heun, 1e-3, "Heun 1e-3"),
                (Scheme::Heun, 2e-3, "Heun 2e-3"),
            ] {
                let cfg = IntegratorConfig {
                    scheme, representation: Representation::PositiveP,
                    dt, t_end: 12.0, record_stride: (0.05 / dt) as usize, seed: 707,
                    initial: InitialState::State(PhaseSpaceState::zero(
                        Representation::PositiveP, opo_core::params::Topology::Nondegenerate)),
                };
                let obs = [Observable::Intensity(1), Observable::Intensity(2), Observable::Intensity(3), Observable::Triple];
                let t0 = std::time::Instant::now();
                let stats = run_ensemble(&p, &cfg, 10_000, &obs, Some(8.0)).unwrap();
                print!("{label} ({:.1}s): ", t0.elapsed().as_secs_f64());
                for (k, lbl) in ["n1", "n2", "n3", "tripleRe"].iter().enumerate() {
                    let (m, _v, se) = stats.moments[k.min(3)].window.unwrap();
                    if k < 3 {
                        print!("{lbl}={:.5}±{:.5} ", m.re, se);
                    } else {
                        print!("{lbl}={:.5}±{:.5} im={:.5} ", m.re, se, m.im);
                    }
                }
                println!("disc={}", stats.n_discarded);
            }
        }
        "a11" => {
            let p7 = SystemParams::symmetric(2.0, 1.0, 0.5, 1.2);
            let cfg7 = IntegratorConfig {
                scheme: Scheme::EulerMaruyama, representation: Representation::PositiveP,
                dt: 0.005, t_end: 8.0, record_stride: 1, seed: 909,
                initial: InitialState::State(PhaseSpaceState::zero(
                    Representation::PositiveP, opo_core::params::Topology::Nondegenerate)),
            };
            for mult in [[16usize, 8, 1], [8, 4, 1], [4, 2, 1]] {
                let levels = multilevel_weak_probe(&p7, &cfg7, &mult, 4000, 1).unwrap();
                let mean_diff = |a: &[f64], b: &[f64]| -> f64 {
                    a.iter().zip(b).map(|(x, y)| x - y).sum::<f64>() / a.len() as f64
                };
                let b0 = mean_diff(&levels[0], &levels[2]);
                let b1 = mean_diff(&levels[1], &levels[2]);
                println!("mult {mult:?}: bias {b0:.6} / {b1:.6} ratio {:.3}", b0 / b1);
            }
        }
        _ => println!("usage: dbg_cal scen|fig6|a7|a11"),
    }
}
