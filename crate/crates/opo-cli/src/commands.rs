//! Command implementations shared by the binary and the acceptance tests.

use std::fs;
use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};
use opo_core::analytic;
use opo_core::experiments::{
    self, detect_dynamics_class, numeric_fixed_point, phase_observables, run_perturbation,
    threshold_sweep, FixedPointOptions,
};
use opo_core::integrate::simulate;
use opo_core::scenario::{self, Protocol, Scenario};
use opo_core::stability;
use opo_core::Verdict;
use serde_json::json;

use crate::csvout;
use crate::manifest::ManifestWriter;

/// Output directory: `--out` flag, then `OPO_OUT_DIR`, then `./opo-out`.
pub fn resolve_out_dir(flag: Option<&Path>) -> PathBuf {
    if let Some(p) = flag {
        return p.to_path_buf();
    }
    if let Ok(env_dir) = std::env::var("OPO_OUT_DIR") {
        if !env_dir.is_empty() {
            return PathBuf::from(env_dir);
        }
    }
    PathBuf::from("opo-out")
}

pub fn load_scenario(reference: &str, seed_override: Option<u64>) -> Result<Scenario> {
    let mut sc = scenario::load(reference).with_context(|| format!("loading {reference}"))?;
    if let Some(seed) = seed_override {
        sc.config.seed = seed;
    }
    Ok(sc)
}

fn ensure_dir(dir: &Path) -> Result<()> {
    fs::create_dir_all(dir).with_context(|| format!("creating {}", dir.display()))
}

fn verdict_label(v: Verdict) -> &'static str {
    match v {
        Verdict::Stable => "stable",
        Verdict::Marginal => "marginal",
        Verdict::Unstable => "unstable",
    }
}

/// `opo analyze`: regime, thresholds, steady state and linearized
/// stability; falls back to a numeric fixed point with a notice when the
/// closed forms do not cover the parameters.
pub fn cmd_analyze(sc: &Scenario, reference: &str, out_dir: &Path) -> Result<Vec<PathBuf>> {
    ensure_dir(out_dir)?;
    let jsonl = out_dir.join(format!("{}_analyze.jsonl", sc.name));
    let _ = fs::remove_file(&jsonl);
    let mut manifest = ManifestWriter::start(&jsonl, "analyze", reference, sc)?;
    let p = &sc.params;

    match analytic::steady_state(p) {
        Ok(sol) => {
            let report = stability::report(&sol, p)?;
            println!("regime: {}", sol.regime.label());
            println!(
                "thresholds |E_thr,1|^2 = {:.6e}, |E_thr,2|^2 = {:.6e}, |E0|^2 = {:.6e}",
                sol.thresholds.0,
                sol.thresholds.1,
                p.drive.norm_sqr()
            );
            println!(
                "steady intensities n0..n4 = [{}]",
                sol.intensities.map(|x| format!("{x:.6}")).join(", ")
            );
            for w in &report.warnings {
                println!("warning: {w}");
            }
            for (sub, eigs, verdict) in &report.subsystems {
                let eig_str: Vec<String> =
                    eigs.iter().map(|l| format!("{:+.4}{:+.4}i", l.re, l.im)).collect();
                println!(
                    "  {:45} {:9} eigenvalues/gamma: [{}]",
                    sub.name,
                    verdict_label(*verdict),
                    eig_str.join(", ")
                );
                manifest.event(json!({
                    "event": "subsystem",
                    "name": sub.name,
                    "verdict": verdict_label(*verdict),
                    "eigenvalues_re": eigs.iter().map(|l| l.re).collect::<Vec<_>>(),
                    "eigenvalues_im": eigs.iter().map(|l| l.im).collect::<Vec<_>>(),
                }))?;
            }
            for (phase, rate) in &report.diffusing_phases {
                println!("  diffusing phase {phase}: rate {rate:.6e} (inverse time)");
                manifest.event(json!({
                    "event": "phase_diffusion",
                    "phase": phase,
                    "rate": rate,
                }))?;
            }
            println!(
                "overall: {}",
                if report.overall_stable { "stable" } else { "not stable (see subsystems)" }
            );
            manifest.finish(&[], json!({"regime": sol.regime.label(), "overall_stable": report.overall_stable}))?;
        }
        Err(opo_core::Error::AsymmetricParams(why)) => {
            println!("closed forms unavailable ({why}); falling back to a numeric fixed point");
            let fp = numeric_fixed_point(p, &FixedPointOptions::for_params(p))?;
            let state = fp.state.clone();
            println!(
                "numeric fixed point (converged = {}, drift = {:.2e}) intensities: [{}]",
                fp.converged,
                fp.drift_norm,
                (0..p.n_modes())
                    .map(|m| format!("{:.6}", state.amplitudes[m].norm_sqr()))
                    .collect::<Vec<_>>()
                    .join(", ")
            );
            let j = opo_core::model::drift_jacobian_doubled(&state, p)?;
            let eigs = stability::eigenvalues_dense(&j)?;
            let verdict = stability::classify_eigenvalues(&eigs);
            println!(
                "doubled-Jacobian spectrum: {} (max Re = {:+.4e})",
                verdict_label(verdict),
                opo_core::linalg::max_real_part(&eigs).unwrap_or(f64::NAN)
            );
            manifest.finish(
                &[],
                json!({
                    "numeric_fixed_point": true,
                    "converged": fp.converged,
                    "drift_norm": fp.drift_norm,
                    "verdict": verdict_label(verdict),
                }),
            )?;
        }
        Err(e) => return Err(e.into()),
    }
    Ok(vec![jsonl])
}

/// `opo simulate`: one trajectory, CSV plus plot script.
pub fn cmd_simulate(sc: &Scenario, reference: &str, out_dir: &Path) -> Result<Vec<PathBuf>> {
    ensure_dir(out_dir)?;
    let jsonl = out_dir.join(format!("{}_manifest.jsonl", sc.name));
    let _ = fs::remove_file(&jsonl);
    let manifest = ManifestWriter::start(&jsonl, "simulate", reference, sc)?;
    let traj = simulate(&sc.params, &sc.config)?;
    let phases = phase_observables(&traj);
    let csv_path = out_dir.join(format!("{}_trajectory.csv", sc.name));
    fs::write(&csv_path, csvout::trajectory_csv(&traj, &phases))?;
    let gp_path = out_dir.join(format!("{}_trajectory.gp", sc.name));
    fs::write(
        &gp_path,
        csvout::trajectory_plot_script(
            &format!("{}_trajectory.csv", sc.name),
            phases.phases.len(),
        ),
    )?;
    let span = *traj.times.last().unwrap_or(&0.0);
    let class = detect_dynamics_class(&traj, span * 0.25)?;
    let drift = experiments::drift_rel_norm(&traj.final_state(), &sc.params)?;
    println!(
        "{}: {} samples to t = {:.3}; final drift {:.3e}; dynamics {:?}",
        sc.name,
        traj.n_samples(),
        span,
        drift,
        class
    );
    let outputs = vec![csv_path, gp_path];
    manifest.finish(
        &outputs,
        json!({"dynamics_class": format!("{class:?}"), "final_drift": drift}),
    )?;
    Ok(outputs)
}

/// `opo ensemble`: stochastic moment estimation.
pub fn cmd_ensemble(sc: &Scenario, reference: &str, out_dir: &Path) -> Result<Vec<PathBuf>> {
    let Protocol::EnsembleMoments { .. } = sc.protocol else {
        bail!("scenario {} does not define an ensemble protocol", sc.name);
    };
    ensure_dir(out_dir)?;
    let jsonl = out_dir.join(format!("{}_manifest.jsonl", sc.name));
    let _ = fs::remove_file(&jsonl);
    let manifest = ManifestWriter::start(&jsonl, "ensemble", reference, sc)?;
    let stats = experiments::run_ensemble_protocol(sc)?;
    let csv_path = out_dir.join(format!("{}_ensemble.csv", sc.name));
    fs::write(&csv_path, csvout::ensemble_csv(&stats))?;
    println!(
        "{}: {} trajectories ({} discarded), {} samples",
        sc.name,
        stats.n_traj,
        stats.n_discarded,
        stats.times.len()
    );
    for m in &stats.moments {
        if let Some((mean, _var, se)) = m.window {
            println!(
                "  {}: window mean {:+.6e}{:+.6e}i +- {:.2e}",
                m.observable.label(),
                mean.re,
                mean.im,
                se
            );
        }
    }
    let outputs = vec![csv_path];
    manifest.finish(
        &outputs,
        json!({"n_traj": stats.n_traj, "n_discarded": stats.n_discarded}),
    )?;
    Ok(outputs)
}

/// `opo sweep`: steady-state scan, analytic and numeric.
pub fn cmd_sweep(sc: &Scenario, reference: &str, out_dir: &Path) -> Result<Vec<PathBuf>> {
    let Protocol::Sweep { ref grid } = sc.protocol else {
        bail!("scenario {} does not define a sweep protocol", sc.name);
    };
    ensure_dir(out_dir)?;
    let jsonl = out_dir.join(format!("{}_manifest.jsonl", sc.name));
    let _ = fs::remove_file(&jsonl);
    let manifest = ManifestWriter::start(&jsonl, "sweep", reference, sc)?;
    let rows = threshold_sweep(&sc.params, grid, None)?;
    let worst = rows.iter().filter_map(|r| r.rel_gap).fold(0.0f64, f64::max);
    let csv_path = out_dir.join(format!("{}_sweep.csv", sc.name));
    fs::write(&csv_path, csvout::sweep_csv(&rows))?;
    let gp_path = out_dir.join(format!("{}_sweep.gp", sc.name));
    fs::write(&gp_path, csvout::sweep_plot_script(&format!("{}_sweep.csv", sc.name)))?;
    println!(
        "{}: {} grid points, worst numeric-vs-analytic gap {:.3e}",
        sc.name,
        rows.len(),
        worst
    );
    let outputs = vec![csv_path, gp_path];
    manifest.finish(&outputs, json!({"worst_rel_gap": worst}))?;
    Ok(outputs)
}

/// `opo perturb`: kick at the steady state and report recovery.
pub fn cmd_perturb(sc: &Scenario, reference: &str, out_dir: &Path) -> Result<Vec<PathBuf>> {
    ensure_dir(out_dir)?;
    let jsonl = out_dir.join(format!("{}_manifest.jsonl", sc.name));
    let _ = fs::remove_file(&jsonl);
    let mut manifest = ManifestWriter::start(&jsonl, "perturb", reference, sc)?;
    let out = run_perturbation(sc)?;
    let csv_path = out_dir.join(format!("{}_trajectory.csv", sc.name));
    fs::write(&csv_path, csvout::trajectory_csv(&out.trajectory, &out.phases))?;
    let gp_path = out_dir.join(format!("{}_trajectory.gp", sc.name));
    fs::write(
        &gp_path,
        csvout::trajectory_plot_script(
            &format!("{}_trajectory.csv", sc.name),
            out.phases.phases.len(),
        ),
    )?;
    let r = &out.report;
    println!(
        "{}: kick at t = {:.3}; amplitudes recovered: {} (t = {:?}); thetas recovered: {}; max |theta2| swing {:.3}; max |phi2| swing {:.3}",
        sc.name, r.kick_time, r.amplitudes_recovered, r.recovery_time, r.thetas_recovered,
        r.max_theta2_excursion, r.max_phi2_excursion
    );
    println!(
        "  permanent phase offsets: [{}]",
        r.phase_offsets.iter().map(|x| format!("{x:+.4}")).collect::<Vec<_>>().join(", ")
    );
    manifest.event(json!({
        "event": "recovery_report",
        "kick_time": r.kick_time,
        "recovery_time": r.recovery_time,
        "amplitudes_recovered": r.amplitudes_recovered,
        "theta1_final": r.theta1_final,
        "theta2_final": r.theta2_final,
        "thetas_recovered": r.thetas_recovered,
        "phase_offsets": r.phase_offsets,
        "max_theta2_excursion": r.max_theta2_excursion,
        "max_phi2_excursion": r.max_phi2_excursion,
    }))?;
    let outputs = vec![csv_path, gp_path];
    manifest.finish(&outputs, json!({"recovered": r.amplitudes_recovered}))?;
    Ok(outputs)
}

/// Scenario-appropriate default command: simulate a trace, run a perturb
/// protocol, etc. The verify battery and tests route through this.
pub fn run_scenario_default(sc: &Scenario, reference: &str, out_dir: &Path) -> Result<Vec<PathBuf>> {
    match sc.protocol {
        Protocol::Trace => cmd_simulate(sc, reference, out_dir),
        Protocol::Sweep { .. } => cmd_sweep(sc, reference, out_dir),
        Protocol::Perturb { .. } => cmd_perturb(sc, reference, out_dir),
        Protocol::EnsembleMoments { .. } => cmd_ensemble(sc, reference, out_dir),
    }
}
