//! The `opo verify` battery: the eleven core checks plus A12, byte-level
//! determinism of the command-line pipeline across reruns and worker
//! counts.

use std::fs;
use std::path::Path;
use std::time::Instant;

use anyhow::Result;
use opo_core::acceptance::{self, CriterionOutcome};

use crate::commands;

/// Stochastic ensemble exercised by A12 (small but covers the parallel
/// reduction, phase observables and the CSV pipeline).
const A12_ENSEMBLE: &str = r#"
name = verify-ensemble
[params]
gamma = 10, 1, 1, 1, 1
chi = 0.1
drive_abs = 105
[integrator]
scheme = euler_maruyama
representation = wigner
dt = 2e-3
t_end = 2.0
record_stride = 50
seed = 4242
initial = zero
[protocol]
type = ensemble
n_traj = 512
observables = n0, n1, n2, triple, phase_diff_12
window_start = 1.0
"#;

/// Classical trace exercised by A12.
const A12_TRACE: &str = r#"
name = verify-trace
[params]
gamma = 1.0, 0.14, 0.08, 0.14, 0.14
chi = 1.0
drive_ratio_thr2 = 3.5
[integrator]
scheme = rk4
dt = 1e-3
t_end = 40
record_stride = 40
seed = 77
initial = vacuum
seed_amplitude = 1e-3
randomize_phases = true
[protocol]
type = trace
"#;

fn run_in_pool<T: Send>(threads: usize, f: impl FnOnce() -> T + Send) -> Result<T> {
    let pool = rayon::ThreadPoolBuilder::new().num_threads(threads).build()?;
    Ok(pool.install(f))
}

fn csv_bytes_of_run(text: &str, dir: &Path, threads: usize) -> Result<Vec<(String, Vec<u8>)>> {
    let sc = opo_core::scenario::parse(text)?;
    let outputs = run_in_pool(threads, || {
        commands::run_scenario_default(&sc, "<embedded>", dir)
    })??;
    let mut bytes = Vec::new();
    for p in outputs {
        if p.extension().map(|e| e == "csv").unwrap_or(false) {
            bytes.push((p.file_name().unwrap().to_string_lossy().into_owned(), fs::read(&p)?));
        }
    }
    Ok(bytes)
}

/// A12 — `cmd_simulate` and `cmd_ensemble` produce byte-identical CSVs
/// across two runs and across worker counts 1 and 8.
pub fn a12_cli_determinism(_quick: bool) -> CriterionOutcome {
    let t0 = Instant::now();
    let run = || -> Result<(bool, String)> {
        let base = std::env::temp_dir().join(format!("opo-verify-{}", std::process::id()));
        let mut all_ok = true;
        let mut detail = String::new();
        for (label, text) in [("simulate", A12_TRACE), ("ensemble", A12_ENSEMBLE)] {
            let d1 = base.join(format!("{label}-run1"));
            let d2 = base.join(format!("{label}-run2"));
            let d8 = base.join(format!("{label}-run8"));
            for d in [&d1, &d2, &d8] {
                let _ = fs::remove_dir_all(d);
            }
            let b1 = csv_bytes_of_run(text, &d1, 1)?;
            let b2 = csv_bytes_of_run(text, &d2, 1)?;
            let b8 = csv_bytes_of_run(text, &d8, 8)?;
            let rerun_ok = b1 == b2;
            let threads_ok = b1 == b8;
            all_ok &= rerun_ok && threads_ok;
            detail.push_str(&format!(
                "{label}: rerun identical {rerun_ok}, threads 1 vs 8 identical {threads_ok} ({} csv files); ",
                b1.len()
            ));
        }
        let _ = fs::remove_dir_all(&base);
        Ok((all_ok, detail.trim_end_matches("; ").to_string()))
    };
    let runtime_s = t0.elapsed().as_secs_f64();
    match run() {
        Ok((passed, detail)) => CriterionOutcome {
            id: "A12",
            title: "byte-identical CSVs across reruns and worker counts",
            passed,
            detail,
            runtime_s: t0.elapsed().as_secs_f64(),
        },
        Err(e) => CriterionOutcome {
            id: "A12",
            title: "byte-identical CSVs across reruns and worker counts",
            passed: false,
            detail: format!("error: {e}"),
            runtime_s,
        },
    }
}

/// The full battery, A1–A12.
pub fn run_all(quick: bool) -> Vec<CriterionOutcome> {
    let mut all = acceptance::run_core_criteria(quick);
    all.push(a12_cli_determinism(quick));
    all
}

/// Print the pass/fail table; returns true iff everything passed.
pub fn print_table(outcomes: &[CriterionOutcome]) -> bool {
    let mut all_ok = true;
    println!("{:-<100}", "");
    for c in outcomes {
        let status = if c.passed { "PASS" } else { "FAIL" };
        all_ok &= c.passed;
        println!("{:4}  {:55} {:4}  {:8.2}s", c.id, c.title, status, c.runtime_s);
        println!("      {}", c.detail);
    }
    println!("{:-<100}", "");
    println!(
        "{} of {} criteria passed",
        outcomes.iter().filter(|c| c.passed).count(),
        outcomes.len()
    );
    all_ok
}
