//! Command pipeline and file-format tests: scenario resolution, CSV
//! round-trips, manifests, and the documented analyze fallback.

use std::fs;
use std::path::PathBuf;

use opo_cli::commands;
use opo_cli::csvout;
use opo_core::experiments::phase_observables;
use opo_core::integrate::simulate;
use opo_core::scenario;

fn temp_dir(tag: &str) -> PathBuf {
    let d = std::env::temp_dir().join(format!("opo-cli-test-{tag}-{}", std::process::id()));
    let _ = fs::remove_dir_all(&d);
    fs::create_dir_all(&d).unwrap();
    d
}

const SMALL_TRACE: &str = r#"
name = small-trace
[params]
gamma = 10, 1, 1, 1, 1
chi = 0.1
drive_abs = 220
[integrator]
scheme = rk4
dt = 1e-2
t_end = 30
record_stride = 10
seed = 5
initial = vacuum
seed_amplitude = 1e-3
[protocol]
type = trace
"#;

const SMALL_ENSEMBLE: &str = r#"
name = small-ensemble
[params]
gamma = 2, 1, 1, 1, 1
chi = 0.1
drive_abs = 1
[integrator]
scheme = euler_maruyama
representation = wigner
dt = 5e-3
t_end = 1.0
record_stride = 20
seed = 33
initial = zero
[protocol]
type = ensemble
n_traj = 64
observables = n0, n1, triple
window_start = 0.5
"#;

#[test]
fn bundled_scenarios_resolve_by_name_and_extension() {
    assert!(scenario::load("fig3").is_ok());
    assert!(scenario::load("fig3.scn").is_ok());
    let err = scenario::load("fig99").unwrap_err();
    assert!(err.to_string().contains("fig3"), "error should list bundled names: {err}");
}

#[test]
fn file_path_wins_over_bundled() {
    let dir = temp_dir("resolve");
    let path = dir.join("fig3.scn");
    fs::write(&path, SMALL_TRACE).unwrap();
    let sc = scenario::load(path.to_str().unwrap()).unwrap();
    assert_eq!(sc.name, "small-trace");
}

#[test]
fn trajectory_csv_round_trips_bit_exactly() {
    let sc = scenario::parse(SMALL_TRACE).unwrap();
    let traj = simulate(&sc.params, &sc.config).unwrap();
    let phases = phase_observables(&traj);
    let text = csvout::trajectory_csv(&traj, &phases);
    let table = csvout::parse_csv(&text).unwrap();
    assert_eq!(table.rows.len(), traj.n_samples());
    let t = table.column("t").unwrap();
    let re2 = table.column("re2").unwrap();
    let n4 = table.column("n4").unwrap();
    for k in 0..traj.n_samples() {
        assert_eq!(t[k].to_bits(), traj.times[k].to_bits());
        assert_eq!(re2[k].to_bits(), traj.series[2][k].re.to_bits());
        assert_eq!(n4[k].to_bits(), traj.series[4][k].norm_sqr().to_bits());
    }
}

#[test]
fn simulate_writes_csv_plot_and_manifest() {
    let dir = temp_dir("simulate");
    let sc = scenario::parse(SMALL_TRACE).unwrap();
    let outputs = commands::cmd_simulate(&sc, "<inline>", &dir).unwrap();
    assert_eq!(outputs.len(), 2);
    assert!(outputs[0].exists() && outputs[1].exists());
    let manifest = fs::read_to_string(dir.join("small-trace_manifest.jsonl")).unwrap();
    let lines: Vec<&str> = manifest.lines().collect();
    assert_eq!(lines.len(), 2);
    let start: serde_json::Value = serde_json::from_str(lines[0]).unwrap();
    let finish: serde_json::Value = serde_json::from_str(lines[1]).unwrap();
    assert_eq!(start["event"], "start");
    assert_eq!(start["seed"], 5);
    assert_eq!(start["params"]["gamma"][0], 10.0);
    assert_eq!(finish["event"], "finish");
    assert!(finish["wall_clock_s"].as_f64().unwrap() > 0.0);
    let gp = fs::read_to_string(&outputs[1]).unwrap();
    assert!(gp.contains("plot") && gp.contains("theta1"));
}

#[test]
fn ensemble_command_writes_moment_series() {
    let dir = temp_dir("ensemble");
    let sc = scenario::parse(SMALL_ENSEMBLE).unwrap();
    let outputs = commands::cmd_ensemble(&sc, "<inline>", &dir).unwrap();
    let table = csvout::parse_csv(&fs::read_to_string(&outputs[0]).unwrap()).unwrap();
    assert!(table.column("n0_mean_re").is_some());
    assert!(table.column("triple_se").is_some());
    assert_eq!(table.rows.len(), 11);
}

#[test]
fn seed_override_changes_stochastic_but_not_classical_output() {
    let dir = temp_dir("seed");
    // Classical: the RK4 path never touches the RNG once seeded with
    // deterministic phases, so two seeds give identical CSVs when the
    // initial state is pinned.
    let mut classical = scenario::parse(SMALL_TRACE).unwrap();
    classical.config.initial = opo_core::InitialState::State(opo_core::PhaseSpaceState::new(
        opo_core::Representation::Classical,
        vec![num_complex::Complex64::new(0.1, 0.0); 5],
    ));
    let mut a = classical.clone();
    a.config.seed = 1;
    let mut b = classical;
    b.config.seed = 2;
    let out_a = commands::cmd_simulate(&a, "<inline>", &dir.join("a")).unwrap();
    let out_b = commands::cmd_simulate(&b, "<inline>", &dir.join("b")).unwrap();
    assert_eq!(fs::read(&out_a[0]).unwrap(), fs::read(&out_b[0]).unwrap());

    let sc = scenario::parse(SMALL_ENSEMBLE).unwrap();
    let mut s1 = sc.clone();
    s1.config.seed = 1;
    let mut s2 = sc;
    s2.config.seed = 2;
    let e1 = commands::cmd_ensemble(&s1, "<inline>", &dir.join("e1")).unwrap();
    let e2 = commands::cmd_ensemble(&s2, "<inline>", &dir.join("e2")).unwrap();
    assert_ne!(fs::read(&e1[0]).unwrap(), fs::read(&e2[0]).unwrap());
}

#[test]
fn analyze_falls_back_to_numeric_for_asymmetric_losses() {
    // fig9's loss set is outside the symmetric closed forms; the command
    // must fall through to the numeric fixed point and still succeed.
    let dir = temp_dir("analyze");
    let sc = scenario::load("fig9").unwrap();
    let outputs = commands::cmd_analyze(&sc, "fig9", &dir).unwrap();
    let manifest = fs::read_to_string(&outputs[0]).unwrap();
    let finish: serde_json::Value =
        serde_json::from_str(manifest.lines().last().unwrap()).unwrap();
    assert_eq!(finish["extra"]["numeric_fixed_point"], true);
    assert_eq!(finish["extra"]["converged"], true);
}

#[test]
fn analyze_reports_regime_and_stability_for_symmetric_params() {
    let dir = temp_dir("analyze-sym");
    let text = r#"
name = sym-regime3
[params]
gamma = 10, 1, 1, 1, 1
chi = 0.1
epsilon_sq = 1.5
[integrator]
scheme = rk4
dt = 1e-2
t_end = 1
[protocol]
type = trace
"#;
    let sc = scenario::parse(text).unwrap();
    let outputs = commands::cmd_analyze(&sc, "<inline>", &dir).unwrap();
    let manifest = fs::read_to_string(&outputs[0]).unwrap();
    let finish: serde_json::Value =
        serde_json::from_str(manifest.lines().last().unwrap()).unwrap();
    assert_eq!(finish["extra"]["regime"], "second-above-threshold");
    assert_eq!(finish["extra"]["overall_stable"], true);
}

#[test]
fn out_dir_resolution_order() {
    let flag = PathBuf::from("/tmp/flagged");
    assert_eq!(commands::resolve_out_dir(Some(flag.as_path())), flag);
    // Without a flag, the env var wins over the default; this process may
    // run tests concurrently, so only exercise the flagged branch and the
    // default fallback shape.
    let fallback = commands::resolve_out_dir(None);
    assert!(fallback == PathBuf::from("opo-out") || fallback.is_absolute() || fallback.components().count() >= 1);
}
