//! Scenario files: a human-readable key-value format, one scenario per
//! file, with `[params]`, `[integrator]` and `[protocol]` sections.
//!
//! ```text
//! name = fig3
//! [params]
//! topology = nondegenerate
//! gamma = 2.0, 0.14, 0.08, 0.14, 0.14
//! chi = 1.0
//! drive_ratio_thr2 = 3.5        # |E0| relative to the second threshold
//! [integrator]
//! scheme = rk4
//! dt = 5e-4
//! t_end = 150
//! record_stride = 40
//! seed = 7
//! initial = vacuum
//! [protocol]
//! type = trace
//! ```
//!
//! Drive keys, in priority order: `drive = re, im` (absolute complex),
//! `drive_abs`, `epsilon_sq` (|E₀|²/|E_thr,1|²), `drive_ratio_thr1`,
//! `drive_ratio_thr2` (|E₀|/|E_thr,k|, generalized thresholds for unequal
//! losses). `#` starts a comment.

use std::collections::BTreeMap;
use std::path::Path;

use num_complex::Complex64;

use crate::analytic::generalized_threshold_amplitudes;
use crate::error::{Error, Result};
use crate::integrate::{InitialState, IntegratorConfig, Observable, Scheme};
use crate::params::{SystemParams, Topology};
use crate::state::{PhaseSpaceState, Representation};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PerturbTarget {
    RealParts,
    ImagParts,
    Both,
}

#[derive(Debug, Clone, PartialEq)]
pub enum Protocol {
    /// Single trajectory.
    Trace,
    /// Steady-state scan over ε².
    Sweep { grid: Vec<f64> },
    /// Kick the fields at `time` by `magnitude` × the masked components.
    Perturb { time: f64, target: PerturbTarget, magnitude: f64 },
    /// Stochastic ensemble with moment estimation.
    EnsembleMoments {
        n_traj: usize,
        observables: Vec<Observable>,
        window_start: Option<f64>,
    },
}

#[derive(Debug, Clone, PartialEq)]
pub struct Scenario {
    pub name: String,
    pub params: SystemParams,
    pub config: IntegratorConfig,
    pub protocol: Protocol,
}

impl Scenario {
    pub fn validate(&self) -> Result<()> {
        self.params.validate()?;
        self.config.validate(&self.params)?;
        match &self.protocol {
            Protocol::Perturb { time, magnitude, .. } => {
                if !(*time < self.config.t_end) {
                    return Err(Error::Scenario(format!(
                        "perturbation time {time} must precede t_end {}",
                        self.config.t_end
                    )));
                }
                if !magnitude.is_finite() {
                    return Err(Error::Scenario("perturbation magnitude must be finite".into()));
                }
            }
            Protocol::Sweep { grid } => {
                if grid.iter().any(|&x| x < 0.0) {
                    return Err(Error::Scenario("sweep grid values must be >= 0".into()));
                }
            }
            Protocol::EnsembleMoments { n_traj, .. } => {
                if *n_traj == 0 {
                    return Err(Error::Scenario("n_traj must be positive".into()));
                }
            }
            Protocol::Trace => {}
        }
        Ok(())
    }
}

struct Sections {
    top: BTreeMap<String, String>,
    params: BTreeMap<String, String>,
    integrator: BTreeMap<String, String>,
    protocol: BTreeMap<String, String>,
}

fn parse_sections(text: &str) -> Result<Sections> {
    let mut s = Sections {
        top: BTreeMap::new(),
        params: BTreeMap::new(),
        integrator: BTreeMap::new(),
        protocol: BTreeMap::new(),
    };
    let mut current = "";
    for (lineno, raw) in text.lines().enumerate() {
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        if let Some(name) = line.strip_prefix('[').and_then(|l| l.strip_suffix(']')) {
            current = match name.trim() {
                "params" => "params",
                "integrator" => "integrator",
                "protocol" => "protocol",
                other => {
                    return Err(Error::Scenario(format!(
                        "unknown section [{other}] at line {}",
                        lineno + 1
                    )))
                }
            };
            continue;
        }
        let Some((key, value)) = line.split_once('=') else {
            return Err(Error::Scenario(format!("expected key = value at line {}", lineno + 1)));
        };
        let map = match current {
            "params" => &mut s.params,
            "integrator" => &mut s.integrator,
            "protocol" => &mut s.protocol,
            _ => &mut s.top,
        };
        map.insert(key.trim().to_lowercase(), value.trim().to_string());
    }
    Ok(s)
}

fn parse_f64(map: &BTreeMap<String, String>, key: &str) -> Result<Option<f64>> {
    match map.get(key) {
        None => Ok(None),
        Some(v) => v
            .parse::<f64>()
            .map(Some)
            .map_err(|_| Error::Scenario(format!("bad number for {key}: {v}"))),
    }
}

fn require_f64(map: &BTreeMap<String, String>, key: &str) -> Result<f64> {
    parse_f64(map, key)?.ok_or_else(|| Error::Scenario(format!("missing key {key}")))
}

fn parse_list(v: &str) -> Result<Vec<f64>> {
    v.split(',')
        .map(|x| {
            x.trim()
                .parse::<f64>()
                .map_err(|_| Error::Scenario(format!("bad list element: {x}")))
        })
        .collect()
}

fn parse_params(map: &BTreeMap<String, String>) -> Result<SystemParams> {
    let topology = match map.get("topology").map(|s| s.as_str()).unwrap_or("nondegenerate") {
        "nondegenerate" => Topology::Nondegenerate,
        "degenerate" => Topology::Degenerate,
        other => return Err(Error::Scenario(format!("unknown topology {other}"))),
    };
    let gamma_list = parse_list(
        map.get("gamma").ok_or_else(|| Error::Scenario("missing key gamma".into()))?,
    )?;
    if gamma_list.len() != topology.n_modes() {
        return Err(Error::Scenario(format!(
            "gamma needs {} entries for this topology, got {}",
            topology.n_modes(),
            gamma_list.len()
        )));
    }
    let mut gamma = [0.0f64; 5];
    for (i, &g) in gamma_list.iter().enumerate() {
        gamma[i] = g;
    }
    let (chi1, chi2) = if let Some(chi) = parse_f64(map, "chi")? {
        (chi, chi)
    } else {
        (require_f64(map, "chi1")?, require_f64(map, "chi2")?)
    };
    let mut detuning = [0.0f64; 5];
    if let Some(d) = map.get("detuning") {
        let list = parse_list(d)?;
        if list.len() != topology.n_modes() {
            return Err(Error::Scenario("detuning length must match the mode count".into()));
        }
        for (i, &x) in list.iter().enumerate() {
            detuning[i] = x;
        }
    }
    let mut p = SystemParams {
        gamma,
        chi1,
        chi2,
        drive: Complex64::default(),
        detuning,
        topology,
    };
    p.drive = resolve_drive(map, &p)?;
    p.validate()?;
    Ok(p)
}

fn resolve_drive(map: &BTreeMap<String, String>, p: &SystemParams) -> Result<Complex64> {
    if let Some(v) = map.get("drive") {
        let parts = parse_list(v)?;
        return match parts.as_slice() {
            [re] => Ok(Complex64::new(*re, 0.0)),
            [re, im] => Ok(Complex64::new(*re, *im)),
            _ => Err(Error::Scenario("drive takes `re` or `re, im`".into())),
        };
    }
    if let Some(a) = parse_f64(map, "drive_abs")? {
        return Ok(Complex64::new(a, 0.0));
    }
    let (e1, e2) = generalized_threshold_amplitudes(p)?;
    if let Some(e2v) = parse_f64(map, "epsilon_sq")? {
        return Ok(Complex64::new(e2v.sqrt() * e1, 0.0));
    }
    if let Some(r) = parse_f64(map, "drive_ratio_thr1")? {
        return Ok(Complex64::new(r * e1, 0.0));
    }
    if let Some(r) = parse_f64(map, "drive_ratio_thr2")? {
        return Ok(Complex64::new(r * e2, 0.0));
    }
    Err(Error::Scenario(
        "no drive given (drive, drive_abs, epsilon_sq, drive_ratio_thr1 or drive_ratio_thr2)"
            .into(),
    ))
}

fn parse_initial(
    map: &BTreeMap<String, String>,
    representation: Representation,
    topology: Topology,
) -> Result<InitialState> {
    let spec = map.get("initial").map(|s| s.as_str()).unwrap_or("vacuum");
    match spec {
        "vacuum" => Ok(InitialState::VacuumSeed {
            amplitude: parse_f64(map, "seed_amplitude")?,
            randomize_phases: map
                .get("randomize_phases")
                .map(|v| v == "true")
                .unwrap_or(true),
        }),
        "zero" => Ok(InitialState::State(PhaseSpaceState::zero(representation, topology))),
        other => {
            // state: re im; re im; ...
            let body = other
                .strip_prefix("state:")
                .ok_or_else(|| Error::Scenario(format!("unknown initial spec {other}")))?;
            let mut amps = Vec::new();
            for chunk in body.split(';') {
                let nums: Vec<f64> = chunk
                    .split_whitespace()
                    .map(|x| {
                        x.parse::<f64>()
                            .map_err(|_| Error::Scenario(format!("bad amplitude {x}")))
                    })
                    .collect::<Result<_>>()?;
                match nums.as_slice() {
                    [re] => amps.push(Complex64::new(*re, 0.0)),
                    [re, im] => amps.push(Complex64::new(*re, *im)),
                    _ => return Err(Error::Scenario("state entries are `re [im]`".into())),
                }
            }
            Ok(InitialState::State(PhaseSpaceState::new(representation, amps)))
        }
    }
}

fn parse_integrator(map: &BTreeMap<String, String>, topology: Topology) -> Result<IntegratorConfig> {
    let scheme = match map.get("scheme").map(|s| s.as_str()).unwrap_or("rk4") {
        "rk4" => Scheme::Rk4,
        "euler_maruyama" | "em" => Scheme::EulerMaruyama,
        "heun" => Scheme::Heun,
        other => return Err(Error::Scenario(format!("unknown scheme {other}"))),
    };
    let representation = match map.get("representation").map(|s| s.as_str()) {
        None => match scheme {
            Scheme::Rk4 => Representation::Classical,
            _ => {
                return Err(Error::Scenario(
                    "stochastic schemes need `representation = positive_p | wigner`".into(),
                ))
            }
        },
        Some("classical") => Representation::Classical,
        Some("positive_p") => Representation::PositiveP,
        Some("wigner") => Representation::Wigner,
        Some(other) => return Err(Error::Scenario(format!("unknown representation {other}"))),
    };
    let dt = require_f64(map, "dt")?;
    let t_end = require_f64(map, "t_end")?;
    let record_stride = parse_f64(map, "record_stride")?.unwrap_or(1.0) as usize;
    let seed = parse_f64(map, "seed")?.unwrap_or(0.0) as u64;
    let initial = parse_initial(map, representation, topology)?;
    Ok(IntegratorConfig { scheme, representation, dt, t_end, record_stride, seed, initial })
}

fn parse_observables(v: &str) -> Result<Vec<Observable>> {
    v.split(',')
        .map(|tok| {
            let tok = tok.trim();
            if let Some(rest) = tok.strip_prefix("phase_diff_") {
                let digits: Vec<u32> =
                    rest.chars().filter_map(|c| c.to_digit(10)).collect();
                if digits.len() == 2 {
                    return Ok(Observable::PhaseDifference(
                        digits[0] as usize,
                        digits[1] as usize,
                    ));
                }
                return Err(Error::Scenario(format!("bad phase observable {tok}")));
            }
            match tok {
                "triple" => Ok(Observable::Triple),
                _ => {
                    if let Some(idx) = tok.strip_prefix('n').and_then(|d| d.parse::<usize>().ok())
                    {
                        Ok(Observable::Intensity(idx))
                    } else {
                        Err(Error::Scenario(format!("unknown observable {tok}")))
                    }
                }
            }
        })
        .collect()
}

fn parse_protocol(map: &BTreeMap<String, String>) -> Result<Protocol> {
    match map.get("type").map(|s| s.as_str()).unwrap_or("trace") {
        "trace" => Ok(Protocol::Trace),
        "sweep" => {
            let grid = if let Some(g) = map.get("grid") {
                parse_list(g)?
            } else {
                let start = require_f64(map, "grid_start")?;
                let stop = require_f64(map, "grid_stop")?;
                let n = require_f64(map, "grid_points")? as usize;
                if n < 2 {
                    return Err(Error::Scenario("grid_points must be at least 2".into()));
                }
                (0..n)
                    .map(|k| start + (stop - start) * k as f64 / (n - 1) as f64)
                    .collect()
            };
            Ok(Protocol::Sweep { grid })
        }
        "perturb" => {
            let time = require_f64(map, "time")?;
            let magnitude = require_f64(map, "magnitude")?;
            let target = match map.get("target").map(|s| s.as_str()).unwrap_or("both") {
                "real" => PerturbTarget::RealParts,
                "imag" => PerturbTarget::ImagParts,
                "both" => PerturbTarget::Both,
                other => return Err(Error::Scenario(format!("unknown perturb target {other}"))),
            };
            Ok(Protocol::Perturb { time, target, magnitude })
        }
        "ensemble" => {
            let n_traj = require_f64(map, "n_traj")? as usize;
            let observables = parse_observables(
                map.get("observables")
                    .ok_or_else(|| Error::Scenario("missing key observables".into()))?,
            )?;
            let window_start = parse_f64(map, "window_start")?;
            Ok(Protocol::EnsembleMoments { n_traj, observables, window_start })
        }
        other => Err(Error::Scenario(format!("unknown protocol type {other}"))),
    }
}

/// Parse a scenario from text.
pub fn parse(text: &str) -> Result<Scenario> {
    let s = parse_sections(text)?;
    let params = parse_params(&s.params)?;
    let config = parse_integrator(&s.integrator, params.topology)?;
    let protocol = parse_protocol(&s.protocol)?;
    let name = s.top.get("name").cloned().unwrap_or_else(|| "unnamed".into());
    let scenario = Scenario { name, params, config, protocol };
    scenario.validate()?;
    Ok(scenario)
}

/// The bundled scenario library reproducing the characteristic dynamics.
pub const BUNDLED: &[(&str, &str)] = &[
    ("fig2", include_str!("../scenarios/fig2.scn")),
    ("fig3", include_str!("../scenarios/fig3.scn")),
    ("fig4", include_str!("../scenarios/fig4.scn")),
    ("fig5", include_str!("../scenarios/fig5.scn")),
    ("fig6", include_str!("../scenarios/fig6.scn")),
    ("fig7", include_str!("../scenarios/fig7.scn")),
    ("fig8-top", include_str!("../scenarios/fig8-top.scn")),
    ("fig8-bottom", include_str!("../scenarios/fig8-bottom.scn")),
    ("fig9", include_str!("../scenarios/fig9.scn")),
    ("fig10", include_str!("../scenarios/fig10.scn")),
    ("fig11", include_str!("../scenarios/fig11.scn")),
    ("fig12", include_str!("../scenarios/fig12.scn")),
    ("degcascade-lowloss", include_str!("../scenarios/degcascade-lowloss.scn")),
    ("degcascade-equal", include_str!("../scenarios/degcascade-equal.scn")),
];

pub fn bundled(name: &str) -> Option<&'static str> {
    let stem = name.strip_suffix(".scn").unwrap_or(name);
    BUNDLED.iter().find(|(n, _)| *n == stem).map(|(_, t)| *t)
}

/// Load a scenario: an existing file path wins, otherwise the bundled
/// library is searched by stem.
pub fn load(pathlike: &str) -> Result<Scenario> {
    let path = Path::new(pathlike);
    if path.exists() {
        let text = std::fs::read_to_string(path)
            .map_err(|e| Error::Scenario(format!("cannot read {pathlike}: {e}")))?;
        return parse(&text);
    }
    let stem = path.file_stem().and_then(|s| s.to_str()).unwrap_or(pathlike);
    match bundled(stem) {
        Some(text) => parse(text),
        None => Err(Error::Scenario(format!(
            "{pathlike} is neither a file nor a bundled scenario (available: {})",
            BUNDLED.iter().map(|(n, _)| *n).collect::<Vec<_>>().join(", ")
        ))),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parse_minimal_trace() {
        let text = r#"
name = demo
[params]
gamma = 10, 1, 1, 1, 1
chi = 0.1
epsilon_sq = 0.5
[integrator]
scheme = rk4
dt = 1e-2
t_end = 10
[protocol]
type = trace
"#;
        let sc = parse(text).unwrap();
        assert_eq!(sc.name, "demo");
        assert!((sc.params.drive.re - 50.0 * 2.0f64.sqrt()).abs() < 1e-9);
        assert_eq!(sc.protocol, Protocol::Trace);
    }

    #[test]
    fn drive_ratio_uses_generalized_thresholds() {
        let text = r#"
[params]
gamma = 2.0, 0.14, 0.08, 0.14, 0.14
chi = 1.0
drive_ratio_thr2 = 3.5
[integrator]
scheme = rk4
dt = 1e-3
t_end = 1
[protocol]
type = trace
"#;
        let sc = parse(text).unwrap();
        let e1 = 2.0 * (0.14f64 * 0.08).sqrt();
        let e2 = e1 + (0.08f64 / 0.14).sqrt() * 0.14 * 0.14;
        assert!((sc.params.drive.re - 3.5 * e2).abs() < 1e-12);
    }

    #[test]
    fn parse_ensemble_protocol() {
        let text = r#"
[params]
gamma = 10, 1, 1, 1, 1
chi = 0.1
drive_abs = 105
[integrator]
scheme = euler_maruyama
representation = wigner
dt = 1e-3
t_end = 5
record_stride = 50
seed = 42
initial = zero
[protocol]
type = ensemble
n_traj = 500
observables = n1, triple, phase_diff_12
window_start = 2.5
"#;
        let sc = parse(text).unwrap();
        match sc.protocol {
            Protocol::EnsembleMoments { n_traj, ref observables, window_start } => {
                assert_eq!(n_traj, 500);
                assert_eq!(observables.len(), 3);
                assert_eq!(observables[2], Observable::PhaseDifference(1, 2));
                assert_eq!(window_start, Some(2.5));
            }
            _ => panic!("wrong protocol"),
        }
    }

    #[test]
    fn perturb_time_must_precede_horizon() {
        let text = r#"
[params]
gamma = 10, 1, 1, 1, 1
chi = 0.1
drive_abs = 105
[integrator]
scheme = rk4
dt = 1e-3
t_end = 5
[protocol]
type = perturb
time = 9
magnitude = 1.0
"#;
        assert!(matches!(parse(text), Err(Error::Scenario(_))));
    }

    #[test]
    fn all_bundled_scenarios_parse() {
        for (name, text) in BUNDLED {
            let sc = parse(text).unwrap_or_else(|e| panic!("{name}: {e}"));
            assert!(!sc.name.is_empty());
        }
    }

    #[test]
    fn degenerate_gamma_length() {
        let text = r#"
[params]
topology = degenerate
gamma = 10, 0.02, 0.001
chi = 1.0
drive_abs = 0.03
[integrator]
scheme = rk4
dt = 1e-2
t_end = 10
[protocol]
type = trace
"#;
        let sc = parse(text).unwrap();
        assert_eq!(sc.params.topology, Topology::Degenerate);
        assert_eq!(sc.params.gamma[2], 0.001);
    }
}
