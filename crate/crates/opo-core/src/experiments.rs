//! Scenario protocols: phase observables, threshold sweeps with numeric
//! fixed points, perturbation-and-recovery runs, dynamics classification
//! and phase-diffusion slope estimation.

use num_complex::Complex64;

use crate::analytic;
use crate::error::{Error, Result};
use crate::integrate::{
    self, simulate, wrap_angle, EnsembleStats, InitialState, IntegratorConfig, Observable, Scheme,
    StepScratch, Trajectory,
};
use crate::model;
use crate::params::SystemParams;
use crate::scenario::{PerturbTarget, Protocol, Scenario};
use crate::state::{PhaseSpaceState, Representation};

/// Amplitudes below this carry no usable phase.
pub const PHASE_VALIDITY_FLOOR: f64 = 1e-12;

/// Nonlinear phase differences of the two cascade stages along a
/// trajectory. θ₁ = φ₁ + φ₂ − φ_drive and θ₂ = φ₃ + φ₄ − φ₂ (degenerate:
/// θ₂ = 2φ₁ − φ₂), wrapped into (−π, π]; the individual phases stay
/// unwrapped.
#[derive(Debug, Clone)]
pub struct PhaseSeries {
    pub times: Vec<f64>,
    pub theta1: Vec<f64>,
    pub theta2: Vec<f64>,
    /// Unwrapped φ per mode: `phases[mode][sample]`.
    pub phases: Vec<Vec<f64>>,
    /// Sample validity: false when any participating amplitude is below
    /// the phase floor.
    pub valid: Vec<bool>,
}

/// Extract phases and the stage phase differences from a trajectory.
pub fn phase_observables(traj: &Trajectory) -> PhaseSeries {
    let n_modes = match traj.representation {
        Representation::PositiveP => traj.n_components() / 2,
        _ => traj.n_components(),
    };
    let n = traj.n_samples();
    let phi_drive = if traj.params.drive.norm() > 0.0 { traj.params.drive.arg() } else { 0.0 };
    let mut phases = vec![vec![0.0f64; n]; n_modes];
    let mut valid = vec![true; n];
    let mut prev = vec![0.0f64; n_modes];
    for k in 0..n {
        for m in 0..n_modes {
            let a = traj.series[m][k];
            if a.norm() < PHASE_VALIDITY_FLOOR {
                valid[k] = false;
            }
            let raw = a.arg();
            let unwrapped = if k == 0 { raw } else { phases[m][k - 1] + wrap_angle(raw - prev[m]) };
            phases[m][k] = unwrapped;
            prev[m] = raw;
        }
    }
    let degenerate = n_modes == 3;
    let mut theta1 = Vec::with_capacity(n);
    let mut theta2 = Vec::with_capacity(n);
    for k in 0..n {
        theta1.push(wrap_angle(phases[1][k] + phases[2][k] - phi_drive));
        let t2 = if degenerate {
            2.0 * phases[1][k] - phases[2][k]
        } else {
            phases[3][k] + phases[4][k] - phases[2][k]
        };
        theta2.push(wrap_angle(t2));
    }
    PhaseSeries { times: traj.times.clone(), theta1, theta2, phases, valid }
}

/// Relative drift norm: max|α̇ᵢ| over the amplitude scale.
pub fn drift_rel_norm(s: &PhaseSpaceState, p: &SystemParams) -> Result<f64> {
    let d = match s.representation {
        Representation::Classical => model::classical_drift(s, p)?,
        Representation::Wigner => model::wigner_drift(s, p)?,
        Representation::PositiveP => model::positive_p_drift(s, p)?,
    };
    let dmax = d.iter().map(|z| z.norm()).fold(0.0f64, f64::max);
    let amax = s.amplitudes.iter().map(|z| z.norm()).fold(0.0f64, f64::max);
    let scale = amax.max(p.drive.norm() / p.gamma[0]).max(1e-30);
    Ok(dmax / scale)
}

#[derive(Debug, Clone)]
pub struct FixedPointOptions {
    pub dt: f64,
    pub t_max: f64,
    /// Stop when the relative drift norm falls below this.
    pub drift_tol: f64,
    pub check_stride: usize,
    pub seed: u64,
    pub seed_amplitude: Option<f64>,
}

impl FixedPointOptions {
    pub fn for_params(p: &SystemParams) -> Self {
        let rate = p.gamma.iter().take(p.n_modes()).cloned().fold(0.0f64, f64::max);
        Self {
            dt: 0.05 / rate.max(1e-12),
            t_max: 4000.0 / p.gamma_signal_mean().max(1e-12),
            drift_tol: 1e-9,
            check_stride: 64,
            seed: 1,
            seed_amplitude: None,
        }
    }
}

#[derive(Debug, Clone)]
pub struct FixedPointResult {
    pub state: PhaseSpaceState,
    pub drift_norm: f64,
    pub t_reached: f64,
    pub converged: bool,
}

/// Long-time classical integration to a numeric fixed point; the route for
/// parameters outside the closed forms' symmetric case.
///
/// A vanishing drift alone can be a saddle: a mode pair that decayed to
/// ~1e-60 during the transient grows back too slowly to register. When the
/// drift converges, the doubled-Jacobian spectrum is checked; a linearly
/// unstable point gets a small deterministic kick and the integration
/// continues toward the attractor.
pub fn numeric_fixed_point(p: &SystemParams, opts: &FixedPointOptions) -> Result<FixedPointResult> {
    p.validate()?;
    let cfg = IntegratorConfig {
        scheme: Scheme::Rk4,
        representation: Representation::Classical,
        dt: opts.dt,
        t_end: opts.t_max,
        record_stride: 1,
        seed: opts.seed,
        initial: InitialState::VacuumSeed {
            amplitude: opts.seed_amplitude,
            randomize_phases: true,
        },
    };
    cfg.validate(p)?;
    let mut state = {
        // Reuse simulate's seeding by running a single throwaway step.
        let mut c2 = cfg.clone();
        c2.t_end = opts.dt;
        c2.record_stride = 1;
        simulate(p, &c2)?.state_at(0)
    };
    use rand::Rng;
    use rand::SeedableRng;
    let mut kick_rng = rand_chacha::ChaCha8Rng::seed_from_u64(opts.seed ^ 0x9e37_79b9);
    let mut ws = StepScratch::new(Representation::Classical, p.topology);
    let n_steps = (opts.t_max / opts.dt).ceil() as usize;
    let mut t = 0.0;
    for step in 0..n_steps {
        integrate::rk4_step_slice(
            Representation::Classical,
            p.topology,
            &mut state.amplitudes,
            p,
            opts.dt,
            &mut ws,
        );
        t = (step + 1) as f64 * opts.dt;
        if !state.is_finite() {
            return Err(Error::NonFinite { t });
        }
        if (step + 1) % opts.check_stride == 0 {
            let dn = drift_rel_norm(&state, p)?;
            if dn < opts.drift_tol {
                let j = model::drift_jacobian_doubled(&state, p)?;
                let eigs = crate::linalg::eigenvalues(&j)?;
                let max_re = crate::linalg::max_real_part(&eigs).unwrap_or(0.0);
                if max_re <= 1e-7 {
                    return Ok(FixedPointResult {
                        state,
                        drift_norm: dn,
                        t_reached: t,
                        converged: true,
                    });
                }
                // Saddle point: nudge every mode and keep going.
                let scale = state
                    .amplitudes
                    .iter()
                    .map(|a| a.norm())
                    .fold(0.0f64, f64::max)
                    .max(p.drive.norm() / p.gamma[0])
                    .max(1e-12);
                for a in state.amplitudes.iter_mut() {
                    let phase = kick_rng.random_range(-std::f64::consts::PI..std::f64::consts::PI);
                    *a += Complex64::from_polar(1e-6 * scale, phase);
                }
            }
        }
    }
    let dn = drift_rel_norm(&state, p)?;
    Ok(FixedPointResult { state, drift_norm: dn, t_reached: t, converged: dn < opts.drift_tol })
}

/// One sweep row: analytic scaled intensities next to the numeric fixed
/// point (skipped at marginal grid points).
#[derive(Debug, Clone)]
pub struct ThresholdSweepRow {
    pub epsilon_sq: f64,
    pub analytic: [f64; 5],
    pub numeric: Option<[f64; 5]>,
    /// max over modes of |numeric − analytic| relative to the largest
    /// analytic intensity at this drive.
    pub rel_gap: Option<f64>,
    pub marginal: bool,
}

/// Fig.-2-style sweep: closed forms against long-time classical
/// integration, both scaled by n₀,cr⁰ = γ²/χ².
pub fn threshold_sweep(
    p_template: &SystemParams,
    grid: &[f64],
    fp_opts: Option<FixedPointOptions>,
) -> Result<Vec<ThresholdSweepRow>> {
    let (gamma0, gamma, chi) = p_template.require_symmetric()?;
    let analytic_pts = analytic::sweep_curve(p_template, grid)?;
    let n0cr = gamma * gamma / (chi * chi);
    let e_thr1 = gamma0 * gamma / chi;
    let thr2_eps_sq = {
        let r = 1.0 + gamma / gamma0;
        r * r
    };
    let mut rows = Vec::with_capacity(grid.len());
    for pt in analytic_pts {
        let e2 = pt.epsilon_sq;
        let marginal = (e2 - 1.0).abs() <= 1e-9 || (e2 - thr2_eps_sq).abs() <= 1e-9 * thr2_eps_sq;
        let mut row = ThresholdSweepRow {
            epsilon_sq: e2,
            analytic: pt.scaled,
            numeric: None,
            rel_gap: None,
            marginal,
        };
        if !marginal {
            let p = p_template
                .clone()
                .with_drive(Complex64::new(e2.sqrt() * e_thr1, 0.0));
            let opts = fp_opts.clone().unwrap_or_else(|| FixedPointOptions::for_params(&p));
            let fp = numeric_fixed_point(&p, &opts)?;
            let mut numeric = [0.0f64; 5];
            for (m, slot) in numeric.iter_mut().enumerate() {
                *slot = fp.state.amplitudes[m].norm_sqr() / n0cr;
            }
            let nmax = pt.scaled.iter().cloned().fold(1e-12f64, f64::max);
            let gap = numeric
                .iter()
                .zip(pt.scaled.iter())
                .map(|(n, a)| (n - a).abs())
                .fold(0.0f64, f64::max)
                / nmax;
            row.numeric = Some(numeric);
            row.rel_gap = Some(gap);
        }
        rows.push(row);
    }
    Ok(rows)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum DynamicsClass {
    ConvergedFixedPoint,
    PersistentOscillation,
    GrowingOscillation,
    /// Oscillations still decaying at the horizon — not yet converged,
    /// envelope ratio below the persistent band.
    DecayingTransient,
}

/// Classify the terminal behaviour of a classical trajectory using the
/// final drift norm and the intensity envelope over the last `window`
/// time units (split in half; ratio of peak-to-peak spans).
pub fn detect_dynamics_class(traj: &Trajectory, window: f64) -> Result<DynamicsClass> {
    let t_end = *traj.times.last().ok_or_else(|| Error::InvalidConfig("empty trajectory".into()))?;
    if window > t_end {
        return Err(Error::InvalidConfig("analysis window exceeds the trajectory span".into()));
    }
    let p = &traj.params;
    let final_state = traj.final_state();
    let drift = drift_rel_norm(&final_state, p)?;

    let t0 = t_end - window;
    let idx: Vec<usize> =
        (0..traj.n_samples()).filter(|&k| traj.times[k] >= t0).collect();
    let total = |k: usize| -> f64 {
        (0..traj.n_components()).map(|m| traj.series[m][k].norm_sqr()).sum()
    };
    let series: Vec<f64> = idx.iter().map(|&k| total(k)).collect();
    let smax = series.iter().cloned().fold(0.0f64, f64::max).max(1e-30);
    let ptp = |s: &[f64]| -> f64 {
        let mx = s.iter().cloned().fold(f64::MIN, f64::max);
        let mn = s.iter().cloned().fold(f64::MAX, f64::min);
        mx - mn
    };
    let variation = ptp(&series) / smax;
    if drift < 1e-6 && variation < 1e-6 {
        return Ok(DynamicsClass::ConvergedFixedPoint);
    }
    let mid = series.len() / 2;
    let (first, second) = series.split_at(mid);
    let p1 = ptp(first).max(1e-30 * smax);
    let ratio = ptp(second) / p1;
    Ok(if ratio > 1.25 {
        DynamicsClass::GrowingOscillation
    } else if ratio >= 0.8 {
        DynamicsClass::PersistentOscillation
    } else {
        DynamicsClass::DecayingTransient
    })
}

/// |αₘ(t)|² along a trajectory.
pub fn intensity_series(traj: &Trajectory, mode: usize) -> Vec<f64> {
    traj.series[mode].iter().map(|a| a.norm_sqr()).collect()
}

/// In-place radix-2 complex FFT (decimation in time).
fn fft_radix2(buf: &mut [Complex64]) {
    let n = buf.len();
    debug_assert!(n.is_power_of_two());
    let mut j = 0usize;
    for i in 1..n {
        let mut bit = n >> 1;
        while j & bit != 0 {
            j ^= bit;
            bit >>= 1;
        }
        j |= bit;
        if i < j {
            buf.swap(i, j);
        }
    }
    let mut len = 2;
    while len <= n {
        let ang = -std::f64::consts::TAU / len as f64;
        let wlen = Complex64::from_polar(1.0, ang);
        for start in (0..n).step_by(len) {
            let mut w = Complex64::new(1.0, 0.0);
            for k in 0..len / 2 {
                let u = buf[start + k];
                let v = buf[start + k + len / 2] * w;
                buf[start + k] = u + v;
                buf[start + k + len / 2] = u - v;
                w *= wlen;
            }
        }
        len <<= 1;
    }
}

/// Dominant oscillation frequency (cycles per unit time) of a uniformly
/// sampled series: mean removal, Hann window, FFT peak with parabolic
/// refinement. `None` when the series is flat.
pub fn dominant_frequency(samples: &[f64], dt_sample: f64) -> Option<f64> {
    if samples.len() < 8 {
        return None;
    }
    let mean = samples.iter().sum::<f64>() / samples.len() as f64;
    let n_fft = samples.len().next_power_of_two();
    let mut buf = vec![Complex64::default(); n_fft];
    for (k, &x) in samples.iter().enumerate() {
        let w = 0.5
            - 0.5
                * (std::f64::consts::TAU * k as f64 / (samples.len() - 1) as f64).cos();
        buf[k] = Complex64::new((x - mean) * w, 0.0);
    }
    fft_radix2(&mut buf);
    let half = n_fft / 2;
    let mag: Vec<f64> = buf[..half].iter().map(|z| z.norm()).collect();
    let (mut kpeak, mut best) = (0usize, 0.0f64);
    for (k, &m) in mag.iter().enumerate().skip(1) {
        if m > best {
            best = m;
            kpeak = k;
        }
    }
    if best <= 1e-12 * samples.len() as f64 || kpeak == 0 {
        return None;
    }
    // Parabolic interpolation around the peak bin.
    let refine = if kpeak + 1 < half && kpeak >= 1 {
        let (a, b, c) = (mag[kpeak - 1], mag[kpeak], mag[kpeak + 1]);
        let denom = a - 2.0 * b + c;
        if denom.abs() > 1e-30 {
            0.5 * (a - c) / denom
        } else {
            0.0
        }
    } else {
        0.0
    };
    Some((kpeak as f64 + refine) / (n_fft as f64 * dt_sample))
}

/// Outcome of a perturbation run.
#[derive(Debug, Clone)]
pub struct RecoveryReport {
    pub kick_time: f64,
    /// Earliest recorded time after the kick from which every later sample
    /// stays within 1e-3 relative of the pre-kick amplitudes.
    pub recovery_time: Option<f64>,
    pub amplitudes_recovered: bool,
    pub theta1_final: f64,
    pub theta2_final: f64,
    pub thetas_recovered: bool,
    /// Permanent per-mode phase changes (final − pre-kick, unwrapped).
    pub phase_offsets: Vec<f64>,
    /// Largest |θ₂| swing after the kick.
    pub max_theta2_excursion: f64,
    /// Largest wrapped swing of the intermediate-pump phase φ₂ relative to
    /// its pre-kick value.
    pub max_phi2_excursion: f64,
}

#[derive(Debug, Clone)]
pub struct PerturbationOutcome {
    pub trajectory: Trajectory,
    pub phases: PhaseSeries,
    pub report: RecoveryReport,
}

fn apply_kick(amps: &mut [Complex64], target: PerturbTarget, magnitude: f64) {
    for a in amps.iter_mut() {
        match target {
            PerturbTarget::RealParts => a.re += magnitude * a.re,
            PerturbTarget::ImagParts => a.im += magnitude * a.im,
            PerturbTarget::Both => *a *= 1.0 + magnitude,
        }
    }
}

/// Run a perturbation protocol: integrate to the kick time, require a
/// steady state there, kick the masked components of every mode, continue,
/// and report recovery.
pub fn run_perturbation(scenario: &Scenario) -> Result<PerturbationOutcome> {
    let Protocol::Perturb { time, target, magnitude } = scenario.protocol else {
        return Err(Error::InvalidConfig("scenario protocol is not perturb".into()));
    };
    if scenario.config.scheme != Scheme::Rk4 {
        return Err(Error::InvalidConfig("perturbation protocol runs on the classical path".into()));
    }
    let p = &scenario.params;
    let cfg = &scenario.config;
    cfg.validate(p)?;

    use rand::SeedableRng;
    let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(cfg.seed);
    rng.set_stream(0);
    // Seed exactly like simulate would.
    let mut state = {
        let mut warm = cfg.clone();
        warm.t_end = cfg.dt;
        warm.record_stride = 1;
        simulate(p, &warm)?.state_at(0)
    };
    let stride = cfg.record_stride;
    let n_steps = {
        let raw = (cfg.t_end / cfg.dt).round().max(1.0) as usize;
        (raw / stride).max(1) * stride
    };
    let kick_step = ((time / cfg.dt).round() as usize).min(n_steps);
    let mut ws = StepScratch::new(Representation::Classical, p.topology);
    let n_comp = state.amplitudes.len();
    let mut series = vec![Vec::new(); n_comp];
    let mut times = Vec::new();
    let mut pre_kick: Option<Vec<Complex64>> = None;
    for step in 0..=n_steps {
        if step == kick_step {
            let snapshot = PhaseSpaceState::new(cfg.representation, state.amplitudes.clone());
            let drift = drift_rel_norm(&snapshot, p)?;
            if drift >= 1e-6 {
                return Err(Error::NotAtSteadyState { drift_norm: drift });
            }
            pre_kick = Some(state.amplitudes.clone());
            apply_kick(&mut state.amplitudes, target, magnitude);
        }
        if step % stride == 0 {
            times.push(step as f64 * cfg.dt);
            for (c, s) in series.iter_mut().enumerate() {
                s.push(state.amplitudes[c]);
            }
        }
        if step < n_steps {
            integrate::rk4_step_slice(
                Representation::Classical,
                p.topology,
                &mut state.amplitudes,
                p,
                cfg.dt,
                &mut ws,
            );
            if !state.is_finite() {
                return Err(Error::NonFinite { t: (step + 1) as f64 * cfg.dt });
            }
        }
    }
    let trajectory = Trajectory {
        times,
        series,
        representation: cfg.representation,
        params: p.clone(),
        config: cfg.clone(),
    };
    let phases = phase_observables(&trajectory);
    let pre = pre_kick.expect("kick step within range");
    let kick_time = kick_step as f64 * cfg.dt;

    // Recovery scan over recorded samples after the kick.
    let pre_norms: Vec<f64> = pre.iter().map(|a| a.norm()).collect();
    let scale = pre_norms.iter().cloned().fold(0.0f64, f64::max).max(1e-30);
    let n = trajectory.n_samples();
    let deviation = |k: usize| -> f64 {
        (0..n_comp)
            .map(|m| (trajectory.series[m][k].norm() - pre_norms[m]).abs())
            .fold(0.0f64, f64::max)
            / scale
    };
    let first_after = trajectory.times.iter().position(|&t| t > kick_time).unwrap_or(n);
    let mut recovery_time = None;
    for k in first_after..n {
        if (k..n).all(|j| deviation(j) < 1e-3) {
            recovery_time = Some(trajectory.times[k]);
            break;
        }
    }
    let amplitudes_recovered = recovery_time.is_some();
    let theta1_final = *phases.theta1.last().unwrap();
    let theta2_final = *phases.theta2.last().unwrap();
    let thetas_recovered = theta1_final.abs() < 1e-3 && theta2_final.abs() < 1e-3;
    // Permanent phase offsets relative to the sample just before the kick.
    let pre_idx = trajectory
        .times
        .iter()
        .rposition(|&t| t <= kick_time)
        .unwrap_or(0);
    let phase_offsets: Vec<f64> = (0..phases.phases.len())
        .map(|m| phases.phases[m][n - 1] - phases.phases[m][pre_idx])
        .collect();
    let max_theta2_excursion = phases.theta2[first_after..]
        .iter()
        .map(|t| t.abs())
        .fold(0.0f64, f64::max);
    let phi2_pre = phases.phases[2][pre_idx];
    let max_phi2_excursion = phases.phases[2][first_after..]
        .iter()
        .map(|&x| wrap_angle(x - phi2_pre).abs())
        .fold(0.0f64, f64::max);
    Ok(PerturbationOutcome {
        trajectory,
        phases,
        report: RecoveryReport {
            kick_time,
            recovery_time,
            amplitudes_recovered,
            theta1_final,
            theta2_final,
            thetas_recovered,
            phase_offsets,
            max_theta2_excursion,
            max_phi2_excursion,
        },
    })
}

/// Least-squares slope of an ensemble phase variance against time over
/// `window`, restricted to samples with variance below `var_cap`.
/// Returns (slope, standard error of the slope).
pub fn estimate_diffusion_slope(
    stats: &EnsembleStats,
    observable: Observable,
    window: (f64, f64),
    var_cap: f64,
) -> Result<(f64, f64)> {
    if stats.n_traj < 100 {
        return Err(Error::InsufficientEnsemble { n: stats.n_traj, min: 100 });
    }
    let series = stats
        .series(observable)
        .ok_or_else(|| Error::InvalidConfig("observable not present in the ensemble".into()))?;
    let mut ts = Vec::new();
    let mut vs = Vec::new();
    for (k, &t) in stats.times.iter().enumerate() {
        if t >= window.0 && t <= window.1 && series.variance[k] < var_cap {
            ts.push(t);
            vs.push(series.variance[k]);
        }
    }
    if ts.len() < 3 {
        return Err(Error::InvalidConfig("too few samples in the fit window".into()));
    }
    let n = ts.len() as f64;
    let tbar = ts.iter().sum::<f64>() / n;
    let vbar = vs.iter().sum::<f64>() / n;
    let sxx: f64 = ts.iter().map(|t| (t - tbar) * (t - tbar)).sum();
    let sxy: f64 = ts.iter().zip(&vs).map(|(t, v)| (t - tbar) * (v - vbar)).sum();
    let slope = sxy / sxx;
    let intercept = vbar - slope * tbar;
    let ss_res: f64 = ts
        .iter()
        .zip(&vs)
        .map(|(t, v)| {
            let r = v - (intercept + slope * t);
            r * r
        })
        .sum();
    let se = (ss_res / (n - 2.0) / sxx).sqrt();
    Ok((slope, se))
}

/// Dispatch a scenario to its protocol's natural runner (the trace and
/// ensemble paths; sweep and perturb have dedicated entry points with
/// richer outputs).
pub fn run_trace(scenario: &Scenario) -> Result<Trajectory> {
    simulate(&scenario.params, &scenario.config)
}

pub fn run_ensemble_protocol(scenario: &Scenario) -> Result<EnsembleStats> {
    let Protocol::EnsembleMoments { n_traj, ref observables, window_start } = scenario.protocol
    else {
        return Err(Error::InvalidConfig("scenario protocol is not ensemble".into()));
    };
    integrate::run_ensemble(&scenario.params, &scenario.config, n_traj, observables, window_start)
}
