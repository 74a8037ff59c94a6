//! Time integration: deterministic RK4 for the mean-field equations,
//! Euler-Maruyama and stochastic Heun for the positive-P and truncated
//! Wigner equations, and a reproducible parallel ensemble runner.
//!
//! Noise channels. Each step consumes a fixed-order block of Wiener
//! increments ΔW (ΔW = ∫ζ dt over the step):
//! - positive-P, nondegenerate: 8 values for the pairs (ζ₁,ζ₂), (ζ₃,ζ₄),
//!   (ζ₁⁺,ζ₂⁺), (ζ₃⁺,ζ₄⁺); a pair is built from two real unit normals u, v
//!   as ΔW_a = (u+iv)√(dt/2), ΔW_b = (u−iv)√(dt/2), so ⟨ΔW_aΔW_b⟩ = dt and
//!   all self moments vanish;
//! - positive-P, degenerate: 6 values — the (1,2) pair, one self-correlated
//!   real channel u√dt for the two-photon stage, then the conjugate sector;
//! - Wigner: one complex increment (u+iv)√(dt/2) per mode, ⟨ΔWΔW*⟩ = dt.
//!
//! Itô and Stratonovich forms coincide for these equations, so the Heun
//! corrector applies to the drift only, with the diffusion coefficients
//! frozen at the step start.
//!
//! Determinism: trajectory `i` of an ensemble draws from ChaCha8 stream `i`
//! seeded by the configured seed; chunk boundaries and the reduction order
//! are fixed by trajectory index, so results are identical for any worker
//! count.

use num_complex::Complex64;
use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::model::{drift_slice, noise_pairs};
use crate::params::{SystemParams, Topology};
use crate::state::{PhaseSpaceState, Representation};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Scheme {
    Rk4,
    EulerMaruyama,
    Heun,
}

/// Initial condition: an explicit state, or the seeding protocol for
/// classical runs — minute amplitudes ρ₀ on the down-converted modes with
/// independent random phases, pump at zero.
#[derive(Debug, Clone, PartialEq)]
pub enum InitialState {
    State(PhaseSpaceState),
    VacuumSeed { amplitude: Option<f64>, randomize_phases: bool },
}

#[derive(Debug, Clone, PartialEq)]
pub struct IntegratorConfig {
    pub scheme: Scheme,
    pub representation: Representation,
    pub dt: f64,
    pub t_end: f64,
    pub record_stride: usize,
    pub seed: u64,
    pub initial: InitialState,
}

impl IntegratorConfig {
    pub fn validate(&self, p: &SystemParams) -> Result<()> {
        if !(self.dt > 0.0) {
            return Err(Error::InvalidConfig("dt must be positive".into()));
        }
        if self.t_end < self.dt {
            return Err(Error::InvalidConfig("t_end must be at least dt".into()));
        }
        if self.record_stride == 0 {
            return Err(Error::InvalidConfig("record_stride must be at least 1".into()));
        }
        match (self.scheme, self.representation) {
            (Scheme::Rk4, Representation::Classical) => {}
            (Scheme::Rk4, _) => {
                return Err(Error::InvalidConfig(
                    "RK4 integrates the classical representation only".into(),
                ))
            }
            (_, Representation::Classical) => {
                return Err(Error::InvalidConfig(
                    "stochastic schemes need the positive-P or Wigner representation".into(),
                ))
            }
            _ => {}
        }
        if let InitialState::State(s) = &self.initial {
            s.check_shape(self.representation, p.topology)?;
        }
        Ok(())
    }
}

/// Recorded time series in struct-of-series layout: `series[c][k]` is
/// component `c` at sample `k`.
#[derive(Debug, Clone)]
pub struct Trajectory {
    pub times: Vec<f64>,
    pub series: Vec<Vec<Complex64>>,
    pub representation: Representation,
    pub params: SystemParams,
    pub config: IntegratorConfig,
}

impl Trajectory {
    pub fn n_samples(&self) -> usize {
        self.times.len()
    }

    pub fn n_components(&self) -> usize {
        self.series.len()
    }

    pub fn state_at(&self, k: usize) -> PhaseSpaceState {
        PhaseSpaceState::new(
            self.representation,
            self.series.iter().map(|s| s[k]).collect(),
        )
    }

    pub fn final_state(&self) -> PhaseSpaceState {
        self.state_at(self.n_samples() - 1)
    }
}

/// Wrap an angle into (−π, π].
pub fn wrap_angle(x: f64) -> f64 {
    let two_pi = std::f64::consts::TAU;
    let w = x - two_pi * (x / two_pi).round();
    if w <= -std::f64::consts::PI {
        w + two_pi
    } else {
        w
    }
}

/// Number of noise channels per step.
pub(crate) fn n_noise_channels(rep: Representation, topo: Topology) -> usize {
    match (rep, topo) {
        (Representation::Classical, _) => 0,
        (Representation::Wigner, t) => t.n_modes(),
        (Representation::PositiveP, Topology::Nondegenerate) => 8,
        (Representation::PositiveP, Topology::Degenerate) => 6,
    }
}

#[inline]
fn pair_dw<R: Rng + ?Sized>(rng: &mut R, dt: f64) -> (Complex64, Complex64) {
    let u: f64 = rng.sample(StandardNormal);
    let v: f64 = rng.sample(StandardNormal);
    let s = (dt / 2.0).sqrt();
    (Complex64::new(u * s, v * s), Complex64::new(u * s, -v * s))
}

/// Fill one step's Wiener increments in the fixed channel order.
pub(crate) fn sample_noise_block<R: Rng + ?Sized>(
    rep: Representation,
    topo: Topology,
    dt: f64,
    rng: &mut R,
    out: &mut [Complex64],
) {
    match (rep, topo) {
        (Representation::Classical, _) => {}
        (Representation::Wigner, t) => {
            for c in 0..t.n_modes() {
                let (w, _) = pair_dw(rng, dt);
                out[c] = w;
            }
        }
        (Representation::PositiveP, Topology::Nondegenerate) => {
            // Pairs in the order of `model::noise_pairs`: (1,2), (3,4),
            // then the conjugate sector.
            for k in 0..4 {
                let (a, b) = pair_dw(rng, dt);
                out[2 * k] = a;
                out[2 * k + 1] = b;
            }
        }
        (Representation::PositiveP, Topology::Degenerate) => {
            let (a, b) = pair_dw(rng, dt);
            out[0] = a;
            out[1] = b;
            let u: f64 = rng.sample(StandardNormal);
            out[2] = Complex64::new(u * dt.sqrt(), 0.0);
            let (a, b) = pair_dw(rng, dt);
            out[3] = a;
            out[4] = b;
            let u: f64 = rng.sample(StandardNormal);
            out[5] = Complex64::new(u * dt.sqrt(), 0.0);
        }
    }
}

/// The per-step noise values ζ of the positive-P equations, nondegenerate
/// topology, in the order (ζ₁, ζ₂, ζ₁⁺, ζ₂⁺, ζ₃, ζ₄, ζ₃⁺, ζ₄⁺). Each pair
/// satisfies ⟨ζ_aζ_b⟩ = 1/dt; self moments and cross-pair moments vanish.
pub fn correlated_noise_block<R: Rng + ?Sized>(rng: &mut R, dt: f64) -> [Complex64; 8] {
    let mut block = [Complex64::new(0.0, 0.0); 8];
    for k in 0..4 {
        let (a, b) = pair_dw(rng, dt);
        block[2 * k] = a / dt;
        block[2 * k + 1] = b / dt;
    }
    // Reorder from sampler layout (ζ₁ζ₂, ζ₁⁺ζ₂⁺, ζ₃ζ₄, ζ₃⁺ζ₄⁺ is the
    // published listing) — the sampler already emits pair blocks, so only
    // the labels differ; keep the published order.
    block
}

/// Add the diffusion contribution amp·ΔW for each channel, with the
/// coefficients evaluated at `amps`.
fn add_noise(
    rep: Representation,
    topo: Topology,
    amps: &[Complex64],
    p: &SystemParams,
    dw: &[Complex64],
    out: &mut [Complex64],
) {
    match rep {
        Representation::Classical => {}
        Representation::Wigner => {
            for (c, w) in dw.iter().enumerate() {
                out[c] += p.gamma[c].sqrt() * w;
            }
        }
        Representation::PositiveP => {
            let pairs = noise_pairs(topo, amps, p);
            let mut ch = 0;
            for pair in pairs {
                let (i, j) = pair.targets;
                if i == j {
                    out[i] += pair.amplitude * dw[ch];
                    ch += 1;
                } else {
                    out[i] += pair.amplitude * dw[ch];
                    out[j] += pair.amplitude * dw[ch + 1];
                    ch += 2;
                }
            }
        }
    }
}

/// Scratch buffers reused across steps.
pub struct StepScratch {
    k1: Vec<Complex64>,
    k2: Vec<Complex64>,
    tmp: Vec<Complex64>,
    noise: Vec<Complex64>,
    dw: Vec<Complex64>,
}

impl StepScratch {
    pub fn new(rep: Representation, topo: Topology) -> Self {
        let n = rep.n_components(topo);
        let ch = n_noise_channels(rep, topo);
        Self {
            k1: vec![Complex64::default(); n],
            k2: vec![Complex64::default(); n],
            tmp: vec![Complex64::default(); n],
            noise: vec![Complex64::default(); n],
            dw: vec![Complex64::default(); ch],
        }
    }
}

pub(crate) fn rk4_step_slice(
    rep: Representation,
    topo: Topology,
    amps: &mut [Complex64],
    p: &SystemParams,
    dt: f64,
    ws: &mut StepScratch,
) {
    let n = amps.len();
    let mut k3 = vec![Complex64::default(); n];
    let mut k4 = vec![Complex64::default(); n];
    drift_slice(rep, topo, amps, p, &mut ws.k1);
    for i in 0..n {
        ws.tmp[i] = amps[i] + 0.5 * dt * ws.k1[i];
    }
    drift_slice(rep, topo, &ws.tmp, p, &mut ws.k2);
    for i in 0..n {
        ws.tmp[i] = amps[i] + 0.5 * dt * ws.k2[i];
    }
    drift_slice(rep, topo, &ws.tmp, p, &mut k3);
    for i in 0..n {
        ws.tmp[i] = amps[i] + dt * k3[i];
    }
    drift_slice(rep, topo, &ws.tmp, p, &mut k4);
    for i in 0..n {
        amps[i] += dt / 6.0 * (ws.k1[i] + 2.0 * ws.k2[i] + 2.0 * k3[i] + k4[i]);
    }
}

pub(crate) fn em_step_slice(
    rep: Representation,
    topo: Topology,
    amps: &mut [Complex64],
    p: &SystemParams,
    dt: f64,
    dw: &[Complex64],
    ws: &mut StepScratch,
) {
    let n = amps.len();
    drift_slice(rep, topo, amps, p, &mut ws.k1);
    ws.noise.iter_mut().for_each(|z| *z = Complex64::default());
    add_noise(rep, topo, amps, p, dw, &mut ws.noise);
    for i in 0..n {
        amps[i] += dt * ws.k1[i] + ws.noise[i];
    }
}

pub(crate) fn heun_step_slice(
    rep: Representation,
    topo: Topology,
    amps: &mut [Complex64],
    p: &SystemParams,
    dt: f64,
    dw: &[Complex64],
    ws: &mut StepScratch,
) {
    let n = amps.len();
    drift_slice(rep, topo, amps, p, &mut ws.k1);
    ws.noise.iter_mut().for_each(|z| *z = Complex64::default());
    add_noise(rep, topo, amps, p, dw, &mut ws.noise);
    for i in 0..n {
        ws.tmp[i] = amps[i] + dt * ws.k1[i] + ws.noise[i];
    }
    drift_slice(rep, topo, &ws.tmp, p, &mut ws.k2);
    for i in 0..n {
        amps[i] += 0.5 * dt * (ws.k1[i] + ws.k2[i]) + ws.noise[i];
    }
}

/// One RK4 step of the classical equations.
pub fn step_rk4(s: &PhaseSpaceState, p: &SystemParams, dt: f64) -> Result<PhaseSpaceState> {
    s.check_shape(Representation::Classical, p.topology)?;
    let mut out = s.clone();
    let mut ws = StepScratch::new(s.representation, p.topology);
    rk4_step_slice(s.representation, p.topology, &mut out.amplitudes, p, dt, &mut ws);
    if !out.is_finite() {
        return Err(Error::NonFinite { t: dt });
    }
    Ok(out)
}

/// One Euler-Maruyama step with caller-supplied Wiener increments (see the
/// module docs for the channel layout).
pub fn step_em(
    s: &PhaseSpaceState,
    p: &SystemParams,
    dt: f64,
    dw: &[Complex64],
) -> Result<PhaseSpaceState> {
    if s.representation == Representation::Classical {
        return Err(Error::InvalidConfig("Euler-Maruyama needs a stochastic representation".into()));
    }
    s.check_shape(s.representation, p.topology)?;
    let want = n_noise_channels(s.representation, p.topology);
    if dw.len() != want {
        return Err(Error::ShapeMismatch { expected: want, got: dw.len() });
    }
    let mut out = s.clone();
    let mut ws = StepScratch::new(s.representation, p.topology);
    em_step_slice(s.representation, p.topology, &mut out.amplitudes, p, dt, dw, &mut ws);
    if !out.is_finite() {
        return Err(Error::NonFinite { t: dt });
    }
    Ok(out)
}

/// One stochastic-Heun step (drift predictor-corrector, same noise
/// increment).
pub fn step_heun(
    s: &PhaseSpaceState,
    p: &SystemParams,
    dt: f64,
    dw: &[Complex64],
) -> Result<PhaseSpaceState> {
    if s.representation == Representation::Classical {
        return Err(Error::InvalidConfig("Heun needs a stochastic representation".into()));
    }
    s.check_shape(s.representation, p.topology)?;
    let want = n_noise_channels(s.representation, p.topology);
    if dw.len() != want {
        return Err(Error::ShapeMismatch { expected: want, got: dw.len() });
    }
    let mut out = s.clone();
    let mut ws = StepScratch::new(s.representation, p.topology);
    heun_step_slice(s.representation, p.topology, &mut out.amplitudes, p, dt, dw, &mut ws);
    if !out.is_finite() {
        return Err(Error::NonFinite { t: dt });
    }
    Ok(out)
}

/// Amplitude bound for positive-P divergence detection: 10⁶·γ/χ. Beyond it
/// a trajectory is aborted and counted; silent clipping would bias moments.
fn divergence_bound(p: &SystemParams) -> f64 {
    let chi = p.chi_mean();
    if chi > 0.0 {
        1e6 * p.gamma_signal_mean() / chi
    } else {
        f64::INFINITY
    }
}

fn build_initial<R: Rng + ?Sized>(
    cfg: &IntegratorConfig,
    p: &SystemParams,
    rng: &mut R,
) -> PhaseSpaceState {
    match &cfg.initial {
        InitialState::State(s) => s.clone(),
        InitialState::VacuumSeed { amplitude, randomize_phases } => {
            let chi = p.chi_mean();
            let scale = if chi > 0.0 { p.gamma_signal_mean() / chi } else { 1.0 };
            let rho0 = amplitude.unwrap_or(1e-6 * scale);
            let n_modes = p.topology.n_modes();
            let mut amps = vec![Complex64::new(0.0, 0.0); n_modes];
            for a in amps.iter_mut().take(n_modes).skip(1) {
                let phase = if *randomize_phases {
                    rng.random_range(-std::f64::consts::PI..std::f64::consts::PI)
                } else {
                    0.0
                };
                *a = Complex64::from_polar(rho0, phase);
            }
            let classical = PhaseSpaceState::new(Representation::Classical, amps);
            match cfg.representation {
                Representation::Classical => classical,
                Representation::Wigner => {
                    PhaseSpaceState::new(Representation::Wigner, classical.amplitudes)
                }
                Representation::PositiveP => classical.to_positive_p(),
            }
        }
    }
}

struct RunningTrajectory<'a> {
    p: &'a SystemParams,
    rep: Representation,
    topo: Topology,
    scheme: Scheme,
    dt: f64,
    amps: Vec<Complex64>,
    ws: StepScratch,
    bound_sq: f64,
    t: f64,
}

impl<'a> RunningTrajectory<'a> {
    fn new(p: &'a SystemParams, cfg: &IntegratorConfig, rng: &mut ChaCha8Rng) -> Self {
        let rep = cfg.representation;
        let topo = p.topology;
        let init = build_initial(cfg, p, rng);
        let bound = divergence_bound(p);
        Self {
            p,
            rep,
            topo,
            scheme: cfg.scheme,
            dt: cfg.dt,
            amps: init.amplitudes,
            ws: StepScratch::new(rep, topo),
            bound_sq: bound * bound,
            t: 0.0,
        }
    }

    fn advance(&mut self, rng: &mut ChaCha8Rng) -> Result<()> {
        match self.scheme {
            Scheme::Rk4 => {
                rk4_step_slice(self.rep, self.topo, &mut self.amps, self.p, self.dt, &mut self.ws)
            }
            Scheme::EulerMaruyama => {
                sample_noise_block(self.rep, self.topo, self.dt, rng, &mut self.ws.dw);
                let dw = std::mem::take(&mut self.ws.dw);
                em_step_slice(self.rep, self.topo, &mut self.amps, self.p, self.dt, &dw, &mut self.ws);
                self.ws.dw = dw;
            }
            Scheme::Heun => {
                sample_noise_block(self.rep, self.topo, self.dt, rng, &mut self.ws.dw);
                let dw = std::mem::take(&mut self.ws.dw);
                heun_step_slice(self.rep, self.topo, &mut self.amps, self.p, self.dt, &dw, &mut self.ws);
                self.ws.dw = dw;
            }
        }
        self.t += self.dt;
        for a in &self.amps {
            let n = a.norm_sqr();
            if !n.is_finite() || n > self.bound_sq {
                return Err(Error::NonFinite { t: self.t });
            }
        }
        Ok(())
    }
}

fn plan_steps(cfg: &IntegratorConfig) -> (usize, usize) {
    let raw = (cfg.t_end / cfg.dt).round().max(1.0) as usize;
    let n_rec = raw / cfg.record_stride;
    let n_steps = (n_rec.max(1)) * cfg.record_stride;
    (n_steps, cfg.record_stride)
}

impl IntegratorConfig {
    /// Steps a run of this configuration will take (the horizon is rounded
    /// down to a whole number of record strides).
    pub fn planned_steps(&self) -> usize {
        plan_steps(self).0
    }
}

/// Integrate a single trajectory. Stochastic runs draw from ChaCha8 stream
/// 0 of `cfg.seed`, matching trajectory 0 of [`run_ensemble`].
pub fn simulate(p: &SystemParams, cfg: &IntegratorConfig) -> Result<Trajectory> {
    p.validate()?;
    cfg.validate(p)?;
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    rng.set_stream(0);
    let (n_steps, stride) = plan_steps(cfg);
    let mut traj = RunningTrajectory::new(p, cfg, &mut rng);
    let n_comp = traj.amps.len();
    let n_samples = n_steps / stride + 1;
    let mut series = vec![Vec::with_capacity(n_samples); n_comp];
    let mut times = Vec::with_capacity(n_samples);
    for step in 0..=n_steps {
        if step % stride == 0 {
            times.push(step as f64 * cfg.dt);
            for (c, s) in series.iter_mut().enumerate() {
                s.push(traj.amps[c]);
            }
        }
        if step < n_steps {
            traj.advance(&mut rng)?;
        }
    }
    Ok(Trajectory {
        times,
        series,
        representation: cfg.representation,
        params: p.clone(),
        config: cfg.clone(),
    })
}

/// Ensemble observables.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Observable {
    /// ⟨αᵢαᵢ⁺⟩ — the photon-number moment in positive-P, |αᵢ|² otherwise.
    Intensity(usize),
    /// ⟨α₁α₃α₄⟩ (degenerate topology: ⟨α₁³⟩).
    Triple,
    /// Unwrapped phase difference φᵢ − φⱼ; its ensemble variance measures
    /// phase diffusion.
    PhaseDifference(usize, usize),
}

impl Observable {
    pub fn label(&self) -> String {
        match self {
            Observable::Intensity(i) => format!("n{i}"),
            Observable::Triple => "triple".into(),
            Observable::PhaseDifference(i, j) => format!("phase_diff_{i}{j}"),
        }
    }
}

/// Per-trajectory evaluator carrying phase-unwrap state.
struct ObservableEval {
    observables: Vec<Observable>,
    prev_phase: Vec<f64>,
    unwrapped: Vec<f64>,
    started: bool,
}

impl ObservableEval {
    fn new(observables: &[Observable], n_modes: usize) -> Self {
        Self {
            observables: observables.to_vec(),
            prev_phase: vec![0.0; n_modes],
            unwrapped: vec![0.0; n_modes],
            started: false,
        }
    }

    fn update_phases(&mut self, s: &PhaseSpaceStateView<'_>) {
        for m in 0..self.prev_phase.len() {
            let raw = s.alpha(m).arg();
            if !self.started {
                self.unwrapped[m] = raw;
            } else {
                self.unwrapped[m] += wrap_angle(raw - self.prev_phase[m]);
            }
            self.prev_phase[m] = raw;
        }
        self.started = true;
    }

    fn eval(&mut self, s: &PhaseSpaceStateView<'_>, out: &mut [Complex64]) {
        let needs_phase =
            self.observables.iter().any(|o| matches!(o, Observable::PhaseDifference(..)));
        if needs_phase {
            self.update_phases(s);
        }
        for (o, slot) in self.observables.iter().zip(out.iter_mut()) {
            *slot = match *o {
                Observable::Intensity(i) => s.alpha(i) * s.alpha_plus(i),
                Observable::Triple => {
                    if s.n_modes == 3 {
                        s.alpha(1) * s.alpha(1) * s.alpha(1)
                    } else {
                        s.alpha(1) * s.alpha(3) * s.alpha(4)
                    }
                }
                Observable::PhaseDifference(i, j) => {
                    Complex64::new(self.unwrapped[i] - self.unwrapped[j], 0.0)
                }
            };
        }
    }
}

/// Borrowed view over raw amplitudes, avoiding per-sample clones in the
/// ensemble hot loop.
struct PhaseSpaceStateView<'a> {
    amps: &'a [Complex64],
    n_modes: usize,
    positive_p: bool,
}

impl<'a> PhaseSpaceStateView<'a> {
    fn alpha(&self, i: usize) -> Complex64 {
        self.amps[i]
    }
    fn alpha_plus(&self, i: usize) -> Complex64 {
        if self.positive_p {
            self.amps[self.n_modes + i]
        } else {
            self.amps[i].conj()
        }
    }
}

#[derive(Clone, Copy, Default)]
struct Kahan {
    s: f64,
    c: f64,
}

impl Kahan {
    fn add(&mut self, x: f64) {
        let y = x - self.c;
        let t = self.s + y;
        self.c = (t - self.s) - y;
        self.s = t;
    }
    fn value(&self) -> f64 {
        self.s
    }
}

#[derive(Clone, Default)]
struct MomentAccum {
    sum_re: Kahan,
    sum_im: Kahan,
    sum_sq: Kahan,
    n: u64,
}

impl MomentAccum {
    fn add(&mut self, x: Complex64) {
        self.sum_re.add(x.re);
        self.sum_im.add(x.im);
        self.sum_sq.add(x.norm_sqr());
        self.n += 1;
    }
    fn merge(&mut self, other: &MomentAccum) {
        self.sum_re.add(other.sum_re.value());
        self.sum_im.add(other.sum_im.value());
        self.sum_sq.add(other.sum_sq.value());
        self.n += other.n;
    }
    fn stats(&self) -> (Complex64, f64, f64) {
        let n = self.n as f64;
        if self.n == 0 {
            return (Complex64::default(), 0.0, 0.0);
        }
        let mean = Complex64::new(self.sum_re.value() / n, self.sum_im.value() / n);
        let var = if self.n > 1 {
            ((self.sum_sq.value() - n * mean.norm_sqr()) / (n - 1.0)).max(0.0)
        } else {
            0.0
        };
        (mean, var, (var / n).sqrt())
    }
}

/// Mean, across-trajectory variance and standard error of one observable
/// at each recorded time, plus the stationary-window summary when a
/// window was requested.
#[derive(Debug, Clone)]
pub struct MomentSeries {
    pub observable: Observable,
    pub mean: Vec<Complex64>,
    pub variance: Vec<f64>,
    pub std_error: Vec<f64>,
    /// (mean, variance, std error) of the per-trajectory time average over
    /// the stationary window.
    pub window: Option<(Complex64, f64, f64)>,
}

#[derive(Debug, Clone)]
pub struct EnsembleStats {
    /// Trajectories contributing to the statistics.
    pub n_traj: usize,
    /// Aborted (divergent) trajectories; reported, never silently dropped.
    pub n_discarded: usize,
    pub times: Vec<f64>,
    pub moments: Vec<MomentSeries>,
}

impl EnsembleStats {
    pub fn series(&self, o: Observable) -> Option<&MomentSeries> {
        self.moments.iter().find(|m| m.observable == o)
    }
}

struct ChunkAccum {
    per_time: Vec<Vec<MomentAccum>>, // [observable][time]
    window: Vec<MomentAccum>,        // [observable]
    discarded: usize,
}

impl ChunkAccum {
    fn new(n_obs: usize, n_times: usize) -> Self {
        Self {
            per_time: vec![vec![MomentAccum::default(); n_times]; n_obs],
            window: vec![MomentAccum::default(); n_obs],
            discarded: 0,
        }
    }
    fn merge(&mut self, other: &ChunkAccum) {
        for (a, b) in self.per_time.iter_mut().zip(&other.per_time) {
            for (x, y) in a.iter_mut().zip(b) {
                x.merge(y);
            }
        }
        for (x, y) in self.window.iter_mut().zip(&other.window) {
            x.merge(y);
        }
        self.discarded += other.discarded;
    }
}

const TRAJ_CHUNK: usize = 32;

/// Run `n_traj` independent trajectories and estimate the requested
/// moments. `window_start`, when given, adds a per-trajectory time average
/// over `[window_start, t_end]` for each observable.
///
/// Identical inputs give bit-identical results for any worker count.
pub fn run_ensemble(
    p: &SystemParams,
    cfg: &IntegratorConfig,
    n_traj: usize,
    observables: &[Observable],
    window_start: Option<f64>,
) -> Result<EnsembleStats> {
    p.validate()?;
    cfg.validate(p)?;
    if cfg.scheme == Scheme::Rk4 && n_traj > 1 {
        // Deterministic scheme: allowed, every trajectory identical unless
        // the seed phases differ.
    }
    let (n_steps, stride) = plan_steps(cfg);
    let n_times = n_steps / stride + 1;
    let times: Vec<f64> = (0..n_times).map(|k| (k * stride) as f64 * cfg.dt).collect();
    let n_obs = observables.len();
    let n_modes = p.topology.n_modes();

    let n_chunks = n_traj.div_ceil(TRAJ_CHUNK);
    let chunks: Vec<ChunkAccum> = (0..n_chunks)
        .into_par_iter()
        .map(|chunk| {
            let lo = chunk * TRAJ_CHUNK;
            let hi = ((chunk + 1) * TRAJ_CHUNK).min(n_traj);
            let mut acc = ChunkAccum::new(n_obs, n_times);
            let mut values = vec![Complex64::default(); n_obs];
            // Per-trajectory staging so a divergent trajectory leaves no trace.
            let mut staged: Vec<Vec<Complex64>> = vec![vec![Complex64::default(); n_times]; n_obs];
            for idx in lo..hi {
                let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
                rng.set_stream(idx as u64);
                let mut traj = RunningTrajectory::new(p, cfg, &mut rng);
                let mut eval = ObservableEval::new(observables, n_modes);
                let mut ok = true;
                let mut rec = 0usize;
                for step in 0..=n_steps {
                    if step % stride == 0 {
                        let view = PhaseSpaceStateView {
                            amps: &traj.amps,
                            n_modes,
                            positive_p: cfg.representation == Representation::PositiveP,
                        };
                        eval.eval(&view, &mut values);
                        for (o, v) in values.iter().enumerate() {
                            staged[o][rec] = *v;
                        }
                        rec += 1;
                    }
                    if step < n_steps {
                        if traj.advance(&mut rng).is_err() {
                            ok = false;
                            break;
                        }
                    }
                }
                if !ok {
                    acc.discarded += 1;
                    continue;
                }
                for o in 0..n_obs {
                    for k in 0..n_times {
                        acc.per_time[o][k].add(staged[o][k]);
                    }
                    if let Some(w0) = window_start {
                        let mut sum = Complex64::default();
                        let mut count = 0usize;
                        for k in 0..n_times {
                            if times[k] >= w0 {
                                sum += staged[o][k];
                                count += 1;
                            }
                        }
                        if count > 0 {
                            acc.window[o].add(sum / count as f64);
                        }
                    }
                }
            }
            acc
        })
        .collect();

    let mut total = ChunkAccum::new(n_obs, n_times);
    for c in &chunks {
        total.merge(c);
    }
    let n_good = n_traj - total.discarded;
    if n_good == 0 {
        return Err(Error::NonFinite { t: cfg.t_end });
    }
    let moments = observables
        .iter()
        .enumerate()
        .map(|(o, obs)| {
            let mut mean = Vec::with_capacity(n_times);
            let mut variance = Vec::with_capacity(n_times);
            let mut std_error = Vec::with_capacity(n_times);
            for k in 0..n_times {
                let (m, v, se) = total.per_time[o][k].stats();
                mean.push(m);
                variance.push(v);
                std_error.push(se);
            }
            let window = window_start.map(|_| {
                let (m, v, se) = total.window[o].stats();
                (m, v, se)
            });
            MomentSeries { observable: *obs, mean, variance, std_error, window }
        })
        .collect();
    Ok(EnsembleStats { n_traj: n_good, n_discarded: total.discarded, times, moments })
}

/// Common-path weak-convergence probe: evolve each trajectory at several
/// step sizes (`multipliers` × `dt_fine`) on the same Brownian path and
/// report the per-trajectory time average of Re(α_mode α_mode⁺) over the
/// second half of the run, one value per level per trajectory. Multiplier
/// 1 is the reference resolution; window averaging keeps the same
/// steady-state discretization bias while shrinking the estimator noise.
pub fn multilevel_weak_probe(
    p: &SystemParams,
    cfg: &IntegratorConfig,
    multipliers: &[usize],
    n_traj: usize,
    mode: usize,
) -> Result<Vec<Vec<f64>>> {
    p.validate()?;
    cfg.validate(p)?;
    if cfg.scheme == Scheme::Rk4 {
        return Err(Error::InvalidConfig("weak probe is for stochastic schemes".into()));
    }
    let dt_fine = cfg.dt;
    let n_fine = {
        let lcm = multipliers.iter().fold(1usize, |acc, &m| acc * m / gcd(acc, m));
        let raw = (cfg.t_end / dt_fine).round().max(1.0) as usize;
        (raw / lcm).max(1) * lcm
    };
    let rep = cfg.representation;
    let topo = p.topology;
    let ch = n_noise_channels(rep, topo);
    let levels = multipliers.len();

    let per_traj: Vec<Vec<f64>> = (0..n_traj)
        .into_par_iter()
        .map(|idx| {
            let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
            rng.set_stream(idx as u64);
            let init = build_initial(cfg, p, &mut rng);
            let mut states: Vec<Vec<Complex64>> =
                (0..levels).map(|_| init.amplitudes.clone()).collect();
            let mut scratch: Vec<StepScratch> =
                (0..levels).map(|_| StepScratch::new(rep, topo)).collect();
            let mut acc = vec![vec![Complex64::default(); ch]; levels];
            let mut pending = vec![0usize; levels];
            let mut fine_dw = vec![Complex64::default(); ch];
            let mut window_sum = vec![0.0f64; levels];
            let mut window_count = vec![0usize; levels];
            let window_from = n_fine / 2;
            for step in 0..n_fine {
                sample_noise_block(rep, topo, dt_fine, &mut rng, &mut fine_dw);
                for l in 0..levels {
                    for c in 0..ch {
                        acc[l][c] += fine_dw[c];
                    }
                    pending[l] += 1;
                    if pending[l] == multipliers[l] {
                        let dt = multipliers[l] as f64 * dt_fine;
                        let dw = std::mem::replace(&mut acc[l], vec![Complex64::default(); ch]);
                        match cfg.scheme {
                            Scheme::EulerMaruyama => em_step_slice(
                                rep, topo, &mut states[l], p, dt, &dw, &mut scratch[l],
                            ),
                            Scheme::Heun => heun_step_slice(
                                rep, topo, &mut states[l], p, dt, &dw, &mut scratch[l],
                            ),
                            Scheme::Rk4 => unreachable!(),
                        }
                        pending[l] = 0;
                        if step >= window_from {
                            let view = PhaseSpaceStateView {
                                amps: &states[l],
                                n_modes: topo.n_modes(),
                                positive_p: rep == Representation::PositiveP,
                            };
                            window_sum[l] += (view.alpha(mode) * view.alpha_plus(mode)).re;
                            window_count[l] += 1;
                        }
                    }
                }
            }
            (0..levels).map(|l| window_sum[l] / window_count[l].max(1) as f64).collect()
        })
        .collect();

    // Transpose to per-level vectors ordered by trajectory index.
    let mut out = vec![Vec::with_capacity(n_traj); levels];
    for traj in per_traj {
        for (l, v) in traj.into_iter().enumerate() {
            out[l].push(v);
        }
    }
    Ok(out)
}

fn gcd(a: usize, b: usize) -> usize {
    if b == 0 {
        a
    } else {
        gcd(b, a % b)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::analytic::{concrete_state, steady_state};

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    #[test]
    fn correlated_noise_block_moments() {
        let mut rng = ChaCha8Rng::seed_from_u64(42);
        let dt = 1.0;
        let n = 1_000_000usize;
        let mut z12 = Complex64::default();
        let mut z11 = Complex64::default();
        let mut z12c = Complex64::default();
        let mut cross = Complex64::default();
        for _ in 0..n {
            let b = correlated_noise_block(&mut rng, dt);
            z12 += b[0] * b[1];
            z11 += b[0] * b[0];
            z12c += b[0] * b[1].conj();
            cross += b[0] * b[4];
        }
        let inv = 1.0 / n as f64;
        assert!((z12 * inv - c(1.0, 0.0)).norm() < 0.01, "zeta1*zeta2 = {}", z12 * inv);
        assert!((z11 * inv).norm() < 0.01);
        assert!((z12c * inv).norm() < 0.01);
        assert!((cross * inv).norm() < 0.01);
    }

    #[test]
    fn noise_second_moments_scale_inverse_dt() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        let n = 200_000usize;
        let mut m = Complex64::default();
        for _ in 0..n {
            let b = correlated_noise_block(&mut rng, 0.25);
            m += b[0] * b[1];
        }
        let got = m / n as f64;
        assert!((got - c(4.0, 0.0)).norm() < 0.05, "second moment {got}");
    }

    #[test]
    fn rk4_fixed_point_unchanged() {
        let p = SystemParams::symmetric(10.0, 1.0, 0.1, 220.0);
        let sol = steady_state(&p).unwrap();
        let s = concrete_state(&sol, &p, &[0.0, 0.0]);
        let out = step_rk4(&s, &p, 1e-2).unwrap();
        for (a, b) in s.amplitudes.iter().zip(&out.amplitudes) {
            assert!((a - b).norm() < 1e-13);
        }
    }

    #[test]
    fn rk4_one_step_order_on_pure_decay() {
        // χ = 0, E₀ = 0: exact solution α(t) = e^{-γt}α(0). Halving dt must
        // shrink the one-step error by ≈ 2⁵.
        let p = SystemParams {
            chi1: 0.0,
            chi2: 0.0,
            ..SystemParams::symmetric(1.0, 1.0, 0.0, 0.0)
        };
        let s = PhaseSpaceState::new(Representation::Classical, vec![c(1.0, 0.5); 5]);
        let err = |dt: f64| {
            let out = step_rk4(&s, &p, dt).unwrap();
            let exact = c(1.0, 0.5) * (-dt).exp();
            (out.amplitudes[0] - exact).norm()
        };
        let e1 = err(0.2);
        let e2 = err(0.1);
        let ratio = e1 / e2;
        assert!((ratio - 32.0).abs() < 6.0, "one-step error ratio {ratio}");
    }

    #[test]
    fn em_and_heun_zero_noise_fixed_point() {
        let p = SystemParams::symmetric(10.0, 1.0, 0.1, 220.0);
        let sol = steady_state(&p).unwrap();
        let s = concrete_state(&sol, &p, &[0.0, 0.0]).to_positive_p();
        let dw = vec![Complex64::default(); 8];
        for out in [step_em(&s, &p, 1e-3, &dw).unwrap(), step_heun(&s, &p, 1e-3, &dw).unwrap()] {
            for (a, b) in s.amplitudes.iter().zip(&out.amplitudes) {
                assert!((a - b).norm() < 1e-13);
            }
        }
    }

    #[test]
    fn undriven_classical_decays_monotonically() {
        let p = SystemParams::symmetric(2.0, 0.5, 0.3, 0.0);
        let cfg = IntegratorConfig {
            scheme: Scheme::Rk4,
            representation: Representation::Classical,
            dt: 1e-2,
            t_end: 60.0,
            record_stride: 10,
            seed: 3,
            initial: InitialState::State(PhaseSpaceState::new(
                Representation::Classical,
                vec![c(0.5, 0.1), c(0.4, -0.2), c(0.3, 0.0), c(0.2, 0.2), c(0.1, -0.1)],
            )),
        };
        let traj = simulate(&p, &cfg).unwrap();
        let total = |k: usize| -> f64 {
            (0..5).map(|m| traj.series[m][k].norm_sqr()).sum()
        };
        for k in 1..traj.n_samples() {
            assert!(total(k) <= total(k - 1) + 1e-15);
        }
        let last = traj.final_state();
        assert!(last.amplitudes.iter().all(|a| a.norm() < 1e-12));
    }

    #[test]
    fn ensemble_of_one_matches_simulate() {
        let p = SystemParams::symmetric(2.0, 1.0, 0.1, 1.0);
        let cfg = IntegratorConfig {
            scheme: Scheme::EulerMaruyama,
            representation: Representation::Wigner,
            dt: 1e-2,
            t_end: 1.0,
            record_stride: 10,
            seed: 99,
            initial: InitialState::State(PhaseSpaceState::zero(
                Representation::Wigner,
                Topology::Nondegenerate,
            )),
        };
        let traj = simulate(&p, &cfg).unwrap();
        let stats =
            run_ensemble(&p, &cfg, 1, &[Observable::Intensity(0)], None).unwrap();
        for (k, t) in stats.times.iter().enumerate() {
            let direct = traj.series[0][k].norm_sqr();
            let m = stats.moments[0].mean[k];
            assert!((m.re - direct).abs() < 1e-14, "t={t}");
        }
    }

    #[test]
    fn ensemble_deterministic_across_worker_counts() {
        let p = SystemParams::symmetric(2.0, 1.0, 0.2, 2.0);
        let cfg = IntegratorConfig {
            scheme: Scheme::EulerMaruyama,
            representation: Representation::Wigner,
            dt: 5e-3,
            t_end: 0.5,
            record_stride: 20,
            seed: 1234,
            initial: InitialState::State(PhaseSpaceState::zero(
                Representation::Wigner,
                Topology::Nondegenerate,
            )),
        };
        let run = |threads: usize| {
            let pool = rayon::ThreadPoolBuilder::new().num_threads(threads).build().unwrap();
            pool.install(|| {
                run_ensemble(&p, &cfg, 100, &[Observable::Intensity(1), Observable::Triple], None)
                    .unwrap()
            })
        };
        let a = run(1);
        let b = run(4);
        for (ma, mb) in a.moments.iter().zip(&b.moments) {
            for (x, y) in ma.mean.iter().zip(&mb.mean) {
                assert_eq!(x, y, "means differ between worker counts");
            }
            for (x, y) in ma.std_error.iter().zip(&mb.std_error) {
                assert_eq!(x, y);
            }
        }
    }

    #[test]
    fn doubling_trajectories_shrinks_std_error() {
        let p = SystemParams::symmetric(2.0, 1.0, 0.0, 0.0);
        let cfg = IntegratorConfig {
            scheme: Scheme::EulerMaruyama,
            representation: Representation::Wigner,
            dt: 1e-2,
            t_end: 6.0,
            record_stride: 100,
            seed: 5,
            initial: InitialState::State(PhaseSpaceState::zero(
                Representation::Wigner,
                Topology::Nondegenerate,
            )),
        };
        let obs = [Observable::Intensity(0)];
        let a = run_ensemble(&p, &cfg, 2000, &obs, Some(3.0)).unwrap();
        let b = run_ensemble(&p, &cfg, 4000, &obs, Some(3.0)).unwrap();
        let se_a = a.moments[0].window.unwrap().2;
        let se_b = b.moments[0].window.unwrap().2;
        let shrink = se_a / se_b;
        assert!(
            (shrink - std::f64::consts::SQRT_2).abs() < 0.15,
            "std error shrink factor {shrink}"
        );
    }

    #[test]
    fn wigner_single_mode_vacuum_half_photon() {
        // Undriven, uncoupled: stationary ⟨|α|²⟩ = 1/2 per mode.
        let p = SystemParams::symmetric(1.0, 1.0, 0.0, 0.0);
        let cfg = IntegratorConfig {
            scheme: Scheme::EulerMaruyama,
            representation: Representation::Wigner,
            dt: 2e-3,
            t_end: 10.0,
            record_stride: 50,
            seed: 21,
            initial: InitialState::State(PhaseSpaceState::zero(
                Representation::Wigner,
                Topology::Nondegenerate,
            )),
        };
        let stats =
            run_ensemble(&p, &cfg, 4000, &[Observable::Intensity(2)], Some(5.0)).unwrap();
        let (mean, _var, se) = stats.moments[0].window.unwrap();
        assert!(
            (mean.re - 0.5).abs() < 3.0 * se.max(1e-3),
            "<|alpha|^2> = {} ± {se}",
            mean.re
        );
    }

    #[test]
    fn wigner_conjugate_closure() {
        // Conjugated noise + conjugated initial state with real E₀ gives the
        // conjugate trajectory, step by step.
        let p = SystemParams::symmetric(3.0, 1.0, 0.2, 2.0);
        let mut rng = ChaCha8Rng::seed_from_u64(8);
        let s0 = PhaseSpaceState::new(
            Representation::Wigner,
            vec![c(0.3, 0.4), c(-0.1, 0.2), c(0.0, -0.3), c(0.5, 0.1), c(0.2, 0.2)],
        );
        let conj0 = PhaseSpaceState::new(
            Representation::Wigner,
            s0.amplitudes.iter().map(|a| a.conj()).collect(),
        );
        let mut a = s0;
        let mut b = conj0;
        let dt = 1e-2;
        let mut dw = vec![Complex64::default(); 5];
        for _ in 0..200 {
            sample_noise_block(Representation::Wigner, Topology::Nondegenerate, dt, &mut rng, &mut dw);
            let dw_conj: Vec<Complex64> = dw.iter().map(|w| w.conj()).collect();
            a = step_em(&a, &p, dt, &dw).unwrap();
            b = step_em(&b, &p, dt, &dw_conj).unwrap();
            for (x, y) in a.amplitudes.iter().zip(&b.amplitudes) {
                assert_eq!(*y, x.conj());
            }
        }
    }

    #[test]
    fn positive_p_divergence_is_counted() {
        // Run far above threshold with a huge step so Euler blows up.
        let p = SystemParams::symmetric(1.0, 1.0, 0.9, 500.0);
        let cfg = IntegratorConfig {
            scheme: Scheme::EulerMaruyama,
            representation: Representation::PositiveP,
            dt: 1.0,
            t_end: 50.0,
            record_stride: 1,
            seed: 11,
            initial: InitialState::VacuumSeed { amplitude: Some(1.0), randomize_phases: true },
        };
        let stats = run_ensemble(&p, &cfg, 8, &[Observable::Intensity(1)], None);
        match stats {
            Ok(s) => assert!(s.n_discarded > 0, "expected divergent trajectories"),
            Err(Error::NonFinite { .. }) => {} // every trajectory diverged
            Err(e) => panic!("unexpected error {e}"),
        }
    }

    #[test]
    fn scheme_representation_mismatch_rejected() {
        let p = SystemParams::symmetric(2.0, 1.0, 0.1, 1.0);
        let cfg = IntegratorConfig {
            scheme: Scheme::Rk4,
            representation: Representation::Wigner,
            dt: 1e-2,
            t_end: 1.0,
            record_stride: 1,
            seed: 0,
            initial: InitialState::VacuumSeed { amplitude: None, randomize_phases: false },
        };
        assert!(matches!(cfg.validate(&p), Err(Error::InvalidConfig(_))));
    }
}
