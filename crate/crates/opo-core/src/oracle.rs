//! Truncated-Fock-space integration of the Lindblad master equation — the
//! brute-force ground truth at low photon number.
//!
//! ∂ρ/∂t = [E₀â₀† − E₀*â₀, ρ] + χ₁[â₀â₁†â₂† − â₀†â₁â₂, ρ]
//!        + χ₂[â₂â₃†â₄† − â₂†â₃â₄, ρ] + Σᵢ γᵢ(2âᵢρâᵢ† − ρâᵢ†âᵢ − âᵢ†âᵢρ),
//!
//! zero-temperature reservoirs. The damping convention matches the rest of
//! the crate: amplitudes decay at γᵢ, photon numbers at 2γᵢ. Detunings add
//! −i[Σ Δᵢ n̂ᵢ, ρ]. The degenerate topology replaces the second interaction
//! by (χ₂/2)[â₂â₁†² − â₂†â₁², ρ].
//!
//! ρ is stored dense; the Liouvillian is applied through sparse ladder
//! products (no dim²×dim² superoperator is ever materialized), row-parallel
//! and bitwise deterministic for any worker count.

use num_complex::Complex64;
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::linalg::{self, CMatrix};
use crate::params::{SystemParams, Topology};

/// Default cap on the total Hilbert-space dimension Π(Nᵢ+1).
pub const DEFAULT_DIMENSION_CAP: usize = 4096;

/// Default ceiling on the top-level Fock population before results are
/// flagged untrusted.
pub const DEFAULT_SATURATION_THRESHOLD: f64 = 1e-4;

/// Per-mode photon-number cutoffs (inclusive): mode i spans |0⟩..|Nᵢ⟩.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct FockConfig {
    pub cutoffs: Vec<usize>,
    pub dimension_cap: usize,
}

impl FockConfig {
    pub fn new(cutoffs: &[usize]) -> Self {
        Self { cutoffs: cutoffs.to_vec(), dimension_cap: DEFAULT_DIMENSION_CAP }
    }

    pub fn n_modes(&self) -> usize {
        self.cutoffs.len()
    }

    pub fn dimension(&self) -> usize {
        self.cutoffs.iter().map(|&n| n + 1).product()
    }

    pub fn validate(&self, topology: Topology) -> Result<()> {
        if self.cutoffs.len() != topology.n_modes() {
            return Err(Error::InvalidConfig(format!(
                "{} cutoffs for a {}-mode topology",
                self.cutoffs.len(),
                topology.n_modes()
            )));
        }
        let dim = self.dimension();
        if dim > self.dimension_cap {
            return Err(Error::DimensionCap { dim, cap: self.dimension_cap });
        }
        Ok(())
    }

    /// Basis index of a photon configuration, row-major with mode 0 slowest.
    pub fn index_of(&self, occupation: &[usize]) -> usize {
        let mut idx = 0;
        for (m, &n) in occupation.iter().enumerate() {
            idx = idx * (self.cutoffs[m] + 1) + n;
        }
        idx
    }

    /// Inverse of [`FockConfig::index_of`].
    pub fn occupation_of(&self, mut idx: usize) -> Vec<usize> {
        let mut occ = vec![0usize; self.n_modes()];
        for m in (0..self.n_modes()).rev() {
            let size = self.cutoffs[m] + 1;
            occ[m] = idx % size;
            idx /= size;
        }
        occ
    }
}

/// Sparse operator with a handful of entries per row; products of ladder
/// operators have exactly one.
#[derive(Debug, Clone)]
pub struct SparseOp {
    pub dim: usize,
    /// rows[r] = list of (column, coefficient) with ⟨r|Ô|c⟩ = coefficient.
    pub rows: Vec<Vec<(u32, Complex64)>>,
}

impl SparseOp {
    fn zero(dim: usize) -> Self {
        Self { dim, rows: vec![Vec::new(); dim] }
    }

    fn add_entry(&mut self, r: usize, c: usize, v: Complex64) {
        if v.norm_sqr() == 0.0 {
            return;
        }
        for e in &mut self.rows[r] {
            if e.0 as usize == c {
                e.1 += v;
                return;
            }
        }
        self.rows[r].push((c as u32, v));
    }

    fn add_scaled(&mut self, other: &SparseOp, scale: Complex64) {
        for r in 0..self.dim {
            for &(c, v) in &other.rows[r] {
                self.add_entry(r, c as usize, scale * v);
            }
        }
    }

    pub fn to_dense(&self) -> CMatrix {
        let mut m = CMatrix::zeros(self.dim);
        for r in 0..self.dim {
            for &(c, v) in &self.rows[r] {
                m[(r, c as usize)] = v;
            }
        }
        m
    }
}

/// Apply one ladder factor to the basis state `occ`; `None` when
/// annihilating vacuum or stepping past the cutoff (truncation artifact).
fn apply_factor(cfg: &FockConfig, occ: &mut [usize], mode: usize, dagger: bool) -> Option<f64> {
    let n = occ[mode];
    if dagger {
        if n + 1 > cfg.cutoffs[mode] {
            return None;
        }
        occ[mode] = n + 1;
        Some(((n + 1) as f64).sqrt())
    } else {
        if n == 0 {
            return None;
        }
        occ[mode] = n - 1;
        Some((n as f64).sqrt())
    }
}

/// Matrix of an operator product written left-to-right, e.g.
/// `&[(1, true), (1, false)]` is â₁†â₁. Factors act on a ket right-to-left.
pub fn product_operator(cfg: &FockConfig, factors: &[(usize, bool)]) -> SparseOp {
    let dim = cfg.dimension();
    let mut op = SparseOp::zero(dim);
    for col in 0..dim {
        let mut occ = cfg.occupation_of(col);
        let mut coeff = 1.0;
        let mut alive = true;
        for &(mode, dagger) in factors.iter().rev() {
            match apply_factor(cfg, &mut occ, mode, dagger) {
                Some(f) => coeff *= f,
                None => {
                    alive = false;
                    break;
                }
            }
        }
        if alive {
            let row = cfg.index_of(&occ);
            op.add_entry(row, col, Complex64::new(coeff, 0.0));
        }
    }
    op
}

/// Truncated annihilation matrices, one per mode.
pub fn build_ladder_operators(cfg: &FockConfig, topology: Topology) -> Result<Vec<SparseOp>> {
    cfg.validate(topology)?;
    Ok((0..cfg.n_modes()).map(|m| product_operator(cfg, &[(m, false)])).collect())
}

/// Dense density matrix in the row-major multi-index basis.
#[derive(Debug, Clone)]
pub struct DensityMatrix {
    pub dim: usize,
    pub entries: Vec<Complex64>,
}

impl DensityMatrix {
    pub fn vacuum(cfg: &FockConfig) -> Self {
        let dim = cfg.dimension();
        let mut entries = vec![Complex64::default(); dim * dim];
        entries[0] = Complex64::new(1.0, 0.0);
        Self { dim, entries }
    }

    /// ρ = |occ⟩⟨occ|.
    pub fn fock_state(cfg: &FockConfig, occ: &[usize]) -> Self {
        let dim = cfg.dimension();
        let k = cfg.index_of(occ);
        let mut entries = vec![Complex64::default(); dim * dim];
        entries[k * dim + k] = Complex64::new(1.0, 0.0);
        Self { dim, entries }
    }

    #[inline]
    pub fn get(&self, r: usize, c: usize) -> Complex64 {
        self.entries[r * self.dim + c]
    }

    pub fn trace(&self) -> Complex64 {
        (0..self.dim).map(|k| self.get(k, k)).sum()
    }

    pub fn hermiticity_defect(&self) -> f64 {
        let mut worst = 0.0f64;
        for r in 0..self.dim {
            for c in r..self.dim {
                worst = worst.max((self.get(r, c) - self.get(c, r).conj()).norm());
            }
        }
        worst
    }

    /// Spectrum bounded below by −tol (Cholesky of ρ + tol·I).
    pub fn positive_within(&self, tol: f64) -> bool {
        let mut m = CMatrix::zeros(self.dim);
        for r in 0..self.dim {
            for c in 0..self.dim {
                m[(r, c)] = self.get(r, c);
            }
        }
        linalg::hermitian_psd_within(&m, tol)
    }

    /// Total population of basis states with mode `m` at its cutoff.
    pub fn top_level_population(&self, cfg: &FockConfig, mode: usize) -> f64 {
        let mut pop = 0.0;
        for k in 0..self.dim {
            if cfg.occupation_of(k)[mode] == cfg.cutoffs[mode] {
                pop += self.get(k, k).re;
            }
        }
        pop
    }

    /// Worst top-level population over modes with a nontrivial cutoff
    /// (a cutoff-0 mode holds no photons and cannot saturate).
    pub fn max_top_level_population(&self, cfg: &FockConfig) -> f64 {
        (0..cfg.n_modes())
            .filter(|&m| cfg.cutoffs[m] > 0)
            .map(|m| self.top_level_population(cfg, m))
            .fold(0.0, f64::max)
    }
}

/// The commutator generator K with dρ/dt ⊃ Kρ − ρK:
/// K = E₀â₀† − E₀*â₀ + χ₁(â₀â₁†â₂† − â₀†â₁â₂) + χ₂(…) − iΣΔᵢn̂ᵢ.
fn build_generator(cfg: &FockConfig, p: &SystemParams) -> SparseOp {
    let dim = cfg.dimension();
    let mut k = SparseOp::zero(dim);
    let one = Complex64::new(1.0, 0.0);
    k.add_scaled(&product_operator(cfg, &[(0, true)]), p.drive);
    k.add_scaled(&product_operator(cfg, &[(0, false)]), -p.drive.conj());
    k.add_scaled(&product_operator(cfg, &[(0, false), (1, true), (2, true)]), p.chi1 * one);
    k.add_scaled(&product_operator(cfg, &[(0, true), (1, false), (2, false)]), -p.chi1 * one);
    match p.topology {
        Topology::Nondegenerate => {
            k.add_scaled(&product_operator(cfg, &[(2, false), (3, true), (4, true)]), p.chi2 * one);
            k.add_scaled(
                &product_operator(cfg, &[(2, true), (3, false), (4, false)]),
                -p.chi2 * one,
            );
        }
        Topology::Degenerate => {
            k.add_scaled(
                &product_operator(cfg, &[(2, false), (1, true), (1, true)]),
                0.5 * p.chi2 * one,
            );
            k.add_scaled(
                &product_operator(cfg, &[(2, true), (1, false), (1, false)]),
                -0.5 * p.chi2 * one,
            );
        }
    }
    for m in 0..cfg.n_modes() {
        if p.detuning[m] != 0.0 {
            k.add_scaled(
                &product_operator(cfg, &[(m, true), (m, false)]),
                Complex64::new(0.0, -p.detuning[m]),
            );
        }
    }
    k
}

/// Precomputed Liouvillian for one (params, cutoffs) pair.
pub struct Liouvillian {
    cfg: FockConfig,
    generator: SparseOp,
    ladders: Vec<SparseOp>,
    /// Diagonal of Σᵢ γᵢ n̂ᵢ in the basis ordering.
    loss_diag: Vec<f64>,
    gammas: Vec<f64>,
}

impl Liouvillian {
    pub fn new(cfg: &FockConfig, p: &SystemParams) -> Result<Self> {
        p.validate()?;
        cfg.validate(p.topology)?;
        let generator = build_generator(cfg, p);
        let ladders = build_ladder_operators(cfg, p.topology)?;
        let dim = cfg.dimension();
        let mut loss_diag = vec![0.0; dim];
        for (k, d) in loss_diag.iter_mut().enumerate() {
            let occ = cfg.occupation_of(k);
            *d = occ.iter().enumerate().map(|(m, &n)| p.gamma[m] * n as f64).sum();
        }
        let gammas = (0..cfg.n_modes()).map(|m| p.gamma[m]).collect();
        Ok(Self { cfg: cfg.clone(), generator, ladders, loss_diag, gammas })
    }

    pub fn cfg(&self) -> &FockConfig {
        &self.cfg
    }

    /// dρ/dt = Kρ − ρK + Σᵢ γᵢ(2aᵢρaᵢ† − ρn̂ᵢ − n̂ᵢρ), written into `out`.
    /// Trace-free and Hermiticity-preserving by construction.
    pub fn apply(&self, rho: &DensityMatrix, out: &mut DensityMatrix) {
        let dim = rho.dim;
        let k_op = &self.generator;
        let rho_e = &rho.entries;
        out.entries.par_chunks_mut(dim).enumerate().for_each(|(r, out_row)| {
            for (c, slot) in out_row.iter_mut().enumerate() {
                let mut acc = Complex64::default();
                // (Kρ)[r][c]
                for &(mid, v) in &k_op.rows[r] {
                    acc += v * rho_e[mid as usize * dim + c];
                }
                // 2γ aρa†: a carries one entry per row.
                for (m, a) in self.ladders.iter().enumerate() {
                    if let (Some(&(ca, va)), Some(&(cb, vb))) =
                        (a.rows[r].first(), a.rows[c].first())
                    {
                        acc += 2.0
                            * self.gammas[m]
                            * va
                            * vb.conj()
                            * rho_e[ca as usize * dim + cb as usize];
                    }
                }
                // −{Σγᵢn̂ᵢ, ρ}/1 (both one-sided products are diagonal here)
                acc -= (self.loss_diag[r] + self.loss_diag[c]) * rho_e[r * dim + c];
                *slot = acc;
            }
            // −(ρK)[r][·]: scatter K's sparse rows against ρ's row r.
            for m in 0..dim {
                let rm = rho_e[r * dim + m];
                if rm.norm_sqr() == 0.0 {
                    continue;
                }
                for &(c, v) in &k_op.rows[m] {
                    out_row[c as usize] -= rm * v;
                }
            }
        });
    }
}

/// Options for [`evolve_master`].
#[derive(Debug, Clone)]
pub struct EvolveOptions {
    pub dt: f64,
    pub t_end: f64,
    /// Abort with [`Error::CutoffSaturation`] when any mode's top-level
    /// population exceeds this.
    pub saturation_threshold: f64,
    /// Saturation check cadence, in steps.
    pub check_every: usize,
}

impl EvolveOptions {
    pub fn new(dt: f64, t_end: f64) -> Self {
        Self { dt, t_end, saturation_threshold: DEFAULT_SATURATION_THRESHOLD, check_every: 50 }
    }

    pub fn with_saturation_threshold(mut self, s: f64) -> Self {
        self.saturation_threshold = s;
        self
    }
}

/// RK4 integration of the master equation from `rho0`.
pub fn evolve_master(
    rho0: &DensityMatrix,
    p: &SystemParams,
    cfg: &FockConfig,
    opts: &EvolveOptions,
) -> Result<DensityMatrix> {
    let liouv = Liouvillian::new(cfg, p)?;
    let dim = rho0.dim;
    if dim != cfg.dimension() {
        return Err(Error::ShapeMismatch { expected: cfg.dimension(), got: dim });
    }
    let n_steps = (opts.t_end / opts.dt).round().max(1.0) as usize;
    let mut rho = rho0.clone();
    let blank = DensityMatrix { dim, entries: vec![Complex64::default(); dim * dim] };
    let mut k1 = blank.clone();
    let mut k2 = blank.clone();
    let mut k3 = blank.clone();
    let mut k4 = blank.clone();
    let mut tmp = blank;
    for step in 0..n_steps {
        liouv.apply(&rho, &mut k1);
        axpy(&rho, 0.5 * opts.dt, &k1, &mut tmp);
        liouv.apply(&tmp, &mut k2);
        axpy(&rho, 0.5 * opts.dt, &k2, &mut tmp);
        liouv.apply(&tmp, &mut k3);
        axpy(&rho, opts.dt, &k3, &mut tmp);
        liouv.apply(&tmp, &mut k4);
        let w = opts.dt / 6.0;
        for i in 0..dim * dim {
            rho.entries[i] +=
                w * (k1.entries[i] + 2.0 * k2.entries[i] + 2.0 * k3.entries[i] + k4.entries[i]);
        }
        if (step + 1) % opts.check_every == 0 || step + 1 == n_steps {
            let pop = rho.max_top_level_population(cfg);
            if pop > opts.saturation_threshold {
                return Err(Error::CutoffSaturation {
                    population: pop,
                    threshold: opts.saturation_threshold,
                });
            }
        }
    }
    Ok(rho)
}

fn axpy(base: &DensityMatrix, a: f64, k: &DensityMatrix, out: &mut DensityMatrix) {
    for i in 0..base.entries.len() {
        out.entries[i] = base.entries[i] + a * k.entries[i];
    }
}

/// ⟨Ô⟩ = tr(ρ·Ô) for an operator product written left-to-right, e.g.
/// `expect(&rho, &cfg, &[(1, true), (1, false)])` is ⟨â₁†â₁⟩.
pub fn expect(rho: &DensityMatrix, cfg: &FockConfig, factors: &[(usize, bool)]) -> Complex64 {
    let op = product_operator(cfg, factors);
    let dim = rho.dim;
    // tr(ρÔ) = Σ_m Σ_c ρ[c][m]·Ô[m][c], iterating Ô's sparse rows.
    let mut acc = Complex64::default();
    for m in 0..dim {
        for &(c, v) in &op.rows[m] {
            acc += rho.get(c as usize, m) * v;
        }
    }
    acc
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::params::SystemParams;

    fn uncoupled_params(gamma: f64, drive: f64) -> SystemParams {
        let mut p = SystemParams::symmetric(gamma, gamma, 0.0, drive);
        p.chi1 = 0.0;
        p.chi2 = 0.0;
        p
    }

    #[test]
    fn qubit_sized_ladder() {
        let cfg = FockConfig::new(&[1]);
        let a = product_operator(&cfg, &[(0, false)]).to_dense();
        assert_eq!(a[(0, 1)], Complex64::new(1.0, 0.0));
        assert_eq!(a[(0, 0)], Complex64::default());
        assert_eq!(a[(1, 0)], Complex64::default());
        assert_eq!(a[(1, 1)], Complex64::default());
    }

    #[test]
    fn number_operator_diagonal_and_matrix_elements() {
        let cfg = FockConfig::new(&[3]);
        let n_op = product_operator(&cfg, &[(0, true), (0, false)]).to_dense();
        for k in 0..=3 {
            assert!((n_op[(k, k)].re - k as f64).abs() < 1e-14);
        }
        let a = product_operator(&cfg, &[(0, false)]).to_dense();
        for n in 0..3 {
            assert!((a[(n, n + 1)].re - ((n + 1) as f64).sqrt()).abs() < 1e-15);
        }
    }

    #[test]
    fn truncated_commutator_identity_except_top() {
        let cfg = FockConfig::new(&[3]);
        let a = product_operator(&cfg, &[(0, false)]).to_dense();
        let ad = product_operator(&cfg, &[(0, true)]).to_dense();
        for i in 0..4 {
            for j in 0..4 {
                let mut comm = Complex64::default();
                for k in 0..4 {
                    comm += a[(i, k)] * ad[(k, j)] - ad[(i, k)] * a[(k, j)];
                }
                let want = if i == j {
                    if i == 3 {
                        -3.0
                    } else {
                        1.0
                    }
                } else {
                    0.0
                };
                assert!((comm.re - want).abs() < 1e-14, "[{i}][{j}] = {comm}");
            }
        }
    }

    #[test]
    fn multimode_indexing_round_trips() {
        let cfg = FockConfig::new(&[3, 2, 2, 1, 1]);
        for idx in 0..cfg.dimension() {
            assert_eq!(cfg.index_of(&cfg.occupation_of(idx)), idx);
        }
        // Mode 0 is the slowest index.
        assert_eq!(cfg.index_of(&[1, 0, 0, 0, 0]), 3 * 3 * 2 * 2);
    }

    #[test]
    fn dimension_cap_enforced() {
        let cfg = FockConfig::new(&[15, 15, 4, 1, 1]);
        assert!(matches!(cfg.validate(Topology::Nondegenerate), Err(Error::DimensionCap { .. })));
    }

    #[test]
    fn dark_steady_state() {
        let cfg = FockConfig::new(&[1, 1, 1, 1, 1]);
        let p = uncoupled_params(1.0, 0.0);
        let liouv = Liouvillian::new(&cfg, &p).unwrap();
        let rho = DensityMatrix::vacuum(&cfg);
        let mut drho = rho.clone();
        liouv.apply(&rho, &mut drho);
        let worst = drho.entries.iter().map(|z| z.norm()).fold(0.0, f64::max);
        assert!(worst < 1e-15, "vacuum not dark: {worst}");
    }

    #[test]
    fn single_mode_decay_rate_two_gamma() {
        // ρ = |1⟩⟨1| on mode 0: d⟨n⟩/dt = −2γ⟨n⟩ under the printed
        // Lindblad prefactor γ.
        let cfg = FockConfig::new(&[2, 1, 1, 1, 1]);
        let gamma = 0.7;
        let p = uncoupled_params(gamma, 0.0);
        let liouv = Liouvillian::new(&cfg, &p).unwrap();
        let rho = DensityMatrix::fock_state(&cfg, &[1, 0, 0, 0, 0]);
        let mut drho = rho.clone();
        liouv.apply(&rho, &mut drho);
        let dn = expect(&drho, &cfg, &[(0, true), (0, false)]);
        assert!((dn.re + 2.0 * gamma).abs() < 1e-12, "d<n>/dt = {}", dn.re);
        assert!(dn.im.abs() < 1e-14);
    }

    #[test]
    fn liouvillian_is_trace_free_on_random_state() {
        let cfg = FockConfig::new(&[1, 1, 1, 0, 0]);
        let dim = cfg.dimension();
        let p = SystemParams::symmetric(2.0, 1.0, 0.4, 0.8);
        let liouv = Liouvillian::new(&cfg, &p).unwrap();
        let mut rho = DensityMatrix::vacuum(&cfg);
        let mut x = 0.37f64;
        for r in 0..dim {
            for c in r..dim {
                x = (x * 997.13).fract();
                let re = x - 0.5;
                x = (x * 997.13).fract();
                let im = x - 0.5;
                if r == c {
                    rho.entries[r * dim + c] = Complex64::new(re.abs() + 0.05, 0.0);
                } else {
                    rho.entries[r * dim + c] = Complex64::new(re, im) * 0.1;
                    rho.entries[c * dim + r] = Complex64::new(re, -im) * 0.1;
                }
            }
        }
        let tr = rho.trace().re;
        for e in &mut rho.entries {
            *e /= tr;
        }
        let mut drho = rho.clone();
        liouv.apply(&rho, &mut drho);
        assert!(drho.trace().norm() < 1e-12, "trace leak {}", drho.trace());
        assert!(drho.hermiticity_defect() < 1e-12);
    }

    #[test]
    fn driven_cavity_coherent_steady_state() {
        // χ = 0: mode 0 relaxes to ⟨â₀⟩ = E₀/γ₀. The cutoff must sit well
        // above the coherent amplitude for the 1e-8 check on ⟨â₀⟩.
        let cfg = FockConfig::new(&[10, 0, 0, 0, 0]);
        let gamma = 1.0;
        let drive = 0.6;
        let p = uncoupled_params(gamma, drive);
        let opts = EvolveOptions::new(5e-3, 20.0).with_saturation_threshold(1e-3);
        let rho = evolve_master(&DensityMatrix::vacuum(&cfg), &p, &cfg, &opts).unwrap();
        let a0 = expect(&rho, &cfg, &[(0, false)]);
        assert!((a0 - Complex64::new(drive / gamma, 0.0)).norm() < 1e-8, "<a0> = {a0}");
        let tr = rho.trace();
        assert!((tr.re - 1.0).abs() < 1e-10 && tr.im.abs() < 1e-12);
        assert!(rho.hermiticity_defect() < 1e-10);
        assert!(rho.positive_within(1e-8));
    }

    #[test]
    fn undriven_vacuum_stays_vacuum() {
        let cfg = FockConfig::new(&[2, 1, 1, 1, 1]);
        let p = SystemParams::symmetric(2.0, 1.0, 0.5, 0.0);
        let opts = EvolveOptions::new(1e-2, 3.0);
        let rho = evolve_master(&DensityMatrix::vacuum(&cfg), &p, &cfg, &opts).unwrap();
        for m in 0..5 {
            let n = expect(&rho, &cfg, &[(m, true), (m, false)]);
            assert!(n.norm() < 1e-12, "mode {m} populated from vacuum without drive");
        }
    }

    #[test]
    fn signal_idler_symmetry_below_threshold() {
        // First-stage pair creation from vacuum populates signal and idler
        // identically when the second stage is off; with it on, the idler
        // feeds modes 3 and 4 and must lag the signal.
        let cfg = FockConfig::new(&[2, 2, 2, 1, 1]);
        let mut p = SystemParams::symmetric(2.0, 1.0, 0.5, 1.2);
        p.chi2 = 0.0;
        let opts = EvolveOptions::new(5e-3, 3.0).with_saturation_threshold(5e-2);
        let rho = evolve_master(&DensityMatrix::vacuum(&cfg), &p, &cfg, &opts).unwrap();
        let n1 = expect(&rho, &cfg, &[(1, true), (1, false)]);
        let n2 = expect(&rho, &cfg, &[(2, true), (2, false)]);
        assert!((n1 - n2).norm() < 1e-10, "n1 = {n1}, n2 = {n2}");
        assert!(n1.re > 1e-4, "pair production should populate the signal");

        let p_cascade = SystemParams::symmetric(2.0, 1.0, 0.5, 1.2);
        let rho = evolve_master(&DensityMatrix::vacuum(&cfg), &p_cascade, &cfg, &opts).unwrap();
        let n1 = expect(&rho, &cfg, &[(1, true), (1, false)]).re;
        let n2 = expect(&rho, &cfg, &[(2, true), (2, false)]).re;
        assert!(n1 > n2, "cascade drain should order the pair: n1 = {n1}, n2 = {n2}");
    }

    #[test]
    fn saturation_flags_untrusted_results() {
        let cfg = FockConfig::new(&[1, 0, 0, 0, 0]);
        let p = uncoupled_params(1.0, 2.0); // strong drive, tiny cutoff
        let opts = EvolveOptions::new(1e-2, 5.0);
        let err = evolve_master(&DensityMatrix::vacuum(&cfg), &p, &cfg, &opts).unwrap_err();
        assert!(matches!(err, Error::CutoffSaturation { .. }));
    }
}
