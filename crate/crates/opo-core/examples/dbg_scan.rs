use num_complex::Complex64;
use opo_core::experiments::drift_rel_norm;
use opo_core::integrate::{simulate, step_rk4, InitialState, IntegratorConfig, Scheme};
use opo_core::model::drift_jacobian_doubled;
use opo_core::params::SystemParams;
use opo_core::state::Representation;

fn givens(a: Complex64, b: Complex64) -> (f64, Complex64) {
    let an = a.norm();
    let bn = b.norm();
    if bn == 0.0 { return (1.0, Complex64::new(0.0, 0.0)); }
    if an == 0.0 { return (0.0, b.conj() / bn); }
    let r = an.hypot(bn);
    (an / r, (a / an) * b.conj() / r)
}

fn quad(t: Complex64, d: Complex64) -> (Complex64, Complex64) {
    let disc = (t * t - 4.0 * d).sqrt();
    let q1 = t + disc;
    let q2 = t - disc;
    let big = if q1.norm() >= q2.norm() { q1 } else { q2 };
    if big.norm() == 0.0 { return (Complex64::default(), Complex64::default()); }
    let l1 = big / 2.0;
    (l1, d / l1)
}

fn main() {
    let p = SystemParams::symmetric(10.0, 1.0, 0.1, (0.35f64).sqrt() * 100.0);
    let dt = 0.005;
    let cfg = IntegratorConfig {
        scheme: Scheme::Rk4, representation: Representation::Classical,
        dt, t_end: dt, record_stride: 1, seed: 1,
        initial: InitialState::VacuumSeed { amplitude: None, randomize_phases: true },
    };
    let mut state = simulate(&p, &cfg).unwrap().state_at(0);
    for step in 0..800_000usize {
        state = step_rk4(&state, &p, dt).unwrap();
        if (step + 1) % 64 == 0 && drift_rel_norm(&state, &p).unwrap() < 1e-9 { break; }
    }
    let j = drift_jacobian_doubled(&state, &p).unwrap();
    let n = j.dim();
    // Local Hessenberg via crate? Not public; redo here quickly: use the
    // fact that QR on the full matrix works the same for診断: implement
    // Hessenberg with Householder.
    let mut h: Vec<Vec<Complex64>> = (0..n).map(|r| (0..n).map(|c| j[(r, c)]).collect()).collect();
    for k in 0..n - 2 {
        let m = n - k - 1;
        let mut v: Vec<Complex64> = (0..m).map(|i| h[k + 1 + i][k]).collect();
        let xnorm = v.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
        if xnorm == 0.0 { continue; }
        let x0 = v[0];
        let phase = if x0.norm() == 0.0 { Complex64::new(1.0, 0.0) } else { x0 / x0.norm() };
        let alpha = -phase * xnorm;
        v[0] -= alpha;
        let vn2: f64 = v.iter().map(|z| z.norm_sqr()).sum();
        if vn2 == 0.0 { continue; }
        let tau = 2.0 / vn2;
        for jj in 0..n {
            let mut dot = Complex64::default();
            for i in 0..m { dot += v[i].conj() * h[k + 1 + i][jj]; }
            dot *= tau;
            for i in 0..m { h[k + 1 + i][jj] -= v[i] * dot; }
        }
        for ii in 0..n {
            let mut dot = Complex64::default();
            for jj in 0..m { dot += h[ii][k + 1 + jj] * v[jj]; }
            dot *= tau;
            for jj in 0..m { h[ii][k + 1 + jj] -= dot * v[jj].conj(); }
        }
        h[k + 1][k] = alpha;
        for i in k + 2..n { h[i][k] = Complex64::default(); }
    }
    // QR loop with tracing.
    let mut hi = n - 1;
    let mut iters = 0;
    for sweep in 0..200 {
        for i in 1..=hi {
            let sub = h[i][i - 1].norm();
            let scale = h[i - 1][i - 1].norm() + h[i][i].norm();
            if sub <= f64::EPSILON * scale + f64::MIN_POSITIVE {
                h[i][i - 1] = Complex64::default();
            }
        }
        let mut lo = hi;
        while lo > 0 && h[lo][lo - 1].norm() != 0.0 { lo -= 1; }
        if lo == hi {
            println!("sweep {sweep}: deflate 1x1 {:.6e}{:+.6e}i", h[hi][hi].re, h[hi][hi].im);
            if hi == 0 { break; }
            hi -= 1; iters = 0; continue;
        }
        if lo + 1 == hi {
            println!("sweep {sweep}: deflate 2x2");
            if lo == 0 { break; }
            hi = lo - 1; iters = 0; continue;
        }
        iters += 1;
        let a = h[hi - 1][hi - 1]; let b = h[hi - 1][hi];
        let c = h[hi][hi - 1]; let d = h[hi][hi];
        let (l1, l2) = quad(a + d, a * d - b * c);
        let shift = if (l1 - d).norm() <= (l2 - d).norm() { l1 } else { l2 };
        if sweep < 40 {
            let subs: Vec<String> = (lo + 1..=hi).map(|i| format!("{:.1e}", h[i][i - 1].norm())).collect();
            println!("sweep {sweep}: block [{lo},{hi}] iters {iters} shift {:.4}{:+.4}i subs [{}]",
                shift.re, shift.im, subs.join(" "));
        }
        for i in lo..=hi { h[i][i] -= shift; }
        let mut rots = Vec::new();
        for i in lo..hi {
            let (cg, sg) = givens(h[i][i], h[i + 1][i]);
            rots.push((cg, sg));
            for jj in i..=hi {
                let t1 = h[i][jj]; let t2 = h[i + 1][jj];
                h[i][jj] = cg * t1 + sg * t2;
                h[i + 1][jj] = -sg.conj() * t1 + cg * t2;
            }
        }
        for (idx, &(cg, sg)) in rots.iter().enumerate() {
            let i = lo + idx;
            let rmax = (i + 1).min(hi);
            for r in lo..=rmax {
                let t1 = h[r][i]; let t2 = h[r][i + 1];
                h[r][i] = cg * t1 + sg.conj() * t2;
                h[r][i + 1] = -sg * t1 + cg * t2;
            }
        }
        for i in lo..=hi { h[i][i] += shift; }
    }
}
