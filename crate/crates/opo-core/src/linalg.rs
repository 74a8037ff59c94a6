//! Dense complex matrices and eigenvalues for the small systems that show up
//! in the linearized analyses (dimension ≤ 10).
//!
//! The eigenvalue path is balance → Householder Hessenberg → explicitly
//! shifted QR with Wilkinson shifts. A complex single-shift sweep handles
//! real and complex inputs alike, which keeps one code path for drift
//! matrices, companion matrices and the doubled-phase-space Jacobian.

use num_complex::Complex64;

use crate::error::{Error, Result};

/// Row-major dense complex matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct CMatrix {
    n: usize,
    data: Vec<Complex64>,
}

impl CMatrix {
    pub fn zeros(n: usize) -> Self {
        Self { n, data: vec![Complex64::new(0.0, 0.0); n * n] }
    }

    pub fn identity(n: usize) -> Self {
        let mut m = Self::zeros(n);
        for i in 0..n {
            m[(i, i)] = Complex64::new(1.0, 0.0);
        }
        m
    }

    /// Build from rows of real entries.
    pub fn from_real_rows(rows: &[&[f64]]) -> Self {
        let n = rows.len();
        let mut m = Self::zeros(n);
        for (i, row) in rows.iter().enumerate() {
            assert_eq!(row.len(), n, "row {i} has wrong length");
            for (j, &x) in row.iter().enumerate() {
                m[(i, j)] = Complex64::new(x, 0.0);
            }
        }
        m
    }

    pub fn from_rows(rows: &[Vec<Complex64>]) -> Self {
        let n = rows.len();
        let mut m = Self::zeros(n);
        for (i, row) in rows.iter().enumerate() {
            assert_eq!(row.len(), n, "row {i} has wrong length");
            m.data[i * n..(i + 1) * n].copy_from_slice(row);
        }
        m
    }

    pub fn dim(&self) -> usize {
        self.n
    }

    pub fn trace(&self) -> Complex64 {
        (0..self.n).map(|i| self[(i, i)]).sum()
    }

    pub fn is_finite(&self) -> bool {
        self.data.iter().all(|z| z.re.is_finite() && z.im.is_finite())
    }

    /// Companion matrix of the monic polynomial
    /// λ^d + c[d-1] λ^(d-1) + … + c[1] λ + c[0].
    pub fn companion(low_to_high: &[f64]) -> Self {
        let d = low_to_high.len();
        assert!(d >= 1);
        let mut m = Self::zeros(d);
        for i in 1..d {
            m[(i, i - 1)] = Complex64::new(1.0, 0.0);
        }
        for (i, &c) in low_to_high.iter().enumerate() {
            m[(i, d - 1)] = Complex64::new(-c, 0.0);
        }
        m
    }
}

impl std::ops::Index<(usize, usize)> for CMatrix {
    type Output = Complex64;
    fn index(&self, (i, j): (usize, usize)) -> &Complex64 {
        &self.data[i * self.n + j]
    }
}

impl std::ops::IndexMut<(usize, usize)> for CMatrix {
    fn index_mut(&mut self, (i, j): (usize, usize)) -> &mut Complex64 {
        &mut self.data[i * self.n + j]
    }
}

/// Roots of λ² − t·λ + d = 0, cancellation-safe.
fn quadratic_roots(t: Complex64, d: Complex64) -> (Complex64, Complex64) {
    let disc = (t * t - 4.0 * d).sqrt();
    // Pick the larger-magnitude numerator to avoid cancellation.
    let q1 = t + disc;
    let q2 = t - disc;
    let big = if q1.norm() >= q2.norm() { q1 } else { q2 };
    if big.norm() == 0.0 {
        return (Complex64::new(0.0, 0.0), Complex64::new(0.0, 0.0));
    }
    let l1 = big / 2.0;
    (l1, d / l1)
}

/// Givens pair (c real, s complex) with
/// [c, s; -s̄, c]·[a; b] = [r; 0] and c² + |s|² = 1.
fn givens(a: Complex64, b: Complex64) -> (f64, Complex64) {
    let an = a.norm();
    let bn = b.norm();
    if bn == 0.0 {
        return (1.0, Complex64::new(0.0, 0.0));
    }
    if an == 0.0 {
        return (0.0, b.conj() / bn);
    }
    let r = an.hypot(bn);
    let c = an / r;
    let s = (a / an) * b.conj() / r;
    (c, s)
}

/// Parlett–Reinsch balancing by radix-2 diagonal similarity.
fn balance(h: &mut CMatrix) {
    let n = h.dim();
    loop {
        let mut converged = true;
        for i in 0..n {
            let mut c: f64 = (0..n).filter(|&j| j != i).map(|j| h[(j, i)].norm()).sum();
            let mut r: f64 = (0..n).filter(|&j| j != i).map(|j| h[(i, j)].norm()).sum();
            if c == 0.0 || r == 0.0 {
                continue;
            }
            let s = c + r;
            let mut f = 1.0;
            while c < r / 2.0 {
                c *= 2.0;
                r /= 2.0;
                f *= 2.0;
            }
            while c >= r * 2.0 {
                c /= 2.0;
                r *= 2.0;
                f /= 2.0;
            }
            if c + r < 0.95 * s && f != 1.0 {
                converged = false;
                for j in 0..n {
                    let v = h[(i, j)];
                    h[(i, j)] = v / f;
                }
                for j in 0..n {
                    let v = h[(j, i)];
                    h[(j, i)] = v * f;
                }
            }
        }
        if converged {
            break;
        }
    }
}

/// In-place reduction to upper Hessenberg form by complex Householder
/// reflections.
fn hessenberg(h: &mut CMatrix) {
    let n = h.dim();
    if n < 3 {
        return;
    }
    for k in 0..n - 2 {
        let m = n - k - 1; // length of the sub-column below the diagonal
        let mut v: Vec<Complex64> = (0..m).map(|i| h[(k + 1 + i, k)]).collect();
        let xnorm = v.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
        if xnorm == 0.0 {
            continue;
        }
        let x0 = v[0];
        let phase = if x0.norm() == 0.0 { Complex64::new(1.0, 0.0) } else { x0 / x0.norm() };
        let alpha = -phase * xnorm;
        v[0] -= alpha;
        let vnorm2: f64 = v.iter().map(|z| z.norm_sqr()).sum();
        if vnorm2 == 0.0 {
            continue;
        }
        let tau = 2.0 / vnorm2;
        // Left: rows k+1.., all columns.
        for j in 0..n {
            let mut dot = Complex64::new(0.0, 0.0);
            for i in 0..m {
                dot += v[i].conj() * h[(k + 1 + i, j)];
            }
            dot *= tau;
            for i in 0..m {
                let upd = v[i] * dot;
                let cur = h[(k + 1 + i, j)];
                h[(k + 1 + i, j)] = cur - upd;
            }
        }
        // Right: all rows, columns k+1..
        for i in 0..n {
            let mut dot = Complex64::new(0.0, 0.0);
            for j in 0..m {
                dot += h[(i, k + 1 + j)] * v[j];
            }
            dot *= tau;
            for j in 0..m {
                let upd = dot * v[j].conj();
                let cur = h[(i, k + 1 + j)];
                h[(i, k + 1 + j)] = cur - upd;
            }
        }
        // Exact zeros below the subdiagonal of this column.
        h[(k + 1, k)] = alpha;
        for i in k + 2..n {
            h[(i, k)] = Complex64::new(0.0, 0.0);
        }
    }
}

/// One explicitly shifted QR sweep on the active block `[lo, hi]`.
fn qr_sweep(h: &mut CMatrix, lo: usize, hi: usize, shift: Complex64) {
    for i in lo..=hi {
        let v = h[(i, i)];
        h[(i, i)] = v - shift;
    }
    let mut rots: Vec<(f64, Complex64)> = Vec::with_capacity(hi - lo);
    for i in lo..hi {
        let (c, s) = givens(h[(i, i)], h[(i + 1, i)]);
        rots.push((c, s));
        for j in i..=hi {
            let t1 = h[(i, j)];
            let t2 = h[(i + 1, j)];
            h[(i, j)] = c * t1 + s * t2;
            h[(i + 1, j)] = -s.conj() * t1 + c * t2;
        }
    }
    for (idx, &(c, s)) in rots.iter().enumerate() {
        let i = lo + idx;
        let rmax = (i + 1).min(hi);
        for r in lo..=rmax {
            let t1 = h[(r, i)];
            let t2 = h[(r, i + 1)];
            h[(r, i)] = c * t1 + s.conj() * t2;
            h[(r, i + 1)] = -s * t1 + c * t2;
        }
    }
    for i in lo..=hi {
        let v = h[(i, i)];
        h[(i, i)] = v + shift;
    }
}

/// Eigenvalues of a general (real or complex) dense matrix.
///
/// Sum of the returned values equals the trace to ~1e-8 relative for
/// well-scaled inputs; closed-form blocks reproduce to ~1e-10. Fails with
/// [`Error::NoConvergence`] on non-finite input or if the QR iteration
/// exceeds its cap, which signals a pathological matrix.
pub fn eigenvalues(m: &CMatrix) -> Result<Vec<Complex64>> {
    if !m.is_finite() {
        return Err(Error::NoConvergence);
    }
    let n = m.dim();
    if n == 0 {
        return Ok(Vec::new());
    }
    if n == 1 {
        return Ok(vec![m[(0, 0)]]);
    }
    let mut h = m.clone();
    balance(&mut h);
    hessenberg(&mut h);

    let mut eigs: Vec<Complex64> = Vec::with_capacity(n);
    let mut hi = n - 1;
    let mut iters_here = 0usize;
    let max_iters = 100;
    loop {
        // Deflate numerically negligible subdiagonals. The 4ε margin also
        // severs near-machine links that would otherwise block shift
        // transmission through a cluster (the perturbation it introduces
        // is far below the accuracy targets of the callers).
        for i in 1..=hi {
            let sub = h[(i, i - 1)].norm();
            let scale = h[(i - 1, i - 1)].norm() + h[(i, i)].norm();
            if sub <= 4.0 * f64::EPSILON * scale + f64::MIN_POSITIVE {
                h[(i, i - 1)] = Complex64::new(0.0, 0.0);
            }
        }
        // Lowest row of the trailing irreducible block.
        let mut lo = hi;
        while lo > 0 && h[(lo, lo - 1)].norm() != 0.0 {
            lo -= 1;
        }
        if lo == hi {
            eigs.push(h[(hi, hi)]);
            if hi == 0 {
                break;
            }
            hi -= 1;
            iters_here = 0;
            continue;
        }
        if lo + 1 == hi {
            let t = h[(lo, lo)] + h[(hi, hi)];
            let d = h[(lo, lo)] * h[(hi, hi)] - h[(lo, hi)] * h[(hi, lo)];
            let (l1, l2) = quadratic_roots(t, d);
            eigs.push(l1);
            eigs.push(l2);
            if lo == 0 {
                break;
            }
            hi = lo - 1;
            iters_here = 0;
            continue;
        }
        iters_here += 1;
        if iters_here > max_iters {
            return Err(Error::NoConvergence);
        }
        let shift = if iters_here % 8 == 0 {
            // Exceptional shift, complex to break conjugate-pair cycling.
            h[(hi, hi)] + h[(hi, hi - 1)].norm() * Complex64::new(0.75, 0.4)
        } else {
            let a = h[(hi - 1, hi - 1)];
            let b = h[(hi - 1, hi)];
            let c = h[(hi, hi - 1)];
            let d = h[(hi, hi)];
            let (l1, l2) = quadratic_roots(a + d, a * d - b * c);
            if (l1 - d).norm() <= (l2 - d).norm() {
                l1
            } else {
                l2
            }
        };
        qr_sweep(&mut h, lo, hi, shift);
    }
    Ok(eigs)
}

/// Largest eigenvalue real part; `None` for an empty spectrum.
pub fn max_real_part(eigs: &[Complex64]) -> Option<f64> {
    eigs.iter().map(|l| l.re).fold(None, |acc, x| Some(acc.map_or(x, |a: f64| a.max(x))))
}

/// Cholesky-based test that a Hermitian matrix is positive semidefinite up
/// to `-tol` on the spectrum (factors A + tol·I).
pub fn hermitian_psd_within(a: &CMatrix, tol: f64) -> bool {
    let n = a.dim();
    let mut l = vec![Complex64::new(0.0, 0.0); n * n];
    for j in 0..n {
        let mut d = a[(j, j)].re + tol;
        for k in 0..j {
            d -= l[j * n + k].norm_sqr();
        }
        if d <= 0.0 {
            return false;
        }
        let djj = d.sqrt();
        l[j * n + j] = Complex64::new(djj, 0.0);
        for i in j + 1..n {
            let mut s = a[(i, j)];
            for k in 0..j {
                s -= l[i * n + k] * l[j * n + k].conj();
            }
            l[i * n + j] = s / djj;
        }
    }
    true
}
