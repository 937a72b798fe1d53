//! Dense polynomial least squares.
//!
//! The Vandermonde matrix of a degree-17 fit is far too ill-conditioned for
//! the normal equations, so the solve goes through a Householder QR
//! factorization of the design matrix itself. A few rounds of iterative
//! refinement follow, with residuals accumulated in compensated arithmetic,
//! which recovers most of the digits the first back-substitution loses.

use crate::{Error, Result};

/// Relative threshold on |R_jj| / max|R_kk| below which the design matrix is
/// treated as numerically rank deficient.
const RANK_TOL: f64 = 1e-15;
const REFINE_STEPS: usize = 8;

/// Householder QR of a column-major `rows x cols` matrix, stored in place.
struct HouseholderQr {
    rows: usize,
    cols: usize,
    /// R above the diagonal, Householder vectors below it (unit leading entry implied).
    a: Vec<f64>,
    r_diag: Vec<f64>,
    tau: Vec<f64>,
}

impl HouseholderQr {
    fn new(mut a: Vec<f64>, rows: usize, cols: usize) -> Self {
        debug_assert_eq!(a.len(), rows * cols);
        let mut r_diag = vec![0.0; cols];
        let mut tau = vec![0.0; cols];
        for k in 0..cols {
            let col = &mut a[k * rows..(k + 1) * rows];
            let norm = col[k..].iter().fold(0.0f64, |acc, v| acc.hypot(*v));
            if norm == 0.0 {
                r_diag[k] = 0.0;
                tau[k] = 0.0;
                continue;
            }
            let alpha = if col[k] > 0.0 { -norm } else { norm };
            // v = x - alpha e1, scaled so v[0] = 1
            let v0 = col[k] - alpha;
            for v in col[k + 1..].iter_mut() {
                *v /= v0;
            }
            col[k] = 1.0;
            let vtv: f64 = 1.0 + col[k + 1..].iter().map(|v| v * v).sum::<f64>();
            let t = 2.0 / vtv;
            tau[k] = t;
            r_diag[k] = alpha;
            let (head, tail) = a.split_at_mut((k + 1) * rows);
            let v = &head[k * rows + k..(k + 1) * rows];
            for j in 0..cols - k - 1 {
                let cj = &mut tail[j * rows + k..(j + 1) * rows];
                let dot: f64 = v.iter().zip(cj.iter()).map(|(a, b)| a * b).sum();
                let s = t * dot;
                for (c, vi) in cj.iter_mut().zip(v) {
                    *c -= s * vi;
                }
            }
        }
        Self {
            rows,
            cols,
            a,
            r_diag,
            tau,
        }
    }

    fn check_rank(&self) -> Result<()> {
        let max = self.r_diag.iter().fold(0.0f64, |m, r| m.max(r.abs()));
        for (j, r) in self.r_diag.iter().enumerate() {
            if max == 0.0 || r.abs() <= RANK_TOL * max {
                return Err(Error::RankDeficient(format!(
                    "column {j} has |R_jj| = {:.3e} (max {:.3e})",
                    r.abs(),
                    max
                )));
            }
        }
        Ok(())
    }

    fn apply_qt(&self, b: &mut [f64]) {
        let m = self.rows;
        for k in 0..self.cols {
            self.reflect(k, &mut b[k..m]);
        }
    }

    fn apply_q(&self, b: &mut [f64]) {
        let m = self.rows;
        for k in (0..self.cols).rev() {
            self.reflect(k, &mut b[k..m]);
        }
    }

    fn reflect(&self, k: usize, b: &mut [f64]) {
        let v = &self.a[k * self.rows + k..(k + 1) * self.rows];
        let dot: f64 = v.iter().zip(b.iter()).map(|(a, b)| a * b).sum();
        let s = self.tau[k] * dot;
        for (q, vi) in b.iter_mut().zip(v) {
            *q -= s * vi;
        }
    }

    fn r_at(&self, i: usize, j: usize) -> f64 {
        if i == j {
            self.r_diag[i]
        } else {
            self.a[j * self.rows + i]
        }
    }

    /// Solves R x = b.
    fn solve_r(&self, b: &[f64]) -> Vec<f64> {
        let n = self.cols;
        let mut x = vec![0.0; n];
        for i in (0..n).rev() {
            let mut acc = b[i];
            for (j, xj) in x.iter().enumerate().skip(i + 1) {
                acc -= self.r_at(i, j) * xj;
            }
            x[i] = acc / self.r_diag[i];
        }
        x
    }

    /// Solves R^T x = b.
    fn solve_rt(&self, b: &[f64]) -> Vec<f64> {
        let n = self.cols;
        let mut x = vec![0.0; n];
        for i in 0..n {
            let mut acc = b[i];
            for (j, xj) in x.iter().enumerate().take(i) {
                acc -= self.r_at(j, i) * xj;
            }
            x[i] = acc / self.r_diag[i];
        }
        x
    }

    /// Minimizes ||A x - b|| for the factored A.
    fn solve(&self, b: &[f64]) -> Vec<f64> {
        let mut qtb = b.to_vec();
        self.apply_qt(&mut qtb);
        self.solve_r(&qtb[..self.cols])
    }

    /// Solves the augmented system [I A; A^T 0] [dr; dx] = [f; g].
    fn solve_augmented(&self, f: &[f64], g: &[f64]) -> (Vec<f64>, Vec<f64>) {
        let n = self.cols;
        let h = self.solve_rt(g);
        let mut d = f.to_vec();
        self.apply_qt(&mut d);
        let rhs: Vec<f64> = d[..n].iter().zip(&h).map(|(a, b)| a - b).collect();
        let dx = self.solve_r(&rhs);
        d[..n].copy_from_slice(&h);
        self.apply_q(&mut d);
        (d, dx)
    }
}

/// Error-free product: returns (p, e) with p + e == a * b exactly.
#[inline]
fn two_prod(a: f64, b: f64) -> (f64, f64) {
    let p = a * b;
    (p, a.mul_add(b, -p))
}

/// Error-free sum: returns (s, e) with s + e == a + b exactly.
#[inline]
fn two_sum(a: f64, b: f64) -> (f64, f64) {
    let s = a + b;
    let bb = s - a;
    (s, (a - (s - bb)) + (b - bb))
}

/// x^0 ..= x^degree, each as an unevaluated double-double (hi, lo) pair.
fn powers_dd(x: f64, degree: usize) -> Vec<(f64, f64)> {
    let mut out = Vec::with_capacity(degree + 1);
    let (mut hi, mut lo) = (1.0, 0.0);
    out.push((hi, lo));
    for _ in 0..degree {
        let (p, e) = two_prod(hi, x);
        let (s, e2) = two_sum(p, e + lo * x);
        hi = s;
        lo = e2;
        out.push((hi, lo));
    }
    out
}

/// `y - r - sum_j c_j x^j` in compensated arithmetic.
fn row_residual(powers: &[(f64, f64)], coeffs: &[f64], y: f64, r: f64) -> f64 {
    let (mut s, mut err) = two_sum(y, -r);
    for (&(hi, lo), &c) in powers.iter().zip(coeffs) {
        let (p, pe) = two_prod(-c, hi);
        let (t, te) = two_sum(s, p);
        s = t;
        err += pe + te - c * lo;
    }
    s + err
}

/// `-sum_i x_i^j r_i` for every column j, in compensated arithmetic.
fn column_residuals(powers: &[Vec<(f64, f64)>], r: &[f64], cols: usize) -> Vec<f64> {
    (0..cols)
        .map(|j| {
            let (mut s, mut err) = (0.0, 0.0);
            for (p, &ri) in powers.iter().zip(r) {
                let (hi, lo) = p[j];
                let (q, qe) = two_prod(-ri, hi);
                let (t, te) = two_sum(s, q);
                s = t;
                err += qe + te - ri * lo;
            }
            s + err
        })
        .collect()
}

/// Least-squares polynomial coefficients, lowest order first.
///
/// Requires at least `degree + 1` distinct abscissae; anything less, or a
/// design matrix whose QR factor has a vanishing diagonal, is reported as
/// [`Error::RankDeficient`].
pub fn polyfit(xs: &[f64], ys: &[f64], degree: usize) -> Result<Vec<f64>> {
    if xs.len() != ys.len() {
        return Err(Error::validation(format!(
            "x and y lengths differ ({} vs {})",
            xs.len(),
            ys.len()
        )));
    }
    if xs.iter().chain(ys).any(|v| !v.is_finite()) {
        return Err(Error::validation("non-finite sample"));
    }
    let cols = degree + 1;
    let mut sorted = xs.to_vec();
    sorted.sort_by(f64::total_cmp);
    sorted.dedup();
    if sorted.len() < cols {
        return Err(Error::RankDeficient(format!(
            "{} distinct abscissae for {} coefficients",
            sorted.len(),
            cols
        )));
    }

    let rows = xs.len();
    let powers: Vec<Vec<(f64, f64)>> = xs.iter().map(|&x| powers_dd(x, degree)).collect();
    let mut a = vec![0.0; rows * cols];
    for (i, p) in powers.iter().enumerate() {
        for (j, &(hi, _)) in p.iter().enumerate() {
            a[j * rows + i] = hi;
        }
    }
    let qr = HouseholderQr::new(a, rows, cols);
    qr.check_rank()?;

    // Refine the augmented system so the fixed point is the least-squares
    // solution for the exact (double-double) design matrix.
    let mut coeffs = qr.solve(ys);
    let mut resid: Vec<f64> = powers
        .iter()
        .zip(ys)
        .map(|(p, &y)| row_residual(p, &coeffs, y, 0.0))
        .collect();
    for _ in 0..REFINE_STEPS {
        let f: Vec<f64> = powers
            .iter()
            .zip(ys.iter().zip(&resid))
            .map(|(p, (&y, &r))| row_residual(p, &coeffs, y, r))
            .collect();
        let g = column_residuals(&powers, &resid, cols);
        let (dr, dx) = qr.solve_augmented(&f, &g);
        let mut changed = false;
        for (c, d) in coeffs.iter_mut().zip(&dx) {
            let next = *c + d;
            changed |= next != *c;
            *c = next;
        }
        for (r, d) in resid.iter_mut().zip(&dr) {
            *r += d;
        }
        if !changed {
            break;
        }
    }
    Ok(coeffs)
}

/// Horner evaluation of `sum_i c_i x^i`.
#[inline]
pub fn horner(coeffs: &[f64], x: f64) -> f64 {
    coeffs.iter().rev().fold(0.0, |acc, c| acc * x + c)
}
