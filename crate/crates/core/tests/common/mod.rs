//! Oracles shared by the integration tests. Nothing here calls into the
//! library's solvers.
#![allow(dead_code)]

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{ToPrimitive, Zero};

/// Splits a finite f64 into (mantissa, exponent) with value = m * 2^e.
fn dyadic(v: f64) -> (BigInt, i64) {
    if v == 0.0 {
        return (BigInt::zero(), 0);
    }
    let bits = v.to_bits();
    let sign = if bits >> 63 == 1 { -1 } else { 1 };
    let exp = ((bits >> 52) & 0x7ff) as i64;
    let frac = bits & ((1u64 << 52) - 1);
    let (m, e) = if exp == 0 {
        (frac, -1074)
    } else {
        (frac | (1u64 << 52), exp - 1075)
    };
    (BigInt::from(sign) * BigInt::from(m), e)
}

fn pow2(e: i64) -> BigRational {
    let one = BigInt::from(1);
    if e >= 0 {
        BigRational::from_integer(one << e as usize)
    } else {
        BigRational::new(one.clone(), one << (-e) as usize)
    }
}

/// Exact least-squares polynomial coefficients.
///
/// f64 samples are dyadic rationals, so after scaling x and y by powers of
/// two everything is an integer. The normal equations are then assembled and
/// solved by fraction-free (Bareiss) elimination in big integers, and each
/// coefficient is rounded to f64 once at the end. The result is the true
/// minimizer for the given samples.
pub fn exact_polyfit(xs: &[f64], ys: &[f64], degree: usize) -> Vec<f64> {
    let n = degree + 1;
    let xd: Vec<(BigInt, i64)> = xs.iter().map(|&v| dyadic(v)).collect();
    let yd: Vec<(BigInt, i64)> = ys.iter().map(|&v| dyadic(v)).collect();
    let ex = xd.iter().map(|d| d.1).min().unwrap().min(0);
    let ey = yd.iter().map(|d| d.1).min().unwrap().min(0);
    // X = x * 2^-ex, Y = y * 2^-ey are integers
    let xi: Vec<BigInt> = xd.iter().map(|(m, e)| m << (e - ex) as usize).collect();
    let yi: Vec<BigInt> = yd.iter().map(|(m, e)| m << (e - ey) as usize).collect();

    let mut s = vec![BigInt::zero(); 2 * n - 1];
    let mut t = vec![BigInt::zero(); n];
    for (x, y) in xi.iter().zip(&yi) {
        let mut p = BigInt::from(1);
        for k in 0..2 * n - 1 {
            if k < n {
                t[k] += y * &p;
            }
            s[k] += &p;
            p *= x;
        }
    }
    let mut a: Vec<Vec<BigInt>> = (0..n)
        .map(|i| {
            let mut row: Vec<BigInt> = (0..n).map(|j| s[i + j].clone()).collect();
            row.push(t[i].clone());
            row
        })
        .collect();

    // Bareiss: after step k every entry below/right of the pivot is a minor.
    let mut prev = BigInt::from(1);
    for k in 0..n {
        let piv = (k..n).find(|&r| !a[r][k].is_zero()).expect("singular normal equations");
        a.swap(k, piv);
        for i in k + 1..n {
            for j in k + 1..=n {
                let v = (&a[i][j] * &a[k][k] - &a[i][k] * &a[k][j]) / &prev;
                a[i][j] = v;
            }
            a[i][k] = BigInt::zero();
        }
        prev = a[k][k].clone();
    }
    // back substitution in exact rationals on the reduced triangle
    let mut d = vec![BigRational::zero(); n];
    for i in (0..n).rev() {
        let mut acc = BigRational::from_integer(a[i][n].clone());
        for j in i + 1..n {
            acc -= BigRational::from_integer(a[i][j].clone()) * &d[j];
        }
        d[i] = acc / BigRational::from_integer(a[i][i].clone());
    }
    // Y = sum d_k X^k  =>  y = sum d_k 2^(ey - k*ex) ... x^k
    d.iter()
        .enumerate()
        .map(|(k, dk)| (dk * pow2(ey - k as i64 * ex)).to_f64().unwrap())
        .collect()
}

/// Dense Gaussian elimination with partial pivoting.
fn dense_solve(mut a: Vec<Vec<f64>>, mut b: Vec<f64>) -> Vec<f64> {
    let n = b.len();
    for k in 0..n {
        let p = (k..n).max_by(|&i, &j| a[i][k].abs().total_cmp(&a[j][k].abs())).unwrap();
        a.swap(k, p);
        b.swap(k, p);
        for i in k + 1..n {
            let f = a[i][k] / a[k][k];
            let pivot = a[k].clone();
            for (aij, akj) in a[i].iter_mut().zip(&pivot).skip(k) {
                *aij -= f * akj;
            }
            b[i] -= f * b[k];
        }
    }
    let mut x = vec![0.0; n];
    for i in (0..n).rev() {
        let s: f64 = (i + 1..n).map(|j| a[i][j] * x[j]).sum();
        x[i] = (b[i] - s) / a[i][i];
    }
    x
}

/// Natural cubic spline in the first-derivative (slope) formulation, solved
/// densely. Evaluates by cubic Hermite interpolation inside the knots.
pub fn reference_spline(xs: &[f64], ys: &[f64]) -> impl Fn(f64) -> f64 {
    let n = xs.len();
    let h: Vec<f64> = xs.windows(2).map(|w| w[1] - w[0]).collect();
    let d: Vec<f64> = ys.windows(2).map(|w| w[1] - w[0]).collect();
    let mut a = vec![vec![0.0; n]; n];
    let mut b = vec![0.0; n];
    a[0][0] = 2.0;
    a[0][1] = 1.0;
    b[0] = 3.0 * d[0] / h[0];
    for i in 1..n - 1 {
        a[i][i - 1] = 1.0 / h[i - 1];
        a[i][i] = 2.0 * (1.0 / h[i - 1] + 1.0 / h[i]);
        a[i][i + 1] = 1.0 / h[i];
        b[i] = 3.0 * (d[i - 1] / (h[i - 1] * h[i - 1]) + d[i] / (h[i] * h[i]));
    }
    a[n - 1][n - 2] = 1.0;
    a[n - 1][n - 1] = 2.0;
    b[n - 1] = 3.0 * d[n - 2] / h[n - 2];
    let k = dense_solve(a, b);
    let (xs, ys) = (xs.to_vec(), ys.to_vec());
    move |x: f64| {
        let i = match xs.iter().rposition(|&xi| xi <= x) {
            Some(i) if i < xs.len() - 1 => i,
            Some(_) => xs.len() - 2,
            None => 0,
        };
        let hi = xs[i + 1] - xs[i];
        let t = (x - xs[i]) / hi;
        let (t2, t3) = (t * t, t * t * t);
        (2.0 * t3 - 3.0 * t2 + 1.0) * ys[i]
            + (t3 - 2.0 * t2 + t) * hi * k[i]
            + (-2.0 * t3 + 3.0 * t2) * ys[i + 1]
            + (t3 - t2) * hi * k[i + 1]
    }
}

/// Rest-pose rib points of a planar rigid-body chain: joint `j` is the spine
/// point of rib `j`, and every rib behind it turns with it.
pub struct Chain {
    pub pivots: Vec<[f64; 2]>,
    pub top: Vec<[f64; 2]>,
    pub bottom: Vec<[f64; 2]>,
}

impl Chain {
    pub fn from_ribs(ribs: &[dolphin_tail::skeleton::Rib]) -> Self {
        Self {
            pivots: ribs.iter().map(|r| [r.x, r.y_spine]).collect(),
            top: ribs.iter().map(|r| [r.x, r.y_top]).collect(),
            bottom: ribs.iter().map(|r| [r.x, r.y_bottom]).collect(),
        }
    }

    /// World position of rest point `p` carried by rib `rib`.
    pub fn place(&self, angles: &[f64], rib: usize, p: [f64; 2]) -> [f64; 2] {
        let mut q = p;
        for j in (0..rib).rev() {
            let c = self.pivots[j];
            let (s, co) = angles[j].sin_cos();
            let (dx, dy) = (q[0] - c[0], q[1] - c[1]);
            q = [c[0] + co * dx - s * dy, c[1] + s * dx + co * dy];
        }
        q
    }

    /// Polyline length through the guide points of one cable.
    pub fn cable_length(&self, angles: &[f64], top: bool) -> f64 {
        let guides = if top { &self.top } else { &self.bottom };
        let pts: Vec<[f64; 2]> = guides.iter().enumerate().map(|(i, &g)| self.place(angles, i, g)).collect();
        pts.windows(2).map(|w| (w[1][0] - w[0][0]).hypot(w[1][1] - w[0][1])).sum()
    }

    pub fn rest_length(&self, top: bool) -> f64 {
        self.cable_length(&vec![0.0; self.pivots.len() - 1], top)
    }
}

fn energy(k: &[f64], t: &[f64]) -> f64 {
    k.iter().zip(t).map(|(k, t)| 0.5 * k * t * t).sum()
}

/// Minimum-energy angles of a 3-joint chain whose `top` (or bottom) cable
/// must have length `target`. θ1, θ2 are scanned on successively finer grids
/// (0.02, 0.005, then 0.001 rad around the incumbent); θ3 is solved from the
/// constraint.
pub fn brute_force_bend(chain: &Chain, k: &[f64], top: bool, target: f64) -> Vec<f64> {
    assert_eq!(k.len(), 3);
    let roots = |t1: f64, t2: f64| -> Vec<f64> {
        let h = |t3: f64| chain.cable_length(&[t1, t2, t3], top) - target;
        let mut out = Vec::new();
        let step = 0.05;
        let mut a = -1.5;
        let mut ha = h(a);
        while a < 1.5 {
            let b = a + step;
            let hb = h(b);
            if ha == 0.0 {
                out.push(a);
            } else if ha * hb < 0.0 {
                let (mut lo, mut hi, mut hlo) = (a, b, ha);
                for _ in 0..60 {
                    let mid = 0.5 * (lo + hi);
                    let hm = h(mid);
                    if hm * hlo <= 0.0 {
                        hi = mid;
                    } else {
                        lo = mid;
                        hlo = hm;
                    }
                }
                out.push(0.5 * (lo + hi));
            }
            a = b;
            ha = hb;
        }
        out
    };
    let search = |c1: f64, c2: f64, half: f64, step: f64| -> Vec<f64> {
        let n = (half / step).round() as i64;
        let mut best: Option<(f64, Vec<f64>)> = None;
        for i in -n..=n {
            for j in -n..=n {
                let (t1, t2) = (c1 + i as f64 * step, c2 + j as f64 * step);
                for t3 in roots(t1, t2) {
                    let t = vec![t1, t2, t3];
                    let e = energy(k, &t);
                    if best.as_ref().is_none_or(|(be, _)| e < *be) {
                        best = Some((e, t));
                    }
                }
            }
        }
        best.expect("constraint has a solution on the grid").1
    };
    let coarse = search(0.0, 0.0, 1.5, 0.02);
    let medium = search(coarse[0], coarse[1], 0.04, 0.005);
    search(medium[0], medium[1], 0.01, 0.001)
}

/// Exact binary fraction m * 2^e. Sums and products of f64 values stay in
/// this form, so no gcd work is needed.
#[derive(Clone)]
struct Dyadic {
    m: BigInt,
    e: i64,
}

impl Dyadic {
    fn of(v: f64) -> Self {
        let (m, e) = dyadic(v);
        Self { m, e }
    }

    fn add(&self, o: &Dyadic) -> Dyadic {
        let e = self.e.min(o.e);
        Dyadic {
            m: (&self.m << (self.e - e) as usize) + (&o.m << (o.e - e) as usize),
            e,
        }
    }

    fn mul(&self, o: &Dyadic) -> Dyadic {
        Dyadic {
            m: &self.m * &o.m,
            e: self.e + o.e,
        }
    }
}

/// Sum of squared residuals of a power-basis polynomial, computed exactly.
pub fn exact_sse(coeffs: &[f64], xs: &[f64], ys: &[f64]) -> BigRational {
    let c: Vec<Dyadic> = coeffs.iter().map(|&v| Dyadic::of(v)).collect();
    let mut total = Dyadic::of(0.0);
    for (&x, &y) in xs.iter().zip(ys) {
        let x = Dyadic::of(x);
        let mut v = Dyadic::of(0.0);
        for ck in c.iter().rev() {
            v = v.mul(&x).add(ck);
        }
        let r = v.add(&Dyadic::of(-y));
        total = total.add(&r.mul(&r));
    }
    BigRational::from_integer(total.m) * pow2(total.e)
}
