//! Best uniform polynomial approximation of `exp(-tau x)` by Remez exchange.

use crate::error::{invalid, Error, Result};
use crate::hp::Hp;

/// Relative spread of the reference-point error magnitudes at which the
/// exchange stops.
pub const REMEZ_TOL: f64 = 1e-9;
pub const REMEZ_MAX_ITER: usize = 50;
pub const DEGREE_CAP: usize = 128;
pub const DEFAULT_THRESHOLD: f64 = 1e-5;

const ROOT_ITERS: usize = 52;
const GOLDEN_ITERS: usize = 48;
const SEGMENT_SAMPLES: usize = 12;

#[derive(Clone, Debug)]
pub struct MinimaxPoly {
    degree: usize,
    tau: f64,
    domain: (f64, f64),
    coeffs: Vec<f64>,
    achieved_error: f64,
    iterations: usize,
    reference: Vec<f64>,
    hp_coeffs: Vec<Hp>,
}

struct Kernel {
    neg_tau: Hp,
    lo: Hp,
    half_width: Hp,
}

impl Kernel {
    fn new(tau: f64, (lo, hi): (f64, f64)) -> Self {
        Self {
            neg_tau: Hp::from_f64(-tau),
            lo: Hp::from_f64(lo),
            half_width: Hp::from_f64(hi) / Hp::from_f64(2.0) - Hp::from_f64(lo) / Hp::from_f64(2.0),
        }
    }

    fn value(&self, t: f64) -> Hp {
        let x = &self.lo + &(&self.half_width * &(Hp::from_f64(t) + Hp::one()));
        (&self.neg_tau * &x).exp()
    }
}

fn clenshaw_hp(c: &[Hp], t: f64) -> Hp {
    let t2 = Hp::from_f64(2.0 * t);
    let mut b1 = Hp::zero();
    let mut b2 = Hp::zero();
    for ck in c.iter().skip(1).rev() {
        let b0 = ck + &(&t2 * &b1) - &b2;
        b2 = b1;
        b1 = b0;
    }
    &c[0] + &(Hp::from_f64(t) * &b1) - &b2
}

fn clenshaw(c: &[f64], t: f64) -> f64 {
    let mut b1 = 0.0;
    let mut b2 = 0.0;
    for &ck in c.iter().skip(1).rev() {
        let b0 = ck + 2.0 * t * b1 - b2;
        b2 = b1;
        b1 = b0;
    }
    c[0] + t * b1 - b2
}

fn solve(mut a: Vec<Vec<Hp>>, mut b: Vec<Hp>) -> Option<Vec<Hp>> {
    let n = b.len();
    for col in 0..n {
        let piv = (col..n).max_by(|&i, &j| {
            a[i][col]
                .abs()
                .partial_cmp(&a[j][col].abs())
                .unwrap_or(std::cmp::Ordering::Equal)
        })?;
        if a[piv][col].is_zero() {
            return None;
        }
        a.swap(col, piv);
        b.swap(col, piv);
        for row in col + 1..n {
            let f = &a[row][col] / &a[col][col];
            if f.is_zero() {
                continue;
            }
            for k in col..n {
                let v = &a[row][k] - &(&f * &a[col][k]);
                a[row][k] = v;
            }
            let v = &b[row] - &(&f * &b[col]);
            b[row] = v;
        }
    }
    let mut x = vec![Hp::zero(); n];
    for row in (0..n).rev() {
        let mut s = b[row].clone();
        for k in row + 1..n {
            s = s - &(&a[row][k] * &x[k]);
        }
        x[row] = s / &a[row][row];
    }
    Some(x)
}

struct Fit<'a> {
    kernel: &'a Kernel,
    coeffs: &'a [Hp],
}

impl Fit<'_> {
    fn residual(&self, t: f64) -> Hp {
        self.kernel.value(t) - clenshaw_hp(self.coeffs, t)
    }

    fn root(&self, mut a: f64, mut b: f64) -> f64 {
        let neg_a = self.residual(a).is_negative();
        for _ in 0..ROOT_ITERS {
            let m = 0.5 * (a + b);
            if m <= a || m >= b {
                break;
            }
            if self.residual(m).is_negative() == neg_a {
                a = m;
            } else {
                b = m;
            }
        }
        0.5 * (a + b)
    }

    /// Point of largest signed residual `sign * r` on `[a, b]`.
    fn extremum(&self, a: f64, b: f64, sign_neg: bool) -> (f64, Hp) {
        let score = |t: f64| {
            let r = self.residual(t);
            if sign_neg {
                -r
            } else {
                r
            }
        };
        let m = SEGMENT_SAMPLES;
        let pts: Vec<f64> = (0..=m).map(|i| a + (b - a) * i as f64 / m as f64).collect();
        let vals: Vec<Hp> = pts.iter().map(|&t| score(t)).collect();
        let mut best = 0;
        for i in 1..=m {
            if vals[i] > vals[best] {
                best = i;
            }
        }
        let (mut lo, mut hi) = (pts[best.saturating_sub(1)], pts[(best + 1).min(m)]);
        let g = 0.5 * (5f64.sqrt() - 1.0);
        let mut x1 = hi - g * (hi - lo);
        let mut x2 = lo + g * (hi - lo);
        let mut f1 = score(x1);
        let mut f2 = score(x2);
        for _ in 0..GOLDEN_ITERS {
            if f1 < f2 {
                lo = x1;
                x1 = x2;
                f1 = f2;
                x2 = lo + g * (hi - lo);
                f2 = score(x2);
            } else {
                hi = x2;
                x2 = x1;
                f2 = f1;
                x1 = hi - g * (hi - lo);
                f1 = score(x1);
            }
        }
        let (mut t, mut v) = if f1 > f2 { (x1, f1) } else { (x2, f2) };
        if vals[best] > v {
            t = pts[best];
            v = vals[best].clone();
        }
        (t, v)
    }
}

/// Fit the degree-`d` minimax polynomial to `exp(-tau x)` on `domain`.
pub fn remez_fit(tau: f64, d: usize, domain: (f64, f64)) -> Result<MinimaxPoly> {
    let (lo, hi) = domain;
    if !(tau.is_finite() && tau >= 0.0) {
        return Err(invalid(format!("tau must be finite and non-negative, got {tau}")));
    }
    if !(lo.is_finite() && hi.is_finite() && lo < hi) {
        return Err(invalid(format!("bad domain [{lo}, {hi}]")));
    }
    let chebyshev_nodes = |m: usize| -> Vec<f64> {
        (0..m)
            .map(|i| -(std::f64::consts::PI * i as f64 / (m - 1) as f64).cos())
            .collect()
    };
    if tau == 0.0 {
        let mut hp_coeffs = vec![Hp::zero(); d + 1];
        hp_coeffs[0] = Hp::one();
        let mut coeffs = vec![0.0; d + 1];
        coeffs[0] = 1.0;
        return Ok(MinimaxPoly {
            degree: d,
            tau,
            domain,
            coeffs,
            achieved_error: 0.0,
            iterations: 0,
            reference: chebyshev_nodes(d + 2).iter().map(|&t| to_x(t, domain)).collect(),
            hp_coeffs,
        });
    }

    let kernel = Kernel::new(tau, domain);
    let m = d + 2;
    let mut reference = chebyshev_nodes(m);
    for iter in 1..=REMEZ_MAX_ITER {
        let mut a = Vec::with_capacity(m);
        let mut rhs = Vec::with_capacity(m);
        for (i, &t) in reference.iter().enumerate() {
            let th = Hp::from_f64(t);
            let mut row = Vec::with_capacity(m);
            let mut prev = Hp::one();
            let mut cur = th.clone();
            row.push(prev.clone());
            for _ in 1..=d {
                row.push(cur.clone());
                let next = Hp::from_f64(2.0) * &th * &cur - &prev;
                prev = cur;
                cur = next;
            }
            row.push(Hp::from_f64(if i % 2 == 0 { 1.0 } else { -1.0 }));
            a.push(row);
            rhs.push(kernel.value(t));
        }
        let no_conv = || Error::NoConvergence {
            degree: d,
            tau,
            iterations: iter,
        };
        let mut sol = solve(a, rhs).ok_or_else(no_conv)?;
        let level = sol.pop().expect("level unknown");
        let coeffs = sol;
        let fit = Fit {
            kernel: &kernel,
            coeffs: &coeffs,
        };
        if level.is_zero() {
            return Err(no_conv());
        }

        let mut bounds = Vec::with_capacity(m + 1);
        bounds.push(-1.0);
        for w in reference.windows(2) {
            bounds.push(fit.root(w[0], w[1]));
        }
        bounds.push(1.0);
        let first_neg = level.is_negative();
        let mut next = Vec::with_capacity(m);
        let mut mags = Vec::with_capacity(m);
        for j in 0..m {
            let neg = first_neg ^ (j % 2 == 1);
            let (t, v) = fit.extremum(bounds[j], bounds[j + 1], neg);
            next.push(t);
            mags.push(v);
        }
        let mut emax = mags[0].clone();
        let mut emin = mags[0].clone();
        for v in &mags[1..] {
            if *v > emax {
                emax = v.clone();
            }
            if *v < emin {
                emin = v.clone();
            }
        }
        if emin.is_negative() || emin.is_zero() {
            return Err(no_conv());
        }
        let spread = ((&emax - &emin) / &emax).to_f64();
        if spread <= REMEZ_TOL {
            return Ok(MinimaxPoly {
                degree: d,
                tau,
                domain,
                coeffs: coeffs.iter().map(Hp::to_f64).collect(),
                achieved_error: emax.to_f64(),
                iterations: iter,
                reference: next.iter().map(|&t| to_x(t, domain)).collect(),
                hp_coeffs: coeffs,
            });
        }
        if next.windows(2).any(|w| w[0] >= w[1]) {
            return Err(no_conv());
        }
        reference = next;
    }
    Err(Error::NoConvergence {
        degree: d,
        tau,
        iterations: REMEZ_MAX_ITER,
    })
}

/// Smallest degree whose minimax error on `[0, 1]` is at most `threshold`.
pub fn min_degree_for(beta: f64, threshold: f64) -> Result<usize> {
    if !(threshold > 0.0) {
        return Err(invalid(format!("threshold must be positive, got {threshold}")));
    }
    for d in 0..=DEGREE_CAP {
        if remez_fit(beta, d, (0.0, 1.0))?.achieved_error <= threshold {
            return Ok(d);
        }
    }
    Err(Error::DegreeCapExceeded {
        cap: DEGREE_CAP,
        threshold,
    })
}

fn to_x(t: f64, (lo, hi): (f64, f64)) -> f64 {
    lo + 0.5 * (hi - lo) * (t + 1.0)
}

impl MinimaxPoly {
    pub fn degree(&self) -> usize {
        self.degree
    }

    pub fn tau(&self) -> f64 {
        self.tau
    }

    pub fn domain(&self) -> (f64, f64) {
        self.domain
    }

    /// Chebyshev coefficients in the variable mapped from the domain to [-1, 1].
    pub fn coefficients(&self) -> &[f64] {
        &self.coeffs
    }

    pub fn achieved_error(&self) -> f64 {
        self.achieved_error
    }

    pub fn iterations(&self) -> usize {
        self.iterations
    }

    /// Final alternation set, in domain coordinates.
    pub fn reference(&self) -> &[f64] {
        &self.reference
    }

    /// Number of QSP phases a degree-d polynomial consumes.
    pub fn phase_count(&self) -> usize {
        2 * self.degree + 1
    }

    fn to_t(&self, x: f64) -> f64 {
        let (lo, hi) = self.domain;
        ((2.0 * x - lo - hi) / (hi - lo)).clamp(-1.0, 1.0)
    }

    pub fn eval(&self, x: f64) -> Result<f64> {
        let (lo, hi) = self.domain;
        if !(x >= lo && x <= hi) {
            return Err(Error::OutOfDomain { x, lo, hi });
        }
        Ok(clenshaw(&self.coeffs, self.to_t(x)))
    }

    /// `exp(-tau x) - p(x)` evaluated at full working precision.
    pub fn residual(&self, x: f64) -> Result<f64> {
        let (lo, hi) = self.domain;
        if !(x >= lo && x <= hi) {
            return Err(Error::OutOfDomain { x, lo, hi });
        }
        Ok(self.residual_t(self.to_t(x)).to_f64())
    }

    fn residual_t(&self, t: f64) -> Hp {
        Kernel::new(self.tau, self.domain).value(t) - clenshaw_hp(&self.hp_coeffs, t)
    }

    /// Signed local extrema of the residual, one per run of constant sign on
    /// a uniform grid of `grid` points, each refined by golden section.
    pub fn residual_extrema(&self, grid: usize) -> Vec<(f64, f64)> {
        if grid < 2 || self.achieved_error == 0.0 {
            return Vec::new();
        }
        let kernel = Kernel::new(self.tau, self.domain);
        let fit = Fit {
            kernel: &kernel,
            coeffs: &self.hp_coeffs,
        };
        let ts: Vec<f64> = (0..grid)
            .map(|i| -1.0 + 2.0 * i as f64 / (grid - 1) as f64)
            .collect();
        let rs: Vec<Hp> = ts.iter().map(|&t| fit.residual(t)).collect();
        let mut out = Vec::new();
        let mut start = 0;
        for i in 1..=grid {
            if i == grid || rs[i].is_negative() != rs[start].is_negative() {
                let a = ts[start.saturating_sub(1)];
                let b = ts[i.min(grid - 1)];
                let neg = rs[start].is_negative();
                let (t, v) = fit.extremum(a.max(-1.0), b.min(1.0), neg);
                let v = if neg { -v.to_f64() } else { v.to_f64() };
                out.push((to_x(t, self.domain), v));
                start = i;
            }
        }
        out
    }

    /// Whether at least `degree + 2` alternating extrema reach the achieved
    /// error within `rel_tol`.
    pub fn equioscillates(&self, grid: usize, rel_tol: f64) -> bool {
        if self.achieved_error == 0.0 {
            return true;
        }
        let e = self.achieved_error;
        let mut count = 0usize;
        let mut last_sign = 0.0f64;
        for (_, r) in self.residual_extrema(grid) {
            if (r.abs() - e).abs() <= rel_tol * e && r.signum() != last_sign {
                count += 1;
                last_sign = r.signum();
            }
        }
        count >= self.degree + 2
    }
}
