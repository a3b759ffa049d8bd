//! Formal power series of the stable manifold of `q1` and its summation.
//!
//! In the blown-up variables `r1 = 1 + x*r11`, `v = x*(v11 - 2*delta)` with
//! `x = l^3`, the manifold is a graph `y = Y(x)` solving
//!
//! ```text
//! x^2 y' = A y + f(x, y),   A = [[0, -1/(3d)], [1/(3d), 0]]
//! f1 = -(5/3) x r11
//! f2 = (x/3) (2d - v11 - r11^2 (3 + 3 x r11 + x^2 r11^2) / (d (1 + x r11)^3))
//! ```
//!
//! Matching powers of `x` gives `(n-1) Y_{n-1} = A Y_n + [f]_n`, which is
//! solved here in exact rational arithmetic (then continued in `f64` past
//! [`EXACT_ORDER`]). The series diverges like `n! (3d)^n`; it is summed
//! either by optimal truncation or by Borel-Pade-Laplace.

use std::io::Write;

use num_rational::BigRational;
use num_traits::{One, Signed, Zero};
use serde::Serialize;

use crate::dynamics::Params;
use crate::error::{Error, Result};
use crate::quadrature;
use crate::scalar::Scalar;

/// Orders computed exactly before switching to floating point.
pub const EXACT_ORDER: usize = 40;

/// Default upper end of the `l` range where summation is trusted.
pub const L_SMALL: f64 = 0.5;

/// Truncated power series `sum_{k<len} c_k x^k`.
#[derive(Debug, Clone, PartialEq)]
pub struct TruncatedSeries<S> {
    pub coeffs: Vec<S>,
}

impl<S: Scalar> TruncatedSeries<S> {
    pub fn zero(len: usize) -> Self {
        TruncatedSeries {
            coeffs: vec![S::zero(); len],
        }
    }

    pub fn constant(c: S, len: usize) -> Self {
        let mut s = Self::zero(len);
        if len > 0 {
            s.coeffs[0] = c;
        }
        s
    }

    pub fn len(&self) -> usize {
        self.coeffs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.coeffs.is_empty()
    }

    pub fn add(&self, o: &Self) -> Self {
        let coeffs = self
            .coeffs
            .iter()
            .zip(&o.coeffs)
            .map(|(a, b)| a.clone() + b.clone())
            .collect();
        TruncatedSeries { coeffs }
    }

    pub fn scale(&self, k: &S) -> Self {
        TruncatedSeries {
            coeffs: self.coeffs.iter().map(|a| a.clone() * k.clone()).collect(),
        }
    }

    pub fn mul(&self, o: &Self) -> Self {
        let n = self.len().min(o.len());
        let mut out = Self::zero(n);
        for i in 0..n {
            if self.coeffs[i].is_zero() {
                continue;
            }
            for j in 0..n - i {
                out.coeffs[i + j] =
                    out.coeffs[i + j].clone() + self.coeffs[i].clone() * o.coeffs[j].clone();
            }
        }
        out
    }

    /// Multiply by `x`, dropping the overflowing top coefficient.
    pub fn shift(&self) -> Self {
        let mut out = Self::zero(self.len());
        for i in 1..self.len() {
            out.coeffs[i] = self.coeffs[i - 1].clone();
        }
        out
    }

    /// `1/self` by long division; requires a non-zero constant term.
    pub fn recip(&self) -> Result<Self> {
        let n = self.len();
        if n == 0 || self.coeffs[0].is_zero() {
            return Err(Error::InvalidArgument(
                "series reciprocal needs a non-zero constant term".into(),
            ));
        }
        let mut out = Self::zero(n);
        out.coeffs[0] = S::one() / self.coeffs[0].clone();
        for k in 1..n {
            let mut acc = S::zero();
            for j in 1..=k {
                acc = acc + self.coeffs[j].clone() * out.coeffs[k - j].clone();
            }
            out.coeffs[k] = -(acc * out.coeffs[0].clone());
        }
        Ok(out)
    }

    /// `x^2 d/dx` of the series.
    pub fn x2_derivative(&self) -> Self {
        let mut out = Self::zero(self.len());
        for k in 2..self.len() {
            out.coeffs[k] = self.coeffs[k - 1].clone() * S::from_i64(k as i64 - 1);
        }
        out
    }
}

/// Pair of truncated series, one per component of `y = (r11, v11)`.
#[derive(Debug, Clone, PartialEq)]
pub struct TruncatedSeries2<S> {
    pub r: TruncatedSeries<S>,
    pub v: TruncatedSeries<S>,
}

impl<S: Scalar> TruncatedSeries2<S> {
    /// The graph `sum_{n=1}^{N} Y_n x^n`, stored with `N + 1` coefficients.
    pub fn from_coefficients(y: &[[S; 2]]) -> Self {
        let len = y.len() + 1;
        let mut r = TruncatedSeries::zero(len);
        let mut v = TruncatedSeries::zero(len);
        for (i, yn) in y.iter().enumerate() {
            r.coeffs[i + 1] = yn[0].clone();
            v.coeffs[i + 1] = yn[1].clone();
        }
        TruncatedSeries2 { r, v }
    }

    /// `x^2 y' - A y - f(x, y)` truncated at the series length. `f` is
    /// expanded with generic series arithmetic, independently of the
    /// recurrence used to produce the coefficients.
    pub fn residual(&self, delta: &S) -> TruncatedSeries2<S> {
        let len = self.r.len();
        let three_d = S::from_i64(3) * delta.clone();
        let inv3d = S::one() / three_d.clone();
        let third = S::ratio(1, 3);
        let x = TruncatedSeries::constant(S::one(), len).shift();
        let one = TruncatedSeries::constant(S::one(), len);
        let xr = x.mul(&self.r);
        let s = one.add(&xr);
        let w = s
            .mul(&s)
            .mul(&s)
            .recip()
            .expect("1 + x r11 has unit constant term");
        let poly = TruncatedSeries::constant(S::from_i64(3), len)
            .add(&xr.scale(&S::from_i64(3)))
            .add(&xr.mul(&xr));
        let quad = self
            .r
            .mul(&self.r)
            .mul(&poly)
            .mul(&w)
            .scale(&(S::one() / delta.clone()));
        let two_d = TruncatedSeries::constant(S::from_i64(2) * delta.clone(), len);
        let f1 = x.mul(&self.r).scale(&(-S::ratio(5, 3)));
        let f2 = x
            .mul(
                &two_d
                    .add(&self.v.scale(&-S::one()))
                    .add(&quad.scale(&-S::one())),
            )
            .scale(&third);
        let lhs_r = self.r.x2_derivative();
        let lhs_v = self.v.x2_derivative();
        let ay_r = self.v.scale(&-inv3d.clone());
        let ay_v = self.r.scale(&inv3d);
        TruncatedSeries2 {
            r: lhs_r
                .add(&ay_r.scale(&-S::one()))
                .add(&f1.scale(&-S::one())),
            v: lhs_v
                .add(&ay_v.scale(&-S::one()))
                .add(&f2.scale(&-S::one())),
        }
    }
}

// ---------------------------------------------------------------------------
// recurrence

struct Recurrence<S> {
    d: S,
    r: Vec<S>, // r[n] = first component of Y_n, r[0] = 0
    v: Vec<S>,
    s: Vec<S>, // coefficients of 1 + x r11
    w: Vec<S>, // coefficients of (1 + x r11)^-3
}

impl<S: Scalar> Recurrence<S> {
    fn new(d: S) -> Self {
        Recurrence {
            d,
            r: vec![S::zero()],
            v: vec![S::zero()],
            s: vec![S::one()],
            w: vec![S::one()],
        }
    }

    fn order(&self) -> usize {
        self.r.len() - 1
    }

    /// Compute `Y_n` for the next `n`.
    fn advance(&mut self) {
        let n = self.order() + 1;
        let d = self.d.clone();
        let three = S::from_i64(3);
        let v_n = -(d.clone() * S::from_i64(3 * n as i64 + 2) * self.r[n - 1].clone());

        // w needs s up to n-1, i.e. r up to n-2
        let k = n - 1;
        if k >= 1 && self.w.len() <= k {
            self.s.push(self.r[k - 1].clone());
            let mut acc = S::zero();
            for j in 1..=k {
                let weight = S::from_i64(-(3 * j as i64) - (k - j) as i64);
                acc = acc + self.s[j].clone() * self.w[k - j].clone() * weight;
            }
            self.w.push(acc / S::from_i64(k as i64));
        }
        let mut conv = S::zero();
        for j in 1..n {
            conv = conv + self.r[j].clone() * self.w[n - j].clone();
        }
        let mut rhs = S::from_i64(n as i64 - 1) * self.v[n - 1].clone()
            + self.v[n - 1].clone() / three.clone()
            - conv / (three.clone() * d.clone());
        if n == 1 {
            rhs = rhs - S::from_i64(2) * d.clone() / three.clone();
        }
        let r_n = rhs * three * d;
        self.r.push(r_n);
        self.v.push(v_n);
    }

    fn to_f64(&self) -> Recurrence<f64> {
        let conv = |xs: &[S]| xs.iter().map(|x| x.to_f64()).collect::<Vec<f64>>();
        Recurrence {
            d: self.d.to_f64(),
            r: conv(&self.r),
            v: conv(&self.v),
            s: conv(&self.s),
            w: conv(&self.w),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct GevreyFit {
    pub a: f64,
    pub b: f64,
    pub r_squared: f64,
}

/// The coefficients `Y_1 ..= Y_N`.
#[derive(Debug, Clone, PartialEq)]
pub struct SeriesCoefficients {
    pub delta: f64,
    pub order: usize,
    pub y: Vec<[f64; 2]>,
    /// Exact values of the leading coefficients (up to [`EXACT_ORDER`]).
    pub exact: Vec<[BigRational; 2]>,
    /// Envelope constants with `|Y_n| <= a b^n n!` for every computed `n`;
    /// `b` is the fitted rate, `a` is raised if needed to cover early terms.
    pub gevrey_a: Option<f64>,
    pub gevrey_b: Option<f64>,
}

impl SeriesCoefficients {
    pub fn coefficient(&self, n: usize) -> [f64; 2] {
        self.y[n - 1]
    }

    /// Magnitude of the non-zero component of `Y_n`.
    pub fn magnitude(&self, n: usize) -> f64 {
        let [a, b] = self.y[n - 1];
        a.abs().max(b.abs())
    }

    /// Whether odd orders have zero second component and even orders zero
    /// first component. Checked exactly on the rational part and as exact
    /// zeros in the floating-point tail.
    pub fn parity_holds(&self) -> bool {
        let exact_ok = self.exact.iter().enumerate().all(|(i, y)| {
            let n = i + 1;
            if n % 2 == 1 {
                y[1].is_zero()
            } else {
                y[0].is_zero()
            }
        });
        let float_ok = self.y.iter().enumerate().all(|(i, y)| {
            let n = i + 1;
            if n % 2 == 1 {
                y[1] == 0.0
            } else {
                y[0] == 0.0
            }
        });
        exact_ok && float_ok
    }

    /// Residual of the truncated series in the manifold equation, per order,
    /// relative to the size of the terms at that order. Orders `1..=N` should
    /// vanish; exact where the rational coefficients are available.
    pub fn residual(&self) -> Vec<f64> {
        let n = self.order;
        if self.exact.len() == n {
            let d = <BigRational as Scalar>::from_f64(self.delta);
            let series = TruncatedSeries2::from_coefficients(&self.exact);
            let res = series.residual(&d);
            (1..=n)
                .map(|k| {
                    let m = res.r.coeffs[k].abs().max(res.v.coeffs[k].abs());
                    Scalar::to_f64(&m) / self.magnitude(k).max(1.0)
                })
                .collect()
        } else {
            let series = TruncatedSeries2::from_coefficients(&self.y);
            let res = series.residual(&self.delta);
            (1..=n)
                .map(|k| {
                    let scale = self.magnitude(k).max(if k > 1 {
                        k as f64 * self.magnitude(k - 1)
                    } else {
                        1.0
                    });
                    res.r.coeffs[k].abs().max(res.v.coeffs[k].abs()) / scale.max(1.0)
                })
                .collect()
        }
    }

    /// Writes `n,Y_n_1,Y_n_2`; exact orders are written as rationals.
    pub fn write_csv<W: Write>(&self, out: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(out);
        let io = |e: csv::Error| Error::InvalidArgument(format!("csv: {e}"));
        w.write_record(["n", "Y_n_1", "Y_n_2"]).map_err(io)?;
        for n in 1..=self.order {
            let (a, b) = match self.exact.get(n - 1) {
                Some(q) => (q[0].to_string(), q[1].to_string()),
                None => (
                    format!("{:.16e}", self.y[n - 1][0]),
                    format!("{:.16e}", self.y[n - 1][1]),
                ),
            };
            w.write_record([n.to_string(), a, b]).map_err(io)?;
        }
        w.flush()
            .map_err(|e| Error::InvalidArgument(format!("csv: {e}")))?;
        Ok(())
    }
}

/// `Y_1 ..= Y_N` with the default exact prefix of [`EXACT_ORDER`] orders.
pub fn compute_coefficients(p: &Params, order: usize) -> Result<SeriesCoefficients> {
    compute_coefficients_with(p, order, EXACT_ORDER)
}

pub fn compute_coefficients_with(
    p: &Params,
    order: usize,
    exact_order: usize,
) -> Result<SeriesCoefficients> {
    if !(p.delta > 0.0 && p.delta.is_finite()) {
        return Err(Error::InvalidArgument(format!(
            "series needs delta > 0, got {}",
            p.delta
        )));
    }
    if order == 0 {
        return Err(Error::InvalidArgument(
            "series order must be at least 1".into(),
        ));
    }
    let exact_n = exact_order.min(order);
    let mut exact_rec = Recurrence::new(<BigRational as Scalar>::from_f64(p.delta));
    for _ in 0..exact_n {
        exact_rec.advance();
    }
    let exact: Vec<[BigRational; 2]> = (1..=exact_n)
        .map(|n| [exact_rec.r[n].clone(), exact_rec.v[n].clone()])
        .collect();

    let mut rec = exact_rec.to_f64();
    if exact_n == 0 {
        rec = Recurrence::new(p.delta);
    }
    while rec.order() < order {
        rec.advance();
        let n = rec.order();
        if !(rec.r[n].is_finite() && rec.v[n].is_finite() && rec.w.iter().all(|w| w.is_finite())) {
            return Err(Error::Overflow { last_valid: n - 1 });
        }
    }
    let y: Vec<[f64; 2]> = (1..=order).map(|n| [rec.r[n], rec.v[n]]).collect();
    if let Some(n) = y
        .iter()
        .position(|c| !(c[0].is_finite() && c[1].is_finite()))
    {
        return Err(Error::Overflow { last_valid: n });
    }
    let mut sc = SeriesCoefficients {
        delta: p.delta,
        order,
        y,
        exact,
        gevrey_a: None,
        gevrey_b: None,
    };
    if order >= 10 {
        if let Ok(fit) = gevrey_fit(&sc) {
            let envelope = (1..=order)
                .map(|n| sc.magnitude(n) / (fit.b.powi(n as i32) * factorial(n)))
                .fold(fit.a, f64::max);
            sc.gevrey_a = Some(envelope);
            sc.gevrey_b = Some(fit.b);
        }
    }
    Ok(sc)
}

fn ln_factorial(n: usize) -> f64 {
    (2..=n).map(|k| (k as f64).ln()).sum()
}

fn factorial(n: usize) -> f64 {
    ln_factorial(n).exp()
}

/// Least-squares fit of `ln(|Y_n| / n!) = ln a + n ln b` over the last
/// half of the orders.
pub fn gevrey_fit(sc: &SeriesCoefficients) -> Result<GevreyFit> {
    let n_total = sc.order;
    if n_total < 10 {
        return Err(Error::Fit(format!(
            "need at least 10 orders, have {n_total}"
        )));
    }
    let first = n_total - n_total.div_ceil(2) + 1;
    let pts: Vec<(f64, f64)> = (first..=n_total)
        .map(|n| (n as f64, sc.magnitude(n).ln() - ln_factorial(n)))
        .collect();
    let m = pts.len() as f64;
    let mx = pts.iter().map(|p| p.0).sum::<f64>() / m;
    let my = pts.iter().map(|p| p.1).sum::<f64>() / m;
    let sxx: f64 = pts.iter().map(|p| (p.0 - mx).powi(2)).sum();
    let sxy: f64 = pts.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    let syy: f64 = pts.iter().map(|p| (p.1 - my).powi(2)).sum();
    let slope = sxy / sxx;
    let intercept = my - slope * mx;
    let ss_res: f64 = pts
        .iter()
        .map(|p| (p.1 - intercept - slope * p.0).powi(2))
        .sum();
    let r_squared = if syy > 0.0 { 1.0 - ss_res / syy } else { 1.0 };
    if !(r_squared >= 0.99) || !slope.is_finite() {
        return Err(Error::Fit(format!(
            "|Y_n|/n! is not log-linear (R^2 = {r_squared:.4})"
        )));
    }
    Ok(GevreyFit {
        a: intercept.exp(),
        b: slope.exp(),
        r_squared,
    })
}

// ---------------------------------------------------------------------------
// summation

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, serde::Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SummationMode {
    TruncatedOptimal,
    BorelPadeLaplace,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ManifoldPoint {
    pub l: f64,
    pub r1: f64,
    pub v: f64,
    /// `(r11, v11)` of the blown-up graph.
    pub y: [f64; 2],
    /// Estimated error in `y`.
    pub error_estimate: f64,
    pub mode: SummationMode,
    /// Set when `l` exceeds [`L_SMALL`] or the requested mode fell back.
    pub advisory: Option<String>,
}

/// Sum of `Y_n x^n` up to (not including) the smallest term. Returns the
/// sum and the magnitude of that term.
pub fn truncated_optimal(sc: &SeriesCoefficients, x: f64) -> ([f64; 2], f64) {
    if x == 0.0 {
        return ([0.0, 0.0], 0.0);
    }
    let term = |n: usize| sc.magnitude(n) * x.powi(n as i32);
    let stop = (1..=sc.order)
        .min_by(|&a, &b| term(a).total_cmp(&term(b)))
        .unwrap_or(1);
    let mut y = [0.0, 0.0];
    // the last order is summed as well when the terms are still decreasing
    let end = if stop == sc.order { stop } else { stop - 1 };
    for n in (1..=end).rev() {
        let c = sc.coefficient(n);
        let xn = x.powi(n as i32);
        y[0] += c[0] * xn;
        y[1] += c[1] * xn;
    }
    (y, term(stop))
}

/// Diagonal-type Pade approximant `P(t)/Q(t)` of `sum c_k t^k`.
#[derive(Debug, Clone, PartialEq)]
pub struct Pade {
    pub num: Vec<f64>,
    pub den: Vec<f64>,
}

impl Pade {
    /// `[m/m]` approximant from `c_0 ..= c_{2m}`, solved exactly. Falls back
    /// to lower `m` if the Hankel system is singular.
    pub fn diagonal(c: &[BigRational], m: usize) -> Result<Pade> {
        let mut m = m.min(c.len().saturating_sub(1) / 2);
        loop {
            if let Some(p) = Self::try_diagonal(c, m) {
                return Ok(p);
            }
            if m == 0 {
                return Err(Error::Fit("no Pade approximant".into()));
            }
            m -= 1;
        }
    }

    fn try_diagonal(c: &[BigRational], m: usize) -> Option<Pade> {
        let get = |k: isize| {
            if k < 0 {
                BigRational::zero()
            } else {
                c[k as usize].clone()
            }
        };
        // sum_{j=1}^m q_j c_{k-j} = -c_k for k = m+1 ..= 2m
        let mut a: Vec<Vec<BigRational>> = (0..m)
            .map(|row| {
                let k = (m + 1 + row) as isize;
                let mut r: Vec<BigRational> = (1..=m).map(|j| get(k - j as isize)).collect();
                r.push(-get(k));
                r
            })
            .collect();
        let q = solve_exact(&mut a)?;
        let mut den = vec![BigRational::one()];
        den.extend(q);
        let num: Vec<BigRational> = (0..=m)
            .map(|k| {
                (0..=k).fold(BigRational::zero(), |acc, j| {
                    acc + den[j].clone() * get((k - j) as isize)
                })
            })
            .collect();
        Some(Pade {
            num: num.iter().map(Scalar::to_f64).collect(),
            den: den.iter().map(Scalar::to_f64).collect(),
        })
    }

    pub fn numerator(&self, t: f64) -> f64 {
        horner(&self.num, t)
    }

    pub fn denominator(&self, t: f64) -> f64 {
        horner(&self.den, t)
    }

    pub fn eval(&self, t: f64) -> f64 {
        self.numerator(t) / self.denominator(t)
    }

    /// First sign change of the denominator on `(0, t_max]`, if any.
    pub fn pole_in(&self, t_max: f64) -> Option<f64> {
        let n = 4000;
        let mut prev = self.denominator(0.0);
        for i in 1..=n {
            let t = t_max * (i as f64 / n as f64).powi(2);
            let q = self.denominator(t);
            if q == 0.0 || q.signum() != prev.signum() {
                return Some(t);
            }
            prev = q;
        }
        None
    }
}

fn horner(c: &[f64], t: f64) -> f64 {
    c.iter().rev().fold(0.0, |acc, &a| acc * t + a)
}

/// Gaussian elimination on an augmented matrix; `None` if singular.
fn solve_exact(a: &mut [Vec<BigRational>]) -> Option<Vec<BigRational>> {
    let n = a.len();
    for col in 0..n {
        let piv = (col..n).find(|&r| !a[r][col].is_zero())?;
        a.swap(col, piv);
        let p = a[col][col].clone();
        for k in col..=n {
            a[col][k] = a[col][k].clone() / p.clone();
        }
        for r in 0..n {
            if r != col && !a[r][col].is_zero() {
                let f = a[r][col].clone();
                for k in col..=n {
                    let t = a[col][k].clone() * f.clone();
                    a[r][k] = a[r][k].clone() - t;
                }
            }
        }
    }
    Some(a.iter().map(|row| row[n].clone()).collect())
}

/// Borel transforms in `t = u^2`. Odd orders feed `r11`, even orders `v11`:
///
/// ```text
/// r11(x) = int_0^inf Phi_r(u^2) e^{-u/x} du,   Phi_r(t) = sum_k Y_{2k+1,1} t^k / (2k)!
/// v11(x) = int_0^inf u Phi_v(u^2) e^{-u/x} du, Phi_v(t) = sum_k Y_{2k+2,2} t^k / (2k+1)!
/// ```
#[derive(Debug, Clone, PartialEq)]
pub struct BorelPade {
    pub r: Pade,
    pub v: Pade,
}

impl BorelPade {
    pub fn new(sc: &SeriesCoefficients) -> Result<BorelPade> {
        let exact_at = |n: usize, comp: usize| -> BigRational {
            match sc.exact.get(n - 1) {
                Some(q) => q[comp].clone(),
                None => <BigRational as Scalar>::from_f64(sc.y[n - 1][comp]),
            }
        };
        let fact = |n: usize| -> BigRational {
            (2..=n).fold(BigRational::one(), |acc, k| {
                acc * <BigRational as Scalar>::from_i64(k as i64)
            })
        };
        let kr = sc.order.div_ceil(2);
        let kv = sc.order / 2;
        let cr: Vec<BigRational> = (0..kr)
            .map(|k| exact_at(2 * k + 1, 0) / fact(2 * k))
            .collect();
        let cv: Vec<BigRational> = (0..kv)
            .map(|k| exact_at(2 * k + 2, 1) / fact(2 * k + 1))
            .collect();
        if cr.is_empty() || cv.is_empty() {
            return Err(Error::InvalidArgument(
                "Borel-Pade needs at least two orders".into(),
            ));
        }
        // diagonal [M/M] in u with M = floor((N-1)/2) is about [M/2 / M/2] in t
        let m = (sc.order.saturating_sub(1) / 2) / 2;
        Ok(BorelPade {
            r: Pade::diagonal(&cr, m)?,
            v: Pade::diagonal(&cv, m)?,
        })
    }

    /// Laplace integrals along the positive axis, cut at `u = 50 x` with an
    /// exponential tail bound. Returns `(y, error)`.
    pub fn laplace(&self, x: f64) -> Result<([f64; 2], f64)> {
        if x == 0.0 {
            return Ok(([0.0, 0.0], 0.0));
        }
        const S_MAX: f64 = 50.0;
        let u_max = S_MAX * x;
        for pade in [&self.r, &self.v] {
            if let Some(t) = pade.pole_in(u_max * u_max) {
                return Err(Error::PoleOnPath { location: t.sqrt() });
            }
        }
        // u = x s
        let fr = |s: f64| {
            let u = x * s;
            self.r.eval(u * u) * (-s).exp()
        };
        let fv = |s: f64| {
            let u = x * s;
            u * self.v.eval(u * u) * (-s).exp()
        };
        let qr = quadrature::integrate(fr, 0.0, S_MAX, 1e-15, 1e-13, 400)?;
        let qv = quadrature::integrate(fv, 0.0, S_MAX, 1e-15, 1e-13, 400)?;
        let tail = |p: &Pade, grow: f64| {
            let t = u_max * u_max;
            let lead = p.num.last().copied().unwrap_or(0.0) / p.den.last().copied().unwrap_or(1.0);
            2.0 * p.eval(t).abs().max(lead.abs()) * grow * (-S_MAX).exp()
        };
        let r11 = x * qr.value;
        let v11 = x * qv.value;
        let err = x * (qr.error + qv.error) + x * tail(&self.r, 1.0) + x * tail(&self.v, u_max + x);
        Ok(([r11, v11], err))
    }
}

/// Point of the local stable manifold of `q1` at height `l`.
pub fn evaluate_manifold(
    sc: &SeriesCoefficients,
    l: f64,
    mode: SummationMode,
) -> Result<ManifoldPoint> {
    if !(l >= 0.0 && l.is_finite()) {
        return Err(Error::InvalidArgument(format!(
            "l = {l} must be non-negative"
        )));
    }
    let x = l * l * l;
    let mut advisory = (l > L_SMALL).then(|| format!("l = {l} exceeds l_small = {L_SMALL}"));
    let (y, err, used) = match mode {
        SummationMode::TruncatedOptimal => {
            let (y, e) = truncated_optimal(sc, x);
            (y, e, mode)
        }
        SummationMode::BorelPadeLaplace => match BorelPade::new(sc).and_then(|bp| bp.laplace(x)) {
            Ok((y, e)) => (y, e, mode),
            Err(e @ Error::PoleOnPath { .. }) => {
                advisory = Some(format!("{e}; fell back to optimal truncation"));
                let (y, e) = truncated_optimal(sc, x);
                (y, e, SummationMode::TruncatedOptimal)
            }
            Err(e) => return Err(e),
        },
    };
    Ok(ManifoldPoint {
        l,
        r1: 1.0 + x * y[0],
        v: x * (y[1] - 2.0 * sc.delta),
        y,
        error_estimate: err,
        mode: used,
        advisory,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn q(n: i64, d: i64) -> BigRational {
        <BigRational as Scalar>::ratio(n, d)
    }

    #[test]
    fn leading_coefficients() {
        for (d, y1, y2) in [
            (0.5, q(-1, 2), q(2, 1)),
            (1.0, q(-2, 1), q(16, 1)),
            (2.0, q(-8, 1), q(128, 1)),
        ] {
            let sc = compute_coefficients(&Params::new(d).unwrap(), 2).unwrap();
            assert_eq!(sc.exact[0], [y1, q(0, 1)]);
            assert_eq!(sc.exact[1], [q(0, 1), y2]);
        }
    }

    #[test]
    fn exact_residual_vanishes() {
        let sc = compute_coefficients(&Params::new(1.0).unwrap(), 25).unwrap();
        assert!(sc.residual().iter().all(|&r| r == 0.0));
        assert!(sc.parity_holds());
    }

    #[test]
    fn float_tail_continues_recurrence() {
        let p = Params::new(1.0).unwrap();
        let exact = compute_coefficients(&p, 30).unwrap();
        let mixed = compute_coefficients_with(&p, 30, 10).unwrap();
        for n in 1..=30 {
            let rel = (exact.magnitude(n) - mixed.magnitude(n)).abs() / exact.magnitude(n);
            assert!(rel < 1e-12, "n = {n}: {rel}");
        }
        assert!(mixed.residual().iter().all(|&r| r < 1e-10));
    }

    #[test]
    fn overflow_reports_last_valid_order() {
        let err = compute_coefficients_with(&Params::new(1.0).unwrap(), 400, 0).unwrap_err();
        match err {
            Error::Overflow { last_valid } => assert!(last_valid > 100 && last_valid < 400),
            e => panic!("{e}"),
        }
    }

    #[test]
    fn pade_reproduces_geometric_series() {
        // 1/(1 + t) = sum (-1)^k t^k
        let c: Vec<BigRational> = (0..9)
            .map(|k| q(if k % 2 == 0 { 1 } else { -1 }, 1))
            .collect();
        let p = Pade::diagonal(&c, 4).unwrap();
        for t in [0.0, 0.5, 3.0] {
            assert!((p.eval(t) - 1.0 / (1.0 + t)).abs() < 1e-14);
        }
        assert_eq!(p.pole_in(10.0), None);
    }

    #[test]
    fn summation_methods_agree() {
        let sc = compute_coefficients(&Params::new(1.0).unwrap(), 40).unwrap();
        for l in [0.1, 0.2, 0.3, 0.4] {
            let a = evaluate_manifold(&sc, l, SummationMode::TruncatedOptimal).unwrap();
            let b = evaluate_manifold(&sc, l, SummationMode::BorelPadeLaplace).unwrap();
            assert_eq!(b.mode, SummationMode::BorelPadeLaplace);
            let d = (a.y[0] - b.y[0]).abs().max((a.y[1] - b.y[1]).abs());
            assert!(
                d <= a.error_estimate.max(1e-14),
                "l = {l}: {d} vs {}",
                a.error_estimate
            );
        }
    }

    #[test]
    fn csv_export_has_exact_leading_rows() {
        let sc = compute_coefficients(&Params::new(1.0).unwrap(), 3).unwrap();
        let mut buf = Vec::new();
        sc.write_csv(&mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        let mut lines = text.lines();
        assert_eq!(lines.next(), Some("n,Y_n_1,Y_n_2"));
        assert_eq!(lines.next(), Some("1,-2,0"));
        assert_eq!(lines.next(), Some("2,0,16"));
    }
}
