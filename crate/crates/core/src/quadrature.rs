//! Adaptive Gauss-Kronrod (7, 15) quadrature.

use crate::error::{Error, Result};

const XGK: [f64; 8] = [
    0.991_455_371_120_812_6,
    0.949_107_912_342_758_5,
    0.864_864_423_359_769_1,
    0.741_531_185_599_394_4,
    0.586_087_235_467_691_1,
    0.405_845_151_377_397_2,
    0.207_784_955_007_898_5,
    0.0,
];
const WGK: [f64; 8] = [
    0.022_935_322_010_529_22,
    0.063_092_092_629_978_55,
    0.104_790_010_322_250_2,
    0.140_653_259_715_525_9,
    0.169_004_726_639_267_9,
    0.190_350_578_064_785_4,
    0.204_432_940_075_298_9,
    0.209_482_141_084_727_8,
];
const WG: [f64; 4] = [
    0.129_484_966_168_869_7,
    0.279_705_391_489_276_7,
    0.381_830_050_505_118_9,
    0.417_959_183_673_469_4,
];

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct QuadResult {
    pub value: f64,
    pub error: f64,
    pub evaluations: usize,
}

fn gk15<F: FnMut(f64) -> f64>(f: &mut F, a: f64, b: f64) -> (f64, f64) {
    let c = 0.5 * (a + b);
    let h = 0.5 * (b - a);
    let fc = f(c);
    let mut kron = fc * WGK[7];
    let mut gauss = fc * WG[3];
    for j in 0..7 {
        let x = h * XGK[j];
        let s = f(c - x) + f(c + x);
        kron += WGK[j] * s;
        if j % 2 == 1 {
            gauss += WG[j / 2] * s;
        }
    }
    (kron * h, ((kron - gauss) * h).abs())
}

/// Integrate `f` over `[a, b]` to `max(abs_tol, rel_tol * |I|)` by global
/// adaptive bisection of the worst interval.
pub fn integrate<F: FnMut(f64) -> f64>(
    mut f: F,
    a: f64,
    b: f64,
    abs_tol: f64,
    rel_tol: f64,
    max_intervals: usize,
) -> Result<QuadResult> {
    if a == b {
        return Ok(QuadResult {
            value: 0.0,
            error: 0.0,
            evaluations: 0,
        });
    }
    let (v, e) = gk15(&mut f, a, b);
    let mut intervals = vec![(a, b, v, e)];
    let mut evaluations = 15;
    loop {
        let total: f64 = intervals.iter().map(|t| t.2).sum();
        let err: f64 = intervals.iter().map(|t| t.3).sum();
        if !total.is_finite() || !err.is_finite() {
            return Err(Error::Quadrature { error: f64::NAN });
        }
        if err <= abs_tol.max(rel_tol * total.abs()) {
            return Ok(QuadResult {
                value: total,
                error: err,
                evaluations,
            });
        }
        if intervals.len() >= max_intervals {
            return Err(Error::Quadrature { error: err });
        }
        let (k, _) = intervals
            .iter()
            .enumerate()
            .max_by(|x, y| x.1 .3.total_cmp(&y.1 .3))
            .expect("non-empty");
        let (lo, hi, _, _) = intervals.swap_remove(k);
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            return Err(Error::Quadrature { error: err });
        }
        let (v1, e1) = gk15(&mut f, lo, mid);
        let (v2, e2) = gk15(&mut f, mid, hi);
        evaluations += 30;
        intervals.push((lo, mid, v1, e1));
        intervals.push((mid, hi, v2, e2));
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn polynomial_is_exact() {
        let r = integrate(|x| x.powi(9) - 3.0 * x * x, 0.0, 2.0, 1e-14, 1e-14, 10).unwrap();
        assert!((r.value - (102.4 - 8.0)).abs() < 1e-12);
    }

    #[test]
    fn peaked_integrand() {
        let r = integrate(|x| 1.0 / (1e-4 + x * x), -1.0, 1.0, 1e-12, 1e-12, 1000).unwrap();
        let exact = 2.0 * (1.0 / 1e-2) * (1.0f64 / 1e-2).atan();
        assert!((r.value - exact).abs() < 1e-9 * exact);
    }

    #[test]
    fn exponential_decay() {
        let r = integrate(|u| (-u).exp(), 0.0, 50.0, 1e-15, 1e-14, 200).unwrap();
        assert!((r.value - (1.0 - (-50f64).exp())).abs() < 1e-13);
    }
}
