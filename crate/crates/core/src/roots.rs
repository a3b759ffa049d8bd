//! Derivative-free scalar root finding.

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Root {
    pub x: f64,
    pub fx: f64,
    pub iterations: usize,
}

/// Regula falsi with the Illinois modification on a sign-changing bracket.
///
/// Stops when `|f| <= ftol` or the bracket is narrower than `xtol`.
pub fn illinois<F: FnMut(f64) -> Result<f64>>(
    mut f: F,
    mut a: f64,
    mut b: f64,
    xtol: f64,
    ftol: f64,
    max_iter: usize,
) -> Result<Root> {
    let mut fa = f(a)?;
    let mut fb = f(b)?;
    if fa == 0.0 {
        return Ok(Root {
            x: a,
            fx: fa,
            iterations: 0,
        });
    }
    if fb == 0.0 {
        return Ok(Root {
            x: b,
            fx: fb,
            iterations: 0,
        });
    }
    if fa.signum() == fb.signum() {
        return Err(Error::RootBracket { lo: a, hi: b });
    }
    let mut side = 0i8;
    let mut best = if fa.abs() < fb.abs() {
        (a, fa)
    } else {
        (b, fb)
    };
    for it in 1..=max_iter {
        let mut c = (a * fb - b * fa) / (fb - fa);
        if !(c > a.min(b) && c < a.max(b)) {
            c = 0.5 * (a + b);
        }
        let fc = f(c)?;
        if fc.abs() < best.1.abs() {
            best = (c, fc);
        }
        if fc.abs() <= ftol || (b - a).abs() <= xtol {
            return Ok(Root {
                x: best.0,
                fx: best.1,
                iterations: it,
            });
        }
        if fc.signum() == fb.signum() {
            b = c;
            fb = fc;
            if side == -1 {
                fa *= 0.5;
            }
            side = -1;
        } else {
            a = c;
            fa = fc;
            if side == 1 {
                fb *= 0.5;
            }
            side = 1;
        }
    }
    if best.1.abs() <= ftol || (b - a).abs() <= xtol {
        return Ok(Root {
            x: best.0,
            fx: best.1,
            iterations: max_iter,
        });
    }
    Err(Error::NonConvergence {
        what: "Illinois iteration".into(),
        residual: best.1.abs(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn cubic_root() {
        let r = illinois(|x| Ok(x * x * x - 2.0), 0.0, 2.0, 1e-15, 1e-15, 100).unwrap();
        assert!((r.x - 2f64.cbrt()).abs() < 1e-14);
    }

    #[test]
    fn missing_bracket() {
        assert!(matches!(
            illinois(|x| Ok(x * x + 1.0), -1.0, 1.0, 1e-12, 1e-12, 10),
            Err(Error::RootBracket { .. })
        ));
    }
}
