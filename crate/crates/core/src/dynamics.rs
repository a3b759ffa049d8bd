//! Desingularized vector fields, time rescalings and monitored quantities.
//!
//! Every chart system is the physical flow multiplied by a non-negative factor
//! `dt/dtau`. The factor is returned alongside the field so that integrators
//! can accumulate physical time and the polar angle as extra components.

use nalgebra::{Complex, Matrix2, Matrix3};
use num_rational::BigRational;
use serde::{Deserialize, Serialize};

use crate::charts::{ChartId, PhysicalState};
use crate::error::{Error, Result};
use crate::scalar::Scalar;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Params {
    pub delta: f64,
}

impl Params {
    pub fn new(delta: f64) -> Result<Self> {
        if !(delta >= 0.0 && delta.is_finite()) {
            return Err(Error::InvalidArgument(format!(
                "delta = {delta} must be >= 0"
            )));
        }
        Ok(Params { delta })
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FieldOutput {
    pub dcdtau: [f64; 3],
    pub dt_dtau: f64,
    pub dtheta_dtau: f64,
}

/// `H(r1, v) = v^2/2 + (r1 - 1)^2 / (2 r1^2)`.
pub fn hamiltonian(r1: f64, v: f64) -> f64 {
    let w = (r1 - 1.0) / r1;
    0.5 * v * v + 0.5 * w * w
}

/// `H2(l2, v) = H(l2^-2, v) = v^2/2 + 1/2 - l2^2 + l2^4/2`.
pub fn hamiltonian_c2(l2: f64, v: f64) -> f64 {
    let s = 1.0 - l2 * l2;
    0.5 * v * v + 0.5 * s * s
}

/// Chart vector field with its time and angle rates.
pub fn vector_field(id: ChartId, c: &[f64; 3], p: &Params) -> Result<FieldOutput> {
    id.check(c)?;
    Ok(field_unchecked(id, c, p.delta))
}

pub(crate) fn field_unchecked(id: ChartId, c: &[f64; 3], d: f64) -> FieldOutput {
    let [a, b, e] = *c;
    let (dc, dt, dth) = match id {
        ChartId::Phys => {
            let (r, rd, l) = (a, b, e);
            let r2 = r * r;
            (
                [rd, -1.0 / r2 + l * l / (r2 * r) - d * rd, -d * l],
                1.0,
                l / r2,
            )
        }
        ChartId::Rvl => {
            let (r, v, l) = (a, b, e);
            let r3 = r * r * r;
            (
                [
                    v * r3,
                    l * (l * l * l - r * l - 2.0 * d * r3 * v),
                    -d * r3 * l * l,
                ],
                l * r3,
                l * l * r,
            )
        }
        ChartId::C1 => {
            let (r1, v, l) = (a, b, e);
            let x = l * l * l;
            (
                [
                    v + 2.0 * d * r1 * x,
                    -(r1 - 1.0) / (r1 * r1 * r1) - 2.0 * d * v * x,
                    -d * l * x,
                ],
                x,
                1.0 / (r1 * r1),
            )
        }
        ChartId::C2 => {
            let (rho2, v, l2) = (a, b, e);
            let r3 = rho2 * rho2 * rho2;
            let q = l2 * l2;
            (
                [
                    0.5 * rho2 * v,
                    q * (q - 1.0) - 2.0 * d * r3 * v * l2,
                    -0.5 * l2 * (v + 2.0 * d * r3 * l2),
                ],
                r3 * l2,
                q,
            )
        }
        ChartId::C21 => {
            let (rho2, v1, mu1) = (a, b, e);
            let r3 = rho2 * rho2 * rho2;
            (
                [
                    0.5 * rho2 * v1,
                    mu1 * mu1 + 0.5 * v1 * v1 - 1.0 - d * r3 * v1,
                    -(0.5 * v1 + d * r3) * mu1,
                ],
                r3,
                mu1,
            )
        }
        ChartId::C22 => {
            let (rho2, mu2, l22) = (a, b, e);
            let r3 = rho2 * rho2 * rho2;
            let l2sq = l22 * l22;
            (
                [
                    0.5 * rho2,
                    l22 * mu2 * (l2sq * l22 * mu2 * mu2 - 2.0 * d * r3 - l22),
                    -l22 * (l2sq * l2sq * mu2 * mu2 - d * l22 * r3 - l2sq + 0.5),
                ],
                r3 * l22,
                mu2 * l2sq,
            )
        }
        ChartId::C23 => {
            let (rho2, mu3, l23) = (a, b, e);
            let r3 = rho2 * rho2 * rho2;
            let l2sq = l23 * l23;
            (
                [
                    -0.5 * rho2,
                    mu3 * l23 * (c23_conservative(l23, mu3) - 2.0 * d * r3),
                    l23 * (d * l23 * r3 + l2sq * l2sq * mu3 * mu3 - l2sq + 0.5),
                ],
                r3 * l23,
                mu3 * l2sq,
            )
        }
        ChartId::C21Inf => {
            let (nu, v11, mu11) = (a, b, e);
            let n6 = nu.powi(6);
            (
                [
                    -0.5 * nu * v11,
                    -v11 * (d + v11) + n6 * (mu11 * mu11 * n6 - 1.0),
                    mu11 * (v11 - d),
                ],
                1.0,
                n6 * mu11,
            )
        }
        ChartId::C22Inf => {
            let (nu, mu2, l) = (a, b, e);
            let n6 = nu.powi(6);
            let n12 = n6 * n6;
            (
                [
                    -0.5 * nu,
                    -mu2 * l * (2.0 * d + n6 * l - n12 * l * l * l * mu2 * mu2),
                    l * (1.0 + d * l + n6 * l * l - n12 * l.powi(4) * mu2 * mu2),
                ],
                l,
                n6 * mu2 * l * l,
            )
        }
        ChartId::C23Inf => {
            let (nu, mu3, l) = (a, b, e);
            let n6 = nu.powi(6);
            let n12 = n6 * n6;
            (
                [
                    0.5 * nu,
                    -mu3 * l * (2.0 * d - n6 * l + n12 * l * l * l * mu3 * mu3),
                    l * (-1.0 + d * l - n6 * l * l + n12 * l.powi(4) * mu3 * mu3),
                ],
                l,
                n6 * mu3 * l * l,
            )
        }
    };
    FieldOutput {
        dcdtau: dc,
        dt_dtau: dt,
        dtheta_dtau: dth,
    }
}

// l23 - l23^3 mu3^2, the conservative part of the mu3 equation in C23.
fn c23_conservative(l23: f64, mu3: f64) -> f64 {
    l23 - l23 * l23 * l23 * mu3 * mu3
}

/// The C1 system in the time of the `(r, v, l)` system, i.e. without the
/// final division by `r1^3`. Same orbits as the `C1` field, time factor
/// `rho1^3 r1^3`.
pub fn vector_field_c1_rvl_time(c: &[f64; 3], p: &Params) -> Result<FieldOutput> {
    ChartId::C1.check(c)?;
    let [r1, v, rho1] = *c;
    let d = p.delta;
    let x = rho1.powi(3);
    let r13 = r1 * r1 * r1;
    Ok(FieldOutput {
        dcdtau: [
            r13 * (v + 2.0 * d * r1 * x),
            -r1 + 1.0 - 2.0 * d * r13 * x * v,
            -d * r13 * x * rho1,
        ],
        dt_dtau: x * r13,
        dtheta_dtau: r1,
    })
}

/// Monitored quantities of a physical state.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Invariants {
    pub energy: f64,
    pub kinetic: f64,
    pub potential: f64,
    pub l: f64,
    pub ecc: [f64; 2],
    /// `H = |ecc|^2 / 2`, continuous up to `l = 0` where it equals `1/2`.
    pub h: f64,
    pub h1: f64,
    /// Same level as `h`, evaluated through the `(l2, v)` form.
    pub h2: f64,
}

impl Invariants {
    pub fn ecc_norm(&self) -> f64 {
        self.ecc[0].hypot(self.ecc[1])
    }
}

pub fn invariants(s: &PhysicalState, p: &Params) -> Result<Invariants> {
    s.validate()?;
    let PhysicalState {
        r, rdot, l, theta, ..
    } = *s;
    let kinetic = 0.5 * (rdot * rdot + (l / r) * (l / r));
    let potential = -1.0 / r;
    // e^{-i theta} ecc = (l^2/r - 1) - i l rdot
    let (er, et) = (l * l / r - 1.0, -l * rdot);
    let (sn, cs) = theta.sin_cos();
    let ecc = [er * cs - et * sn, er * sn + et * cs];
    let w = (l * l - r) / r;
    let h = 0.5 * (l * rdot) * (l * rdot) + 0.5 * w * w;
    let d = p.delta;
    let h1 = h + 2.0 * d * l * l * r * rdot + 3.0 * d * d * l * l * r * r;
    let l2 = l / r.sqrt();
    Ok(Invariants {
        energy: kinetic + potential,
        kinetic,
        potential,
        l,
        ecc,
        h,
        h1,
        h2: hamiltonian_c2(l2, l * rdot),
    })
}

/// `H1 = H + 2 delta r1 v x + 3 delta^2 r1^2 x^2` on `(r1, v, x = l^3)`.
pub fn normalized_hamiltonian(r1: f64, v: f64, x: f64, p: &Params) -> f64 {
    let d = p.delta;
    hamiltonian(r1, v) + 2.0 * d * r1 * v * x + 3.0 * d * d * r1 * r1 * x * x
}

fn lie_h1_generic<T: Scalar>(r1: T, v: T, x: T, d: T) -> T {
    let two = T::from_i64(2);
    let three = T::from_i64(3);
    let six = T::from_i64(6);
    let g = (r1.clone() - T::one()) / (r1.clone() * r1.clone() * r1.clone());
    let grad = [
        g.clone()
            + two.clone() * d.clone() * v.clone() * x.clone()
            + six.clone() * d.clone() * d.clone() * r1.clone() * x.clone() * x.clone(),
        v.clone() + two.clone() * d.clone() * r1.clone() * x.clone(),
        two.clone() * d.clone() * r1.clone() * v.clone()
            + six * d.clone() * d.clone() * r1.clone() * r1.clone() * x.clone(),
    ];
    let field = [
        v.clone() + two.clone() * d.clone() * r1 * x.clone(),
        -g - two * d.clone() * v * x.clone(),
        -three * d * x.clone() * x,
    ];
    grad.into_iter()
        .zip(field)
        .fold(T::zero(), |acc, (a, b)| acc + a * b)
}

/// Lie derivative of `H1` along the `(r1, v, x)` system.
///
/// `numeric` is `grad H1 . X` assembled from the gradient and the field
/// separately, evaluated exactly in rational arithmetic and rounded once so
/// the cancellation between the conservative terms does not pollute it.
/// `closed_form` is `-6 delta^3 r1^2 x^3`.
pub fn lie_derivative_h1(r1: f64, v: f64, x: f64, p: &Params) -> Result<(f64, f64)> {
    if !(r1 > 0.0) {
        return Err(Error::domain(
            ChartId::C1,
            format!("r1 = {r1} must be positive"),
        ));
    }
    let q = <BigRational as Scalar>::from_f64;
    let numeric = lie_h1_generic(q(r1), q(v), q(x), q(p.delta)).to_f64();
    Ok((numeric, lie_h1_closed_form(r1, x, p)))
}

/// Floating-point version of the assembled Lie derivative.
pub fn lie_derivative_h1_f64(r1: f64, v: f64, x: f64, p: &Params) -> f64 {
    lie_h1_generic(r1, v, x, p.delta)
}

pub fn lie_h1_closed_form(r1: f64, x: f64, p: &Params) -> f64 {
    let d = p.delta;
    -6.0 * d * d * d * r1 * r1 * x * x * x
}

#[derive(Debug, Clone, PartialEq)]
pub struct Equilibrium {
    pub name: &'static str,
    pub chart: ChartId,
    pub coords: [f64; 3],
    pub eigenvalues: Vec<Complex<f64>>,
    /// Spectrum restricted to the invariant plane through the point where the
    /// Jacobian is block triangular (coordinates 1 and 2), if meaningful.
    pub in_plane: Option<Vec<Complex<f64>>>,
}

pub fn jacobian(id: ChartId, c: &[f64; 3], p: &Params) -> Matrix3<f64> {
    let d = p.delta;
    match id {
        ChartId::C1 => {
            let [r1, v, l] = *c;
            let x = l.powi(3);
            let x_l = 3.0 * l * l;
            Matrix3::new(
                2.0 * d * x,
                1.0,
                2.0 * d * r1 * x_l,
                (2.0 * r1 - 3.0) / r1.powi(4),
                -2.0 * d * x,
                -2.0 * d * v * x_l,
                0.0,
                0.0,
                -4.0 * d * x,
            )
        }
        ChartId::C21 => {
            let [rho2, v1, mu1] = *c;
            let r2 = rho2 * rho2;
            let r3 = r2 * rho2;
            Matrix3::new(
                0.5 * v1,
                0.5 * rho2,
                0.0,
                -3.0 * d * r2 * v1,
                v1 - d * r3,
                2.0 * mu1,
                -3.0 * d * r2 * mu1,
                -0.5 * mu1,
                -(0.5 * v1 + d * r3),
            )
        }
        ChartId::C21Inf => {
            let [nu, v11, mu11] = *c;
            let n5 = nu.powi(5);
            let n6 = n5 * nu;
            Matrix3::new(
                -0.5 * v11,
                -0.5 * nu,
                0.0,
                12.0 * n5 * n6 * mu11 * mu11 - 6.0 * n5,
                -d - 2.0 * v11,
                2.0 * n6 * n6 * mu11,
                0.0,
                mu11,
                v11 - d,
            )
        }
        _ => finite_difference_jacobian(id, c, d),
    }
}

fn finite_difference_jacobian(id: ChartId, c: &[f64; 3], d: f64) -> Matrix3<f64> {
    let mut j = Matrix3::zeros();
    for k in 0..3 {
        let h = 1e-6 * (1.0 + c[k].abs());
        let mut plus = *c;
        let mut minus = *c;
        plus[k] += h;
        minus[k] -= h;
        let fp = field_unchecked(id, &plus, d).dcdtau;
        let fm = field_unchecked(id, &minus, d).dcdtau;
        for i in 0..3 {
            j[(i, k)] = (fp[i] - fm[i]) / (2.0 * h);
        }
    }
    j
}

fn spectrum(j: &Matrix3<f64>) -> Vec<Complex<f64>> {
    let mut ev: Vec<Complex<f64>> = j.complex_eigenvalues().iter().copied().collect();
    sort_spectrum(&mut ev);
    ev
}

fn sort_spectrum(ev: &mut [Complex<f64>]) {
    ev.sort_by(|a, b| a.re.total_cmp(&b.re).then(a.im.total_cmp(&b.im)));
}

fn lower_block(j: &Matrix3<f64>) -> Vec<Complex<f64>> {
    let m = Matrix2::new(j[(1, 1)], j[(1, 2)], j[(2, 1)], j[(2, 2)]);
    let mut ev: Vec<Complex<f64>> = m.complex_eigenvalues().iter().copied().collect();
    sort_spectrum(&mut ev);
    ev
}

/// Named equilibria of a chart with their Jacobian spectra.
pub fn equilibria(id: ChartId, p: &Params) -> Vec<Equilibrium> {
    let d = p.delta;
    let s2 = std::f64::consts::SQRT_2;
    let points: Vec<(&'static str, [f64; 3], bool)> = match id {
        ChartId::C1 => vec![("q1", [1.0, 0.0, 0.0], false)],
        ChartId::C2 => vec![
            ("gamma2", [0.0, 0.0, 0.0], false),
            ("q1", [0.0, 0.0, 1.0], false),
        ],
        ChartId::C21 => vec![
            ("gamma21+", [0.0, s2, 0.0], false),
            ("gamma21-", [0.0, -s2, 0.0], false),
        ],
        ChartId::C22 => vec![("gamma21+", [0.0, 0.0, 1.0 / s2], false)],
        ChartId::C23 => vec![("gamma21-", [0.0, 0.0, 1.0 / s2], false)],
        ChartId::C21Inf => {
            let mut v = vec![("p21+", [0.0, 0.0, 0.0], true)];
            if d > 0.0 {
                v.push(("p21-", [0.0, -d, 0.0], true));
            }
            v
        }
        ChartId::C23Inf if d > 0.0 => vec![("p21-", [0.0, 0.0, 1.0 / d], true)],
        _ => Vec::new(),
    };
    points
        .into_iter()
        .map(|(name, coords, plane)| {
            let j = jacobian(id, &coords, p);
            Equilibrium {
                name,
                chart: id,
                coords,
                eigenvalues: spectrum(&j),
                in_plane: plane.then(|| lower_block(&j)),
            }
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::charts::{from_physical, to_physical, transition, ChartPoint};

    const P1: Params = Params { delta: 1.0 };

    #[test]
    fn field_examples() {
        let f = vector_field(ChartId::C1, &[1.0, 0.0, 0.0], &P1).unwrap();
        assert_eq!(f.dcdtau, [0.0, 0.0, 0.0]);
        let f = vector_field(ChartId::C21, &[0.0, 2f64.sqrt(), 0.0], &P1).unwrap();
        assert!(f.dcdtau.iter().all(|x| x.abs() < 1e-15));
        let f = vector_field(ChartId::C1, &[2.0, 0.0, 0.0], &P1).unwrap();
        assert_eq!(f.dcdtau, [0.0, -0.125, 0.0]);
    }

    #[test]
    fn off_domain_is_rejected() {
        assert!(vector_field(ChartId::C1, &[-1.0, 0.0, 0.1], &P1).is_err());
        assert!(vector_field(ChartId::C22, &[0.1, -0.2, 0.3], &P1).is_err());
    }

    #[test]
    fn invariants_examples() {
        // r1 = 1, v = 0 at l = 0.3: r = 0.09, rdot = 0
        let inv = invariants(&PhysicalState::new(0.09, 0.0, 0.3), &P1).unwrap();
        assert!(inv.h.abs() < 1e-15 && inv.ecc_norm() < 1e-14);
        let l: f64 = 0.4;
        let inv = invariants(&PhysicalState::new(0.5 * l * l, 0.0, l), &P1).unwrap();
        assert!((inv.ecc_norm() - 1.0).abs() < 1e-14 && (inv.h - 0.5).abs() < 1e-14);
        let inv = invariants(&PhysicalState::new(2.0 * l * l, 0.0, l), &P1).unwrap();
        assert!((inv.ecc_norm() - 0.5).abs() < 1e-14 && (inv.h - 0.125).abs() < 1e-14);
        assert!((inv.energy - inv.kinetic - inv.potential).abs() < 1e-15);
        assert!((inv.h - inv.h2).abs() < 1e-14);
    }

    #[test]
    fn radial_collision_state_has_unit_eccentricity() {
        let inv = invariants(&PhysicalState::new(0.7, -0.3, 0.0), &P1).unwrap();
        assert_eq!(inv.h, 0.5);
        assert_eq!(inv.ecc_norm(), 1.0);
    }

    #[test]
    fn h1_lie_derivative_examples() {
        assert_eq!(lie_derivative_h1(1.0, 0.0, 0.0, &P1).unwrap(), (0.0, 0.0));
        let (n, c) = lie_derivative_h1(1.0, 0.3, 0.2, &P1).unwrap();
        assert!((c + 0.048).abs() < 1e-15);
        assert!(((n - c) / c).abs() < 1e-14);
        let (n, c) = lie_derivative_h1(2.0, -0.1, 0.1, &Params { delta: 0.5 }).unwrap();
        assert!((c + 0.003).abs() < 1e-16);
        assert!(((n - c) / c).abs() < 1e-14);
    }

    #[test]
    fn spectra_at_named_points() {
        for d in [0.5, 1.0, 2.0] {
            let p = Params { delta: d };
            let q1 = &equilibria(ChartId::C1, &p)[0];
            let ev = &q1.eigenvalues;
            assert!(ev.iter().all(|z| z.re.abs() < 1e-12));
            let mut im: Vec<f64> = ev.iter().map(|z| z.im).collect();
            im.sort_by(f64::total_cmp);
            assert!(
                (im[0] + 1.0).abs() < 1e-12 && im[1].abs() < 1e-12 && (im[2] - 1.0).abs() < 1e-12
            );

            let inf = equilibria(ChartId::C21Inf, &p);
            let plus = inf[0].in_plane.as_ref().unwrap();
            assert!(plus.iter().all(|z| (z.re + d).abs() < 1e-12 && z.im == 0.0));
            let minus = inf[1].in_plane.as_ref().unwrap();
            assert!((minus[0].re + 2.0 * d).abs() < 1e-12 && (minus[1].re - d).abs() < 1e-12);
        }
    }

    #[test]
    fn c1_time_forms_are_parallel() {
        let c = [1.7, -0.3, 0.25];
        let a = vector_field(ChartId::C1, &c, &P1).unwrap();
        let b = vector_field_c1_rvl_time(&c, &P1).unwrap();
        let k = c[0].powi(3);
        for i in 0..3 {
            assert!((b.dcdtau[i] - k * a.dcdtau[i]).abs() < 1e-14);
        }
        assert!((b.dt_dtau - k * a.dt_dtau).abs() < 1e-15);
        assert!((b.dtheta_dtau - k * a.dtheta_dtau).abs() < 1e-14);
    }

    // Push every chart field forward to the physical field with a numerical
    // chain rule and compare with the PHYS field scaled by dt/dtau.
    #[test]
    fn chart_fields_are_rescaled_physical_field() {
        let s = PhysicalState::new(0.37, 0.8, 0.45);
        let s_neg = PhysicalState::new(0.37, -0.8, 0.45);
        let phys = vector_field(ChartId::Phys, &[s.r, s.rdot, s.l], &P1).unwrap();
        let phys_neg = vector_field(ChartId::Phys, &[s_neg.r, s_neg.rdot, s_neg.l], &P1).unwrap();
        for id in ChartId::ALL {
            let (st, pf) = if matches!(id, ChartId::C23 | ChartId::C23Inf) {
                (s_neg, phys_neg)
            } else {
                (s, phys)
            };
            let p = from_physical(&st, id).unwrap();
            let f = vector_field(id, &p.c, &P1).unwrap();
            let h = 1e-6;
            let mut q = p;
            for i in 0..3 {
                q.c[i] += h * f.dcdtau[i];
            }
            let a = to_physical(&q).unwrap();
            let mut q2 = p;
            for i in 0..3 {
                q2.c[i] -= h * f.dcdtau[i];
            }
            let b = to_physical(&q2).unwrap();
            let dr = (a.r - b.r) / (2.0 * h);
            let drd = (a.rdot - b.rdot) / (2.0 * h);
            let dl = (a.l - b.l) / (2.0 * h);
            let k = f.dt_dtau;
            assert!((dr - k * pf.dcdtau[0]).abs() < 1e-7, "{id} r");
            assert!((drd - k * pf.dcdtau[1]).abs() < 1e-7, "{id} rdot");
            assert!((dl - k * pf.dcdtau[2]).abs() < 1e-7, "{id} l");
            assert!(
                (f.dtheta_dtau - k * pf.dtheta_dtau).abs() < 1e-12,
                "{id} theta"
            );
            assert!(k >= 0.0);
        }
    }

    #[test]
    fn transition_commutes_with_fields_on_blowup_boundary() {
        // At l = 0 the C1 and C2 fields must describe the same curves.
        let p = ChartPoint::new(ChartId::C1, [3.0, 0.2, 0.0]);
        let q = transition(&p, ChartId::C2).unwrap();
        let f1 = vector_field(ChartId::C1, &p.c, &P1).unwrap();
        let f2 = vector_field(ChartId::C2, &q.c, &P1).unwrap();
        // v' ratio must equal the ratio of the angle rates (both are time changes)
        let k = f2.dtheta_dtau / f1.dtheta_dtau;
        assert!((f2.dcdtau[1] - k * f1.dcdtau[1]).abs() < 1e-14);
    }
}
