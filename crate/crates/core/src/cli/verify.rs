//! Analytic-identity battery.

use std::f64::consts::{PI, SQRT_2, TAU};

use num_rational::BigRational;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::charts::{ChartId, PhysicalState};
use crate::dynamics::{
    equilibria, invariants, lie_derivative_h1, lie_h1_closed_form, vector_field, Params,
};
use crate::integrate::{integrate_physical, Event, IntegratorControls};
use crate::manifolds::{gamma1, r1_minus, r1_plus};
use crate::scalar::Scalar;
use crate::series::compute_coefficients;

use super::config::VerifyConfig;
use super::SCHEMA_VERSION;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CheckResult {
    pub name: String,
    pub residual: f64,
    pub tolerance: f64,
    pub passed: bool,
    pub detail: String,
}

impl CheckResult {
    fn new(name: &str, residual: f64, tolerance: f64, detail: impl Into<String>) -> Self {
        CheckResult {
            name: name.to_string(),
            residual,
            tolerance,
            // NaN residuals fail
            passed: residual <= tolerance,
            detail: detail.into(),
        }
    }

    fn error(name: &str, tolerance: f64, e: impl std::fmt::Display) -> Self {
        CheckResult::new(name, f64::NAN, tolerance, format!("error: {e}"))
    }

    pub fn line(&self) -> String {
        format!(
            "{} {:<22} residual={:.3e} tol={:.0e} {}",
            if self.passed { "PASS" } else { "FAIL" },
            self.name,
            self.residual,
            self.tolerance,
            self.detail
        )
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct VerifyReport {
    pub schema_version: u32,
    pub command: &'static str,
    pub delta: f64,
    pub inject_fault: bool,
    pub checks: Vec<CheckResult>,
}

impl VerifyReport {
    pub fn all_passed(&self) -> bool {
        self.checks.iter().all(|c| c.passed)
    }
}

fn random_state(rng: &mut ChaCha8Rng) -> PhysicalState {
    PhysicalState {
        r: rng.gen_range(0.2..5.0),
        rdot: rng.gen_range(-1.5..1.5),
        l: rng.gen_range(0.0..1.5),
        theta: rng.gen_range(0.0..TAU),
        t: 0.0,
    }
}

fn check_h_vs_ecc(p: &Params, cfg: &VerifyConfig, rng: &mut ChaCha8Rng) -> CheckResult {
    let mut worst: f64 = 0.0;
    for _ in 0..cfg.samples {
        let s = random_state(rng);
        match invariants(&s, p) {
            Ok(inv) => {
                let e = inv.ecc_norm();
                worst = worst.max((inv.h - 0.5 * e * e).abs());
            }
            Err(e) => return CheckResult::error("h_vs_ecc", 1e-12, e),
        }
    }
    CheckResult::new(
        "h_vs_ecc",
        worst,
        1e-12,
        format!("max |H - |ecc|^2/2| over {} states", cfg.samples),
    )
}

fn check_h1_dot(p: &Params, cfg: &VerifyConfig, rng: &mut ChaCha8Rng) -> CheckResult {
    if p.delta == 0.0 {
        return CheckResult::new("h1_dot", 0.0, 1e-10, "delta = 0: H1 is conserved");
    }
    let mut worst: f64 = 0.0;
    for _ in 0..cfg.samples {
        let r1 = rng.gen_range(0.3..5.0);
        let v = rng.gen_range(-1.0..1.0);
        let x = rng.gen_range(1e-3..0.3);
        let numeric = match lie_derivative_h1(r1, v, x, p) {
            Ok((n, _)) => n,
            Err(e) => return CheckResult::error("h1_dot", 1e-10, e),
        };
        let mut closed = lie_h1_closed_form(r1, x, p);
        if cfg.inject_fault {
            closed = -closed;
        }
        worst = worst.max(((numeric - closed) / closed).abs());
    }
    CheckResult::new(
        "h1_dot",
        worst,
        1e-10,
        format!("max relative residual over {} points", cfg.samples),
    )
}

fn check_l_decay(p: &Params, rng: &mut ChaCha8Rng) -> CheckResult {
    let tol = 1e-10;
    let mut worst: f64 = 0.0;
    for _ in 0..20 {
        let s = PhysicalState::new(
            rng.gen_range(0.5..3.0),
            rng.gen_range(-0.5..0.5),
            rng.gen_range(0.3..1.5),
        );
        let tr = match integrate_physical(
            &s,
            p,
            &IntegratorControls::default().sparse(),
            &[Event::physical_time(1.0)],
            1e6,
        ) {
            Ok(tr) => tr,
            Err(e) => return CheckResult::error("l_decay", tol, e),
        };
        let end = tr.last();
        let expect = s.l * (-p.delta).exp();
        worst = worst.max((end.angular_momentum() - expect).abs() + (end.t_phys - 1.0).abs());
    }
    CheckResult::new(
        "l_decay",
        worst,
        tol,
        "max |l(1) - l(0) exp(-delta)| over 20 orbits",
    )
}

fn sorted(mut v: Vec<(f64, f64)>) -> Vec<(f64, f64)> {
    v.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.total_cmp(&b.1)));
    v
}

fn spectrum_distance(got: &[(f64, f64)], want: &[(f64, f64)]) -> f64 {
    if got.len() != want.len() {
        return f64::INFINITY;
    }
    sorted(got.to_vec())
        .iter()
        .zip(sorted(want.to_vec()))
        .map(|(a, b)| (a.0 - b.0).hypot(a.1 - b.1))
        .fold(0.0, f64::max)
}

fn fmt_spectrum(v: &[(f64, f64)]) -> String {
    let parts: Vec<String> = v
        .iter()
        .map(|&(re, im)| {
            if im == 0.0 {
                format!("{re}")
            } else {
                format!("{re}{im:+}i")
            }
        })
        .collect();
    format!("({})", parts.join(", "))
}

fn check_spectra(p: &Params) -> Vec<CheckResult> {
    let tol = 1e-8;
    let d = p.delta;
    let mut out = Vec::new();
    let pairs = |v: &[nalgebra::Complex<f64>]| -> Vec<(f64, f64)> {
        v.iter().map(|z| (z.re, z.im)).collect()
    };

    let q1 = equilibria(ChartId::C1, p);
    let got = pairs(&q1[0].eigenvalues);
    let want = [(0.0, -1.0), (0.0, 0.0), (0.0, 1.0)];
    out.push(CheckResult::new(
        "spectrum_q1",
        spectrum_distance(&got, &want),
        tol,
        fmt_spectrum(&got),
    ));

    let mut worst: f64 = 0.0;
    for v1 in [SQRT_2, -SQRT_2] {
        match vector_field(ChartId::C21, &[0.0, v1, 0.0], p) {
            Ok(f) => worst = worst.max(f.dcdtau.iter().fold(0.0, |m, x| m.max(x.abs()))),
            Err(e) => return vec![CheckResult::error("gamma21", tol, e)],
        }
    }
    let located = equilibria(ChartId::C21, p);
    for e in &located {
        worst = worst.max((e.coords[1].abs() - SQRT_2).abs());
    }
    out.push(CheckResult::new(
        "gamma21",
        worst,
        tol,
        "field at v1 = +-sqrt(2)",
    ));

    if d > 0.0 {
        let inf = equilibria(ChartId::C21Inf, p);
        for (name, want) in [
            ("p21+", vec![(-d, 0.0), (-d, 0.0)]),
            ("p21-", vec![(d, 0.0), (-2.0 * d, 0.0)]),
        ] {
            let label = format!("spectrum_{name}");
            match inf
                .iter()
                .find(|e| e.name == name)
                .and_then(|e| e.in_plane.as_ref())
            {
                Some(ev) => {
                    let got = pairs(ev);
                    out.push(CheckResult::new(
                        &label,
                        spectrum_distance(&got, &want),
                        tol,
                        fmt_spectrum(&got),
                    ));
                }
                None => out.push(CheckResult::error(&label, tol, "equilibrium not found")),
            }
        }
    }
    out
}

fn check_turning_points() -> Vec<CheckResult> {
    let tol = 1e-8;
    let mut worst: f64 = 0.0;
    for h in [0.05, 0.125, 0.3, 0.45] {
        match gamma1(h) {
            Ok(g) => {
                worst = worst
                    .max((g.r1_minus - r1_minus(h)).abs())
                    .max((g.r1_plus - r1_plus(h)).abs());
            }
            Err(e) => return vec![CheckResult::error("turning_points", tol, e)],
        }
    }
    let period = match gamma1(1e-4) {
        Ok(g) => CheckResult::new(
            "harmonic_period",
            (g.period - 2.0 * PI).abs(),
            1e-2,
            format!("p(1e-4) = {}", g.period),
        ),
        Err(e) => CheckResult::error("harmonic_period", 1e-2, e),
    };
    vec![
        CheckResult::new(
            "turning_points",
            worst,
            tol,
            "r1 extremes for h in {0.05, 0.125, 0.3, 0.45}",
        ),
        period,
    ]
}

fn check_series(p: &Params) -> Vec<CheckResult> {
    if p.delta == 0.0 {
        return vec![CheckResult::new(
            "series_leading",
            0.0,
            0.0,
            "delta = 0: no series",
        )];
    }
    let sc = match compute_coefficients(p, 40) {
        Ok(sc) => sc,
        Err(e) => {
            return vec![
                CheckResult::error("series_leading", 0.0, &e),
                CheckResult::error("series_parity", 0.0, e),
            ]
        }
    };
    let d = <BigRational as Scalar>::from_f64(p.delta);
    let zero = <BigRational as Scalar>::from_i64(0);
    let y1 = [
        <BigRational as Scalar>::from_i64(-2) * d.clone() * d.clone(),
        zero.clone(),
    ];
    let y2 = [
        zero,
        <BigRational as Scalar>::from_i64(16) * d.clone() * d.clone() * d,
    ];
    let mut residual = 0.0f64;
    for (got, want) in sc.exact.iter().zip([y1, y2]) {
        for k in 0..2 {
            residual = residual.max((got[k].clone() - want[k].clone()).abs_val().to_f64());
        }
    }
    let detail = format!(
        "Y1 = ({}, {}), Y2 = ({}, {})",
        sc.exact[0][0], sc.exact[0][1], sc.exact[1][0], sc.exact[1][1]
    );
    vec![
        CheckResult::new("series_leading", residual, 0.0, detail),
        CheckResult::new(
            "series_parity",
            if sc.parity_holds() { 0.0 } else { 1.0 },
            0.0,
            format!("odd orders (r, 0), even orders (0, v), N = {}", sc.order),
        ),
    ]
}

/// Every check of the battery at `delta`.
pub fn run_battery(delta: f64, cfg: &VerifyConfig) -> crate::Result<VerifyReport> {
    let p = Params::new(delta)?;
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let mut checks = vec![
        check_h_vs_ecc(&p, cfg, &mut rng),
        check_h1_dot(&p, cfg, &mut rng),
        check_l_decay(&p, &mut rng),
    ];
    checks.extend(check_spectra(&p));
    checks.extend(check_turning_points());
    checks.extend(check_series(&p));
    Ok(VerifyReport {
        schema_version: SCHEMA_VERSION,
        command: "verify",
        delta,
        inject_fault: cfg.inject_fault,
        checks,
    })
}
