//! `series` and `manifold` commands.

use std::fs::File;
use std::io::BufWriter;
use std::path::Path;

use rayon::prelude::*;
use serde::Serialize;

use crate::dynamics::Params;
use crate::manifolds::{
    center_manifold_fit, stable_fiber, ws_q1_shoot, CenterManifoldFit, FiberPoint, ShootResult,
};
use crate::series::{
    compute_coefficients, evaluate_manifold, gevrey_fit, GevreyFit, ManifoldPoint, SummationMode,
};

use super::config::{ManifoldConfig, SeriesConfig};
use super::{fmt_f64, write_json, CliError, SCHEMA_VERSION};

fn runtime(e: impl std::fmt::Display) -> CliError {
    CliError::Runtime(e.to_string())
}

fn csv_writer(path: &Path) -> Result<csv::Writer<BufWriter<File>>, CliError> {
    let f =
        File::create(path).map_err(|e| CliError::Runtime(format!("{}: {e}", path.display())))?;
    Ok(csv::Writer::from_writer(BufWriter::new(f)))
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SeriesSummary {
    pub schema_version: u32,
    pub command: &'static str,
    pub delta: f64,
    pub order: usize,
    pub exact_orders: usize,
    pub parity_holds: bool,
    pub max_residual: f64,
    pub gevrey: Option<GevreyFit>,
    pub gevrey_error: Option<String>,
    pub evaluations: Vec<ManifoldPoint>,
}

/// Writes `series_coefficients.csv`, `manifold_points.csv` (when `l_values`
/// is non-empty) and `series.json`.
pub fn cmd_series(
    delta: f64,
    sc_cfg: &SeriesConfig,
    out: &Path,
) -> Result<SeriesSummary, CliError> {
    std::fs::create_dir_all(out).map_err(runtime)?;
    let p = Params::new(delta).map_err(|e| CliError::Config(e.to_string()))?;
    let sc = compute_coefficients(&p, sc_cfg.order).map_err(runtime)?;
    let path = out.join("series_coefficients.csv");
    let f =
        File::create(&path).map_err(|e| CliError::Runtime(format!("{}: {e}", path.display())))?;
    sc.write_csv(BufWriter::new(f)).map_err(runtime)?;

    let (gevrey, gevrey_error) = match gevrey_fit(&sc) {
        Ok(g) => (Some(g), None),
        Err(e) => (None, Some(e.to_string())),
    };
    let evaluations = sc_cfg
        .l_values
        .iter()
        .map(|&l| evaluate_manifold(&sc, l, sc_cfg.mode))
        .collect::<crate::Result<Vec<_>>>()
        .map_err(runtime)?;
    if !evaluations.is_empty() {
        let mut w = csv_writer(&out.join("manifold_points.csv"))?;
        w.write_record(["l", "r1", "v", "r11", "v11", "error_estimate", "mode"])
            .map_err(runtime)?;
        for m in &evaluations {
            let mode = match m.mode {
                SummationMode::TruncatedOptimal => "truncated_optimal",
                SummationMode::BorelPadeLaplace => "borel_pade_laplace",
            };
            w.write_record([
                fmt_f64(m.l),
                fmt_f64(m.r1),
                fmt_f64(m.v),
                fmt_f64(m.y[0]),
                fmt_f64(m.y[1]),
                fmt_f64(m.error_estimate),
                mode.to_string(),
            ])
            .map_err(runtime)?;
        }
        w.flush().map_err(runtime)?;
    }
    let summary = SeriesSummary {
        schema_version: SCHEMA_VERSION,
        command: "series",
        delta,
        order: sc.order,
        exact_orders: sc.exact.len(),
        parity_holds: sc.parity_holds(),
        max_residual: sc.residual().into_iter().fold(0.0, f64::max),
        gevrey,
        gevrey_error,
        evaluations,
    };
    write_json(&out.join("series.json"), &summary)?;
    Ok(summary)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct FiberOutcome {
    pub h: f64,
    pub phi: f64,
    pub l0: f64,
    pub point: Option<FiberPoint>,
    pub error: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ShootOutcome {
    pub l0: f64,
    pub shot: Option<ShootResult>,
    pub series: Option<ManifoldPoint>,
    pub error: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ManifoldSummary {
    pub schema_version: u32,
    pub command: &'static str,
    pub delta: f64,
    pub fibers: Vec<FiberOutcome>,
    /// Fibers with `|H_inf - h| < 1e-6`.
    pub fibers_converged: usize,
    pub shots: Vec<ShootOutcome>,
    pub center: Option<CenterManifoldFit>,
    pub center_error: Option<String>,
}

impl ManifoldSummary {
    pub fn failures(&self) -> usize {
        self.fibers.iter().filter(|f| f.error.is_some()).count()
            + self.shots.iter().filter(|s| s.error.is_some()).count()
            + usize::from(self.center_error.is_some())
    }
}

/// Fiber sweep, shooting and centre-manifold fit, each when configured.
/// Writes `fibers.csv`, `shoot.csv` and `manifold.json`.
pub fn cmd_manifold(
    delta: f64,
    cfg: &ManifoldConfig,
    out: &Path,
    jobs: usize,
) -> Result<ManifoldSummary, CliError> {
    if cfg.fibers.is_none() && cfg.shoot.is_none() && cfg.center.is_none() {
        return Err(CliError::Config(
            "manifold: nothing to do (set fibers, shoot or center)".into(),
        ));
    }
    std::fs::create_dir_all(out).map_err(runtime)?;
    let p = Params::new(delta).map_err(|e| CliError::Config(e.to_string()))?;
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(jobs)
        .build()
        .map_err(runtime)?;

    let mut fibers = Vec::new();
    if let Some(sweep) = &cfg.fibers {
        let grid: Vec<(f64, f64)> = sweep
            .h
            .iter()
            .flat_map(|&h| {
                (0..sweep.phi_count)
                    .map(move |k| (h, std::f64::consts::TAU * k as f64 / sweep.phi_count as f64))
            })
            .collect();
        fibers = pool.install(|| {
            grid.par_iter()
                .map(|&(h, phi)| match stable_fiber(h, phi, sweep.l0, &p) {
                    Ok(f) => FiberOutcome {
                        h,
                        phi,
                        l0: sweep.l0,
                        point: Some(f),
                        error: None,
                    },
                    Err(e) => FiberOutcome {
                        h,
                        phi,
                        l0: sweep.l0,
                        point: None,
                        error: Some(e.to_string()),
                    },
                })
                .collect()
        });
        let mut w = csv_writer(&out.join("fibers.csv"))?;
        w.write_record([
            "h",
            "phi",
            "l0",
            "s",
            "r1",
            "v",
            "h_infinity",
            "error_bound",
            "iterations",
        ])
        .map_err(runtime)?;
        for f in fibers.iter().filter_map(|f| f.point.as_ref()) {
            w.write_record([
                fmt_f64(f.h),
                fmt_f64(f.phi),
                fmt_f64(f.l0),
                fmt_f64(f.s),
                fmt_f64(f.r1),
                fmt_f64(f.v),
                fmt_f64(f.h_infinity.value),
                fmt_f64(f.h_infinity.error_bound),
                f.iterations.to_string(),
            ])
            .map_err(runtime)?;
        }
        w.flush().map_err(runtime)?;
    }

    let mut shots = Vec::new();
    if let Some(sh) = &cfg.shoot {
        let sc = if sh.compare {
            Some(compute_coefficients(&p, 40).map_err(runtime)?)
        } else {
            None
        };
        shots = pool.install(|| {
            sh.l0
                .par_iter()
                .map(|&l0| {
                    let shot = ws_q1_shoot(&p, l0);
                    let series = sc
                        .as_ref()
                        .map(|sc| evaluate_manifold(sc, l0, SummationMode::BorelPadeLaplace));
                    let err =
                        shot.as_ref()
                            .err()
                            .map(|e| e.to_string())
                            .or_else(|| match &series {
                                Some(Err(e)) => Some(e.to_string()),
                                _ => None,
                            });
                    ShootOutcome {
                        l0,
                        shot: shot.ok(),
                        series: series.and_then(|s| s.ok()),
                        error: err,
                    }
                })
                .collect()
        });
        let mut w = csv_writer(&out.join("shoot.csv"))?;
        w.write_record([
            "l0",
            "r1",
            "v",
            "l_match",
            "residual",
            "iterations",
            "r1_series",
            "v_series",
        ])
        .map_err(runtime)?;
        for s in &shots {
            if let Some(r) = &s.shot {
                let (rs, vs) = s
                    .series
                    .as_ref()
                    .map_or((f64::NAN, f64::NAN), |m| (m.r1, m.v));
                w.write_record([
                    fmt_f64(r.l0),
                    fmt_f64(r.r1),
                    fmt_f64(r.v),
                    fmt_f64(r.l_match),
                    fmt_f64(r.residual),
                    r.iterations.to_string(),
                    fmt_f64(rs),
                    fmt_f64(vs),
                ])
                .map_err(runtime)?;
            }
        }
        w.flush().map_err(runtime)?;
    }

    let (center, center_error) = match &cfg.center {
        Some(c) => match center_manifold_fit(&p, (c.nu_range[0], c.nu_range[1])) {
            Ok(f) => (Some(f), None),
            Err(e) => (None, Some(e.to_string())),
        },
        None => (None, None),
    };

    let summary = ManifoldSummary {
        schema_version: SCHEMA_VERSION,
        command: "manifold",
        delta,
        fibers_converged: fibers
            .iter()
            .filter_map(|f| f.point.as_ref())
            .filter(|f| (f.h_infinity.value - f.h).abs() < 1e-6)
            .count(),
        fibers,
        shots,
        center,
        center_error,
    };
    write_json(&out.join("manifold.json"), &summary)?;
    Ok(summary)
}
