//! Level sets of `H` on the `l = 0` plane.
//!
//! With `w = 1 - 1/r1` the Hamiltonian is `(v^2 + w^2) / 2`, so each level is
//! the circle of radius `sqrt(2h)` in `(w, v)`, cut at `w = 1` (`r1 = inf`).
//! In `C2` coordinates `l2 = sqrt(1 - w)` and the cut closes at `l2 = 0`.

use std::path::Path;

use serde::Serialize;

use crate::charts::ChartId;
use crate::error::{Error, Result};

use super::{fmt_f64, write_json, CliError, SCHEMA_VERSION};

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct LevelPoint {
    /// Zero at the inner turning point, increasing with the flow.
    pub phi: f64,
    pub r1: f64,
    pub v: f64,
    pub l2: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct LevelSet {
    pub h: f64,
    pub r1_min: f64,
    /// `inf` from the separatrix on.
    pub r1_max: f64,
    pub bounded: bool,
    pub points: Vec<LevelPoint>,
}

/// Polyline of `H = h` with `n` vertices (one vertex at `h = 0`).
pub fn level_set(h: f64, n: usize) -> Result<LevelSet> {
    if !(0.0..=1.0).contains(&h) {
        return Err(Error::domain(
            ChartId::C1,
            format!("level h = {h} outside [0, 1]"),
        ));
    }
    if n < 3 {
        return Err(Error::InvalidArgument(format!("{n} vertices are too few")));
    }
    let s = (2.0 * h).sqrt();
    let r1_min = 1.0 / (1.0 + s);
    let bounded = s < 1.0;
    let r1_max = if bounded {
        1.0 / (1.0 - s)
    } else {
        f64::INFINITY
    };
    if h == 0.0 {
        return Ok(LevelSet {
            h,
            r1_min: 1.0,
            r1_max: 1.0,
            bounded,
            points: vec![LevelPoint {
                phi: 0.0,
                r1: 1.0,
                v: 0.0,
                l2: 1.0,
            }],
        });
    }
    // w = -s cos(phi) reaches 1 at |phi| = acos(-1/s)
    let (a, b) = if bounded {
        (0.0, 2.0 * std::f64::consts::PI)
    } else {
        let pc = (-1.0 / s).acos();
        (-pc, pc)
    };
    let points = (0..n)
        .map(|k| {
            let phi = a + (b - a) * k as f64 / (n - 1) as f64;
            let (sn, cs) = phi.sin_cos();
            let w = (-s * cs).min(1.0);
            let gap = 1.0 - w;
            let r1 = if gap > 0.0 { 1.0 / gap } else { f64::INFINITY };
            LevelPoint {
                phi,
                r1,
                v: s * sn,
                l2: gap.sqrt(),
            }
        })
        .collect();
    Ok(LevelSet {
        h,
        r1_min,
        r1_max,
        bounded,
        points,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PortraitLevel {
    pub h: f64,
    pub file: Option<String>,
    pub vertices: usize,
    pub r1_min: Option<f64>,
    pub r1_max: Option<f64>,
    pub bounded: Option<bool>,
    pub error: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PortraitSummary {
    pub schema_version: u32,
    pub command: &'static str,
    pub levels: Vec<PortraitLevel>,
}

impl PortraitSummary {
    pub fn failures(&self) -> usize {
        self.levels.iter().filter(|l| l.error.is_some()).count()
    }
}

fn write_level(path: &Path, set: &LevelSet) -> std::result::Result<(), CliError> {
    let mut w = csv::Writer::from_path(path).map_err(|e| CliError::Runtime(e.to_string()))?;
    let run = |w: &mut csv::Writer<std::fs::File>| -> csv::Result<()> {
        w.write_record(["phi", "r1", "v", "l2"])?;
        for p in &set.points {
            w.write_record([fmt_f64(p.phi), fmt_f64(p.r1), fmt_f64(p.v), fmt_f64(p.l2)])?;
        }
        w.flush()?;
        Ok(())
    };
    run(&mut w).map_err(|e| CliError::Runtime(format!("{}: {e}", path.display())))
}

/// Writes `portrait_<k>.csv` per level and `portrait.json`. Bad levels are
/// reported in the summary and skipped.
pub fn cmd_portrait(
    h_list: &[f64],
    n: usize,
    out: &Path,
) -> std::result::Result<PortraitSummary, CliError> {
    if h_list.is_empty() {
        return Err(CliError::Config("portrait.h_list is empty".into()));
    }
    std::fs::create_dir_all(out)
        .map_err(|e| CliError::Runtime(format!("{}: {e}", out.display())))?;
    let mut levels = Vec::new();
    for (k, &h) in h_list.iter().enumerate() {
        match level_set(h, n) {
            Ok(set) => {
                let name = format!("portrait_{k:02}.csv");
                write_level(&out.join(&name), &set)?;
                levels.push(PortraitLevel {
                    h,
                    file: Some(name),
                    vertices: set.points.len(),
                    r1_min: Some(set.r1_min),
                    r1_max: set.r1_max.is_finite().then_some(set.r1_max),
                    bounded: Some(set.bounded),
                    error: None,
                });
            }
            Err(e) => levels.push(PortraitLevel {
                h,
                file: None,
                vertices: 0,
                r1_min: None,
                r1_max: None,
                bounded: None,
                error: Some(e.to_string()),
            }),
        }
    }
    let summary = PortraitSummary {
        schema_version: SCHEMA_VERSION,
        command: "portrait",
        levels,
    };
    write_json(&out.join("portrait.json"), &summary)?;
    Ok(summary)
}
