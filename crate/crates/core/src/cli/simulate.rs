//! Batch integration of a set of initial conditions.

use std::fs::File;
use std::io::BufWriter;
use std::path::Path;

use rayon::prelude::*;
use serde::Serialize;

use crate::charts::{to_physical, ChartPoint};
use crate::dynamics::{invariants, Params};
use crate::integrate::{integrate_observed, Direction, Event, EventKind, Termination};
use crate::manifolds::{extrapolate, HMeasure};

use super::config::{InitialConditions, ScenarioConfig};
use super::itinerary::{Itinerary, ItineraryClassifier};
use super::{fmt_f64, write_json, CliError, SCHEMA_VERSION};

pub const TRAJECTORY_COLUMNS: [&str; 13] = [
    "tau", "t_phys", "chart", "c1", "c2", "c3", "r", "rdot", "l", "theta", "E", "H_or_H2",
    "ecc_norm",
];

const UPPER: &str = "l_upper";
const TERMINAL: &str = "l_cut";

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum OrbitStatus {
    Completed,
    Stopped,
    Failed,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct HInfinityReport {
    pub value: f64,
    pub error_bound: f64,
    pub cutoffs: [f64; 2],
    pub at_cutoffs: [f64; 2],
    pub measure: HMeasure,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct EventLog {
    pub name: String,
    pub tau: f64,
    pub t_phys: f64,
    pub l: f64,
    pub r: f64,
    pub h: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct OrbitRecord {
    pub index: usize,
    pub batch: usize,
    pub initial_condition: ChartPoint,
    pub l0: f64,
    pub h0: f64,
    /// `completed`: the terminal cutoff was reached. `stopped`: a horizon
    /// ended the run first. `failed`: see `error`.
    pub status: OrbitStatus,
    pub termination: Option<String>,
    pub error: Option<String>,
    pub h_infinity: Option<HInfinityReport>,
    pub h_infinity_error: Option<String>,
    pub events: Vec<EventLog>,
    pub itinerary: Itinerary,
    pub accepted_steps: u64,
    pub rejected_steps: u64,
    pub chart_switches: u64,
    pub final_tau: Option<f64>,
    pub final_point: Option<ChartPoint>,
    pub trajectory_file: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BatchSummary {
    pub batch: usize,
    pub l_scale: Option<f64>,
    pub orbits: usize,
    pub completed: usize,
    pub h_infinity_count: usize,
    pub h_infinity_mean: Option<f64>,
    pub h_infinity_min: Option<f64>,
    pub h_infinity_max: Option<f64>,
    pub pattern_matches: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RunSummary {
    pub schema_version: u32,
    pub command: &'static str,
    pub delta: f64,
    pub l_cut: f64,
    pub orbit_count: usize,
    pub completed: usize,
    pub failed: usize,
    pub batches: Vec<BatchSummary>,
    pub orbits: Vec<OrbitRecord>,
}

/// One CSV row per observed point.
fn row(tau: f64, p: &ChartPoint, params: &Params) -> [String; 13] {
    let (r, rdot, l, e, ecc) = match to_physical(p).and_then(|s| Ok((s, invariants(&s, params)?))) {
        Ok((s, inv)) => (s.r, s.rdot, s.l, inv.energy, inv.ecc_norm()),
        Err(_) => (
            p.radius(),
            f64::NAN,
            p.angular_momentum(),
            f64::NAN,
            f64::NAN,
        ),
    };
    [
        fmt_f64(tau),
        fmt_f64(p.t_phys),
        p.chart.name().to_string(),
        fmt_f64(p.c[0]),
        fmt_f64(p.c[1]),
        fmt_f64(p.c[2]),
        fmt_f64(r),
        fmt_f64(rdot),
        fmt_f64(l),
        fmt_f64(p.theta),
        fmt_f64(e),
        fmt_f64(p.hamiltonian()),
        fmt_f64(ecc),
    ]
}

struct TrajectoryWriter {
    out: csv::Writer<BufWriter<File>>,
    stride: u64,
    seen: u64,
    last_written: Option<f64>,
    error: Option<String>,
}

impl TrajectoryWriter {
    fn create(path: &Path, stride: u64) -> Result<Self, String> {
        let f = File::create(path).map_err(|e| format!("{}: {e}", path.display()))?;
        let mut out = csv::Writer::from_writer(BufWriter::new(f));
        out.write_record(TRAJECTORY_COLUMNS)
            .map_err(|e| e.to_string())?;
        Ok(TrajectoryWriter {
            out,
            stride,
            seen: 0,
            last_written: None,
            error: None,
        })
    }

    fn write(&mut self, tau: f64, p: &ChartPoint, params: &Params) {
        if self.error.is_none() {
            if let Err(e) = self.out.write_record(row(tau, p, params)) {
                self.error = Some(e.to_string());
            }
            self.last_written = Some(tau);
        }
    }

    fn observe(&mut self, tau: f64, p: &ChartPoint, params: &Params) {
        let take = if self.stride == 0 {
            self.seen == 0
        } else {
            self.seen.is_multiple_of(self.stride)
        };
        self.seen += 1;
        if take {
            self.write(tau, p, params);
        }
    }

    fn finish(mut self, tau: f64, p: &ChartPoint, params: &Params) -> Result<(), String> {
        if self.last_written != Some(tau) {
            self.write(tau, p, params);
        }
        if let Some(e) = self.error {
            return Err(e);
        }
        self.out.flush().map_err(|e| e.to_string())?;
        let inner = self.out.into_inner().map_err(|e| e.to_string())?;
        inner
            .into_inner()
            .map_err(|e| e.to_string())?
            .sync_all()
            .ok();
        Ok(())
    }
}

fn events_for(cfg: &ScenarioConfig, l0: f64) -> Vec<Event> {
    let opts = cfg.h_infinity_options();
    let mut ev = Vec::new();
    let upper = opts.cutoffs[0];
    if l0 > upper {
        ev.push(Event::new(
            UPPER,
            EventKind::CoordinateThreshold,
            Direction::Falling,
            false,
            move |q| q.angular_momentum() / upper - 1.0,
        ));
    }
    let lc = cfg.terminal.l_cut;
    ev.push(Event::new(
        TERMINAL,
        EventKind::CoordinateThreshold,
        Direction::Falling,
        true,
        move |q| q.angular_momentum() / lc - 1.0,
    ));
    if let Some(t) = cfg.terminal.t_max {
        ev.push(Event::physical_time(t));
    }
    ev
}

pub fn orbit_file_name(index: usize) -> String {
    format!("orbit_{index:04}.csv")
}

/// Integrate one orbit, streaming its samples to `dir` when given.
pub fn run_orbit(
    index: usize,
    batch: usize,
    start: ChartPoint,
    cfg: &ScenarioConfig,
    dir: Option<&Path>,
) -> OrbitRecord {
    let params = Params { delta: cfg.delta };
    let l0 = start.angular_momentum();
    let mut rec = OrbitRecord {
        index,
        batch,
        initial_condition: start,
        l0,
        h0: start.hamiltonian(),
        status: OrbitStatus::Failed,
        termination: None,
        error: None,
        h_infinity: None,
        h_infinity_error: None,
        events: Vec::new(),
        itinerary: ItineraryClassifier::new(cfg.itinerary, cfg.delta).finish(),
        accepted_steps: 0,
        rejected_steps: 0,
        chart_switches: 0,
        final_tau: None,
        final_point: None,
        trajectory_file: None,
    };
    if !(l0 > cfg.terminal.l_cut) {
        rec.error = Some(format!(
            "initial l = {l0:e} is not above the terminal cutoff"
        ));
        return rec;
    }

    let mut writer = None;
    if let Some(d) = dir {
        let name = orbit_file_name(index);
        match TrajectoryWriter::create(&d.join(&name), cfg.output.sample_stride) {
            Ok(w) => {
                writer = Some(w);
                rec.trajectory_file = Some(name);
            }
            Err(e) => {
                rec.error = Some(e);
                return rec;
            }
        }
    }

    let events = events_for(cfg, l0);
    let controls = cfg.tolerances.controls();
    let mut classifier = ItineraryClassifier::new(cfg.itinerary, cfg.delta);
    let horizon = cfg.terminal.tau_max.unwrap_or(f64::INFINITY);
    let result = integrate_observed(
        &start,
        &params,
        &controls,
        &events,
        horizon,
        &mut |tau, p| {
            classifier.observe(tau, p);
            if let Some(w) = writer.as_mut() {
                w.observe(tau, p, &params);
            }
        },
    );
    rec.itinerary = classifier.finish();

    let tr = match result {
        Ok(tr) => tr,
        Err(e) => {
            rec.error = Some(e.to_string());
            return rec;
        }
    };
    rec.accepted_steps = tr.accepted_steps;
    rec.rejected_steps = tr.rejected_steps;
    rec.chart_switches = tr.switch_count;
    rec.final_tau = Some(tr.final_tau);
    rec.final_point = Some(*tr.last());
    rec.events = tr
        .events
        .iter()
        .map(|e| EventLog {
            name: e.name.clone(),
            tau: e.tau,
            t_phys: e.point.t_phys,
            l: e.point.angular_momentum(),
            r: e.point.radius(),
            h: e.point.hamiltonian(),
        })
        .collect();
    if let Some(w) = writer {
        if let Err(e) = w.finish(tr.final_tau, tr.last(), &params) {
            rec.error = Some(e);
            return rec;
        }
    }

    match &tr.termination {
        Termination::Event(name) if name == TERMINAL => {
            rec.status = OrbitStatus::Completed;
            rec.termination = Some(name.clone());
        }
        Termination::Event(name) => {
            rec.status = OrbitStatus::Stopped;
            rec.termination = Some(name.clone());
        }
        Termination::Horizon => {
            rec.status = OrbitStatus::Stopped;
            rec.termination = Some("horizon".into());
        }
    }

    let opts = cfg.h_infinity_options();
    let at = |name: &str| {
        tr.events_named(name)
            .next()
            .map(|e| opts.measure.eval(&e.point, cfg.delta))
    };
    match (at(UPPER), at(TERMINAL)) {
        (Some(a), Some(b)) => match extrapolate([a, b], &opts) {
            Ok((value, error_bound)) => {
                rec.h_infinity = Some(HInfinityReport {
                    value,
                    error_bound,
                    cutoffs: opts.cutoffs,
                    at_cutoffs: [a, b],
                    measure: opts.measure,
                })
            }
            Err(e) => rec.h_infinity_error = Some(e.to_string()),
        },
        (None, Some(_)) => rec.h_infinity_error = Some("start is below the upper cutoff".into()),
        _ => rec.h_infinity_error = Some("terminal cutoff not reached".into()),
    }
    rec
}

fn batch_summaries(cfg: &ScenarioConfig, orbits: &[OrbitRecord]) -> Vec<BatchSummary> {
    let scales = match &cfg.initial_conditions {
        Some(InitialConditions::LevelSet(s)) => Some(s.l_scale.clone()),
        _ => None,
    };
    let n_batches = orbits.iter().map(|o| o.batch + 1).max().unwrap_or(0);
    (0..n_batches)
        .map(|b| {
            let members: Vec<&OrbitRecord> = orbits.iter().filter(|o| o.batch == b).collect();
            let h: Vec<f64> = members
                .iter()
                .filter_map(|o| o.h_infinity.as_ref().map(|h| h.value))
                .collect();
            let mean = (!h.is_empty()).then(|| h.iter().sum::<f64>() / h.len() as f64);
            BatchSummary {
                batch: b,
                l_scale: scales.as_ref().and_then(|s| s.get(b).copied()),
                orbits: members.len(),
                completed: members
                    .iter()
                    .filter(|o| o.status == OrbitStatus::Completed)
                    .count(),
                h_infinity_count: h.len(),
                h_infinity_mean: mean,
                h_infinity_min: h.iter().copied().reduce(f64::min),
                h_infinity_max: h.iter().copied().reduce(f64::max),
                pattern_matches: members
                    .iter()
                    .filter(|o| o.itinerary.matches_pattern)
                    .count(),
            }
        })
        .collect()
}

/// Run every initial condition of `cfg` on `jobs` threads and write the
/// trajectories and `summary.json` to `out`.
pub fn cmd_simulate(cfg: &ScenarioConfig, out: &Path, jobs: usize) -> Result<RunSummary, CliError> {
    let ics = cfg.initial_points()?;
    std::fs::create_dir_all(out)
        .map_err(|e| CliError::Runtime(format!("{}: {e}", out.display())))?;
    let dir = cfg.output.trajectories.then_some(out);
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(jobs)
        .build()
        .map_err(|e| CliError::Runtime(e.to_string()))?;
    let total = ics.len();
    let orbits: Vec<OrbitRecord> = pool.install(|| {
        ics.par_iter()
            .enumerate()
            .map(|(i, &(batch, start))| {
                let rec = run_orbit(i, batch, start, cfg, dir);
                let h = rec.h_infinity.as_ref().map_or(f64::NAN, |h| h.value);
                eprintln!(
                    "orbit {:>4}/{total}: {:?}, H_inf = {h:.9}, {} steps",
                    i + 1,
                    rec.status,
                    rec.accepted_steps
                );
                rec
            })
            .collect()
    });
    let summary = RunSummary {
        schema_version: SCHEMA_VERSION,
        command: "simulate",
        delta: cfg.delta,
        l_cut: cfg.terminal.l_cut,
        orbit_count: orbits.len(),
        completed: orbits
            .iter()
            .filter(|o| o.status == OrbitStatus::Completed)
            .count(),
        failed: orbits
            .iter()
            .filter(|o| o.status == OrbitStatus::Failed)
            .count(),
        batches: batch_summaries(cfg, &orbits),
        orbits,
    };
    write_json(&out.join("summary.json"), &summary)?;
    Ok(summary)
}
