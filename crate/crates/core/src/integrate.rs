//! Adaptive Dormand-Prince 5(4) integration in chart time.
//!
//! The state carries the three chart coordinates plus physical time and the
//! unwrapped angle, both integrated as quadratures of `dt/dtau` and
//! `dtheta/dtau`. Events are located on the continuous extension of the
//! method. With chart switching enabled the integrator leaves a chart when
//! the point exits the chart's working region and continues in the preferred
//! chart of [`preferred_chart`].

use std::fmt;
use std::sync::Arc;

use serde::Serialize;

use crate::charts::{from_physical, transition, ChartId, ChartPoint, PhysicalState};
use crate::dynamics::{field_unchecked, Params};
use crate::error::{Error, Result};
use crate::roots::illinois;

const N: usize = 5;
type State = [f64; N];

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct IntegratorControls {
    pub rtol: f64,
    pub atol: f64,
    pub h_init: Option<f64>,
    pub h_max: f64,
    pub max_steps: u64,
    pub chart_switching: bool,
    /// Record every `sample_stride`-th accepted step; `0` keeps only the
    /// endpoints, events and chart switches.
    pub sample_stride: usize,
    /// Cap on stored samples, event records and chart switches each. The
    /// final sample is always kept; counts stay exact.
    pub max_records: usize,
}

impl Default for IntegratorControls {
    fn default() -> Self {
        IntegratorControls {
            rtol: 1e-12,
            atol: 1e-12,
            h_init: None,
            h_max: f64::INFINITY,
            max_steps: 100_000_000,
            chart_switching: true,
            sample_stride: 1,
            max_records: 1_000_000,
        }
    }
}

impl IntegratorControls {
    pub fn with_tol(mut self, tol: f64) -> Self {
        self.rtol = tol;
        self.atol = tol;
        self
    }

    pub fn sparse(mut self) -> Self {
        self.sample_stride = 0;
        self
    }

    pub fn fixed_chart(mut self) -> Self {
        self.chart_switching = false;
        self
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.rtol > 0.0 && self.atol > 0.0) {
            return Err(Error::InvalidArgument("tolerances must be positive".into()));
        }
        if let Some(h) = self.h_init {
            if !(h > 0.0 && h.is_finite()) {
                return Err(Error::InvalidArgument(format!(
                    "h_init = {h} must be positive"
                )));
            }
        }
        if !(self.h_max > 0.0) || self.max_steps == 0 {
            return Err(Error::InvalidArgument(
                "h_max and max_steps must be positive".into(),
            ));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum EventKind {
    CoordinateThreshold,
    SectionCrossing,
    ChartGuard,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum Direction {
    Rising,
    Falling,
    Any,
}

impl Direction {
    fn matches(self, g0: f64, g1: f64) -> bool {
        match self {
            Direction::Rising => g0 < 0.0 && g1 >= 0.0,
            Direction::Falling => g0 > 0.0 && g1 <= 0.0,
            Direction::Any => (g0 < 0.0 && g1 >= 0.0) || (g0 > 0.0 && g1 <= 0.0),
        }
    }
}

type EventFn = Arc<dyn Fn(&ChartPoint) -> f64 + Send + Sync>;

/// Scalar event function on chart points. The function should not depend
/// on the chart the point is expressed in, so events survive chart switches.
#[derive(Clone)]
pub struct Event {
    pub name: String,
    pub kind: EventKind,
    pub direction: Direction,
    pub terminal: bool,
    func: EventFn,
}

impl fmt::Debug for Event {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("Event")
            .field("name", &self.name)
            .field("kind", &self.kind)
            .field("direction", &self.direction)
            .field("terminal", &self.terminal)
            .finish()
    }
}

impl Event {
    pub fn new<F>(
        name: impl Into<String>,
        kind: EventKind,
        direction: Direction,
        terminal: bool,
        f: F,
    ) -> Self
    where
        F: Fn(&ChartPoint) -> f64 + Send + Sync + 'static,
    {
        Event {
            name: name.into(),
            kind,
            direction,
            terminal,
            func: Arc::new(f),
        }
    }

    pub fn value(&self, p: &ChartPoint) -> f64 {
        (self.func)(p)
    }

    /// Terminal event when the angular momentum drops to `l_cut`.
    pub fn angular_momentum_below(l_cut: f64) -> Self {
        Event::new(
            format!("l={l_cut:e}"),
            EventKind::CoordinateThreshold,
            Direction::Falling,
            true,
            move |p| p.angular_momentum() / l_cut - 1.0,
        )
    }

    /// Crossing of the section `v = l*rdot = 0` (turning points in `r1`).
    pub fn radial_turning_point(direction: Direction, terminal: bool) -> Self {
        Event::new(
            "v=0",
            EventKind::SectionCrossing,
            direction,
            terminal,
            |p| p.l2_v().1,
        )
    }

    pub fn physical_time(t: f64) -> Self {
        Event::new(
            format!("t={t}"),
            EventKind::CoordinateThreshold,
            Direction::Rising,
            true,
            move |p| p.t_phys - t,
        )
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Sample {
    pub tau: f64,
    pub point: ChartPoint,
    /// `H` (half the squared eccentricity) at the sample.
    pub h: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct EventRecord {
    pub name: String,
    pub tau: f64,
    pub point: ChartPoint,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ChartSwitch {
    pub tau: f64,
    pub from: ChartId,
    pub to: ChartId,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub enum Termination {
    Horizon,
    Event(String),
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Trajectory {
    pub samples: Vec<Sample>,
    pub events: Vec<EventRecord>,
    pub chart_history: Vec<ChartSwitch>,
    pub switch_count: u64,
    pub termination: Termination,
    pub accepted_steps: u64,
    pub rejected_steps: u64,
    pub final_tau: f64,
}

impl Trajectory {
    pub fn last(&self) -> &ChartPoint {
        &self
            .samples
            .last()
            .expect("trajectory has at least one sample")
            .point
    }

    pub fn events_named<'a>(&'a self, name: &'a str) -> impl Iterator<Item = &'a EventRecord> + 'a {
        self.events.iter().filter(move |e| e.name == name)
    }
}

// ---------------------------------------------------------------------------
// working regions of the atlas

fn rho2_of(p: &ChartPoint) -> f64 {
    let [a, _, c] = p.c;
    match p.chart {
        ChartId::C1 => c * a.sqrt(),
        ChartId::C2 | ChartId::C21 | ChartId::C22 | ChartId::C23 => a,
        ChartId::C21Inf | ChartId::C22Inf | ChartId::C23Inf => 1.0 / a,
        ChartId::Phys | ChartId::Rvl => a.sqrt(),
    }
}

/// Signed distance to the edge of the chart's working region: positive
/// inside. `PHYS` and `RVL` have no edge.
pub fn keep_margin(p: &ChartPoint) -> f64 {
    let [a, b, c] = p.c;
    match p.chart {
        ChartId::Phys | ChartId::Rvl => f64::INFINITY,
        ChartId::C1 => (4.0 - a).min(4.0 - rho2_of(p)),
        ChartId::C2 => (c - 0.2).min(1.0 - c).min(4.0 - a),
        ChartId::C21 => (0.5 - c).min(4.0 - b.abs()).min(4.0 - a),
        ChartId::C22 | ChartId::C23 => (1.0 - c).min(0.5 - b * c).min(4.0 - a),
        ChartId::C21Inf => (1.0 - a).min(4.0 - b.abs()),
        ChartId::C22Inf | ChartId::C23Inf => (1.0 - a).min(1.0 - c),
    }
}

fn preferred_region(q: &ChartPoint) -> bool {
    let [a, b, c] = q.c;
    match q.chart {
        ChartId::C1 => a <= 2.0 && rho2_of(q) <= 2.0,
        ChartId::C2 => (0.35..=0.71).contains(&c) && a <= 2.0,
        ChartId::C21 => c < 0.35 && b.abs() <= 2.0 && a <= 2.0,
        ChartId::C22 | ChartId::C23 => b * c < 0.35 && c <= 0.5 && a <= 2.0,
        ChartId::C21Inf => a <= 0.5 && b.abs() <= 2.0,
        ChartId::C22Inf | ChartId::C23Inf => a <= 0.5 && c <= 0.5,
        ChartId::Phys | ChartId::Rvl => false,
    }
}

const PREFERENCE: [ChartId; 8] = [
    ChartId::C1,
    ChartId::C2,
    ChartId::C21,
    ChartId::C22,
    ChartId::C23,
    ChartId::C21Inf,
    ChartId::C22Inf,
    ChartId::C23Inf,
];

/// The chart the atlas prefers for a point: the first chart, in the order
/// C1, C2, C21, C22, C23, C21INF, C22INF, C23INF, whose core region (half
/// the size of its working region) contains the point.
pub fn preferred_chart(p: &ChartPoint) -> Result<ChartPoint> {
    for id in PREFERENCE {
        if let Ok(q) = transition(p, id) {
            if preferred_region(&q) {
                return Ok(q);
            }
        }
    }
    Err(Error::domain(
        p.chart,
        format!("no admissible chart for point {:?}", p.c),
    ))
}

// ---------------------------------------------------------------------------
// Dormand-Prince 5(4)

const C2: f64 = 1.0 / 5.0;
const C3: f64 = 3.0 / 10.0;
const C4: f64 = 4.0 / 5.0;
const C5: f64 = 8.0 / 9.0;
const A21: f64 = 1.0 / 5.0;
const A31: f64 = 3.0 / 40.0;
const A32: f64 = 9.0 / 40.0;
const A41: f64 = 44.0 / 45.0;
const A42: f64 = -56.0 / 15.0;
const A43: f64 = 32.0 / 9.0;
const A51: f64 = 19372.0 / 6561.0;
const A52: f64 = -25360.0 / 2187.0;
const A53: f64 = 64448.0 / 6561.0;
const A54: f64 = -212.0 / 729.0;
const A61: f64 = 9017.0 / 3168.0;
const A62: f64 = -355.0 / 33.0;
const A63: f64 = 46732.0 / 5247.0;
const A64: f64 = 49.0 / 176.0;
const A65: f64 = -5103.0 / 18656.0;
const A71: f64 = 35.0 / 384.0;
const A73: f64 = 500.0 / 1113.0;
const A74: f64 = 125.0 / 192.0;
const A75: f64 = -2187.0 / 6784.0;
const A76: f64 = 11.0 / 84.0;
const E1: f64 = 71.0 / 57600.0;
const E3: f64 = -71.0 / 16695.0;
const E4: f64 = 71.0 / 1920.0;
const E5: f64 = -17253.0 / 339200.0;
const E6: f64 = 22.0 / 525.0;
const E7: f64 = -1.0 / 40.0;
const D1: f64 = -12715105075.0 / 11282082432.0;
const D3: f64 = 87487479700.0 / 32700410799.0;
const D4: f64 = -10690763975.0 / 1880347072.0;
const D5: f64 = 701980252875.0 / 199316789632.0;
const D6: f64 = -1453857185.0 / 822651844.0;
const D7: f64 = 69997945.0 / 29380423.0;

const BETA: f64 = 0.04;
const EXPO1: f64 = 0.2 - BETA * 0.75;
const SAFE: f64 = 0.9;
const FAC_MIN: f64 = 0.2;
const FAC_MAX: f64 = 10.0;

struct System {
    chart: ChartId,
    delta: f64,
    strict: Vec<usize>,
}

impl System {
    fn new(chart: ChartId, delta: f64) -> Self {
        let strict = match chart {
            ChartId::Phys | ChartId::C1 => vec![0],
            _ => Vec::new(),
        };
        System {
            chart,
            delta,
            strict,
        }
    }

    fn rhs(&self, y: &State) -> Option<State> {
        let c = [y[0], y[1], y[2]];
        if c.iter().any(|x| !x.is_finite()) || self.strict.iter().any(|&i| c[i] <= 0.0) {
            return None;
        }
        let f = field_unchecked(self.chart, &c, self.delta);
        let out = [
            f.dcdtau[0],
            f.dcdtau[1],
            f.dcdtau[2],
            f.dt_dtau,
            f.dtheta_dtau,
        ];
        out.iter().all(|x| x.is_finite()).then_some(out)
    }

    fn admissible(&self, y: &State) -> bool {
        self.chart.contains(&[y[0], y[1], y[2]])
    }
}

fn axpy(y: &State, terms: &[(f64, &State)]) -> State {
    let mut out = *y;
    for (w, k) in terms {
        for i in 0..N {
            out[i] += w * k[i];
        }
    }
    out
}

struct Dense {
    r: [State; 5],
}

impl Dense {
    fn eval(&self, s: f64) -> State {
        let s1 = 1.0 - s;
        let mut out = [0.0; N];
        for i in 0..N {
            out[i] = self.r[0][i]
                + s * (self.r[1][i] + s1 * (self.r[2][i] + s * (self.r[3][i] + s1 * self.r[4][i])));
        }
        out
    }
}

fn to_point(chart: ChartId, y: &State) -> ChartPoint {
    ChartPoint {
        chart,
        c: [y[0], y[1], y[2]],
        t_phys: y[3],
        theta: y[4],
    }
}

fn from_point(p: &ChartPoint) -> State {
    [p.c[0], p.c[1], p.c[2], p.t_phys, p.theta]
}

fn err_scale(ctl: &IntegratorControls, y0: &State, y1: &State, i: usize) -> f64 {
    ctl.atol + ctl.rtol * y0[i].abs().max(y1[i].abs())
}

fn initial_step(sys: &System, ctl: &IntegratorControls, y0: &State, f0: &State, dir: f64) -> f64 {
    let mut dnf = 0.0;
    let mut dny = 0.0;
    for i in 0..N {
        let sk = ctl.atol + ctl.rtol * y0[i].abs();
        dnf += (f0[i] / sk).powi(2);
        dny += (y0[i] / sk).powi(2);
    }
    let mut h = if dnf <= 1e-10 || dny <= 1e-10 {
        1e-6
    } else {
        (dny / dnf).sqrt() * 0.01
    };
    h = h.min(ctl.h_max);
    let y1 = axpy(y0, &[(dir * h, f0)]);
    let der2 = match sys.rhs(&y1) {
        Some(f1) => {
            let mut s = 0.0;
            for i in 0..N {
                let sk = ctl.atol + ctl.rtol * y0[i].abs();
                s += ((f1[i] - f0[i]) / sk).powi(2);
            }
            s.sqrt() / h
        }
        None => return h * 1e-3,
    };
    let der12 = der2.max(dnf.sqrt());
    let h1 = if der12 <= 1e-15 {
        (h * 1e-3).max(1e-6)
    } else {
        (0.01 / der12).powf(0.2)
    };
    (100.0 * h).min(h1).min(ctl.h_max)
}

struct Pinned(Vec<usize>);

impl Pinned {
    fn new(chart: ChartId, y: &State) -> Self {
        let idx = chart
            .radial_indices()
            .iter()
            .copied()
            .filter(|&i| !(matches!(chart, ChartId::Phys | ChartId::C1) && i == 0))
            .filter(|&i| y[i] == 0.0)
            .collect();
        Pinned(idx)
    }

    fn apply(&self, y: &mut State) {
        for &i in &self.0 {
            y[i] = 0.0;
        }
    }
}

fn sample(tau: f64, point: ChartPoint) -> Sample {
    Sample {
        tau,
        point,
        h: point.hamiltonian(),
    }
}

/// Integrate from `start` over chart time `[0, t_end]` (`t_end` may be
/// negative for backward integration or infinite when a terminal event is
/// guaranteed).
pub fn integrate(
    start: &ChartPoint,
    p: &Params,
    controls: &IntegratorControls,
    events: &[Event],
    t_end: f64,
) -> Result<Trajectory> {
    integrate_observed(start, p, controls, events, t_end, &mut |_, _| {})
}

/// [`integrate`] that also hands every accepted step end, event point and
/// chart entry to `observer` as `(tau, point)`, in order.
pub fn integrate_observed(
    start: &ChartPoint,
    p: &Params,
    controls: &IntegratorControls,
    events: &[Event],
    t_end: f64,
    observer: &mut dyn FnMut(f64, &ChartPoint),
) -> Result<Trajectory> {
    controls.validate()?;
    start.chart.check(&start.c)?;
    if t_end.is_nan() || t_end == 0.0 {
        return Err(Error::InvalidArgument(format!(
            "t_end = {t_end} must be non-zero"
        )));
    }
    let dir = t_end.signum();
    let ctl = *controls;

    let mut point = *start;
    let mut history = Vec::new();
    let mut switch_count = 0u64;
    if ctl.chart_switching && keep_margin(&point) <= 0.0 {
        let q = preferred_chart(&point)?;
        if q.chart != point.chart {
            history.push(ChartSwitch {
                tau: 0.0,
                from: point.chart,
                to: q.chart,
            });
            switch_count += 1;
        }
        point = q;
    }

    let mut sys = System::new(point.chart, p.delta);
    let mut y = from_point(&point);
    let mut pinned = Pinned::new(point.chart, &y);
    let mut tau = 0.0;
    let mut samples = vec![sample(tau, point)];
    observer(tau, &point);
    let cap = ctl.max_records.max(1);
    let mut records = Vec::new();
    let mut g_prev: Vec<f64> = events.iter().map(|e| e.value(&point)).collect();
    let mut margin_prev = keep_margin(&point);
    let mut g1 = g_prev.clone();

    let mut f0 = sys
        .rhs(&y)
        .ok_or_else(|| Error::domain(point.chart, "vector field is singular at the start point"))?;
    let mut h = ctl
        .h_init
        .unwrap_or_else(|| initial_step(&sys, &ctl, &y, &f0, dir));
    let mut facold_beta: f64 = 1e-4f64.powf(BETA);
    let mut last_rejected = false;
    let (mut accepted, mut rejected) = (0u64, 0u64);

    loop {
        if accepted + rejected >= ctl.max_steps {
            return Err(Error::StepBudgetExhausted {
                max_steps: ctl.max_steps,
                tau,
            });
        }
        let remaining = (t_end - tau).abs();
        let mut last = false;
        if h >= remaining {
            h = remaining;
            last = true;
        }
        if h < 1e-15 * tau.abs().max(1.0) {
            return Err(Error::StepUnderflow { h, tau });
        }
        let hs = dir * h;

        let attempt = (|| {
            let k1 = f0;
            let k2 = sys.rhs(&axpy(&y, &[(hs * A21, &k1)]))?;
            let k3 = sys.rhs(&axpy(&y, &[(hs * A31, &k1), (hs * A32, &k2)]))?;
            let k4 = sys.rhs(&axpy(
                &y,
                &[(hs * A41, &k1), (hs * A42, &k2), (hs * A43, &k3)],
            ))?;
            let k5 = sys.rhs(&axpy(
                &y,
                &[
                    (hs * A51, &k1),
                    (hs * A52, &k2),
                    (hs * A53, &k3),
                    (hs * A54, &k4),
                ],
            ))?;
            let k6 = sys.rhs(&axpy(
                &y,
                &[
                    (hs * A61, &k1),
                    (hs * A62, &k2),
                    (hs * A63, &k3),
                    (hs * A64, &k4),
                    (hs * A65, &k5),
                ],
            ))?;
            let mut y1 = axpy(
                &y,
                &[
                    (hs * A71, &k1),
                    (hs * A73, &k3),
                    (hs * A74, &k4),
                    (hs * A75, &k5),
                    (hs * A76, &k6),
                ],
            );
            pinned.apply(&mut y1);
            let k7 = sys.rhs(&y1)?;
            Some((k1, k3, k4, k5, k6, k7, y1))
        })();
        let _ = (C2, C3, C4, C5);

        let Some((k1, k3, k4, k5, k6, k7, y1)) = attempt else {
            rejected += 1;
            h *= 0.25;
            last_rejected = true;
            continue;
        };

        let mut err = 0.0;
        for i in 0..N {
            let e =
                hs * (E1 * k1[i] + E3 * k3[i] + E4 * k4[i] + E5 * k5[i] + E6 * k6[i] + E7 * k7[i]);
            err += (e / err_scale(&ctl, &y, &y1, i)).powi(2);
        }
        err = (err / N as f64).sqrt();
        if !err.is_finite() || !sys.admissible(&y1) {
            rejected += 1;
            h *= 0.25;
            last_rejected = true;
            continue;
        }

        let fac11 = err.powf(EXPO1);
        if err > 1.0 {
            rejected += 1;
            h /= (fac11 / SAFE).min(1.0 / FAC_MIN);
            last_rejected = true;
            continue;
        }

        // accepted
        accepted += 1;
        let fac = (fac11 / facold_beta / SAFE).clamp(1.0 / FAC_MAX, 1.0 / FAC_MIN);
        let mut h_new = (h / fac).min(ctl.h_max);
        if last_rejected {
            h_new = h_new.min(h);
        }
        facold_beta = err.max(1e-4).powf(BETA);
        last_rejected = false;

        let tau1 = if last { t_end } else { tau + hs };
        let dense = || {
            let ydiff: State = std::array::from_fn(|i| y1[i] - y[i]);
            let bspl: State = std::array::from_fn(|i| hs * k1[i] - ydiff[i]);
            let r4: State = std::array::from_fn(|i| ydiff[i] - hs * k7[i] - bspl[i]);
            let r5: State = std::array::from_fn(|i| {
                hs * (D1 * k1[i] + D3 * k3[i] + D4 * k4[i] + D5 * k5[i] + D6 * k6[i] + D7 * k7[i])
            });
            Dense {
                r: [y, ydiff, bspl, r4, r5],
            }
        };

        let p1 = to_point(sys.chart, &y1);

        // earliest guard exit
        let mut switch_at: Option<f64> = None;
        let margin1 = if ctl.chart_switching {
            keep_margin(&p1)
        } else {
            f64::INFINITY
        };
        if margin_prev > 0.0 && margin1 <= 0.0 {
            let chart = sys.chart;
            let d = dense();
            let s = locate(
                |s| keep_margin(&to_point(chart, &d.eval(s))),
                margin_prev,
                margin1,
            )?;
            switch_at = Some(s);
        }

        // user events inside the step, before any switch
        let mut hits: Vec<(f64, usize)> = Vec::new();
        for (k, ev) in events.iter().enumerate() {
            g1[k] = ev.value(&p1);
            if ev.direction.matches(g_prev[k], g1[k]) {
                let chart = sys.chart;
                let d = dense();
                let s = locate(|s| ev.value(&to_point(chart, &d.eval(s))), g_prev[k], g1[k])?;
                if switch_at.is_none_or(|sw| s <= sw) {
                    hits.push((s, k));
                }
            }
        }
        hits.sort_by(|a, b| a.0.total_cmp(&b.0));
        for &(s, k) in &hits {
            let mut ys = dense().eval(s);
            pinned.apply(&mut ys);
            let tau_s = tau + s * hs;
            let pe = to_point(sys.chart, &ys);
            observer(tau_s, &pe);
            if records.len() < cap || events[k].terminal {
                records.push(EventRecord {
                    name: events[k].name.clone(),
                    tau: tau_s,
                    point: pe,
                });
            }
            if events[k].terminal {
                samples.push(sample(tau_s, pe));
                return Ok(Trajectory {
                    samples,
                    events: records,
                    chart_history: history,
                    switch_count,
                    termination: Termination::Event(events[k].name.clone()),
                    accepted_steps: accepted,
                    rejected_steps: rejected,
                    final_tau: tau_s,
                });
            }
        }

        if let Some(s) = switch_at {
            let mut ys = dense().eval(s);
            pinned.apply(&mut ys);
            let tau_s = tau + s * hs;
            let exit = to_point(sys.chart, &ys);
            let entry = preferred_chart(&exit)?;
            if history.len() < cap {
                history.push(ChartSwitch {
                    tau: tau_s,
                    from: exit.chart,
                    to: entry.chart,
                });
            }
            switch_count += 1;
            tau = tau_s;
            sys = System::new(entry.chart, p.delta);
            y = from_point(&entry);
            pinned = Pinned::new(entry.chart, &y);
            if samples.len() < cap {
                samples.push(sample(tau, entry));
            }
            observer(tau, &entry);
            g_prev = events.iter().map(|e| e.value(&entry)).collect();
            margin_prev = keep_margin(&entry);
            f0 = sys.rhs(&y).ok_or_else(|| {
                Error::domain(entry.chart, "vector field is singular after chart switch")
            })?;
            h = initial_step(&sys, &ctl, &y, &f0, dir)
                .max(1e-3 * h_new)
                .min(h_new * 1e3);
            facold_beta = 1e-4f64.powf(BETA);
            continue;
        }

        tau = tau1;
        y = y1;
        f0 = k7;
        std::mem::swap(&mut g_prev, &mut g1);
        margin_prev = margin1;
        h = h_new;
        observer(tau, &p1);
        if last
            || (ctl.sample_stride > 0
                && accepted % ctl.sample_stride as u64 == 0
                && samples.len() < cap)
        {
            samples.push(sample(tau, p1));
        }
        if last {
            return Ok(Trajectory {
                samples,
                events: records,
                chart_history: history,
                switch_count,
                termination: Termination::Horizon,
                accepted_steps: accepted,
                rejected_steps: rejected,
                final_tau: tau,
            });
        }
    }
}

fn locate<F: FnMut(f64) -> f64>(mut g: F, g0: f64, g1: f64) -> Result<f64> {
    let scale = 1.0 + g0.abs().max(g1.abs());
    let root = illinois(
        |s| Ok(g(s)),
        0.0,
        1.0,
        4.0 * f64::EPSILON,
        1e-13 * scale,
        80,
    );
    match root {
        Ok(r) => Ok(r.x),
        // the endpoint values bracket the root, so this only happens when the
        // interpolant misbehaves near the endpoints; take the step end
        Err(Error::RootBracket { .. }) => Ok(1.0),
        Err(e) => Err(e),
    }
}

/// Integrate on the physical chart in physical time.
pub fn integrate_physical(
    start: &PhysicalState,
    p: &Params,
    controls: &IntegratorControls,
    events: &[Event],
    t_end: f64,
) -> Result<Trajectory> {
    let p0 = from_physical(start, ChartId::Phys)?;
    integrate(&p0, p, &controls.fixed_chart(), events, t_end)
}

/// End point of the flow after chart time `tau`, keeping only endpoints.
pub fn flow(
    start: &ChartPoint,
    p: &Params,
    controls: &IntegratorControls,
    tau: f64,
) -> Result<ChartPoint> {
    Ok(*integrate(start, p, &controls.sparse(), &[], tau)?.last())
}
