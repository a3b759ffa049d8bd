//! Invariant sets of the reduced problem and their stable manifolds.
//!
//! On `l = 0` the `C1` system is Hamiltonian with periodic orbits `Gamma1(h)`,
//! `h` in `(0, 1/2)`, around the center `q1 = (1, 0)`. For `l > 0` every
//! bounded orbit limits onto one of them; `H_inf` labels which.

use std::f64::consts::PI;

use nalgebra::{Matrix2, Vector2};
use serde::Serialize;

use crate::charts::{ChartId, ChartPoint};
use crate::dynamics::Params;
use crate::error::{Error, Result};
use crate::integrate::{integrate, Direction, Event, EventKind, IntegratorControls, Termination};
use crate::quadrature;
use crate::roots::illinois;
use crate::series::{self, SeriesCoefficients, SummationMode};

pub fn r1_minus(h: f64) -> f64 {
    1.0 / (1.0 + (2.0 * h).sqrt())
}

pub fn r1_plus(h: f64) -> f64 {
    1.0 / (1.0 - (2.0 * h).sqrt())
}

/// Period of `Gamma1(h)` in `C1` time, `2 pi (1 - 2h)^{-3/2}`.
pub fn period_closed_form(h: f64) -> f64 {
    2.0 * PI * (1.0 - 2.0 * h).powf(-1.5)
}

/// Enclosed area of `Gamma1(h)`, `2 pi ((1 - 2h)^{-1/2} - 1)`.
pub fn action_closed_form(h: f64) -> f64 {
    2.0 * PI * ((1.0 - 2.0 * h).powf(-0.5) - 1.0)
}

fn check_level(h: f64) -> Result<()> {
    if h > 0.0 && h < 0.5 {
        Ok(())
    } else {
        Err(Error::domain(
            ChartId::C1,
            format!("h = {h} outside (0, 1/2)"),
        ))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct OrbitSample {
    pub tau: f64,
    pub r1: f64,
    pub v: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PeriodicOrbitData {
    pub h: f64,
    pub r1_minus: f64,
    pub r1_plus: f64,
    pub period: f64,
    /// `max |H - h|` over the samples.
    pub h_drift: f64,
    pub samples: Vec<OrbitSample>,
}

/// One period of `Gamma1(h)` on `l = 0`, started where it crosses `r1 = 1`
/// inbound. Turning points and period come from `v = 0` crossings.
pub fn gamma1(h: f64) -> Result<PeriodicOrbitData> {
    check_level(h)?;
    let start = ChartPoint::new(ChartId::C1, [1.0, -(2.0 * h).sqrt(), 0.0]);
    let ctl = IntegratorControls::default().fixed_chart();
    let events = [
        Event::radial_turning_point(Direction::Falling, false),
        Event::new(
            "return",
            EventKind::SectionCrossing,
            Direction::Rising,
            false,
            |p| p.c[1],
        ),
    ];
    // two rising crossings are needed; integrate a little over 1.5 periods
    let tr = integrate(
        &start,
        &Params { delta: 0.0 },
        &ctl,
        &events,
        1.6 * period_closed_form(h),
    )?;
    let rising: Vec<_> = tr.events_named("return").collect();
    let falling: Vec<_> = tr.events_named("v=0").collect();
    if rising.len() < 2 || falling.is_empty() {
        return Err(Error::NonConvergence {
            what: format!("turning points of Gamma1({h})"),
            residual: f64::NAN,
        });
    }
    let (t0, t1) = (rising[0].tau, rising[1].tau);
    let samples: Vec<OrbitSample> = tr
        .samples
        .iter()
        .filter(|s| s.tau >= t0 && s.tau <= t1)
        .map(|s| OrbitSample {
            tau: s.tau - t0,
            r1: s.point.c[0],
            v: s.point.c[1],
        })
        .collect();
    let h_drift = tr
        .samples
        .iter()
        .map(|s| (s.h - h).abs())
        .fold(0.0, f64::max);
    Ok(PeriodicOrbitData {
        h,
        r1_minus: rising[0].point.c[0],
        r1_plus: falling[0].point.c[0],
        period: t1 - t0,
        h_drift,
        samples,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ActionFrequency {
    pub h: f64,
    /// Area enclosed by `Gamma1(h)`.
    pub action: f64,
    pub period: f64,
    pub omega0: f64,
}

/// Action and frequency of `Gamma1(h)` by quadrature. With
/// `r1 = m + s sin(theta)` between the turning points the square-root
/// endpoint behaviour cancels and both integrands are smooth.
pub fn action_and_frequency(h: f64) -> Result<ActionFrequency> {
    check_level(h)?;
    let (a, b) = (r1_minus(h), r1_plus(h));
    let (m, s) = (0.5 * (a + b), 0.5 * (b - a));
    // 2h - (r1-1)^2/r1^2 = (1 - 2h)(b - r1)(r1 - a)/r1^2 = (1 - 2h) s^2 cos^2 / r1^2
    let k = (1.0 - 2.0 * h).sqrt();
    let area = quadrature::integrate(
        |th: f64| {
            let c = th.cos();
            k * s * s * c * c / (m + s * th.sin())
        },
        -0.5 * PI,
        0.5 * PI,
        1e-14,
        1e-13,
        2000,
    )?;
    // dr1 / v = r1 dtheta / sqrt(1 - 2h)
    let period = quadrature::integrate(
        |th: f64| (m + s * th.sin()) / k,
        -0.5 * PI,
        0.5 * PI,
        1e-14,
        1e-13,
        2000,
    )?;
    let period = 2.0 * period.value;
    Ok(ActionFrequency {
        h,
        action: 2.0 * area.value,
        period,
        omega0: 2.0 * PI / period,
    })
}

// ---------------------------------------------------------------------------
// H_inf

/// Which conserved-in-the-limit quantity is read off at the cutoffs.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, serde::Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum HMeasure {
    /// `H(r1, v)`; drifts at `O(l^3)`.
    Raw,
    /// `H1 = H + 2 delta l^2 r rdot + 3 delta^2 l^2 r^2`; remaining change
    /// below `l` is `O(l^6)`.
    Normalized,
}

impl HMeasure {
    pub fn order_in_l(self) -> i32 {
        match self {
            HMeasure::Raw => 3,
            HMeasure::Normalized => 6,
        }
    }

    pub fn eval(self, p: &ChartPoint, delta: f64) -> f64 {
        match self {
            HMeasure::Raw => p.hamiltonian(),
            HMeasure::Normalized => p.normalized_hamiltonian(delta),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct HInfinityOptions {
    /// Decreasing pair of angular-momentum cutoffs.
    pub cutoffs: [f64; 2],
    pub measure: HMeasure,
    /// Cutoff values further apart than this are reported as non-convergence.
    pub max_difference: f64,
    pub controls: IntegratorControls,
}

impl HInfinityOptions {
    /// Raw `H` at `l_cut` and `l_cut / 10`.
    pub fn raw(l_cut: f64) -> Self {
        HInfinityOptions {
            cutoffs: [l_cut, l_cut / 10.0],
            measure: HMeasure::Raw,
            max_difference: 0.05,
            controls: IntegratorControls::default().sparse(),
        }
    }

    /// `H1` at `l_cut` and `l_cut / 2`. Bounded orbits well inside the
    /// separatrix make `~ 1/(20 l^9)` revolutions on the way to `l`, so small
    /// cutoffs are out of reach there; the faster decay of the `H1` error
    /// makes moderate cutoffs sufficient.
    pub fn normalized(l_cut: f64) -> Self {
        HInfinityOptions {
            cutoffs: [l_cut, l_cut / 2.0],
            measure: HMeasure::Normalized,
            ..Self::raw(l_cut)
        }
    }
}

impl Default for HInfinityOptions {
    fn default() -> Self {
        Self::raw(1e-3)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct HInfinityEstimate {
    pub value: f64,
    pub error_bound: f64,
    pub l_cutoffs: [f64; 2],
    /// The measure at the two cutoffs.
    pub at_cutoffs: [f64; 2],
    pub measure: HMeasure,
    /// Where the trajectory crossed the second cutoff.
    pub end: ChartPoint,
    pub steps: u64,
}

/// `H_inf` with cutoffs `l_cut` and `l_cut / 10` on raw `H`.
pub fn h_infinity(start: &ChartPoint, p: &Params, l_cut: f64) -> Result<HInfinityEstimate> {
    h_infinity_with(start, p, &HInfinityOptions::raw(l_cut))
}

pub fn h_infinity_with(
    start: &ChartPoint,
    p: &Params,
    opts: &HInfinityOptions,
) -> Result<HInfinityEstimate> {
    let [l1, l2] = opts.cutoffs;
    if !(l1 > l2 && l2 > 0.0) {
        return Err(Error::InvalidArgument(format!(
            "cutoffs {l1}, {l2} must decrease and be positive"
        )));
    }
    let l0 = start.angular_momentum();
    if l0 == 0.0 {
        let h = start.hamiltonian();
        return Ok(HInfinityEstimate {
            value: h,
            error_bound: 0.0,
            l_cutoffs: opts.cutoffs,
            at_cutoffs: [h, h],
            measure: opts.measure,
            end: *start,
            steps: 0,
        });
    }
    let profile = cutoff_profile(start, p, &[l1, l2], opts)?;
    let (value, error_bound) = extrapolate([profile.values[0], profile.values[1]], opts)?;
    Ok(HInfinityEstimate {
        value,
        error_bound,
        l_cutoffs: opts.cutoffs,
        at_cutoffs: [profile.values[0], profile.values[1]],
        measure: opts.measure,
        end: profile.points[1],
        steps: profile.steps,
    })
}

/// Richardson step on the values at the two cutoffs, assuming an error of
/// order `l^q` with `q` from the measure. Returns `(value, |difference|)`.
pub fn extrapolate(values: [f64; 2], opts: &HInfinityOptions) -> Result<(f64, f64)> {
    let [l1, l2] = opts.cutoffs;
    let [h1, h2] = values;
    let diff = (h2 - h1).abs();
    if !(diff <= opts.max_difference) {
        return Err(Error::NonConvergence {
            what: format!("H_inf: {h1} at l = {l1:e}, {h2} at l = {l2:e}"),
            residual: diff,
        });
    }
    let k = (l2 / l1).powi(opts.measure.order_in_l());
    Ok(((h2 - k * h1) / (1.0 - k), diff))
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CutoffProfile {
    pub cutoffs: Vec<f64>,
    pub values: Vec<f64>,
    pub points: Vec<ChartPoint>,
    pub steps: u64,
}

impl CutoffProfile {
    /// Observed exponent `q` in `|value(l) - value(0)| ~ l^q`, from three
    /// consecutive cutoffs with a fixed ratio.
    pub fn empirical_order(&self) -> Option<f64> {
        if self.values.len() < 3 {
            return None;
        }
        let n = self.values.len();
        let d1 = (self.values[n - 2] - self.values[n - 3]).abs();
        let d2 = (self.values[n - 1] - self.values[n - 2]).abs();
        let ratio = self.cutoffs[n - 2] / self.cutoffs[n - 1];
        (d1 > 0.0 && d2 > 0.0).then(|| (d1 / d2).ln() / ratio.ln())
    }
}

/// The measure at each of a decreasing list of cutoffs along one trajectory.
pub fn cutoff_profile(
    start: &ChartPoint,
    p: &Params,
    cutoffs: &[f64],
    opts: &HInfinityOptions,
) -> Result<CutoffProfile> {
    if cutoffs.is_empty() || cutoffs.windows(2).any(|w| w[1] >= w[0]) {
        return Err(Error::InvalidArgument(
            "cutoffs must be a decreasing list".into(),
        ));
    }
    let l0 = start.angular_momentum();
    if l0 <= cutoffs[0] {
        return Err(Error::InvalidArgument(format!(
            "start l = {l0} is not above the cutoff {}",
            cutoffs[0]
        )));
    }
    let last = cutoffs.len() - 1;
    let events: Vec<Event> = cutoffs
        .iter()
        .enumerate()
        .map(|(i, &lc)| {
            Event::new(
                format!("l{i}"),
                EventKind::CoordinateThreshold,
                Direction::Falling,
                i == last,
                move |q| q.angular_momentum() / lc - 1.0,
            )
        })
        .collect();
    let tr = integrate(start, p, &opts.controls, &events, f64::INFINITY)?;
    if tr.termination != Termination::Event(format!("l{last}")) {
        return Err(Error::NonConvergence {
            what: "cutoff not reached".into(),
            residual: f64::NAN,
        });
    }
    let mut points = Vec::with_capacity(cutoffs.len());
    for i in 0..cutoffs.len() {
        let name = format!("l{i}");
        let rec = tr
            .events_named(&name)
            .next()
            .ok_or_else(|| Error::NonConvergence {
                what: format!("cutoff {i} missed"),
                residual: f64::NAN,
            })?;
        points.push(rec.point);
    }
    Ok(CutoffProfile {
        cutoffs: cutoffs.to_vec(),
        values: points
            .iter()
            .map(|q| opts.measure.eval(q, p.delta))
            .collect(),
        points,
        steps: tr.accepted_steps + tr.rejected_steps,
    })
}

// ---------------------------------------------------------------------------
// stable fibers

/// Point of `Gamma1(s)` at angle `phi` (zero at `(r1_minus, 0)`, increasing
/// with the flow), lifted to height `l0`.
pub fn fiber_base_point(s: f64, phi: f64, l0: f64) -> Result<ChartPoint> {
    check_level(s)?;
    let af = action_and_frequency(s)?;
    let tau = phi.rem_euclid(2.0 * PI) / af.omega0;
    let mut q = ChartPoint::new(ChartId::C1, [r1_minus(s), 0.0, 0.0]);
    if tau > 0.0 {
        let ctl = IntegratorControls::default().fixed_chart().sparse();
        q = *integrate(&q, &Params { delta: 0.0 }, &ctl, &[], tau)?.last();
    }
    Ok(ChartPoint::new(ChartId::C1, [q.c[0], q.c[1], l0]))
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct FiberPoint {
    pub h: f64,
    pub phi: f64,
    pub l0: f64,
    /// Level of the base orbit the point was lifted from.
    pub s: f64,
    pub r1: f64,
    pub v: f64,
    pub h_infinity: HInfinityEstimate,
    pub iterations: usize,
}

/// Cutoff used by [`stable_fiber`]; see [`HInfinityOptions::normalized`].
pub const FIBER_L_CUT: f64 = 0.04;

/// Point at height `l0` and angle `phi` whose orbit limits onto
/// `Gamma1(h)`: solves `H_inf(point(s, phi, l0)) = h` for `s`.
pub fn stable_fiber(h: f64, phi: f64, l0: f64, p: &Params) -> Result<FiberPoint> {
    let opts = HInfinityOptions::normalized(FIBER_L_CUT.min(0.5 * l0));
    stable_fiber_with(h, phi, l0, p, &opts)
}

pub fn stable_fiber_with(
    h: f64,
    phi: f64,
    l0: f64,
    p: &Params,
    opts: &HInfinityOptions,
) -> Result<FiberPoint> {
    if !(h > 0.05 && h < 0.45) {
        return Err(Error::InvalidArgument(format!(
            "fiber level h = {h} outside (0.05, 0.45)"
        )));
    }
    if !(0.0..=0.3).contains(&l0) {
        return Err(Error::InvalidArgument(format!(
            "fiber height l0 = {l0} outside [0, 0.3]"
        )));
    }
    let hinf = |s: f64| -> Result<HInfinityEstimate> {
        h_infinity_with(&fiber_base_point(s, phi, l0)?, p, opts)
    };
    let g = |s: f64| -> Result<f64> { Ok(hinf(s)?.value - h) };

    // the root sits close to h; widen the bracket until it changes sign
    let (lo_lim, hi_lim) = (0.01, 0.49);
    let mut w = 0.02;
    let (mut a, mut b) = ((h - w).max(lo_lim), (h + w).min(hi_lim));
    let (mut ga, mut gb) = (g(a)?, g(b)?);
    while ga.signum() == gb.signum() {
        if a <= lo_lim && b >= hi_lim {
            return Err(Error::RootBracket {
                lo: lo_lim,
                hi: hi_lim,
            });
        }
        w *= 3.0;
        a = (h - w).max(lo_lim);
        b = (h + w).min(hi_lim);
        ga = g(a)?;
        gb = g(b)?;
    }
    let root = illinois(g, a, b, 1e-13, 1e-9, 60)?;
    let base = fiber_base_point(root.x, phi, l0)?;
    let est = hinf(root.x)?;
    if (est.value - h).abs() >= 1e-6 {
        return Err(Error::NonConvergence {
            what: format!("fiber of h = {h}"),
            residual: est.value - h,
        });
    }
    Ok(FiberPoint {
        h,
        phi,
        l0,
        s: root.x,
        r1: base.c[0],
        v: base.c[1],
        h_infinity: est,
        iterations: root.iterations,
    })
}

// ---------------------------------------------------------------------------
// stable manifold of q1 by shooting

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ShootResult {
    pub l0: f64,
    pub r1: f64,
    pub v: f64,
    /// Height where the orbit is matched to the manifold asymptotics.
    pub l_match: f64,
    /// `|F|` of the matching conditions at the solution.
    pub residual: f64,
    /// `H` at the matching height.
    pub h_at_match: f64,
    pub iterations: usize,
}

/// Matching height for [`ws_q1_shoot`] at start height `l0`.
pub fn default_match_height(l0: f64) -> f64 {
    if l0 > 0.04 {
        0.02
    } else {
        0.5 * l0
    }
}

/// Point `(r1, v)` at height `l0` on the stable manifold of `q1`.
///
/// Newton iteration on the start point so that the orbit, followed down to
/// the matching height, lands on the manifold predicted there by the
/// (optimally truncated) series. The manifold is an isolated point of each
/// `l = const` plane and nearby orbits rotate around it, so the matching map
/// is well conditioned.
pub fn ws_q1_shoot(p: &Params, l0: f64) -> Result<ShootResult> {
    let sc = series::compute_coefficients(p, 40)?;
    ws_q1_shoot_with(p, l0, &sc, default_match_height(l0))
}

pub fn ws_q1_shoot_with(
    p: &Params,
    l0: f64,
    sc: &SeriesCoefficients,
    l_match: f64,
) -> Result<ShootResult> {
    if !(l0 > 0.0 && l0 <= 0.3) {
        return Err(Error::InvalidArgument(format!(
            "shooting height l0 = {l0} outside (0, 0.3]"
        )));
    }
    if !(l_match > 0.0 && l_match < l0) {
        return Err(Error::InvalidArgument(format!(
            "matching height {l_match} must lie in (0, l0)"
        )));
    }
    let target = series::evaluate_manifold(sc, l_match, SummationMode::TruncatedOptimal)?;
    // start from the two-term truncation so the result does not inherit the
    // summed series
    let leading = series::compute_coefficients(&Params { delta: sc.delta }, 2)?;
    let guess = series::evaluate_manifold(&leading, l0, SummationMode::TruncatedOptimal)?;
    let ctl = IntegratorControls::default().fixed_chart().sparse();
    let ev = [Event::angular_momentum_below(l_match)];
    let shoot = |z: Vector2<f64>| -> Result<(Vector2<f64>, ChartPoint)> {
        let s = ChartPoint::new(ChartId::C1, [z[0], z[1], l0]);
        let tr = integrate(&s, p, &ctl, &ev, f64::INFINITY)?;
        let e = tr.last();
        Ok((Vector2::new(e.c[0] - target.r1, e.c[1] - target.v), *e))
    };
    let mut z = Vector2::new(guess.r1, guess.v);
    let (mut f, mut end) = shoot(z)?;
    let mut iterations = 0;
    // the matching map is only reproducible to the integration noise floor,
    // so stop once Newton stops making progress below it
    let (tol, floor) = (1e-12, 1e-8);
    while f.norm() > tol {
        if iterations >= 20 {
            return Err(Error::NonConvergence {
                what: format!("W^s(q1) shooting at l0 = {l0}"),
                residual: f.norm(),
            });
        }
        iterations += 1;
        let eps = 1e-7;
        let mut jac = Matrix2::zeros();
        for k in 0..2 {
            let mut zk = z;
            zk[k] += eps;
            let (fk, _) = shoot(zk)?;
            jac.set_column(k, &((fk - f) / eps));
        }
        let step = jac.lu().solve(&(-f)).ok_or_else(|| Error::NonConvergence {
            what: "singular shooting Jacobian".into(),
            residual: f.norm(),
        })?;
        let (fn_, en) = shoot(z + step)?;
        if fn_.norm() >= 0.5 * f.norm() && f.norm() < floor {
            break;
        }
        z += step;
        f = fn_;
        end = en;
    }
    if f.norm() >= floor {
        return Err(Error::NonConvergence {
            what: format!("W^s(q1) shooting at l0 = {l0}"),
            residual: f.norm(),
        });
    }
    Ok(ShootResult {
        l0,
        r1: z[0],
        v: z[1],
        l_match,
        residual: f.norm(),
        h_at_match: end.hamiltonian(),
        iterations,
    })
}

// ---------------------------------------------------------------------------
// center manifold at infinity

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CenterManifoldFit {
    /// Leading coefficient in `v11 = c nu^6 (1 + c2 nu^6)`.
    pub c: f64,
    pub c2: f64,
    /// Largest relative misfit over the sampled points.
    pub residual: f64,
    pub points: Vec<[f64; 2]>,
}

/// Samples the center manifold of `p21+` inside `mu11 = 0` and fits its
/// graph. Points are obtained by forward relaxation: the transverse
/// direction contracts at rate `delta` while `nu` creeps at `O(nu^7)`, so
/// after a few dozen time units any start lies on the manifold to rounding.
pub fn center_manifold_fit(p: &Params, nu_range: (f64, f64)) -> Result<CenterManifoldFit> {
    let (lo, hi) = nu_range;
    if !(lo > 0.0 && hi > lo && hi <= 0.3) {
        return Err(Error::InvalidArgument(format!(
            "nu range ({lo}, {hi}) must lie in (0, 0.3]"
        )));
    }
    if !(p.delta > 0.0) {
        return Err(Error::InvalidArgument(
            "center manifold fit needs delta > 0".into(),
        ));
    }
    let n = 16;
    let relax = 40.0 / p.delta;
    let ctl = IntegratorControls {
        atol: 1e-20,
        ..IntegratorControls::default().fixed_chart().sparse()
    };
    let mut points = Vec::with_capacity(n);
    for i in 0..n {
        let nu = lo + (hi - lo) * i as f64 / (n - 1) as f64;
        let guess = -nu.powi(6) / p.delta;
        let start = ChartPoint::new(ChartId::C21Inf, [nu, guess * 0.5, 0.0]);
        let end = integrate(&start, p, &ctl, &[], relax)?;
        let e = end.last();
        points.push([e.c[0], e.c[1]]);
    }
    // v11 / nu^6 = c + (c c2) nu^6
    let m = points.len() as f64;
    let xs: Vec<f64> = points.iter().map(|q| q[0].powi(6)).collect();
    let ys: Vec<f64> = points.iter().map(|q| q[1] / q[0].powi(6)).collect();
    let mx = xs.iter().sum::<f64>() / m;
    let my = ys.iter().sum::<f64>() / m;
    let sxx: f64 = xs.iter().map(|x| (x - mx).powi(2)).sum();
    let sxy: f64 = xs.iter().zip(&ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    let slope = sxy / sxx;
    let c = my - slope * mx;
    let c2 = slope / c;
    let residual = xs
        .iter()
        .zip(&ys)
        .map(|(x, y)| ((c + slope * x) - y).abs() / y.abs())
        .fold(0.0, f64::max);
    if !(residual < 1e-3) || !c.is_finite() {
        return Err(Error::Fit(format!(
            "center manifold graph misfit {residual:e}"
        )));
    }
    Ok(CenterManifoldFit {
        c,
        c2,
        residual,
        points,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn turning_points_and_period() {
        let g = gamma1(0.125).unwrap();
        assert!((g.r1_minus - 2.0 / 3.0).abs() < 1e-8);
        assert!((g.r1_plus - 2.0).abs() < 1e-8);
        assert!((g.period - period_closed_form(0.125)).abs() < 1e-8);
        assert!(g.h_drift < 1e-10);
    }

    #[test]
    fn quadrature_matches_closed_forms() {
        for h in [0.01, 0.125, 0.3, 0.45] {
            let af = action_and_frequency(h).unwrap();
            assert!(
                (af.action - action_closed_form(h)).abs() < 1e-11 * af.action.max(1.0),
                "h = {h}"
            );
            assert!(
                (af.period - period_closed_form(h)).abs() < 1e-10 * af.period,
                "h = {h}"
            );
        }
    }

    #[test]
    fn level_outside_range_is_a_domain_error() {
        assert!(matches!(gamma1(0.5), Err(Error::Domain { .. })));
        assert!(matches!(
            action_and_frequency(0.0),
            Err(Error::Domain { .. })
        ));
    }

    #[test]
    fn h_inf_on_invariant_plane_is_exact() {
        let s = ChartPoint::new(ChartId::C1, [1.3, 0.2, 0.0]);
        let est = h_infinity(&s, &Params { delta: 1.0 }, 1e-3).unwrap();
        assert_eq!(est.value, crate::dynamics::hamiltonian(1.3, 0.2));
        assert_eq!(est.error_bound, 0.0);
    }

    #[test]
    fn center_manifold_leading_coefficient() {
        for d in [1.0, 2.0] {
            let fit = center_manifold_fit(&Params { delta: d }, (0.1, 0.3)).unwrap();
            assert!((fit.c + 1.0 / d).abs() < 0.05 / d, "{fit:?}");
            assert!(
                (fit.c2 + 2.0 / (d * d)).abs() < 0.1 * 2.0 / (d * d),
                "{fit:?}"
            );
        }
    }
}
