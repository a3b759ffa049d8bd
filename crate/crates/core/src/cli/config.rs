//! Scenario files.
//!
//! A scenario is a JSON document. Unknown keys are rejected and every numeric
//! field is range-checked by [`ScenarioConfig::validate`]. Sections that a
//! command does not use are ignored by that command.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::charts::{ChartId, ChartPoint, PhysicalState};
use crate::integrate::IntegratorControls;
use crate::manifolds::{HInfinityOptions, HMeasure};
use crate::series::SummationMode;

use super::CliError;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Mode {
    Simulate,
    Portrait,
    Series,
    Manifold,
    Verify,
}

impl Mode {
    pub fn name(self) -> &'static str {
        match self {
            Mode::Simulate => "simulate",
            Mode::Portrait => "portrait",
            Mode::Series => "series",
            Mode::Manifold => "manifold",
            Mode::Verify => "verify",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScenarioConfig {
    pub delta: f64,
    /// When present it must name the command that runs the file.
    #[serde(default)]
    pub mode: Option<Mode>,
    #[serde(default)]
    pub initial_conditions: Option<InitialConditions>,
    #[serde(default)]
    pub tolerances: Tolerances,
    #[serde(default)]
    pub terminal: Terminal,
    #[serde(default)]
    pub h_infinity: HInfinityConfig,
    #[serde(default)]
    pub itinerary: ItineraryThresholds,
    #[serde(default)]
    pub output: OutputConfig,
    #[serde(default)]
    pub portrait: PortraitConfig,
    #[serde(default)]
    pub series: SeriesConfig,
    #[serde(default)]
    pub manifold: ManifoldConfig,
    #[serde(default)]
    pub verify: VerifyConfig,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", deny_unknown_fields)]
pub enum InitialConditions {
    Explicit(Vec<InitialCondition>),
    LevelSet(LevelSetSampler),
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", deny_unknown_fields)]
pub enum InitialCondition {
    Chart { chart: ChartId, c: [f64; 3] },
    Physical { r: f64, rdot: f64, l: f64 },
}

impl InitialCondition {
    pub fn to_point(self) -> crate::Result<ChartPoint> {
        match self {
            InitialCondition::Chart { chart, c } => {
                chart.check(&c)?;
                Ok(ChartPoint::new(chart, c))
            }
            InitialCondition::Physical { r, rdot, l } => {
                crate::charts::from_physical(&PhysicalState::new(r, rdot, l), ChartId::Rvl)
            }
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Branch {
    /// `l2^2 = 1 + sqrt(2h)`, inside `r1 = 1`; exists for every `h`.
    Inner,
    /// `l2^2 = 1 - sqrt(2h)`; needs `h <= 1/2`.
    Outer,
}

/// Points `(rho2, 0, l2)` of `C2` on the level set `H2(l2, 0) = h`, with
/// `rho2` at the midpoints of `count` equal cells of `rho2_range`. Each entry
/// of `l_scale` multiplies `rho2`, and with it `l = rho2 l2`, and forms one
/// batch.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LevelSetSampler {
    pub h: f64,
    pub count: usize,
    pub rho2_range: [f64; 2],
    #[serde(default = "default_l_scale")]
    pub l_scale: Vec<f64>,
    #[serde(default = "default_branch")]
    pub branch: Branch,
}

fn default_l_scale() -> Vec<f64> {
    vec![1.0]
}

fn default_branch() -> Branch {
    Branch::Inner
}

impl LevelSetSampler {
    pub fn l2(&self) -> f64 {
        let s = (2.0 * self.h).sqrt();
        match self.branch {
            Branch::Inner => (1.0 + s).sqrt(),
            Branch::Outer => (1.0 - s).sqrt(),
        }
    }

    /// `(batch, point)` for every initial condition, batch-major.
    pub fn points(&self) -> Vec<(usize, ChartPoint)> {
        let l2 = self.l2();
        let [a, b] = self.rho2_range;
        let mut out = Vec::with_capacity(self.count * self.l_scale.len());
        for (batch, &k) in self.l_scale.iter().enumerate() {
            for i in 0..self.count {
                let rho = a + (b - a) * (i as f64 + 0.5) / self.count as f64;
                out.push((batch, ChartPoint::new(ChartId::C2, [rho * k, 0.0, l2])));
            }
        }
        out
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct Tolerances {
    pub rtol: f64,
    pub atol: f64,
    pub h_max: Option<f64>,
    pub max_steps: u64,
    pub chart_switching: bool,
}

impl Default for Tolerances {
    fn default() -> Self {
        let c = IntegratorControls::default();
        Tolerances {
            rtol: c.rtol,
            atol: c.atol,
            h_max: None,
            max_steps: c.max_steps,
            chart_switching: true,
        }
    }
}

impl Tolerances {
    pub fn controls(&self) -> IntegratorControls {
        IntegratorControls {
            rtol: self.rtol,
            atol: self.atol,
            h_max: self.h_max.unwrap_or(f64::INFINITY),
            max_steps: self.max_steps,
            chart_switching: self.chart_switching,
            sample_stride: 0,
            max_records: 10_000,
            ..IntegratorControls::default()
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct Terminal {
    /// Stop when the angular momentum falls to this value.
    pub l_cut: f64,
    /// Optional chart-time horizon.
    pub tau_max: Option<f64>,
    /// Optional physical-time horizon.
    pub t_max: Option<f64>,
}

impl Default for Terminal {
    fn default() -> Self {
        Terminal {
            l_cut: 1e-4,
            tau_max: None,
            t_max: None,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct HInfinityConfig {
    pub measure: HMeasure,
    /// The second cutoff is `terminal.l_cut`; the first defaults to
    /// `10 l_cut` for `raw` and `2 l_cut` for `normalized`.
    pub upper_cutoff: Option<f64>,
    pub max_difference: f64,
}

impl Default for HInfinityConfig {
    fn default() -> Self {
        HInfinityConfig {
            measure: HMeasure::Raw,
            upper_cutoff: None,
            max_difference: 0.05,
        }
    }
}

impl HInfinityConfig {
    pub fn options(&self, l_cut: f64) -> HInfinityOptions {
        let mut o = match self.measure {
            HMeasure::Raw => HInfinityOptions::raw(10.0 * l_cut),
            HMeasure::Normalized => HInfinityOptions::normalized(2.0 * l_cut),
        };
        if let Some(u) = self.upper_cutoff {
            o.cutoffs[0] = u;
        }
        o.cutoffs[1] = l_cut;
        o.max_difference = self.max_difference;
        o
    }
}

/// Bands of the itinerary classifier.
///
/// Capture: a run of steps inside the band `nu < nu_max`, `v11 / (-nu^6 /
/// delta)` in `[1/band_factor, band_factor]`, along which `r` changes
/// monotonically by at least a factor `capture_min_ratio`. Oscillation: the
/// arc between two successive maxima of `r` at which `l2 <= l2_small`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ItineraryThresholds {
    pub nu_max: f64,
    pub band_factor: f64,
    pub capture_min_ratio: f64,
    pub l2_small: f64,
    /// Oscillations after the capture needed for the pattern.
    pub min_oscillations: u64,
}

impl Default for ItineraryThresholds {
    fn default() -> Self {
        ItineraryThresholds {
            nu_max: 0.5,
            band_factor: 3.0,
            capture_min_ratio: 2.0,
            l2_small: 0.2,
            min_oscillations: 2,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct OutputConfig {
    pub dir: Option<PathBuf>,
    /// Write every n-th accepted step to the trajectory files; `0` writes
    /// only the first and last rows.
    pub sample_stride: u64,
    pub trajectories: bool,
}

impl Default for OutputConfig {
    fn default() -> Self {
        OutputConfig {
            dir: None,
            sample_stride: 1,
            trajectories: true,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct PortraitConfig {
    pub h_list: Vec<f64>,
    pub points: usize,
}

impl Default for PortraitConfig {
    fn default() -> Self {
        PortraitConfig {
            h_list: vec![0.0, 0.125, 0.3, 0.5, 0.8],
            points: 721,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SeriesConfig {
    pub order: usize,
    pub l_values: Vec<f64>,
    pub mode: SummationMode,
}

impl Default for SeriesConfig {
    fn default() -> Self {
        SeriesConfig {
            order: 40,
            l_values: Vec::new(),
            mode: SummationMode::BorelPadeLaplace,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize, Default)]
#[serde(deny_unknown_fields, default)]
pub struct ManifoldConfig {
    pub fibers: Option<FiberSweep>,
    pub shoot: Option<ShootConfig>,
    pub center: Option<CenterConfig>,
}

/// Grid `h x phi` at one height; `phi` takes `phi_count` equispaced angles
/// in `[0, 2 pi)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FiberSweep {
    pub h: Vec<f64>,
    pub phi_count: usize,
    pub l0: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ShootConfig {
    pub l0: Vec<f64>,
    #[serde(default)]
    pub compare: bool,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CenterConfig {
    pub nu_range: [f64; 2],
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct VerifyConfig {
    pub samples: usize,
    pub seed: u64,
    /// Negative control: flip the sign of the closed form of `dH1/dtau`.
    pub inject_fault: bool,
}

impl Default for VerifyConfig {
    fn default() -> Self {
        VerifyConfig {
            samples: 10_000,
            seed: 20_240_601,
            inject_fault: false,
        }
    }
}

fn check(ok: bool, msg: impl FnOnce() -> String) -> Result<(), CliError> {
    if ok {
        Ok(())
    } else {
        Err(CliError::Config(msg()))
    }
}

fn positive(x: f64) -> bool {
    x > 0.0 && x.is_finite()
}

impl ScenarioConfig {
    pub fn from_json(text: &str) -> Result<Self, CliError> {
        let cfg: ScenarioConfig =
            serde_json::from_str(text).map_err(|e| CliError::Config(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self, CliError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| CliError::Config(format!("cannot read {}: {e}", path.display())))?;
        Self::from_json(&text).map_err(|e| match e {
            CliError::Config(m) => CliError::Config(format!("{}: {m}", path.display())),
            other => other,
        })
    }

    pub fn validate(&self) -> Result<(), CliError> {
        check(self.delta >= 0.0 && self.delta.is_finite(), || {
            format!("delta = {} must be finite and >= 0", self.delta)
        })?;

        let t = &self.tolerances;
        check(positive(t.rtol) && t.rtol < 1.0, || {
            format!("tolerances.rtol = {} not in (0, 1)", t.rtol)
        })?;
        check(positive(t.atol) && t.atol < 1.0, || {
            format!("tolerances.atol = {} not in (0, 1)", t.atol)
        })?;
        check(t.max_steps > 0, || {
            "tolerances.max_steps must be positive".into()
        })?;
        if let Some(h) = t.h_max {
            check(positive(h), || {
                format!("tolerances.h_max = {h} must be positive")
            })?;
        }

        let term = &self.terminal;
        check(positive(term.l_cut), || {
            format!("terminal.l_cut = {} must be positive", term.l_cut)
        })?;
        for (name, v) in [("tau_max", term.tau_max), ("t_max", term.t_max)] {
            if let Some(v) = v {
                check(positive(v), || {
                    format!("terminal.{name} = {v} must be positive")
                })?;
            }
        }

        let hi = &self.h_infinity;
        if let Some(u) = hi.upper_cutoff {
            check(positive(u) && u > term.l_cut, || {
                format!(
                    "h_infinity.upper_cutoff = {u} must exceed terminal.l_cut = {}",
                    term.l_cut
                )
            })?;
        }
        check(positive(hi.max_difference), || {
            "h_infinity.max_difference must be positive".into()
        })?;

        let it = &self.itinerary;
        check(positive(it.nu_max), || {
            "itinerary.nu_max must be positive".into()
        })?;
        check(it.band_factor > 1.0 && it.band_factor.is_finite(), || {
            "itinerary.band_factor must exceed 1".into()
        })?;
        check(
            it.capture_min_ratio >= 1.0 && it.capture_min_ratio.is_finite(),
            || "itinerary.capture_min_ratio must be >= 1".into(),
        )?;
        check(positive(it.l2_small), || {
            "itinerary.l2_small must be positive".into()
        })?;

        if let Some(ics) = &self.initial_conditions {
            match ics {
                InitialConditions::Explicit(list) => {
                    for (i, ic) in list.iter().enumerate() {
                        ic.to_point().map_err(|e| {
                            CliError::Config(format!("initial_conditions[{i}]: {e}"))
                        })?;
                    }
                }
                InitialConditions::LevelSet(s) => {
                    check(s.h >= 0.0 && s.h.is_finite(), || {
                        format!("level_set.h = {} must be >= 0", s.h)
                    })?;
                    check(s.branch == Branch::Inner || s.h <= 0.5, || {
                        "level_set.branch = outer needs h <= 1/2".into()
                    })?;
                    let [a, b] = s.rho2_range;
                    check(positive(a) && b > a && b.is_finite(), || {
                        format!("level_set.rho2_range = [{a}, {b}] must be increasing and positive")
                    })?;
                    check(
                        !s.l_scale.is_empty() && s.l_scale.iter().all(|&k| positive(k)),
                        || "level_set.l_scale must be a non-empty list of positive factors".into(),
                    )?;
                }
            }
        }

        check(
            self.output
                .dir
                .as_ref()
                .is_none_or(|d| !d.as_os_str().is_empty()),
            || "output.dir must not be empty".into(),
        )?;

        let pc = &self.portrait;
        check(pc.h_list.iter().all(|h| h.is_finite()), || {
            "portrait.h_list must be finite".into()
        })?;
        check(pc.points >= 3, || {
            "portrait.points must be at least 3".into()
        })?;

        let sc = &self.series;
        check((2..=400).contains(&sc.order), || {
            format!("series.order = {} not in [2, 400]", sc.order)
        })?;
        check(sc.l_values.iter().all(|&l| positive(l)), || {
            "series.l_values must be positive".into()
        })?;

        if let Some(f) = &self.manifold.fibers {
            check(
                !f.h.is_empty() && f.h.iter().all(|&h| h > 0.05 && h < 0.45),
                || "manifold.fibers.h must lie in (0.05, 0.45)".into(),
            )?;
            check(f.phi_count > 0, || {
                "manifold.fibers.phi_count must be positive".into()
            })?;
            check(positive(f.l0) && f.l0 <= 0.3, || {
                "manifold.fibers.l0 must lie in (0, 0.3]".into()
            })?;
        }
        if let Some(s) = &self.manifold.shoot {
            check(s.l0.iter().all(|&l| positive(l) && l <= 0.3), || {
                "manifold.shoot.l0 must lie in (0, 0.3]".into()
            })?;
        }
        if let Some(c) = &self.manifold.center {
            let [a, b] = c.nu_range;
            check(positive(a) && b > a && b <= 0.3, || {
                format!("manifold.center.nu_range = [{a}, {b}] must be increasing inside (0, 0.3]")
            })?;
        }

        check(self.verify.samples > 0, || {
            "verify.samples must be positive".into()
        })?;
        Ok(())
    }

    /// Initial conditions as `(batch, point)`; explicit lists form batch 0.
    pub fn initial_points(&self) -> Result<Vec<(usize, ChartPoint)>, CliError> {
        let pts = match &self.initial_conditions {
            None => Vec::new(),
            Some(InitialConditions::Explicit(list)) => list
                .iter()
                .map(|ic| ic.to_point().map(|p| (0, p)))
                .collect::<crate::Result<Vec<_>>>()
                .map_err(|e| CliError::Config(e.to_string()))?,
            Some(InitialConditions::LevelSet(s)) => s.points(),
        };
        if pts.is_empty() {
            return Err(CliError::Config("no initial conditions".into()));
        }
        Ok(pts)
    }

    pub fn h_infinity_options(&self) -> HInfinityOptions {
        let mut o = self.h_infinity.options(self.terminal.l_cut);
        o.controls = IntegratorControls {
            sample_stride: 0,
            ..self.tolerances.controls()
        };
        o
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn minimal_config_parses() {
        let c = ScenarioConfig::from_json(r#"{"delta": 1.0}"#).unwrap();
        assert_eq!(c.terminal.l_cut, 1e-4);
        assert!(
            matches!(c.initial_points(), Err(CliError::Config(m)) if m == "no initial conditions")
        );
    }

    #[test]
    fn unknown_keys_are_rejected() {
        assert!(ScenarioConfig::from_json(r#"{"delta": 1.0, "dleta": 2}"#).is_err());
        assert!(
            ScenarioConfig::from_json(r#"{"delta": 1.0, "terminal": {"lcut": 1e-3}}"#).is_err()
        );
    }

    #[test]
    fn ranges_are_checked() {
        assert!(ScenarioConfig::from_json(r#"{"delta": -1.0}"#).is_err());
        assert!(ScenarioConfig::from_json(r#"{"delta": 1.0, "tolerances": {"rtol": 0}}"#).is_err());
        let bad = r#"{"delta": 1, "initial_conditions": {"level_set": {"h": 0.8, "count": 5, "rho2_range": [0.25, 0.15]}}}"#;
        assert!(ScenarioConfig::from_json(bad).is_err());
    }

    #[test]
    fn level_set_points_sit_on_the_level() {
        let s = LevelSetSampler {
            h: 0.8,
            count: 50,
            rho2_range: [0.15, 0.25],
            l_scale: vec![1.0, 0.1, 0.01],
            branch: Branch::Inner,
        };
        let pts = s.points();
        assert_eq!(pts.len(), 150);
        for (_, p) in &pts {
            assert!((p.hamiltonian() - 0.8).abs() < 1e-14);
            assert!(p.c[0] > 0.0015 && p.c[0] < 0.25);
        }
        assert_eq!(pts[50].0, 1);
        assert!((pts[50].1.c[0] - 0.1 * pts[0].1.c[0]).abs() < 1e-16);
    }
}
