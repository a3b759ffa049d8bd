//! Chart atlas for the blown-up and compactified planar problem.
//!
//! Every chart stores three coordinates. The physical chart holds `(r, rdot, l)`
//! and the remaining charts are the weighted blowups of the degenerate sets
//! `{r = l = 0}` and `{v = l = 0}` together with their compactifications at
//! `r = infinity`:
//!
//! | chart    | coordinates          | relation to `(r, v = l*rdot, l)`                    |
//! |----------|----------------------|-----------------------------------------------------|
//! | `Phys`   | `(r, rdot, l)`       | identity                                            |
//! | `Rvl`    | `(r, v, l)`          | `v = l*rdot`                                        |
//! | `C1`     | `(r1, v, rho1)`      | `r = rho1^2 r1`, `l = rho1`                         |
//! | `C2`     | `(rho2, v, l2)`      | `r = rho2^2`, `l = rho2 l2`                         |
//! | `C21`    | `(rho2, v1, mu1)`    | C2 with `v = mu1 v1`, `l2 = mu1`                    |
//! | `C22`    | `(rho2, mu2, l22)`   | C2 with `v = mu2`, `l2 = mu2 l22`                   |
//! | `C23`    | `(rho2, mu3, l23)`   | C2 with `v = -mu3`, `l2 = mu3 l23`                  |
//! | `C21Inf` | `(nu, v11, mu11)`    | C21 with `rho2 = 1/nu`, `v1 = v11/nu^3`, `mu1 = nu^3 mu11` |
//! | `C22Inf` | `(nu, mu2, l222)`    | C22 with `rho2 = 1/nu`, `l22 = nu^3 l222`           |
//! | `C23Inf` | `(nu, mu3, l233)`    | C23 with `rho2 = 1/nu`, `l23 = nu^3 l233`           |
//!
//! Transitions are implemented edge by edge with the explicit overlap formulas
//! and composed along the shortest admissible path, so points on the blowup
//! boundaries (`rho1 = 0`, `mu1 = 0`, `nu = 0`, ...) can be moved between charts
//! even though they have no physical counterpart.

use std::collections::VecDeque;
use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "UPPERCASE")]
pub enum ChartId {
    Phys,
    Rvl,
    C1,
    C2,
    C21,
    C22,
    C23,
    C21Inf,
    C22Inf,
    C23Inf,
}

impl ChartId {
    pub const ALL: [ChartId; 10] = [
        ChartId::Phys,
        ChartId::Rvl,
        ChartId::C1,
        ChartId::C2,
        ChartId::C21,
        ChartId::C22,
        ChartId::C23,
        ChartId::C21Inf,
        ChartId::C22Inf,
        ChartId::C23Inf,
    ];

    pub fn name(self) -> &'static str {
        match self {
            ChartId::Phys => "PHYS",
            ChartId::Rvl => "RVL",
            ChartId::C1 => "C1",
            ChartId::C2 => "C2",
            ChartId::C21 => "C21",
            ChartId::C22 => "C22",
            ChartId::C23 => "C23",
            ChartId::C21Inf => "C21INF",
            ChartId::C22Inf => "C22INF",
            ChartId::C23Inf => "C23INF",
        }
    }

    pub fn coordinate_names(self) -> [&'static str; 3] {
        match self {
            ChartId::Phys => ["r", "rdot", "l"],
            ChartId::Rvl => ["r", "v", "l"],
            ChartId::C1 => ["r1", "v", "rho1"],
            ChartId::C2 => ["rho2", "v", "l2"],
            ChartId::C21 => ["rho2", "v1", "mu1"],
            ChartId::C22 => ["rho2", "mu2", "l22"],
            ChartId::C23 => ["rho2", "mu3", "l23"],
            ChartId::C21Inf => ["nu", "v11", "mu11"],
            ChartId::C22Inf => ["nu", "mu2", "l222"],
            ChartId::C23Inf => ["nu", "mu3", "l233"],
        }
    }

    /// Indices of the coordinates that are radial (must be non-negative).
    pub(crate) fn radial_indices(self) -> &'static [usize] {
        match self {
            ChartId::Phys | ChartId::Rvl => &[0, 2],
            ChartId::C1 => &[0, 2],
            ChartId::C2 => &[0, 2],
            ChartId::C21 => &[0, 2],
            ChartId::C22 | ChartId::C23 => &[0, 1, 2],
            ChartId::C21Inf => &[0, 2],
            ChartId::C22Inf | ChartId::C23Inf => &[0, 1, 2],
        }
    }

    /// Mathematical domain of the chart: finite coordinates, radial coordinates
    /// non-negative, and the chart-specific strict positivity (`r > 0` in
    /// `Phys`, `r1 > 0` in `C1`).
    pub fn contains(self, c: &[f64; 3]) -> bool {
        if c.iter().any(|x| !x.is_finite()) {
            return false;
        }
        if self.radial_indices().iter().any(|&i| c[i] < 0.0) {
            return false;
        }
        match self {
            ChartId::Phys => c[0] > 0.0,
            ChartId::C1 => c[0] > 0.0,
            _ => true,
        }
    }

    pub fn check(self, c: &[f64; 3]) -> Result<()> {
        if self.contains(c) {
            Ok(())
        } else {
            Err(Error::domain(
                self,
                format!("coordinates {c:?} outside the chart domain"),
            ))
        }
    }
}

impl fmt::Display for ChartId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl std::str::FromStr for ChartId {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        ChartId::ALL
            .into_iter()
            .find(|id| id.name().eq_ignore_ascii_case(s))
            .ok_or_else(|| Error::InvalidArgument(format!("unknown chart '{s}'")))
    }
}

/// Planar two-body state in polar form with the angular-momentum magnitude.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PhysicalState {
    pub r: f64,
    pub rdot: f64,
    pub l: f64,
    pub theta: f64,
    pub t: f64,
}

impl PhysicalState {
    pub fn new(r: f64, rdot: f64, l: f64) -> Self {
        PhysicalState {
            r,
            rdot,
            l,
            theta: 0.0,
            t: 0.0,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.r > 0.0 && self.r.is_finite()) {
            return Err(Error::domain(
                ChartId::Phys,
                format!("r = {} must be positive", self.r),
            ));
        }
        if !(self.l >= 0.0 && self.l.is_finite()) || !self.rdot.is_finite() {
            return Err(Error::domain(
                ChartId::Phys,
                format!("invalid state (rdot = {}, l = {})", self.rdot, self.l),
            ));
        }
        Ok(())
    }
}

/// A point of the blown-up phase space expressed in one chart.
///
/// `theta` is the unwrapped polar angle and `t_phys` the accumulated physical
/// time; both are carried unchanged by chart transitions.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ChartPoint {
    pub chart: ChartId,
    pub c: [f64; 3],
    pub theta: f64,
    pub t_phys: f64,
}

impl ChartPoint {
    pub fn new(chart: ChartId, c: [f64; 3]) -> Self {
        ChartPoint {
            chart,
            c,
            theta: 0.0,
            t_phys: 0.0,
        }
    }

    fn with_coords(&self, chart: ChartId, c: [f64; 3]) -> Self {
        ChartPoint {
            chart,
            c,
            theta: self.theta,
            t_phys: self.t_phys,
        }
    }

    /// Angular momentum magnitude; defined on every chart including the
    /// blowup boundaries.
    pub fn angular_momentum(&self) -> f64 {
        let [a, b, c] = self.c;
        match self.chart {
            ChartId::Phys | ChartId::Rvl => c,
            ChartId::C1 => c,
            ChartId::C2 => a * c,
            ChartId::C21 => a * c,
            ChartId::C22 | ChartId::C23 => a * b * c,
            ChartId::C21Inf => a * a * c,
            ChartId::C22Inf | ChartId::C23Inf => a * a * b * c,
        }
    }

    /// Radius `r`; `+inf` on the sphere at infinity (`nu = 0`).
    pub fn radius(&self) -> f64 {
        let [a, _, c] = self.c;
        match self.chart {
            ChartId::Phys | ChartId::Rvl => a,
            ChartId::C1 => c * c * a,
            ChartId::C2 | ChartId::C21 | ChartId::C22 | ChartId::C23 => a * a,
            ChartId::C21Inf | ChartId::C22Inf | ChartId::C23Inf => 1.0 / (a * a),
        }
    }

    /// `(l2, v)` pair of the `C2` chart, i.e. `(1/sqrt(r1), v)`. Defined
    /// everywhere except the physical charts at `r = 0`.
    pub fn l2_v(&self) -> (f64, f64) {
        let [a, b, c] = self.c;
        match self.chart {
            ChartId::Phys => (c / a.sqrt(), c * b),
            ChartId::Rvl => (c / a.sqrt(), b),
            ChartId::C1 => (1.0 / a.sqrt(), b),
            ChartId::C2 => (c, b),
            ChartId::C21 => (c, c * b),
            ChartId::C22 => (b * c, b),
            ChartId::C23 => (b * c, -b),
            ChartId::C21Inf => (a.powi(3) * c, c * b),
            ChartId::C22Inf => (b * a.powi(3) * c, b),
            ChartId::C23Inf => (b * a.powi(3) * c, -b),
        }
    }

    /// The Hamiltonian `H = v^2/2 + (r1 - 1)^2 / (2 r1^2)` of the `l = 0`
    /// reduced problem, evaluated in the chart's own variables. Equal to half
    /// the squared eccentricity.
    pub fn hamiltonian(&self) -> f64 {
        if self.chart == ChartId::C1 {
            return crate::dynamics::hamiltonian(self.c[0], self.c[1]);
        }
        let (l2, v) = self.l2_v();
        crate::dynamics::hamiltonian_c2(l2, v)
    }

    /// Normalized Hamiltonian `H1 = H + 2 delta l^2 r rdot + 3 delta^2 l^2 r^2`,
    /// whose drift along the flow is of third order in `x = l^3`.
    pub fn normalized_hamiltonian(&self, delta: f64) -> f64 {
        let [a, b, c] = self.c;
        // p = l^2 r rdot, q = l^2 r^2
        let (p, q) = match self.chart {
            ChartId::Phys => (c * c * a * b, c * c * a * a),
            ChartId::Rvl => (c * a * b, c * c * a * a),
            ChartId::C1 => {
                let x = c.powi(3);
                (a * b * x, a * a * x * x)
            }
            ChartId::C2 => (a.powi(3) * c * b, a.powi(6) * c * c),
            ChartId::C21 => (a.powi(3) * c * c * b, a.powi(6) * c * c),
            ChartId::C22 => (a.powi(3) * b * b * c, a.powi(6) * (b * c).powi(2)),
            ChartId::C23 => (-a.powi(3) * b * b * c, a.powi(6) * (b * c).powi(2)),
            ChartId::C21Inf => (c * c * b, c * c),
            ChartId::C22Inf => (b * b * c, (b * c).powi(2)),
            ChartId::C23Inf => (-b * b * c, (b * c).powi(2)),
        };
        self.hamiltonian() + 2.0 * delta * p + 3.0 * delta * delta * q
    }
}

/// Map a chart point to the physical state it represents.
pub fn to_physical(p: &ChartPoint) -> Result<PhysicalState> {
    p.chart.check(&p.c)?;
    let [a, b, c] = p.c;
    let need = |ok: bool, what: &str| -> Result<()> {
        if ok {
            Ok(())
        } else {
            Err(Error::domain(
                p.chart,
                format!("cannot recover the physical state: {what}"),
            ))
        }
    };
    let (r, rdot, l) = match p.chart {
        ChartId::Phys => (a, b, c),
        ChartId::Rvl => {
            need(a > 0.0, "r = 0")?;
            need(c > 0.0, "l = 0 (rdot = v/l)")?;
            (a, b / c, c)
        }
        ChartId::C1 => {
            need(c > 0.0, "rho1 = 0 (rdot = v/l)")?;
            (c * c * a, b / c, c)
        }
        ChartId::C2 => {
            need(a > 0.0, "rho2 = 0")?;
            need(c > 0.0, "l2 = 0 (rdot = v/l)")?;
            let l = a * c;
            (a * a, b / l, l)
        }
        ChartId::C21 => {
            need(a > 0.0, "rho2 = 0")?;
            (a * a, b / a, a * c)
        }
        ChartId::C22 => {
            need(a > 0.0, "rho2 = 0")?;
            need(c > 0.0, "l22 = 0")?;
            (a * a, 1.0 / (a * c), a * b * c)
        }
        ChartId::C23 => {
            need(a > 0.0, "rho2 = 0")?;
            need(c > 0.0, "l23 = 0")?;
            (a * a, -1.0 / (a * c), a * b * c)
        }
        ChartId::C21Inf => {
            need(a > 0.0, "nu = 0 (r = infinity)")?;
            let nu2 = a * a;
            (1.0 / nu2, b / nu2, nu2 * c)
        }
        ChartId::C22Inf => {
            need(a > 0.0, "nu = 0 (r = infinity)")?;
            need(c > 0.0, "l222 = 0")?;
            let nu2 = a * a;
            (1.0 / nu2, 1.0 / (nu2 * c), nu2 * b * c)
        }
        ChartId::C23Inf => {
            need(a > 0.0, "nu = 0 (r = infinity)")?;
            need(c > 0.0, "l233 = 0")?;
            let nu2 = a * a;
            (1.0 / nu2, -1.0 / (nu2 * c), nu2 * b * c)
        }
    };
    Ok(PhysicalState {
        r,
        rdot,
        l,
        theta: p.theta,
        t: p.t_phys,
    })
}

/// Express a physical state in the requested chart.
pub fn from_physical(s: &PhysicalState, target: ChartId) -> Result<ChartPoint> {
    s.validate()?;
    let PhysicalState { r, rdot, l, .. } = *s;
    let fail = |what: &str| Err(Error::domain(target, what.to_string()));
    let rho2 = r.sqrt();
    let c = match target {
        ChartId::Phys => [r, rdot, l],
        ChartId::Rvl => {
            if l <= 0.0 {
                return fail("l = 0 cannot be represented (v = l*rdot loses rdot)");
            }
            [r, l * rdot, l]
        }
        ChartId::C1 => {
            if l <= 0.0 {
                return fail("C1 requires l > 0");
            }
            [r / (l * l), l * rdot, l]
        }
        ChartId::C2 => {
            if l <= 0.0 {
                return fail("C2 requires l > 0");
            }
            [rho2, l * rdot, l / rho2]
        }
        ChartId::C21 => [rho2, rho2 * rdot, l / rho2],
        ChartId::C22 => {
            if rdot <= 0.0 {
                return fail("C22 requires v = l*rdot > 0");
            }
            [rho2, l * rdot, 1.0 / (rho2 * rdot)]
        }
        ChartId::C23 => {
            if rdot >= 0.0 {
                return fail("C23 requires v = l*rdot < 0");
            }
            [rho2, -l * rdot, -1.0 / (rho2 * rdot)]
        }
        ChartId::C21Inf => {
            let nu = 1.0 / rho2;
            [nu, rdot / r, l * r]
        }
        ChartId::C22Inf => {
            if rdot <= 0.0 {
                return fail("C22INF requires rdot > 0");
            }
            [1.0 / rho2, l * rdot, r / rdot]
        }
        ChartId::C23Inf => {
            if rdot >= 0.0 {
                return fail("C23INF requires rdot < 0");
            }
            [1.0 / rho2, -l * rdot, -r / rdot]
        }
    };
    Ok(ChartPoint {
        chart: target,
        c,
        theta: s.theta,
        t_phys: s.t,
    })
}

type EdgeMap = fn(&[f64; 3]) -> Option<[f64; 3]>;

/// Directed overlap maps between adjacent charts. Each returns `None` outside
/// the overlap.
const EDGES: &[(ChartId, ChartId, EdgeMap)] = &[
    // PHYS <-> RVL
    (ChartId::Phys, ChartId::Rvl, |&[r, rd, l]| {
        (l > 0.0).then_some([r, l * rd, l])
    }),
    (ChartId::Rvl, ChartId::Phys, |&[r, v, l]| {
        (l > 0.0 && r > 0.0).then_some([r, v / l, l])
    }),
    // PHYS <-> C21
    (ChartId::Phys, ChartId::C21, |&[r, rd, l]| {
        let rho2 = r.sqrt();
        (r > 0.0).then_some([rho2, rho2 * rd, l / rho2])
    }),
    (ChartId::C21, ChartId::Phys, |&[rho2, v1, mu1]| {
        (rho2 > 0.0).then_some([rho2 * rho2, v1 / rho2, rho2 * mu1])
    }),
    // RVL <-> C1
    (ChartId::Rvl, ChartId::C1, |&[r, v, l]| {
        (l > 0.0).then_some([r / (l * l), v, l])
    }),
    (ChartId::C1, ChartId::Rvl, |&[r1, v, rho1]| {
        Some([rho1 * rho1 * r1, v, rho1])
    }),
    // RVL <-> C2
    (ChartId::Rvl, ChartId::C2, |&[r, v, l]| {
        let rho2 = r.sqrt();
        (r > 0.0).then_some([rho2, v, l / rho2])
    }),
    (ChartId::C2, ChartId::Rvl, |&[rho2, v, l2]| {
        Some([rho2 * rho2, v, rho2 * l2])
    }),
    // C1 <-> C2
    (ChartId::C1, ChartId::C2, |&[r1, v, rho1]| {
        let s = r1.sqrt();
        (r1 > 0.0).then_some([rho1 * s, v, 1.0 / s])
    }),
    (ChartId::C2, ChartId::C1, |&[rho2, v, l2]| {
        (l2 > 0.0).then_some([1.0 / (l2 * l2), v, rho2 * l2])
    }),
    // C2 <-> C21
    (ChartId::C2, ChartId::C21, |&[rho2, v, l2]| {
        (l2 > 0.0).then_some([rho2, v / l2, l2])
    }),
    (ChartId::C21, ChartId::C2, |&[rho2, v1, mu1]| {
        Some([rho2, mu1 * v1, mu1])
    }),
    // C2 <-> C22
    (ChartId::C2, ChartId::C22, |&[rho2, v, l2]| {
        (v > 0.0).then_some([rho2, v, l2 / v])
    }),
    (ChartId::C22, ChartId::C2, |&[rho2, mu2, l22]| {
        Some([rho2, mu2, mu2 * l22])
    }),
    // C2 <-> C23
    (ChartId::C2, ChartId::C23, |&[rho2, v, l2]| {
        (v < 0.0).then_some([rho2, -v, -l2 / v])
    }),
    (ChartId::C23, ChartId::C2, |&[rho2, mu3, l23]| {
        Some([rho2, -mu3, mu3 * l23])
    }),
    // C21 <-> C22
    (ChartId::C21, ChartId::C22, |&[rho2, v1, mu1]| {
        (v1 > 0.0).then_some([rho2, mu1 * v1, 1.0 / v1])
    }),
    (ChartId::C22, ChartId::C21, |&[rho2, mu2, l22]| {
        (l22 > 0.0).then_some([rho2, 1.0 / l22, mu2 * l22])
    }),
    // C21 <-> C23
    (ChartId::C21, ChartId::C23, |&[rho2, v1, mu1]| {
        (v1 < 0.0).then_some([rho2, -mu1 * v1, -1.0 / v1])
    }),
    (ChartId::C23, ChartId::C21, |&[rho2, mu3, l23]| {
        (l23 > 0.0).then_some([rho2, -1.0 / l23, mu3 * l23])
    }),
    // C21 <-> C21INF
    (ChartId::C21, ChartId::C21Inf, |&[rho2, v1, mu1]| {
        if rho2 > 0.0 {
            let nu = 1.0 / rho2;
            let nu3 = nu.powi(3);
            Some([nu, nu3 * v1, mu1 / nu3])
        } else {
            None
        }
    }),
    (ChartId::C21Inf, ChartId::C21, |&[nu, v11, mu11]| {
        if nu > 0.0 {
            let nu3 = nu.powi(3);
            Some([1.0 / nu, v11 / nu3, nu3 * mu11])
        } else {
            None
        }
    }),
    // C22 <-> C22INF
    (ChartId::C22, ChartId::C22Inf, |&[rho2, mu2, l22]| {
        (rho2 > 0.0).then(|| [1.0 / rho2, mu2, l22 * rho2.powi(3)])
    }),
    (ChartId::C22Inf, ChartId::C22, |&[nu, mu2, l222]| {
        (nu > 0.0).then(|| [1.0 / nu, mu2, nu.powi(3) * l222])
    }),
    // C23 <-> C23INF
    (ChartId::C23, ChartId::C23Inf, |&[rho2, mu3, l23]| {
        (rho2 > 0.0).then(|| [1.0 / rho2, mu3, l23 * rho2.powi(3)])
    }),
    (ChartId::C23Inf, ChartId::C23, |&[nu, mu3, l233]| {
        (nu > 0.0).then(|| [1.0 / nu, mu3, nu.powi(3) * l233])
    }),
    // C21INF <-> C22INF
    (ChartId::C21Inf, ChartId::C22Inf, |&[nu, v11, mu11]| {
        (v11 > 0.0).then(|| [nu, mu11 * v11, 1.0 / v11])
    }),
    (ChartId::C22Inf, ChartId::C21Inf, |&[nu, mu2, l222]| {
        (l222 > 0.0).then(|| [nu, 1.0 / l222, mu2 * l222])
    }),
    // C21INF <-> C23INF
    (ChartId::C21Inf, ChartId::C23Inf, |&[nu, v11, mu11]| {
        (v11 < 0.0).then(|| [nu, -mu11 * v11, -1.0 / v11])
    }),
    (ChartId::C23Inf, ChartId::C21Inf, |&[nu, mu3, l233]| {
        (l233 > 0.0).then(|| [nu, -1.0 / l233, mu3 * l233])
    }),
];

/// Move a point to another chart through the overlap maps.
///
/// The search walks the chart adjacency graph breadth first and only follows
/// overlap maps that are admissible at the given point, so the result is the
/// shortest admissible composition. `theta` and `t_phys` are carried
/// unchanged.
pub fn transition(p: &ChartPoint, target: ChartId) -> Result<ChartPoint> {
    p.chart.check(&p.c)?;
    if p.chart == target {
        return Ok(*p);
    }
    let mut reached: Vec<(ChartId, [f64; 3])> = vec![(p.chart, p.c)];
    let mut queue = VecDeque::from([(p.chart, p.c)]);
    while let Some((chart, c)) = queue.pop_front() {
        for &(from, to, map) in EDGES {
            if from != chart || reached.iter().any(|(id, _)| *id == to) {
                continue;
            }
            let Some(next) = map(&c) else { continue };
            if !to.contains(&next) {
                continue;
            }
            if to == target {
                return Ok(p.with_coords(to, next));
            }
            reached.push((to, next));
            queue.push_back((to, next));
        }
    }
    Err(Error::domain(
        target,
        format!(
            "point {:?} of chart {} is outside every overlap with {}",
            p.c, p.chart, target
        ),
    ))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn close(a: [f64; 3], b: [f64; 3], tol: f64) -> bool {
        a.iter()
            .zip(b.iter())
            .all(|(x, y)| (x - y).abs() <= tol * (1.0 + y.abs()))
    }

    #[test]
    fn to_physical_examples() {
        let s = to_physical(&ChartPoint::new(ChartId::C1, [1.0, 0.0, 0.1])).unwrap();
        assert!((s.r - 0.01).abs() < 1e-15 && s.rdot == 0.0 && s.l == 0.1);

        let s = to_physical(&ChartPoint::new(ChartId::C2, [0.5, 0.2, 1.0])).unwrap();
        assert!((s.r - 0.25).abs() < 1e-15);
        assert!((s.rdot - 0.4).abs() < 1e-15);
        assert!((s.l - 0.5).abs() < 1e-15);

        let s = to_physical(&ChartPoint::new(ChartId::C21, [0.5, 1.0, 0.2])).unwrap();
        assert!((s.r - 0.25).abs() < 1e-15);
        assert!((s.rdot - 2.0).abs() < 1e-15);
        assert!((s.l - 0.1).abs() < 1e-15);
        // v1 = rho2 * rdot
        assert!((0.5 * s.rdot - 1.0).abs() < 1e-15);
    }

    #[test]
    fn to_physical_needs_angular_momentum_in_c1() {
        let err = to_physical(&ChartPoint::new(ChartId::C1, [1.0, 0.3, 0.0])).unwrap_err();
        assert!(matches!(
            err,
            Error::Domain {
                chart: ChartId::C1,
                ..
            }
        ));
    }

    #[test]
    fn from_physical_examples() {
        let p = from_physical(&PhysicalState::new(0.01, 0.0, 0.1), ChartId::C1).unwrap();
        assert!(close(p.c, [1.0, 0.0, 0.1], 1e-14));

        let p = from_physical(&PhysicalState::new(0.25, 2.0, 0.1), ChartId::C21).unwrap();
        assert!(close(p.c, [0.5, 1.0, 0.2], 1e-14));

        let err = from_physical(&PhysicalState::new(0.25, -2.0, 0.1), ChartId::C22).unwrap_err();
        assert!(matches!(
            err,
            Error::Domain {
                chart: ChartId::C22,
                ..
            }
        ));
    }

    #[test]
    fn transition_examples() {
        let p = transition(&ChartPoint::new(ChartId::C1, [4.0, 0.1, 0.2]), ChartId::C2).unwrap();
        assert!(close(p.c, [0.4, 0.1, 0.5], 1e-15));

        let p = transition(
            &ChartPoint::new(ChartId::C21, [0.3, 2.0, 0.1]),
            ChartId::C22,
        )
        .unwrap();
        assert!(close(p.c, [0.3, 0.2, 0.5], 1e-15));

        let p = transition(
            &ChartPoint::new(ChartId::C22, [2.0, 0.2, 0.08]),
            ChartId::C22Inf,
        )
        .unwrap();
        assert!(close(p.c, [0.5, 0.2, 0.64], 1e-15));
    }

    #[test]
    fn transition_carries_angle_and_time() {
        let mut p = ChartPoint::new(ChartId::C1, [1.5, -0.2, 0.3]);
        p.theta = 17.25;
        p.t_phys = 3.5;
        let q = transition(&p, ChartId::C23Inf).unwrap();
        assert_eq!(q.theta, 17.25);
        assert_eq!(q.t_phys, 3.5);
    }

    #[test]
    fn transition_on_blowup_boundary() {
        // l = 0 points of C1 live on the blown-up sphere and still move to C2.
        let p = transition(&ChartPoint::new(ChartId::C1, [4.0, 0.3, 0.0]), ChartId::C2).unwrap();
        assert!(close(p.c, [0.0, 0.3, 0.5], 1e-15));
        // nu = 0 points move between the charts at infinity.
        let p = transition(
            &ChartPoint::new(ChartId::C21Inf, [0.0, 2.0, 0.5]),
            ChartId::C22Inf,
        )
        .unwrap();
        assert!(close(p.c, [0.0, 1.0, 0.5], 1e-15));
        // ... but have no finite counterpart.
        assert!(transition(
            &ChartPoint::new(ChartId::C21Inf, [0.0, 2.0, 0.5]),
            ChartId::C21
        )
        .is_err());
    }

    #[test]
    fn wrong_sign_overlap_is_rejected() {
        let p = ChartPoint::new(ChartId::C21, [0.3, -2.0, 0.1]);
        assert!(transition(&p, ChartId::C22).is_err());
        assert!(transition(&p, ChartId::C23).is_ok());
    }

    #[test]
    fn negative_radial_coordinate_is_off_domain() {
        assert!(!ChartId::C22.contains(&[0.3, -0.1, 0.2]));
        assert!(transition(&ChartPoint::new(ChartId::C2, [-0.1, 0.0, 1.0]), ChartId::C1).is_err());
    }

    #[test]
    fn hamiltonian_agrees_across_charts() {
        let s = PhysicalState::new(0.37, 0.8, 0.45);
        let reference = from_physical(&s, ChartId::C1).unwrap().hamiltonian();
        for id in [
            ChartId::Phys,
            ChartId::Rvl,
            ChartId::C2,
            ChartId::C21,
            ChartId::C22,
            ChartId::C21Inf,
            ChartId::C22Inf,
        ] {
            let p = from_physical(&s, id).unwrap();
            assert!((p.hamiltonian() - reference).abs() < 1e-12, "{id}");
            assert!(
                (p.normalized_hamiltonian(0.7)
                    - from_physical(&s, ChartId::C1)
                        .unwrap()
                        .normalized_hamiltonian(0.7))
                .abs()
                    < 1e-12,
                "{id}"
            );
            assert!((p.angular_momentum() - 0.45).abs() < 1e-14);
            assert!((p.radius() - 0.37).abs() < 1e-14);
        }
    }
}
