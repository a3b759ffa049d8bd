//! Streaming classification of an orbit into a capture phase followed by
//! ejection-collision oscillations.

use serde::Serialize;

use crate::charts::ChartPoint;

use super::config::ItineraryThresholds;

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct CapturePhase {
    pub tau_start: f64,
    pub tau_end: f64,
    pub r_start: f64,
    pub r_end: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum ItineraryClass {
    CaptureThenOscillations,
    CaptureOnly,
    OscillationsOnly,
    Unclassified,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Itinerary {
    pub class: ItineraryClass,
    /// Capture phase followed by at least `min_oscillations` oscillations.
    pub matches_pattern: bool,
    pub first_capture: Option<CapturePhase>,
    pub captures: u64,
    pub r_maxima: u64,
    pub oscillations: u64,
    pub oscillations_after_capture: u64,
}

#[derive(Debug, Clone, Copy)]
struct Sample {
    tau: f64,
    r: f64,
    v: f64,
    l2: f64,
}

#[derive(Debug, Clone)]
pub struct ItineraryClassifier {
    th: ItineraryThresholds,
    delta: f64,
    prev: Option<Sample>,
    band_entry: Option<(f64, f64)>,
    band_last: Option<(f64, f64)>,
    first_capture: Option<CapturePhase>,
    captures: u64,
    r_maxima: u64,
    last_max_small: Option<f64>,
    oscillations: u64,
    oscillations_after_capture: u64,
}

impl ItineraryClassifier {
    pub fn new(th: ItineraryThresholds, delta: f64) -> Self {
        ItineraryClassifier {
            th,
            delta,
            prev: None,
            band_entry: None,
            band_last: None,
            first_capture: None,
            captures: 0,
            r_maxima: 0,
            last_max_small: None,
            oscillations: 0,
            oscillations_after_capture: 0,
        }
    }

    /// `v11 = rdot / r` of the chart at infinity against the centre manifold
    /// `v11 = -nu^6 / delta`.
    fn in_band(&self, r: f64, v: f64, l: f64) -> bool {
        if self.delta <= 0.0 || !(l > 0.0) || !r.is_finite() {
            return false;
        }
        let nu = r.sqrt().recip();
        if nu >= self.th.nu_max {
            return false;
        }
        let v11 = v / (l * r);
        let ratio = v11 / (-nu.powi(6) / self.delta);
        ratio >= 1.0 / self.th.band_factor && ratio <= self.th.band_factor
    }

    fn close_band(&mut self) {
        if let (Some((t0, r0)), Some((t1, r1))) = (self.band_entry.take(), self.band_last.take()) {
            if r0 >= self.th.capture_min_ratio * r1 {
                self.captures += 1;
                self.first_capture.get_or_insert(CapturePhase {
                    tau_start: t0,
                    tau_end: t1,
                    r_start: r0,
                    r_end: r1,
                });
            }
        }
    }

    pub fn observe(&mut self, tau: f64, p: &ChartPoint) {
        let r = p.radius();
        let l = p.angular_momentum();
        let (l2, v) = p.l2_v();

        if self.in_band(r, v, l) {
            let monotone = self.band_last.is_none_or(|(_, rl)| r <= rl);
            if !monotone {
                self.close_band();
            }
            self.band_entry.get_or_insert((tau, r));
            self.band_last = Some((tau, r));
        } else {
            self.close_band();
        }

        let s = Sample { tau, r, v, l2 };
        if let Some(q) = self.prev {
            if q.v > 0.0 && s.v <= 0.0 {
                let top = if q.r >= s.r { q } else { s };
                self.r_maxima += 1;
                if top.l2 <= self.th.l2_small {
                    if self.last_max_small.is_some() {
                        self.oscillations += 1;
                        if self.first_capture.is_some() {
                            self.oscillations_after_capture += 1;
                        }
                    }
                    self.last_max_small = Some(top.tau);
                } else {
                    self.last_max_small = None;
                }
            }
        }
        self.prev = Some(s);
    }

    pub fn finish(mut self) -> Itinerary {
        self.close_band();
        let captured = self.first_capture.is_some();
        let class = match (
            captured,
            self.oscillations_after_capture > 0,
            self.oscillations > 0,
        ) {
            (true, true, _) => ItineraryClass::CaptureThenOscillations,
            (true, false, _) => ItineraryClass::CaptureOnly,
            (false, _, true) => ItineraryClass::OscillationsOnly,
            _ => ItineraryClass::Unclassified,
        };
        Itinerary {
            class,
            matches_pattern: captured
                && self.oscillations_after_capture >= self.th.min_oscillations,
            first_capture: self.first_capture,
            captures: self.captures,
            r_maxima: self.r_maxima,
            oscillations: self.oscillations,
            oscillations_after_capture: self.oscillations_after_capture,
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::charts::ChartId;

    fn rvl(r: f64, v: f64, l: f64) -> ChartPoint {
        ChartPoint::new(ChartId::Rvl, [r, v, l])
    }

    #[test]
    fn synthetic_capture_then_oscillations() {
        let th = ItineraryThresholds::default();
        let mut c = ItineraryClassifier::new(th, 1.0);
        let l = 1e-3;
        let mut tau = 0.0;
        // fall along rdot = -1/r^2 from r = 100 to r = 10
        let mut r: f64 = 100.0;
        while r > 10.0 {
            c.observe(tau, &rvl(r, -l / (r * r), l));
            r *= 0.9;
            tau += 1.0;
        }
        // three radial bounces reaching r = 1, far above l^2
        for _ in 0..3 {
            for (rr, v) in [(0.5, l), (1.0, l * 1e-3), (0.99, -l), (0.1, -l)] {
                c.observe(tau, &rvl(rr, v, l));
                tau += 1.0;
            }
        }
        let it = c.finish();
        assert_eq!(it.captures, 1);
        assert_eq!(it.r_maxima, 3);
        assert_eq!(it.oscillations_after_capture, 2);
        assert!(it.matches_pattern);
        assert_eq!(it.class, ItineraryClass::CaptureThenOscillations);
    }

    #[test]
    fn bounded_orbit_has_no_pattern() {
        let mut c = ItineraryClassifier::new(ItineraryThresholds::default(), 1.0);
        let l: f64 = 0.3;
        for k in 0..200 {
            let ph = k as f64 * 0.2;
            // r1 between 2/3 and 2
            let r1 = 1.0 / (1.0 - 0.5 * ph.cos());
            c.observe(
                k as f64,
                &ChartPoint::new(ChartId::C1, [r1, 0.5 * ph.sin(), l]),
            );
        }
        let it = c.finish();
        assert!(it.r_maxima > 0);
        assert_eq!(it.oscillations, 0);
        assert!(!it.matches_pattern);
    }
}
