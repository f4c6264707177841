//! Piecewise-linear hematocrit profiles along a segment.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub const LARGE_VESSEL_HEMATOCRIT: f64 = 0.45;
pub const CAPILLARY_HEMATOCRIT: f64 = 0.33;
pub const SPLEEN_SLIT_HEMATOCRIT: f64 = 0.71;

/// Hematocrit as a piecewise-linear function of the fraction of transit
/// completed, with an optional capillary window (also in fractions).
#[derive(Debug, Clone, PartialEq)]
pub struct HematocritProfile {
    breakpoints: Vec<(f64, f64)>,
    capillary_window: Option<(f64, f64)>,
}

impl HematocritProfile {
    pub fn new(breakpoints: Vec<(f64, f64)>, capillary_window: Option<(f64, f64)>) -> Result<Self> {
        if breakpoints.len() < 2 {
            return Err(Error::config("hematocrit profile needs at least two breakpoints"));
        }
        if breakpoints[0].0 != 0.0 || breakpoints[breakpoints.len() - 1].0 != 1.0 {
            return Err(Error::config("hematocrit profile must span fractions 0 to 1"));
        }
        for pair in breakpoints.windows(2) {
            if pair[1].0 <= pair[0].0 {
                return Err(Error::config("hematocrit breakpoints must be strictly increasing"));
            }
        }
        if breakpoints.iter().any(|&(_, h)| !(0.0..=1.0).contains(&h)) {
            return Err(Error::config("hematocrit values must lie in [0, 1]"));
        }
        if let Some((a, b)) = capillary_window {
            if !(0.0 <= a && a < b && b <= 1.0) {
                return Err(Error::config(format!("invalid capillary window ({a}, {b})")));
            }
        }
        Ok(Self { breakpoints, capillary_window })
    }

    pub fn flat(hematocrit: f64) -> Self {
        Self { breakpoints: vec![(0.0, hematocrit), (1.0, hematocrit)], capillary_window: None }
    }

    pub fn breakpoints(&self) -> &[(f64, f64)] {
        &self.breakpoints
    }

    pub fn capillary_window(&self) -> Option<(f64, f64)> {
        self.capillary_window
    }

    /// Hematocrit at fraction `s` of the transit.
    pub fn hematocrit_at(&self, s: f64) -> Result<f64> {
        if !(0.0..=1.0).contains(&s) {
            return Err(Error::domain(format!("transit fraction {s} outside [0, 1]")));
        }
        Ok(self.eval(s))
    }

    pub(crate) fn eval(&self, s: f64) -> f64 {
        let bp = &self.breakpoints;
        let i = bp.partition_point(|&(f, _)| f <= s);
        if i == 0 {
            return bp[0].1;
        }
        if i >= bp.len() {
            return bp[bp.len() - 1].1;
        }
        let (f0, h0) = bp[i - 1];
        let (f1, h1) = bp[i];
        h0 + (h1 - h0) * (s - f0) / (f1 - f0)
    }

    pub fn min_max(&self) -> (f64, f64) {
        self.breakpoints
            .iter()
            .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), &(_, h)| (lo.min(h), hi.max(h)))
    }

    /// All fractions at which the profile or the window changes slope.
    pub fn knots(&self) -> Vec<f64> {
        let mut k: Vec<f64> = self.breakpoints.iter().map(|&(f, _)| f).collect();
        if let Some((a, b)) = self.capillary_window {
            k.push(a);
            k.push(b);
        }
        k.sort_by(f64::total_cmp);
        k.dedup_by(|a, b| (*a - *b).abs() < 1e-15);
        k
    }
}

/// Window length of a capillary passage, either absolute or relative to transit.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum WindowLength {
    Seconds(f64),
    Fraction(f64),
}

impl WindowLength {
    fn resolve(self, transit: f64) -> f64 {
        match self {
            WindowLength::Seconds(s) => s,
            WindowLength::Fraction(f) => f * transit,
        }
    }
}

/// Rule that generates a [`HematocritProfile`] for a given transit time, so
/// that a resampled transit keeps absolute capillary and ramp durations.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "shape", rename_all = "kebab-case", deny_unknown_fields)]
pub enum ProfileTemplate {
    Flat {
        hematocrit: f64,
    },
    /// Large vessel, ramp, capillary window centred on the segment, ramp, large vessel.
    Capillary {
        large: f64,
        capillary: f64,
        window: WindowLength,
        ramp_s: f64,
    },
    /// Ramp into capillaries over the final `ramp_s` seconds; no window of its own.
    EndsInCapillary {
        large: f64,
        capillary: f64,
        ramp_s: f64,
    },
    /// Starts inside a capillary bed, then ramps back to large vessels.
    StartsInCapillary {
        large: f64,
        capillary: f64,
        window_s: f64,
        ramp_s: f64,
    },
    /// Explicit breakpoints in transit fractions; does not rescale.
    Custom {
        breakpoints: Vec<[f64; 2]>,
        capillary_window: Option<[f64; 2]>,
    },
}

impl ProfileTemplate {
    pub fn standard_capillary() -> Self {
        ProfileTemplate::Capillary {
            large: LARGE_VESSEL_HEMATOCRIT,
            capillary: CAPILLARY_HEMATOCRIT,
            window: WindowLength::Seconds(1.0),
            ramp_s: 1.0,
        }
    }

    pub fn build(&self, transit: f64) -> Result<HematocritProfile> {
        if !(transit.is_finite() && transit > 0.0) {
            return Err(Error::config(format!("transit time must be positive, got {transit}")));
        }
        let t = transit;
        let (points, window): (Vec<(f64, f64)>, Option<(f64, f64)>) = match *self {
            ProfileTemplate::Flat { hematocrit } => (vec![(0.0, hematocrit), (t, hematocrit)], None),
            ProfileTemplate::Capillary { large, capillary, window, ramp_s } => {
                let w = window.resolve(t).clamp(0.0, t);
                let ramp = ramp_s.max(0.0).min((t - w) / 2.0);
                if w <= 0.0 {
                    return Err(Error::config("capillary window must be positive"));
                }
                if ramp <= 1e-12 * t {
                    (vec![(0.0, capillary), (t, capillary)], Some((0.0, t)))
                } else {
                    let a = 0.5 * (t - w);
                    let b = a + w;
                    (
                        vec![
                            (0.0, large),
                            (a - ramp, large),
                            (a, capillary),
                            (b, capillary),
                            (b + ramp, large),
                            (t, large),
                        ],
                        Some((a, b)),
                    )
                }
            }
            ProfileTemplate::EndsInCapillary { large, capillary, ramp_s } => {
                let ramp = ramp_s.max(0.0).min(t);
                (vec![(0.0, large), (t - ramp, large), (t, capillary)], None)
            }
            ProfileTemplate::StartsInCapillary { large, capillary, window_s, ramp_s } => {
                let w = window_s.clamp(0.0, t);
                let ramp = ramp_s.max(0.0).min(t - w);
                if w <= 0.0 {
                    return Err(Error::config("capillary window must be positive"));
                }
                (vec![(0.0, capillary), (w, capillary), (w + ramp, large), (t, large)], Some((0.0, w)))
            }
            ProfileTemplate::Custom { ref breakpoints, capillary_window } => {
                return HematocritProfile::new(
                    breakpoints.iter().map(|p| (p[0], p[1])).collect(),
                    capillary_window.map(|w| (w[0], w[1])),
                );
            }
        };
        let mut fractions: Vec<(f64, f64)> = Vec::with_capacity(points.len());
        for (time, h) in points {
            let f = (time / t).clamp(0.0, 1.0);
            match fractions.last() {
                Some(&(last, _)) if f - last <= 1e-12 => {}
                _ => fractions.push((f, h)),
            }
        }
        if let Some(last) = fractions.last_mut() {
            last.0 = 1.0;
        }
        if fractions.len() == 1 {
            let h = fractions[0].1;
            fractions = vec![(0.0, h), (1.0, h)];
        }
        HematocritProfile::new(fractions, window.map(|(a, b)| (a / t, b / t)))
    }

    /// Window duration in seconds for a given transit, if the template has one.
    pub fn window_seconds(&self, transit: f64) -> Option<f64> {
        self.build(transit)
            .ok()
            .and_then(|p| p.capillary_window())
            .map(|(a, b)| (b - a) * transit)
    }
}
