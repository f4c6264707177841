use std::f64::consts::PI;

use serde::Serialize;

use crate::error::{Error, Result};
use crate::model::PhysicalConstants;

/// Oxygen state of blood at one point of the flow.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct BloodState {
    /// molecules/m³
    pub plasma_concentration: f64,
    pub cell_saturation: f64,
    pub local_hematocrit: f64,
    /// Saturation follows the Hill curve at this plasma concentration.
    pub equilibrated: bool,
}

impl BloodState {
    pub fn equilibrated(c: f64, hematocrit: f64, k: &PhysicalConstants) -> Result<Self> {
        check_hematocrit(hematocrit)?;
        Ok(Self {
            plasma_concentration: c,
            cell_saturation: hill_saturation(c, k)?,
            local_hematocrit: hematocrit,
            equilibrated: true,
        })
    }

    pub fn from_total_oxygen(t: f64, hematocrit: f64, k: &PhysicalConstants) -> Result<Self> {
        let c = invert_total_oxygen(t, hematocrit, k)?;
        Self::equilibrated(c, hematocrit, k)
    }

    /// Fully loaded blood leaving the lung capillaries.
    pub fn lung_exit(k: &PhysicalConstants) -> Self {
        Self::equilibrated(k.lung_exit_plasma_concentration, k.discharge_hematocrit, k).expect("valid constants")
    }

    pub fn total_oxygen(&self, k: &PhysicalConstants) -> f64 {
        total_oxygen(self, k)
    }
}

fn check_hematocrit(h: f64) -> Result<()> {
    if (0.0..1.0).contains(&h) {
        Ok(())
    } else {
        Err(Error::domain(format!("hematocrit must lie in [0, 1), got {h}")))
    }
}

#[inline]
pub(crate) fn hill(c: f64, n: f64, c50: f64) -> f64 {
    if c <= 0.0 {
        return 0.0;
    }
    let x = (c / c50).powf(n);
    if x.is_infinite() {
        1.0
    } else {
        x / (1.0 + x)
    }
}

/// Fraction of red-cell binding sites occupied at plasma concentration `c`.
pub fn hill_saturation(c: f64, k: &PhysicalConstants) -> Result<f64> {
    if !(c >= 0.0) {
        return Err(Error::domain(format!("concentration must be nonnegative, got {c}")));
    }
    Ok(hill(c, k.hill_exponent, k.hill_c50))
}

/// Oxygen per m³ of whole blood: plasma plus bound in cells.
pub fn total_oxygen(state: &BloodState, k: &PhysicalConstants) -> f64 {
    let h = state.local_hematocrit;
    (1.0 - h) * state.plasma_concentration + h * k.cell_o2_capacity * state.cell_saturation
}

#[inline]
pub(crate) fn total_oxygen_at(c: f64, h: f64, k: &PhysicalConstants) -> f64 {
    (1.0 - h) * c + h * k.cell_o2_capacity * hill(c, k.hill_exponent, k.hill_c50)
}

/// Plasma concentration in equilibrium with total oxygen `t` at hematocrit `h`.
pub fn invert_total_oxygen(t: f64, h: f64, k: &PhysicalConstants) -> Result<f64> {
    if !(t >= 0.0) || !t.is_finite() {
        return Err(Error::domain(format!("total oxygen must be finite and nonnegative, got {t}")));
    }
    check_hematocrit(h)?;
    Ok(invert(t, h, k, None))
}

/// Safeguarded Newton on [0, t/(1-h)], optionally warm-started.
pub(crate) fn invert(t: f64, h: f64, k: &PhysicalConstants, guess: Option<f64>) -> f64 {
    if t <= 0.0 {
        return 0.0;
    }
    let (n, c50, cap) = (k.hill_exponent, k.hill_c50, k.cell_o2_capacity);
    let mut lo = 0.0;
    let mut hi = t / (1.0 - h);
    let mut x = match guess {
        Some(g) if g > lo && g < hi => g,
        _ => 0.5 * hi.min(c50 * 4.0),
    };
    for _ in 0..200 {
        let s = hill(x, n, c50);
        let f = (1.0 - h) * x + h * cap * s - t;
        if f == 0.0 {
            return x;
        }
        if f > 0.0 {
            hi = x;
        } else {
            lo = x;
        }
        let df = (1.0 - h) + if x > 0.0 { h * cap * n * s * (1.0 - s) / x } else { 0.0 };
        let mut next = x - f / df;
        if !(next > lo && next < hi) {
            next = 0.5 * (lo + hi);
        }
        if (next - x).abs() <= 1e-14 * next || hi - lo <= 1e-15 * hi {
            return next;
        }
        x = next;
    }
    x
}

/// Diffusion-limited capture rate of an absorbing sphere (molecules/s).
pub fn robot_flux(c: f64, radius: f64, k: &PhysicalConstants) -> f64 {
    4.0 * PI * k.oxygen_diffusion_coefficient * radius * c
}

/// Power from `flux` molecules/s at uptake factor `u` (W).
pub fn robot_power(flux: f64, u: f64, k: &PhysicalConstants) -> f64 {
    u * flux * k.robot_energy_per_o2
}
