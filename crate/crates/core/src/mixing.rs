//! Reduced-order estimates for oxygen mixing by moving robots.

use serde::Serialize;

use crate::error::{Error, Result};
use crate::model::PhysicalConstants;

fn positive(name: &str, v: f64) -> Result<()> {
    if v.is_finite() && v > 0.0 {
        Ok(())
    } else {
        Err(Error::domain(format!("{name} must be positive, got {v}")))
    }
}

fn nonnegative(name: &str, v: f64) -> Result<()> {
    if v.is_finite() && v >= 0.0 {
        Ok(())
    } else {
        Err(Error::domain(format!("{name} must be nonnegative, got {v}")))
    }
}

/// Convection versus diffusion: v·d/D.
pub fn peclet(v: f64, d: f64, diffusion: f64) -> Result<f64> {
    positive("speed", v)?;
    positive("length", d)?;
    positive("diffusion coefficient", diffusion)?;
    Ok(v * d / diffusion)
}

/// Concentration change rate from `n` robots each ferrying `m` molecules
/// per trip of `t` seconds, spread over `volume` (molecules/m³/s).
pub fn active_mixing_rate(n: f64, m: f64, t: f64, volume: f64) -> Result<f64> {
    nonnegative("robot count", n)?;
    nonnegative("molecules per trip", m)?;
    positive("trip time", t)?;
    positive("volume", volume)?;
    Ok(n / volume * (m / t))
}

/// Effective diffusion of a run-and-tumble walk in 3D: v²τ/3.
pub fn random_walk_diffusion(v: f64, tau: f64) -> Result<f64> {
    nonnegative("speed", v)?;
    nonnegative("reorientation time", tau)?;
    Ok(v * v * tau / 3.0)
}

/// Fuel power to push a sphere through fluid at speed `v`: Stokes drag
/// power 6πηrv² divided by both conversion efficiencies.
pub fn transport_power(r: f64, v: f64, viscosity: f64, fuel_efficiency: f64, locomotion_efficiency: f64) -> Result<f64> {
    positive("radius", r)?;
    nonnegative("speed", v)?;
    positive("viscosity", viscosity)?;
    for (name, e) in [("fuel efficiency", fuel_efficiency), ("locomotion efficiency", locomotion_efficiency)] {
        if !(e > 0.0 && e <= 1.0) {
            return Err(Error::domain(format!("{name} must lie in (0, 1], got {e}")));
        }
    }
    Ok(6.0 * std::f64::consts::PI * viscosity * r * v * v / (fuel_efficiency * locomotion_efficiency))
}

#[derive(Debug, Clone, Serialize)]
pub struct Estimate {
    pub name: &'static str,
    pub value: f64,
    pub unit: &'static str,
    pub inputs: Vec<(&'static str, f64)>,
}

/// The four estimators evaluated at representative inputs.
pub fn mixing_report(k: &PhysicalConstants, total_volume: f64) -> Result<Vec<Estimate>> {
    let d = k.oxygen_diffusion_coefficient;
    let walk = random_walk_diffusion(1e-3, 0.1)?;
    Ok(vec![
        Estimate {
            name: "peclet_large_vessel",
            value: peclet(2.5e-3, 2.5e-3, d)?,
            unit: "1",
            inputs: vec![("speed_m_per_s", 2.5e-3), ("diameter_m", 2.5e-3), ("diffusion_m2_per_s", d)],
        },
        Estimate {
            name: "peclet_small_vessel",
            value: peclet(0.75e-3, 125e-6, d)?,
            unit: "1",
            inputs: vec![("speed_m_per_s", 0.75e-3), ("diameter_m", 125e-6), ("diffusion_m2_per_s", d)],
        },
        Estimate {
            name: "active_mixing_rate",
            value: active_mixing_rate(1e12, 5e8, 1.0, total_volume)?,
            unit: "molecules/m^3/s",
            inputs: vec![("robots", 1e12), ("molecules_per_trip", 5e8), ("trip_s", 1.0), ("volume_m3", total_volume)],
        },
        Estimate {
            name: "random_walk_diffusion",
            value: walk,
            unit: "m^2/s",
            inputs: vec![("speed_m_per_s", 1e-3), ("tau_s", 0.1)],
        },
        Estimate {
            name: "random_walk_over_oxygen_diffusion",
            value: walk / d,
            unit: "1",
            inputs: vec![("diffusion_m2_per_s", d)],
        },
        Estimate {
            name: "transport_power",
            value: transport_power(k.robot_radius, 1e-3, k.plasma_viscosity, 0.5, 0.01)?,
            unit: "W",
            inputs: vec![
                ("radius_m", k.robot_radius),
                ("speed_m_per_s", 1e-3),
                ("viscosity_pa_s", k.plasma_viscosity),
                ("fuel_efficiency", 0.5),
                ("locomotion_efficiency", 0.01),
            ],
        },
    ])
}
