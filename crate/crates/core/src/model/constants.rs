use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Physical constants of blood, robots and tissue, all in SI units.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PhysicalConstants {
    /// Oxygen diffusion coefficient in plasma (m²/s).
    pub oxygen_diffusion_coefficient: f64,
    /// Robot sphere radius (m).
    pub robot_radius: f64,
    /// Energy a robot fuel cell extracts per oxygen molecule (J).
    pub robot_energy_per_o2: f64,
    /// Energy tissue extracts per oxygen molecule (J).
    pub tissue_energy_per_o2: f64,
    pub hill_exponent: f64,
    /// Plasma concentration at half saturation (molecules/m³).
    pub hill_c50: f64,
    /// Oxygen binding sites per m³ of red cells.
    pub cell_o2_capacity: f64,
    /// Plasma concentration leaving the lung capillaries (molecules/m³).
    pub lung_exit_plasma_concentration: f64,
    /// Hematocrit of the flowing blood in large vessels.
    pub discharge_hematocrit: f64,
    pub capillary_radius: f64,
    pub capillary_length: f64,
    /// Michaelis constant of the tissue consumption curve (molecules/m³).
    pub tissue_michaelis_constant: f64,
    /// Plasma viscosity (Pa·s).
    pub plasma_viscosity: f64,
}

impl Default for PhysicalConstants {
    fn default() -> Self {
        Self {
            oxygen_diffusion_coefficient: 2.0e-9,
            robot_radius: 1.0e-6,
            robot_energy_per_o2: 3.33e-19,
            tissue_energy_per_o2: 4.8e-19,
            hill_exponent: 2.7,
            hill_c50: 2.2e22,
            cell_o2_capacity: 1.23e25,
            lung_exit_plasma_concentration: 7.16e22,
            discharge_hematocrit: 0.45,
            capillary_radius: 4.0e-6,
            capillary_length: 1.0e-3,
            tissue_michaelis_constant: 7.0e20,
            plasma_viscosity: 1.0e-3,
        }
    }
}

impl PhysicalConstants {
    pub fn validate(&self) -> Result<()> {
        let fields = [
            ("oxygen_diffusion_coefficient", self.oxygen_diffusion_coefficient),
            ("robot_radius", self.robot_radius),
            ("robot_energy_per_o2", self.robot_energy_per_o2),
            ("tissue_energy_per_o2", self.tissue_energy_per_o2),
            ("hill_exponent", self.hill_exponent),
            ("hill_c50", self.hill_c50),
            ("cell_o2_capacity", self.cell_o2_capacity),
            ("lung_exit_plasma_concentration", self.lung_exit_plasma_concentration),
            ("discharge_hematocrit", self.discharge_hematocrit),
            ("capillary_radius", self.capillary_radius),
            ("capillary_length", self.capillary_length),
            ("tissue_michaelis_constant", self.tissue_michaelis_constant),
            ("plasma_viscosity", self.plasma_viscosity),
        ];
        for (name, value) in fields {
            if !(value.is_finite() && value > 0.0) {
                return Err(Error::config(format!("constant `{name}` must be positive, got {value}")));
            }
        }
        if self.hill_exponent <= 1.0 {
            return Err(Error::config("hill_exponent must exceed 1"));
        }
        if self.discharge_hematocrit >= 1.0 {
            return Err(Error::config("discharge_hematocrit must be below 1"));
        }
        Ok(())
    }

    /// Blood volume inside one capillary (m³).
    pub fn capillary_volume(&self) -> f64 {
        std::f64::consts::PI * self.capillary_radius.powi(2) * self.capillary_length
    }
}
