//! Oxygen physics, per-segment integration and the circulation sweep.

mod ode;
mod oxygen;
mod segment;
mod swarm;
mod sweep;

pub use oxygen::{hill_saturation, invert_total_oxygen, robot_flux, robot_power, total_oxygen, BloodState};
pub use segment::{
    integrate_segment, CapillaryExit, IntegratorSettings, SegmentOutcome, SegmentTrace, TissueCalibration,
    TraceSample, TransportContext, CORONARY_EXIT_FRACTION,
};
pub use swarm::{ConsumptionPolicy, LocationLimits, SwarmConfig};
pub use sweep::{discharge_concentration, merge_states, sweep_circulation, Extremum, SegmentReport, SystemReport};
