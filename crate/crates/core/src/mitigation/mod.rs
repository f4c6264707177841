//! Oxygen tanks, path sampling and location-dependent uptake limits.

mod sampling;
mod tank;
mod uptake;

pub use sampling::{sample_path, PathSampler};
pub use tank::{
    simulate_tank, tank_distribution, DrawMode, TankDistribution, TankEvent, TankModel, TankPolicy, TankSpec, TankTrace,
    TANK_HISTOGRAM_BINS, TANK_WARMUP,
};
pub use uptake::{uptake_factor, uptake_rule, UptakeRule};
