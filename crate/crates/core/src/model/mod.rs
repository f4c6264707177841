//! Circulation domain types, the default dataset and path enumeration.

mod config;
mod constants;
mod dataset;
mod network;
mod paths;
mod profile;

pub use config::{load_network, GlobalsRecord, NetworkFile, SegmentRecord, UnitsHeader, FLOW_RECONCILE_TOLERANCE};
pub use constants::PhysicalConstants;
pub use dataset::{default_network, default_network_file, DEFAULT_NETWORK_JSON};
pub use network::{
    BloodGlobals, CirculationNetwork, Junction, Segment, SegmentKind, TissueDemand, TissueMode,
    DEFAULT_PER_CAPILLARY_POWER,
};
pub use paths::{enumerate_paths, CirculationPath, PathSet};
pub use profile::{
    HematocritProfile, ProfileTemplate, WindowLength, CAPILLARY_HEMATOCRIT, LARGE_VESSEL_HEMATOCRIT,
    SPLEEN_SLIT_HEMATOCRIT,
};

/// Hematocrit at fraction `s` of a segment's transit.
pub fn hematocrit_at(profile: &HematocritProfile, s: f64) -> crate::Result<f64> {
    profile.hematocrit_at(s)
}
