use super::config::NetworkFile;
use super::network::CirculationNetwork;

/// The embedded resting-adult dataset, in on-disk units, byte for byte.
pub const DEFAULT_NETWORK_JSON: &str = include_str!("../../data/default_network.json");

/// The 17-segment resting network.
pub fn default_network() -> CirculationNetwork {
    default_network_file().into_network().expect("embedded dataset is valid")
}

pub fn default_network_file() -> NetworkFile {
    NetworkFile::from_json(DEFAULT_NETWORK_JSON).expect("embedded dataset parses")
}
