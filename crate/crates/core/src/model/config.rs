//! JSON network file: clinical units on disk, SI in memory.

use std::io::Read;
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::constants::PhysicalConstants;
use super::network::{BloodGlobals, CirculationNetwork, Segment, SegmentKind, TissueDemand};
use super::profile::ProfileTemplate;
use crate::error::{Error, Result};
use crate::units::*;

/// Relative tolerance under which two independent routes to a segment
/// flow (V/t and ΔP/R) are considered to agree.
pub const FLOW_RECONCILE_TOLERANCE: f64 = 0.02;

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct UnitsHeader {
    pub transit_time: String,
    pub resistance: String,
    pub flow: String,
    pub volume: String,
    pub pressure: String,
    pub constants: String,
}

impl Default for UnitsHeader {
    fn default() -> Self {
        Self {
            transit_time: "s".into(),
            resistance: "MPa s/m^3".into(),
            flow: "L/min".into(),
            volume: "mL".into(),
            pressure: "mmHg".into(),
            constants: "SI".into(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GlobalsRecord {
    pub total_volume_ml: f64,
    pub total_flow_l_per_min: f64,
    pub systemic_pressure_drop_mmhg: f64,
    pub pulmonary_pressure_drop_mmhg: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SegmentRecord {
    pub id: String,
    pub kind: SegmentKind,
    pub transit_time_s: f64,
    pub resistance_mpa_s_per_m3: Option<f64>,
    pub flow_l_per_min: f64,
    pub volume_ml: f64,
    pub pressure_drop_mmhg: Option<f64>,
    pub hematocrit_profile: ProfileTemplate,
    pub tissue: TissueDemand,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct NetworkFile {
    pub units: UnitsHeader,
    pub globals: GlobalsRecord,
    #[serde(default)]
    pub constants: PhysicalConstants,
    pub segments: Vec<SegmentRecord>,
    pub edges: Vec<(String, String)>,
}

impl NetworkFile {
    pub fn from_json(text: &str) -> Result<Self> {
        let file: NetworkFile = serde_json::from_str(text)?;
        if file.units != UnitsHeader::default() {
            return Err(Error::config(format!(
                "unsupported units header {:?}; expected {:?}",
                file.units,
                UnitsHeader::default()
            )));
        }
        Ok(file)
    }

    /// Reads a network file; `-` reads standard input.
    pub fn load(path: &Path) -> Result<Self> {
        let mut text = String::new();
        if path == Path::new("-") {
            std::io::stdin()
                .read_to_string(&mut text)
                .map_err(|source| Error::Io { path: path.to_path_buf(), source })?;
        } else {
            text = std::fs::read_to_string(path).map_err(|source| Error::Io { path: path.to_path_buf(), source })?;
        }
        Self::from_json(&text)
    }

    pub fn to_json_pretty(&self) -> String {
        serde_json::to_string_pretty(self).expect("network file serializes")
    }

    /// Converts to SI and reconciles flows that were printed with too few
    /// digits: when a segment's listed flow disagrees with both V/t and
    /// ΔP/R while those two agree, their mean replaces it.
    pub fn into_network(self) -> Result<CirculationNetwork> {
        let globals = BloodGlobals {
            total_volume: ml_to_si(self.globals.total_volume_ml),
            total_flow: l_per_min_to_si(self.globals.total_flow_l_per_min),
            systemic_pressure_drop: mmhg_to_si(self.globals.systemic_pressure_drop_mmhg),
            pulmonary_pressure_drop: mmhg_to_si(self.globals.pulmonary_pressure_drop_mmhg),
        };
        let mut notes = Vec::new();
        let segments = self
            .segments
            .into_iter()
            .map(|r| {
                let mut seg = Segment {
                    id: r.id,
                    kind: r.kind,
                    transit_time: r.transit_time_s,
                    resistance: r.resistance_mpa_s_per_m3.map(mpa_resistance_to_si),
                    flow: l_per_min_to_si(r.flow_l_per_min),
                    volume: ml_to_si(r.volume_ml),
                    pressure_drop: r.pressure_drop_mmhg.map(mmhg_to_si),
                    profile: r.hematocrit_profile,
                    tissue: r.tissue,
                };
                if let Some(flow) = reconciled_flow(&seg) {
                    notes.push(format!(
                        "segment `{}`: flow {:.4} L/min replaced by {:.4} L/min (mean of V/t and dP/R)",
                        seg.id,
                        si_to_l_per_min(seg.flow),
                        si_to_l_per_min(flow)
                    ));
                    seg.flow = flow;
                }
                seg
            })
            .collect();
        let mut net = CirculationNetwork::new(globals, self.constants, segments, &self.edges)?;
        net.notes = notes;
        Ok(net)
    }

    pub fn from_network(net: &CirculationNetwork) -> Self {
        let g = &net.globals;
        Self {
            units: UnitsHeader::default(),
            globals: GlobalsRecord {
                total_volume_ml: si_to_ml(g.total_volume),
                total_flow_l_per_min: si_to_l_per_min(g.total_flow),
                systemic_pressure_drop_mmhg: si_to_mmhg(g.systemic_pressure_drop),
                pulmonary_pressure_drop_mmhg: si_to_mmhg(g.pulmonary_pressure_drop),
            },
            constants: net.constants,
            segments: net
                .segments()
                .iter()
                .map(|s| SegmentRecord {
                    id: s.id.clone(),
                    kind: s.kind,
                    transit_time_s: s.transit_time,
                    resistance_mpa_s_per_m3: s.resistance.map(si_to_mpa_resistance),
                    flow_l_per_min: si_to_l_per_min(s.flow),
                    volume_ml: si_to_ml(s.volume),
                    pressure_drop_mmhg: s.pressure_drop.map(si_to_mmhg),
                    hematocrit_profile: s.profile.clone(),
                    tissue: s.tissue,
                })
                .collect(),
            edges: net.edge_ids(),
        }
    }
}

fn reconciled_flow(seg: &Segment) -> Option<f64> {
    let (r, dp) = (seg.resistance?, seg.pressure_drop?);
    let by_volume = seg.volume / seg.transit_time;
    let by_pressure = dp / r;
    let rel = |a: f64, b: f64| (a - b).abs() / b.abs();
    let listed_ok = rel(seg.flow, by_volume) <= FLOW_RECONCILE_TOLERANCE
        || rel(seg.flow, by_pressure) <= FLOW_RECONCILE_TOLERANCE;
    if !listed_ok && rel(by_volume, by_pressure) <= FLOW_RECONCILE_TOLERANCE {
        Some(0.5 * (by_volume + by_pressure))
    } else {
        None
    }
}

pub fn load_network(path: &Path) -> Result<CirculationNetwork> {
    NetworkFile::load(path)?.into_network()
}
