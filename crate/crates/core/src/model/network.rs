use std::collections::{BTreeMap, HashMap};

use serde::{Deserialize, Serialize};

use super::constants::PhysicalConstants;
use super::profile::{HematocritProfile, ProfileTemplate};
use crate::error::{Error, Result};

/// Whole-body blood parameters (SI).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BloodGlobals {
    pub total_volume: f64,
    pub total_flow: f64,
    pub systemic_pressure_drop: f64,
    pub pulmonary_pressure_drop: f64,
}

impl BloodGlobals {
    pub fn circulation_time(&self) -> f64 {
        self.total_volume / self.total_flow
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum SegmentKind {
    Pump,
    Lung,
    Systemic,
    Vein,
    PortalLimb,
}

impl SegmentKind {
    pub fn as_str(self) -> &'static str {
        match self {
            SegmentKind::Pump => "pump",
            SegmentKind::Lung => "lung",
            SegmentKind::Systemic => "systemic",
            SegmentKind::Vein => "vein",
            SegmentKind::PortalLimb => "portal-limb",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum TissueMode {
    None,
    Standard,
    /// Demand multiplier calibrated so a no-robot pass leaves a fixed fraction.
    Coronary,
    /// Same total demand per pass as a one-second capillary transit.
    ScaledByTransit,
}

pub const DEFAULT_PER_CAPILLARY_POWER: f64 = 2.0e-8;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TissueDemand {
    pub mode: TissueMode,
    /// Resting power drawn by the tissue around one capillary (W).
    #[serde(rename = "per_capillary_power_w")]
    pub per_capillary_power: f64,
}

impl TissueDemand {
    pub fn none() -> Self {
        Self { mode: TissueMode::None, per_capillary_power: 0.0 }
    }

    pub fn with_mode(mode: TissueMode) -> Self {
        Self { mode, per_capillary_power: DEFAULT_PER_CAPILLARY_POWER }
    }
}

/// One aggregated vessel segment (SI units).
#[derive(Debug, Clone, PartialEq)]
pub struct Segment {
    pub id: String,
    pub kind: SegmentKind,
    pub transit_time: f64,
    /// Absent for the heart-chamber pumps.
    pub resistance: Option<f64>,
    pub flow: f64,
    pub volume: f64,
    pub pressure_drop: Option<f64>,
    pub profile: ProfileTemplate,
    pub tissue: TissueDemand,
}

impl Segment {
    pub fn hematocrit_profile(&self) -> Result<HematocritProfile> {
        self.profile.build(self.transit_time)
    }

    /// Capillary window in seconds from segment entry.
    pub fn capillary_window_seconds(&self) -> Result<Option<(f64, f64)>> {
        Ok(self
            .hematocrit_profile()?
            .capillary_window()
            .map(|(a, b)| (a * self.transit_time, b * self.transit_time)))
    }

    pub fn is_pump(&self) -> bool {
        self.kind == SegmentKind::Pump
    }
}

/// Merge/split node: the segments ending there and those starting there.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Junction {
    pub inputs: Vec<usize>,
    pub outputs: Vec<usize>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct CirculationNetwork {
    pub globals: BloodGlobals,
    pub constants: PhysicalConstants,
    segments: Vec<Segment>,
    /// Directed adjacency by segment index.
    edges: Vec<(usize, usize)>,
    index: HashMap<String, usize>,
    /// Adjustments applied while loading (e.g. reconciled flows).
    pub notes: Vec<String>,
}

impl CirculationNetwork {
    pub fn new(
        globals: BloodGlobals,
        constants: PhysicalConstants,
        segments: Vec<Segment>,
        edges: &[(String, String)],
    ) -> Result<Self> {
        constants.validate()?;
        if !(globals.total_volume > 0.0 && globals.total_flow > 0.0) {
            return Err(Error::config("total volume and total flow must be positive"));
        }
        let mut index = HashMap::with_capacity(segments.len());
        for (i, s) in segments.iter().enumerate() {
            if index.insert(s.id.clone(), i).is_some() {
                return Err(Error::config(format!("duplicate segment id `{}`", s.id)));
            }
            if !(s.transit_time > 0.0 && s.flow > 0.0 && s.volume > 0.0) {
                return Err(Error::config(format!(
                    "segment `{}` needs positive transit time, flow and volume",
                    s.id
                )));
            }
            if s.tissue.per_capillary_power < 0.0 {
                return Err(Error::config(format!("segment `{}` has negative tissue power", s.id)));
            }
            let profile = s.hematocrit_profile()?;
            if s.tissue.mode != TissueMode::None && profile.capillary_window().is_none() {
                return Err(Error::config(format!(
                    "segment `{}` has tissue demand but no capillary window",
                    s.id
                )));
            }
        }
        let mut resolved = Vec::with_capacity(edges.len());
        for (from, to) in edges {
            let a = *index
                .get(from)
                .ok_or_else(|| Error::config(format!("edge references unknown segment `{from}`")))?;
            let b = *index
                .get(to)
                .ok_or_else(|| Error::config(format!("edge references unknown segment `{to}`")))?;
            if !resolved.contains(&(a, b)) {
                resolved.push((a, b));
            }
        }
        let net = Self { globals, constants, segments, edges: resolved, index, notes: Vec::new() };
        net.check_structure()?;
        Ok(net)
    }

    fn check_structure(&self) -> Result<()> {
        let lungs: Vec<_> = self.segments.iter().filter(|s| s.kind == SegmentKind::Lung).collect();
        if lungs.len() != 1 {
            return Err(Error::structural(format!("expected exactly one lung segment, found {}", lungs.len())));
        }
        for i in 0..self.segments.len() {
            if self.successors(i).next().is_none() || self.predecessors(i).next().is_none() {
                return Err(Error::structural(format!(
                    "segment `{}` is not on a closed circuit",
                    self.segments[i].id
                )));
            }
        }
        Ok(())
    }

    pub fn segments(&self) -> &[Segment] {
        &self.segments
    }

    pub fn segments_mut(&mut self) -> &mut [Segment] {
        &mut self.segments
    }

    pub fn edges(&self) -> &[(usize, usize)] {
        &self.edges
    }

    pub fn edge_ids(&self) -> Vec<(String, String)> {
        self.edges
            .iter()
            .map(|&(a, b)| (self.segments[a].id.clone(), self.segments[b].id.clone()))
            .collect()
    }

    pub fn index_of(&self, id: &str) -> Option<usize> {
        self.index.get(id).copied()
    }

    pub fn segment(&self, id: &str) -> Option<&Segment> {
        self.index_of(id).map(|i| &self.segments[i])
    }

    pub fn require(&self, id: &str) -> Result<usize> {
        self.index_of(id).ok_or_else(|| Error::config(format!("unknown segment `{id}`")))
    }

    pub fn successors(&self, i: usize) -> impl Iterator<Item = usize> + '_ {
        self.edges.iter().filter(move |e| e.0 == i).map(|e| e.1)
    }

    pub fn predecessors(&self, i: usize) -> impl Iterator<Item = usize> + '_ {
        self.edges.iter().filter(move |e| e.1 == i).map(|e| e.0)
    }

    pub fn lung_index(&self) -> usize {
        self.segments.iter().position(|s| s.kind == SegmentKind::Lung).expect("checked at construction")
    }

    /// Junction nodes, found by identifying the end of each edge's source
    /// segment with the start of its target segment.
    pub fn junctions(&self) -> Vec<Junction> {
        // node ids: 2*i = start of segment i, 2*i+1 = end of segment i
        let n = self.segments.len();
        let mut parent: Vec<usize> = (0..2 * n).collect();
        fn find(p: &mut [usize], mut x: usize) -> usize {
            while p[x] != x {
                p[x] = p[p[x]];
                x = p[x];
            }
            x
        }
        for &(a, b) in &self.edges {
            let ra = find(&mut parent, 2 * a + 1);
            let rb = find(&mut parent, 2 * b);
            if ra != rb {
                parent[ra] = rb;
            }
        }
        let mut groups: BTreeMap<usize, Junction> = BTreeMap::new();
        for i in 0..n {
            let rs = find(&mut parent, 2 * i);
            let re = find(&mut parent, 2 * i + 1);
            groups.entry(rs).or_insert_with(|| Junction { inputs: vec![], outputs: vec![] }).outputs.push(i);
            groups.entry(re).or_insert_with(|| Junction { inputs: vec![], outputs: vec![] }).inputs.push(i);
        }
        groups.into_values().filter(|j| !j.inputs.is_empty() && !j.outputs.is_empty()).collect()
    }

    pub fn total_segment_volume(&self) -> f64 {
        self.segments.iter().map(|s| s.volume).sum()
    }

    /// Builds a new network with the same topology but different segments.
    pub fn with_segments(&self, segments: Vec<Segment>, globals: BloodGlobals) -> Result<Self> {
        let edges = self.edge_ids();
        Self::new(globals, self.constants, segments, &edges)
    }

    pub fn with_constants(&self, constants: PhysicalConstants) -> Result<Self> {
        constants.validate()?;
        let mut net = self.clone();
        net.constants = constants;
        Ok(net)
    }
}
