//! Case studies along particular routes: the portal double capillary bed,
//! the slow spleen compartment and the coronary bed.

use serde::Serialize;

use crate::error::{Error, Result};
use crate::model::{CirculationNetwork, CirculationPath, SegmentKind};
use crate::transport::{sweep_circulation, SegmentTrace, SwarmConfig, SystemReport, TraceSample, TransportContext};

pub const PORTAL_ROUTE: [&str; 4] = ["digestive", "portal", "liver", "inferior_vena_cava"];
pub const HEPATIC_ROUTE: [&str; 3] = ["hepatic", "liver", "inferior_vena_cava"];
pub const SPLEEN_SLOW: &str = "spleen_slow";
pub const CORONARY: &str = "heart_coronary";

/// Saturation below which red cells count as emptied.
pub const DESATURATED: f64 = 1e-3;

/// One segment's samples placed on a route clock.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TracePiece {
    pub segment: String,
    /// Blood time at segment entry along the route (s).
    pub offset: f64,
    pub robot_offset: f64,
    pub samples: Vec<TraceSample>,
}

/// Step in robot power where a route enters a junction shared with other streams.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct MergeJump {
    /// Segment entered after the merge.
    pub segment: String,
    pub time: f64,
    pub power_before: f64,
    pub power_after: f64,
}

impl MergeJump {
    pub fn change(&self) -> f64 {
        self.power_after - self.power_before
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RouteTrace {
    pub pieces: Vec<TracePiece>,
    pub merges: Vec<MergeJump>,
}

impl RouteTrace {
    fn from_report(report: &SystemReport, ids: &[&str]) -> Result<Self> {
        let mut pieces: Vec<TracePiece> = Vec::with_capacity(ids.len());
        let mut merges = Vec::new();
        let (mut offset, mut robot_offset) = (0.0, 0.0);
        for id in ids {
            let seg = report.segment(id).ok_or_else(|| Error::config(format!("route needs segment `{id}`")))?;
            let samples = seg.trace().samples.clone();
            let (first, last) = match (samples.first(), samples.last()) {
                (Some(a), Some(b)) => (*a, *b),
                _ => return Err(Error::config(format!("segment `{id}` has no trace samples"))),
            };
            if let Some(prev) = pieces.last() {
                let before = prev.samples.last().expect("nonempty").robot_power;
                if before != first.robot_power {
                    merges.push(MergeJump {
                        segment: id.to_string(),
                        time: offset,
                        power_before: before,
                        power_after: first.robot_power,
                    });
                }
            }
            pieces.push(TracePiece { segment: id.to_string(), offset, robot_offset, samples });
            offset += last.time;
            robot_offset += last.robot_time;
        }
        Ok(Self { pieces, merges })
    }

    /// Samples with route-relative times, labelled by segment.
    pub fn samples(&self) -> impl Iterator<Item = (&str, TraceSample)> + '_ {
        self.pieces.iter().flat_map(|p| {
            p.samples.iter().map(move |s| {
                let mut s = *s;
                s.time += p.offset;
                s.robot_time += p.robot_offset;
                (p.segment.as_str(), s)
            })
        })
    }

    pub fn duration(&self) -> f64 {
        self.pieces.last().map_or(0.0, |p| p.offset + p.samples.last().map_or(0.0, |s| s.time))
    }

    pub fn piece(&self, segment: &str) -> Option<&TracePiece> {
        self.pieces.iter().find(|p| p.segment == segment)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PortalReport {
    pub robot_count: f64,
    /// Digestive organs, portal vein, liver and on to the vena cava.
    pub portal: RouteTrace,
    /// Hepatic artery joining the same liver bed.
    pub hepatic: RouteTrace,
}

impl PortalReport {
    /// Jump where the portal stream meets hepatic arterial blood.
    pub fn portal_jump(&self) -> Option<&MergeJump> {
        self.portal.merges.iter().find(|m| m.segment == "liver")
    }

    pub fn hepatic_jump(&self) -> Option<&MergeJump> {
        self.hepatic.merges.iter().find(|m| m.segment == "liver")
    }
}

pub fn portal_trace(net: &CirculationNetwork, swarm: &SwarmConfig) -> Result<PortalReport> {
    let report = sweep_circulation(net, swarm)?;
    Ok(PortalReport {
        robot_count: swarm.robot_count,
        portal: RouteTrace::from_report(&report, &PORTAL_ROUTE)?,
        hepatic: RouteTrace::from_report(&report, &HEPATIC_ROUTE)?,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SpleenReport {
    pub robot_count: f64,
    pub trace: SegmentTrace,
    pub inlet_saturation: f64,
    pub exit_saturation: f64,
    pub min_saturation: f64,
    /// Cells emptied before the end of the slit passage.
    pub fully_desaturated: bool,
    pub end_robot_power: f64,
}

pub fn spleen_trace(net: &CirculationNetwork, swarm: &SwarmConfig) -> Result<SpleenReport> {
    let report = sweep_circulation(net, swarm)?;
    let seg = report.segment(SPLEEN_SLOW).ok_or_else(|| Error::config(format!("network has no `{SPLEEN_SLOW}`")))?;
    let window_end = net.segment(SPLEEN_SLOW).expect("present").capillary_window_seconds()?.map_or(f64::INFINITY, |w| w.1);
    let s = &seg.trace().samples;
    let first = s.first().expect("nonempty");
    let last = s.last().expect("nonempty");
    Ok(SpleenReport {
        robot_count: swarm.robot_count,
        trace: seg.trace().clone(),
        inlet_saturation: first.state.cell_saturation,
        exit_saturation: last.state.cell_saturation,
        min_saturation: s.iter().map(|x| x.state.cell_saturation).fold(f64::INFINITY, f64::min),
        fully_desaturated: s.iter().any(|x| x.time < window_end && x.state.cell_saturation < DESATURATED),
        end_robot_power: last.robot_power,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CoronaryReport {
    pub robot_count: f64,
    pub trace: SegmentTrace,
    pub window: (f64, f64),
    /// Exit over entry total oxygen across the capillary window.
    pub window_exit_fraction: f64,
    pub min_relative_tissue_power: f64,
    /// Share of the oxygen removed in this segment that went to tissue.
    pub tissue_share: f64,
}

impl CoronaryReport {
    /// (time, saturation) pairs.
    pub fn saturation(&self) -> Vec<(f64, f64)> {
        self.trace.samples.iter().map(|s| (s.time, s.state.cell_saturation)).collect()
    }

    /// (time, relative tissue power) pairs.
    pub fn relative_tissue_power(&self) -> Vec<(f64, f64)> {
        self.trace.samples.iter().map(|s| (s.time, s.relative_tissue_power)).collect()
    }
}

pub fn coronary_report(net: &CirculationNetwork, swarm: &SwarmConfig) -> Result<CoronaryReport> {
    let ctx = TransportContext::new(net)?;
    let report = ctx.sweep(swarm)?;
    let seg = report.segment(CORONARY).ok_or_else(|| Error::config(format!("network has no `{CORONARY}`")))?;
    let window = net
        .segment(CORONARY)
        .expect("present")
        .capillary_window_seconds()?
        .ok_or_else(|| Error::config("coronary segment needs a capillary window"))?;
    let trace = seg.trace();
    let at = |t: f64| {
        trace
            .samples
            .iter()
            .min_by(|a, b| (a.time - t).abs().total_cmp(&(b.time - t).abs()))
            .expect("nonempty")
            .total_oxygen
    };
    let (robot, tissue) = (seg.outcome.robot_consumed, seg.outcome.tissue_consumed);
    Ok(CoronaryReport {
        robot_count: swarm.robot_count,
        trace: trace.clone(),
        window,
        window_exit_fraction: at(window.1) / at(window.0),
        min_relative_tissue_power: seg
            .outcome
            .min_relative_tissue_power
            .ok_or_else(|| Error::config("coronary segment has no tissue demand"))?,
        tissue_share: tissue / (robot + tissue),
    })
}

/// Robot and tissue uptake per m³ of blood summed along a route.
pub fn route_consumption(report: &SystemReport, ids: &[&str]) -> Result<(f64, f64)> {
    ids.iter().try_fold((0.0, 0.0), |(r, t), id| {
        let s = report.segment(id).ok_or_else(|| Error::config(format!("unknown segment `{id}`")))?;
        Ok((r + s.outcome.robot_consumed, t + s.outcome.tissue_consumed))
    })
}

/// Capillary beds crossed by a path outside the lungs.
pub fn capillary_window_count(net: &CirculationNetwork, path: &CirculationPath) -> Result<usize> {
    let mut n = 0;
    for &i in &path.segments {
        let s = &net.segments()[i];
        if s.kind != SegmentKind::Lung && s.capillary_window_seconds()?.is_some() {
            n += 1;
        }
    }
    Ok(n)
}
