use std::collections::VecDeque;

use serde::Serialize;

use super::oxygen::{invert_total_oxygen, total_oxygen, BloodState};
use super::segment::{CapillaryExit, SegmentOutcome, SegmentTrace, TransportContext};
use super::swarm::SwarmConfig;
use crate::error::{Error, Result};
use crate::model::{CirculationNetwork, PhysicalConstants, SegmentKind};

/// Flow-weighted mix of incoming streams, re-equilibrated.
pub fn merge_states(inputs: &[(BloodState, f64)], k: &PhysicalConstants) -> Result<BloodState> {
    if inputs.is_empty() {
        return Err(Error::domain("merge needs at least one input"));
    }
    if inputs.iter().any(|&(_, f)| !(f > 0.0)) {
        return Err(Error::domain("merge flows must be positive"));
    }
    if let [(only, _)] = inputs {
        return Ok(*only);
    }
    let total: f64 = inputs.iter().map(|&(_, f)| f).sum();
    let t = inputs.iter().map(|(s, f)| f * total_oxygen(s, k)).sum::<f64>() / total;
    let h = inputs.iter().map(|(s, f)| f * s.local_hematocrit).sum::<f64>() / total;
    BloodState::from_total_oxygen(t.max(0.0), h, k)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Extremum {
    pub value: f64,
    pub segment: String,
    pub time: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SegmentReport {
    pub id: String,
    pub kind: SegmentKind,
    /// m³/s
    pub flow: f64,
    #[serde(flatten)]
    pub outcome: SegmentOutcome,
}

impl SegmentReport {
    pub fn end_concentration(&self) -> f64 {
        self.outcome.outlet.plasma_concentration
    }

    pub fn capillary_exit(&self) -> Option<&CapillaryExit> {
        self.outcome.capillary_exit.as_ref()
    }

    pub fn trace(&self) -> &SegmentTrace {
        &self.outcome.trace
    }
}

/// Steady state of the whole circulation for one swarm.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SystemReport {
    pub robot_count: f64,
    /// In network order.
    pub segments: Vec<SegmentReport>,
    pub lung_exit: BloodState,
    pub min_robot_power: Extremum,
    pub max_robot_power: Extremum,
    /// Lowest end-of-segment plasma concentration outside the lungs.
    pub min_end_concentration: Extremum,
    pub min_relative_tissue_power: Option<Extremum>,
}

impl SystemReport {
    pub fn segment(&self, id: &str) -> Option<&SegmentReport> {
        self.segments.iter().find(|s| s.id == id)
    }

    /// Flow-weighted mean robot power at capillary exit over systemic
    /// segments with a capillary window.
    pub fn mean_capillary_exit_power(&self) -> f64 {
        let (mut num, mut den) = (0.0, 0.0);
        for s in &self.segments {
            if s.kind == SegmentKind::Lung {
                continue;
            }
            if let Some(e) = s.capillary_exit() {
                num += s.flow * e.robot_power;
                den += s.flow;
            }
        }
        if den > 0.0 {
            num / den
        } else {
            f64::NAN
        }
    }

    pub fn drop_traces(&mut self) {
        for s in &mut self.segments {
            s.outcome.trace.samples = Vec::new();
        }
    }
}

impl TransportContext<'_> {
    /// Propagates lung-exit blood through the circulation in topological
    /// order and back into the lungs.
    pub fn sweep(&self, swarm: &SwarmConfig) -> Result<SystemReport> {
        swarm.validate()?;
        let net = self.net;
        let segs = net.segments();
        let n = segs.len();
        let lung = net.lung_index();
        let k = &self.k;
        let hd = k.discharge_hematocrit;

        // inlet junction of each segment
        let junctions = net.junctions();
        let mut inlet_of = vec![usize::MAX; n];
        for (j, jn) in junctions.iter().enumerate() {
            for &o in &jn.outputs {
                inlet_of[o] = j;
            }
        }

        let mut outcomes: Vec<Option<SegmentOutcome>> = vec![None; n];

        // lung tail, from the reload point to the lung outlet
        let lp = &self.segs[lung];
        let (_, b) = lp.window.ok_or_else(|| Error::config("lung segment needs a capillary window"))?;
        let lung_robots = self.robots(lung, swarm)?;
        let mut tail = Vec::new();
        let tail_y = self.span(lung, &lung_robots, b, lp.transit, [self.lung_total, 0.0, 0.0], lp.tissue_rate, 0.0, &mut tail)?;
        let lung_out = BloodState { local_hematocrit: hd, ..tail.last().expect("nonempty").state };

        // topological order with the lung cut out
        let mut indeg = vec![0usize; n];
        for &(a, b) in net.edges() {
            if a != lung && b != lung {
                indeg[b] += 1;
            }
        }
        let mut queue: VecDeque<usize> = (0..n).filter(|&i| i != lung && indeg[i] == 0).collect();
        let mut order = Vec::with_capacity(n);
        while let Some(i) = queue.pop_front() {
            order.push(i);
            for s in net.successors(i) {
                if s != lung {
                    indeg[s] -= 1;
                    if indeg[s] == 0 {
                        queue.push_back(s);
                    }
                }
            }
        }
        if order.len() != n - 1 {
            return Err(Error::structural("circulation has a loop that bypasses the lungs"));
        }

        let end_state = |outcomes: &[Option<SegmentOutcome>], i: usize| -> BloodState {
            if i == lung {
                lung_out
            } else {
                outcomes[i].as_ref().expect("topological order").outlet
            }
        };
        let inlet_state = |outcomes: &[Option<SegmentOutcome>], i: usize| -> Result<BloodState> {
            let jn = &junctions[inlet_of[i]];
            let inputs: Vec<(BloodState, f64)> =
                jn.inputs.iter().map(|&p| (end_state(outcomes, p), segs[p].flow)).collect();
            merge_states(&inputs, k)
        };

        for &i in &order {
            let inlet = inlet_state(&outcomes, i)?;
            outcomes[i] = Some(self.integrate_segment(i, &inlet, swarm)?);
        }

        // lung head, from the inlet to the reload point
        let lung_in = inlet_state(&outcomes, lung)?;
        let t_in = total_oxygen(&lung_in, k);
        let mut head = Vec::new();
        let head_y = self.span(lung, &lung_robots, 0.0, b, [t_in, 0.0, 0.0], lp.tissue_rate, 0.0, &mut head)?;
        let pre = head.pop().expect("nonempty");
        let offset = pre.robot_time;
        head.extend(tail.into_iter().map(|mut s| {
            s.robot_time += offset;
            s
        }));
        let y = [tail_y[0], head_y[1] + tail_y[1], head_y[2] + tail_y[2]];
        outcomes[lung] = Some(self.outcome(lung, lung_in, t_in, y, head, &[pre]));

        let segments: Vec<SegmentReport> = outcomes
            .into_iter()
            .zip(segs)
            .map(|(o, s)| SegmentReport { id: s.id.clone(), kind: s.kind, flow: s.flow, outcome: o.expect("all visited") })
            .collect();

        let pick = |f: &dyn Fn(&SegmentReport) -> Option<(f64, f64)>, lower: bool| -> Option<Extremum> {
            segments
                .iter()
                .filter_map(|s| f(s).map(|(v, t)| Extremum { value: v, segment: s.id.clone(), time: t }))
                .reduce(|a, b| if (b.value < a.value) == lower && b.value != a.value { b } else { a })
        };
        let min_robot_power =
            pick(&|s| Some((s.outcome.min_robot_power, s.outcome.min_robot_power_time)), true).expect("segments");
        let max_robot_power =
            pick(&|s| Some((s.outcome.max_robot_power, s.outcome.max_robot_power_time)), false).expect("segments");
        let min_end_concentration = pick(
            &|s| (s.kind != SegmentKind::Lung).then(|| (s.end_concentration(), segs[net.index_of(&s.id).unwrap()].transit_time)),
            true,
        )
        .ok_or_else(|| Error::structural("no segments outside the lungs"))?;
        let min_relative_tissue_power = pick(
            &|s| {
                s.outcome
                    .min_relative_tissue_power
                    .map(|v| (v, s.capillary_exit().map_or(f64::NAN, |e| e.time)))
            },
            true,
        );

        Ok(SystemReport {
            robot_count: swarm.robot_count,
            segments,
            lung_exit: lung_out,
            min_robot_power,
            max_robot_power,
            min_end_concentration,
            min_relative_tissue_power,
        })
    }
}

/// Full-circulation steady state for one swarm.
pub fn sweep_circulation(net: &CirculationNetwork, swarm: &SwarmConfig) -> Result<SystemReport> {
    TransportContext::new(net)?.sweep(swarm)
}

/// Plasma concentration matching a total-oxygen value at discharge hematocrit.
pub fn discharge_concentration(t: f64, k: &PhysicalConstants) -> Result<f64> {
    invert_total_oxygen(t, k.discharge_hematocrit, k)
}
