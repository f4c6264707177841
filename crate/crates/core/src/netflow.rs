//! Pressure/flow relations, dataset self-consistency checks and a
//! node-pressure flow solver.

use nalgebra::{DMatrix, DVector};
use serde::Serialize;

use crate::error::{Error, Result};
use crate::model::{enumerate_paths, CirculationNetwork, Junction, SegmentKind};

pub const SEGMENT_TOLERANCE: f64 = 0.02;
pub const JUNCTION_TOLERANCE: f64 = 0.01;
pub const TOTALS_TOLERANCE: f64 = 0.005;

/// Resistance of a cylindrical tube under laminar flow: 8Lμ/(πr⁴).
pub fn poiseuille_resistance(length: f64, radius: f64, viscosity: f64) -> Result<f64> {
    for (name, v) in [("length", length), ("radius", radius), ("viscosity", viscosity)] {
        if !(v.is_finite() && v > 0.0) {
            return Err(Error::domain(format!("{name} must be positive, got {v}")));
        }
    }
    Ok(8.0 * length * viscosity / (std::f64::consts::PI * radius.powi(4)))
}

#[derive(Debug, Clone, Serialize)]
pub struct SegmentCheck {
    pub id: String,
    /// |V − tF| / V
    pub volume_relation_error: f64,
    /// |ΔP − RF| / ΔP, when both are given.
    pub pressure_relation_error: Option<f64>,
    pub ok: bool,
}

#[derive(Debug, Clone, Serialize)]
pub struct JunctionCheck {
    pub inputs: Vec<String>,
    pub outputs: Vec<String>,
    pub inflow: f64,
    pub outflow: f64,
    pub imbalance: f64,
    pub ok: bool,
}

#[derive(Debug, Clone, Serialize)]
pub struct TotalCheck {
    pub name: String,
    pub value: f64,
    pub expected: f64,
    pub relative_error: f64,
    pub ok: bool,
}

#[derive(Debug, Clone, Serialize)]
pub struct ValidationReport {
    pub pass: bool,
    pub segments: Vec<SegmentCheck>,
    pub junctions: Vec<JunctionCheck>,
    pub totals: Vec<TotalCheck>,
    pub notes: Vec<String>,
}

impl ValidationReport {
    pub fn failures(&self) -> Vec<String> {
        let mut out = Vec::new();
        for s in self.segments.iter().filter(|s| !s.ok) {
            out.push(format!("segment `{}`", s.id));
        }
        for j in self.junctions.iter().filter(|j| !j.ok) {
            out.push(format!("junction {:?} -> {:?}", j.inputs, j.outputs));
        }
        for t in self.totals.iter().filter(|t| !t.ok) {
            out.push(t.name.clone());
        }
        out
    }
}

fn rel(a: f64, b: f64) -> f64 {
    if a == b {
        0.0
    } else {
        (a - b).abs() / b.abs().max(a.abs()).max(f64::MIN_POSITIVE)
    }
}

fn total_check(name: impl Into<String>, value: f64, expected: f64) -> TotalCheck {
    let relative_error = (value - expected).abs() / expected.abs();
    TotalCheck { name: name.into(), value, expected, relative_error, ok: relative_error <= TOTALS_TOLERANCE }
}

/// Checks V = tF and ΔP = RF per segment, flow conservation per junction,
/// and whole-body totals. Never fails; the report carries failures.
pub fn validate_network(net: &CirculationNetwork) -> ValidationReport {
    let segs = net.segments();
    let segments: Vec<SegmentCheck> = segs
        .iter()
        .map(|s| {
            let v = rel(s.transit_time * s.flow, s.volume);
            let p = match (s.resistance, s.pressure_drop) {
                (Some(r), Some(dp)) => Some(rel(r * s.flow, dp)),
                _ => None,
            };
            let ok = v <= SEGMENT_TOLERANCE && p.map_or(true, |e| e <= SEGMENT_TOLERANCE);
            SegmentCheck { id: s.id.clone(), volume_relation_error: v, pressure_relation_error: p, ok }
        })
        .collect();

    let junctions: Vec<JunctionCheck> = net
        .junctions()
        .into_iter()
        .map(|j| {
            let inflow: f64 = j.inputs.iter().map(|&i| segs[i].flow).sum();
            let outflow: f64 = j.outputs.iter().map(|&i| segs[i].flow).sum();
            let imbalance = rel(inflow, outflow);
            JunctionCheck {
                inputs: j.inputs.iter().map(|&i| segs[i].id.clone()).collect(),
                outputs: j.outputs.iter().map(|&i| segs[i].id.clone()).collect(),
                inflow,
                outflow,
                imbalance,
                ok: imbalance <= JUNCTION_TOLERANCE,
            }
        })
        .collect();

    let g = &net.globals;
    let mut totals = vec![total_check("total volume", net.total_segment_volume(), g.total_volume)];
    let lung = &segs[net.lung_index()];
    totals.push(total_check("lung flow", lung.flow, g.total_flow));
    if let Some(dp) = lung.pressure_drop {
        totals.push(total_check("pulmonary pressure drop", dp, g.pulmonary_pressure_drop));
    }
    let mut notes = net.notes.clone();
    match enumerate_paths(net) {
        Ok(paths) => {
            totals.push(total_check("path flow sum", paths.total_flow(), g.total_flow));
            for p in &paths.paths {
                let drops: Option<f64> = p
                    .segments
                    .iter()
                    .filter(|&&i| !segs[i].is_pump() && segs[i].kind != SegmentKind::Lung)
                    .map(|&i| segs[i].pressure_drop)
                    .sum();
                if let Some(dp) = drops {
                    totals.push(total_check(format!("systemic pressure drop via {}", p.id), dp, g.systemic_pressure_drop));
                }
            }
        }
        Err(e) => notes.push(format!("path enumeration failed: {e}")),
    }
    if let Ok(cal) = crate::transport::TissueCalibration::for_network(net) {
        for (id, m) in &cal.coronary {
            notes.push(format!(
                "segment `{id}`: coronary demand multiplier {m:.3} (tissue density {:.1} kW/m^3 at 4 kW/m^3 per unit; literature figure 50 kW/m^3)",
                m * 4.0
            ));
        }
    }

    let pass = segments.iter().all(|s| s.ok) && junctions.iter().all(|j| j.ok) && totals.iter().all(|t| t.ok);
    ValidationReport { pass, segments, junctions, totals, notes }
}

#[derive(Debug, Clone)]
pub struct FlowSolution {
    /// Per segment, in network order (m³/s).
    pub flows: Vec<f64>,
    pub junctions: Vec<Junction>,
    /// Pressure at each junction relative to its circuit's pump inlet (Pa).
    pub pressures: Vec<f64>,
    /// Relative flow imbalance per junction.
    pub residuals: Vec<f64>,
}

impl FlowSolution {
    pub fn max_residual(&self) -> f64 {
        self.residuals.iter().copied().fold(0.0, f64::max)
    }
}

/// Solves node pressures with every pump an ideal source of `total_flow`
/// and every other segment a linear resistor. Each resistor-connected
/// circuit is referenced to the inlet of a pump feeding out of it.
pub fn solve_flows(net: &CirculationNetwork, resistances: &[Option<f64>], total_flow: f64) -> Result<FlowSolution> {
    let segs = net.segments();
    if resistances.len() != segs.len() {
        return Err(Error::config(format!(
            "expected {} resistances, got {}",
            segs.len(),
            resistances.len()
        )));
    }
    if !(total_flow.is_finite() && total_flow > 0.0) {
        return Err(Error::domain("total flow must be positive"));
    }
    for (s, r) in segs.iter().zip(resistances) {
        match (s.is_pump(), r) {
            (true, _) => {}
            (false, Some(r)) if r.is_finite() && *r > 0.0 => {}
            (false, _) => return Err(Error::config(format!("segment `{}` needs a positive resistance", s.id))),
        }
    }

    let junctions = net.junctions();
    let n = junctions.len();
    let mut start_node = vec![usize::MAX; segs.len()];
    let mut end_node = vec![usize::MAX; segs.len()];
    for (k, j) in junctions.iter().enumerate() {
        for &o in &j.outputs {
            start_node[o] = k;
        }
        for &i in &j.inputs {
            end_node[i] = k;
        }
    }
    if start_node.iter().chain(&end_node).any(|&k| k == usize::MAX) {
        return Err(Error::structural("segment not attached to a junction"));
    }

    // resistor-connected components; one grounded node per component
    let mut comp: Vec<usize> = (0..n).collect();
    fn find(p: &mut [usize], mut x: usize) -> usize {
        while p[x] != x {
            p[x] = p[p[x]];
            x = p[x];
        }
        x
    }
    for (i, s) in segs.iter().enumerate() {
        if !s.is_pump() {
            let (a, b) = (find(&mut comp, start_node[i]), find(&mut comp, end_node[i]));
            comp[a] = b;
        }
    }
    let mut grounded = vec![false; n];
    let mut covered = std::collections::BTreeSet::new();
    let mut pumps: Vec<usize> = (0..segs.len()).filter(|&i| segs[i].is_pump()).collect();
    pumps.sort_by(|&a, &b| segs[a].id.cmp(&segs[b].id));
    for &p in &pumps {
        let node = start_node[p];
        if covered.insert(find(&mut comp, node)) {
            grounded[node] = true;
        }
    }
    for k in 0..n {
        if !covered.contains(&find(&mut comp, k)) {
            return Err(Error::structural("part of the network is not driven by any pump"));
        }
    }

    let unknown: Vec<usize> = (0..n).filter(|&k| !grounded[k]).collect();
    let mut slot = vec![usize::MAX; n];
    for (u, &k) in unknown.iter().enumerate() {
        slot[k] = u;
    }
    let m = unknown.len();
    let mut a = DMatrix::<f64>::zeros(m, m);
    let mut rhs = DVector::<f64>::zeros(m);
    for (i, s) in segs.iter().enumerate() {
        let (from, to) = (start_node[i], end_node[i]);
        if s.is_pump() {
            // source pushes total_flow from `from` to `to`
            if slot[to] != usize::MAX {
                rhs[slot[to]] += total_flow;
            }
            if slot[from] != usize::MAX {
                rhs[slot[from]] -= total_flow;
            }
            continue;
        }
        let g = 1.0 / resistances[i].expect("checked");
        for (x, y) in [(from, to), (to, from)] {
            if slot[x] != usize::MAX {
                a[(slot[x], slot[x])] += g;
                if slot[y] != usize::MAX {
                    a[(slot[x], slot[y])] -= g;
                }
            }
        }
    }
    let solution = if m == 0 {
        DVector::zeros(0)
    } else {
        a.lu().solve(&rhs).ok_or_else(|| Error::structural("singular node-pressure system"))?
    };
    let mut pressures = vec![0.0; n];
    for (u, &k) in unknown.iter().enumerate() {
        pressures[k] = solution[u];
    }
    if pressures.iter().any(|p| !p.is_finite()) {
        return Err(Error::structural("singular node-pressure system"));
    }

    let flows: Vec<f64> = segs
        .iter()
        .enumerate()
        .map(|(i, s)| {
            if s.is_pump() {
                total_flow
            } else {
                (pressures[start_node[i]] - pressures[end_node[i]]) / resistances[i].expect("checked")
            }
        })
        .collect();
    let residuals = junctions
        .iter()
        .map(|j| {
            let inflow: f64 = j.inputs.iter().map(|&i| flows[i]).sum();
            let outflow: f64 = j.outputs.iter().map(|&i| flows[i]).sum();
            (inflow - outflow).abs() / total_flow
        })
        .collect();
    Ok(FlowSolution { flows, junctions, pressures, residuals })
}

/// [`solve_flows`] with the network's own resistances and total flow.
pub fn solve_network_flows(net: &CirculationNetwork) -> Result<FlowSolution> {
    let r: Vec<Option<f64>> = net.segments().iter().map(|s| s.resistance).collect();
    solve_flows(net, &r, net.globals.total_flow)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{default_network, default_network_file, BloodGlobals, PhysicalConstants, ProfileTemplate, Segment, TissueDemand};
    use crate::units::*;
    use approx::assert_relative_eq;

    #[test]
    fn poiseuille_capillary() {
        let r = poiseuille_resistance(1e-3, 4e-6, 1e-3).unwrap();
        // 8e-6 / (pi * 2.56e-22)
        assert_relative_eq!(r, 9.947e15, max_relative = 1e-3);
        let r2 = poiseuille_resistance(1e-3, 8e-6, 1e-3).unwrap();
        assert_relative_eq!(r / r2, 16.0, max_relative = 1e-12);
        let r3 = poiseuille_resistance(3e-3, 4e-6, 1e-3).unwrap();
        assert_relative_eq!(r3 / r, 3.0, max_relative = 1e-12);
        assert!(poiseuille_resistance(0.0, 1.0, 1.0).is_err());
        assert!(poiseuille_resistance(1.0, -1.0, 1.0).is_err());
    }

    #[test]
    fn default_passes() {
        let report = validate_network(&default_network());
        assert!(report.pass, "{:?}", report.failures());
        assert!(report.notes.iter().any(|n| n.contains("coronary")));
    }

    #[test]
    fn doubled_legs_flow_flags_ivc() {
        let mut net = default_network();
        let i = net.index_of("legs").unwrap();
        net.segments_mut()[i].flow *= 2.0;
        let report = validate_network(&net);
        assert!(!report.pass);
        assert!(report
            .junctions
            .iter()
            .any(|j| !j.ok && j.outputs == ["inferior_vena_cava"]));
    }

    #[test]
    fn volume_mismatch_flagged() {
        let mut net = default_network();
        let i = net.index_of("head").unwrap();
        net.segments_mut()[i].volume *= 1.1;
        let report = validate_network(&net);
        let head = report.segments.iter().find(|s| s.id == "head").unwrap();
        assert!(!head.ok);
        assert!(!report.pass);
    }

    #[test]
    fn solved_flows_match_table() {
        let net = default_network();
        let sol = solve_network_flows(&net).unwrap();
        for (s, f) in net.segments().iter().zip(&sol.flows) {
            assert!((f / s.flow - 1.0).abs() < 0.03, "{}: {} vs {}", s.id, si_to_l_per_min(*f), si_to_l_per_min(s.flow));
        }
        assert!(sol.max_residual() < 1e-9);
    }

    #[test]
    fn scaling_resistances_keeps_flows() {
        let net = default_network();
        let r: Vec<Option<f64>> = net.segments().iter().map(|s| s.resistance).collect();
        let r3: Vec<Option<f64>> = r.iter().map(|x| x.map(|v| 3.0 * v)).collect();
        let a = solve_flows(&net, &r, net.globals.total_flow).unwrap();
        let b = solve_flows(&net, &r3, net.globals.total_flow).unwrap();
        for (x, y) in a.flows.iter().zip(&b.flows) {
            assert_relative_eq!(x, y, max_relative = 1e-10);
        }
        for (x, y) in a.pressures.iter().zip(&b.pressures) {
            assert_relative_eq!(3.0 * x, *y, max_relative = 1e-10, epsilon = 1e-9);
        }
    }

    fn seg(id: &str, kind: SegmentKind, r: Option<f64>) -> Segment {
        Segment {
            id: id.into(),
            kind,
            transit_time: 1.0,
            resistance: r,
            flow: 1.0,
            volume: 1.0,
            pressure_drop: r,
            profile: ProfileTemplate::Flat { hematocrit: 0.45 },
            tissue: TissueDemand::none(),
        }
    }

    fn toy(segments: Vec<Segment>, edges: &[(&str, &str)]) -> CirculationNetwork {
        let g = BloodGlobals {
            total_volume: 1.0,
            total_flow: 1.0,
            systemic_pressure_drop: 1.0,
            pulmonary_pressure_drop: 1.0,
        };
        let e: Vec<(String, String)> = edges.iter().map(|(a, b)| (a.to_string(), b.to_string())).collect();
        CirculationNetwork::new(g, PhysicalConstants::default(), segments, &e).unwrap()
    }

    #[test]
    fn parallel_equal_branches_split_evenly() {
        let net = toy(
            vec![
                seg("pump", SegmentKind::Pump, None),
                seg("a", SegmentKind::Systemic, Some(5.0)),
                seg("b", SegmentKind::Systemic, Some(5.0)),
                seg("lung", SegmentKind::Lung, Some(1.0)),
            ],
            &[("pump", "a"), ("pump", "b"), ("a", "lung"), ("b", "lung"), ("lung", "pump")],
        );
        let r: Vec<Option<f64>> = net.segments().iter().map(|s| s.resistance).collect();
        let sol = solve_flows(&net, &r, 2.0).unwrap();
        assert_relative_eq!(sol.flows[1], 1.0, max_relative = 1e-12);
        assert_relative_eq!(sol.flows[2], 1.0, max_relative = 1e-12);
    }

    #[test]
    fn series_resistances_add() {
        let net = toy(
            vec![
                seg("pump", SegmentKind::Pump, None),
                seg("a", SegmentKind::Systemic, Some(2.0)),
                seg("b", SegmentKind::Vein, Some(3.0)),
                seg("lung", SegmentKind::Lung, Some(7.0)),
            ],
            &[("pump", "a"), ("a", "b"), ("b", "lung"), ("lung", "pump")],
        );
        let r: Vec<Option<f64>> = net.segments().iter().map(|s| s.resistance).collect();
        let sol = solve_flows(&net, &r, 4.0).unwrap();
        // drop across the pump outlet to lung outlet = (2+3+7)*4
        let j = &sol.junctions;
        let pump_out = j.iter().position(|x| x.inputs == [0]).unwrap();
        let pump_in = j.iter().position(|x| x.outputs == [0]).unwrap();
        assert_relative_eq!(sol.pressures[pump_out] - sol.pressures[pump_in], 48.0, max_relative = 1e-12);
    }

    #[test]
    fn missing_resistance_rejected() {
        let net = default_network();
        let mut r: Vec<Option<f64>> = net.segments().iter().map(|s| s.resistance).collect();
        r[net.index_of("legs").unwrap()] = None;
        assert!(matches!(solve_flows(&net, &r, 1.0), Err(Error::Config(_))));
    }

    #[test]
    fn file_round_trip_still_valid() {
        let file = default_network_file();
        let back = crate::model::NetworkFile::from_json(&file.to_json_pretty()).unwrap();
        assert!(validate_network(&back.into_network().unwrap()).pass);
    }
}
