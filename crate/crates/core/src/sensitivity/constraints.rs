use std::collections::BTreeMap;

use rand::Rng;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::model::{BloodGlobals, CirculationNetwork, Segment, SegmentKind};
use crate::units::l_per_min_to_si;

/// Consecutive rejections before sampling is declared infeasible.
pub const MAX_REJECTIONS: usize = 10_000;

/// Arms and legs share a bounded budget with legs carrying more.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct LimbRule {
    pub arms: String,
    pub legs: String,
    pub arms_min: f64,
    pub legs_to_arms_min: f64,
    pub legs_max: f64,
}

/// Total splenic flow split between two compartments; a companion branch
/// into the same vein takes the rest of a fixed shared inflow.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SpleenRule {
    pub fast: String,
    pub slow: String,
    pub companion: String,
    pub total: (f64, f64),
    pub fast_fraction: f64,
    pub shared_inflow: f64,
}

/// Bounds on randomly varied circulation parameters (SI).
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ConstraintSet {
    /// Segments whose flow is pinned.
    pub fixed_flows: BTreeMap<String, f64>,
    pub limbs: Option<LimbRule>,
    pub spleen: Option<SpleenRule>,
    /// Branch that takes whatever flow the others leave.
    pub residual: Option<String>,
    /// Transit time and resistance stay within these factors of the base values.
    pub transit_factor: (f64, f64),
    pub resistance_factor: (f64, f64),
    pub total_flow: f64,
    pub total_volume: f64,
}

impl ConstraintSet {
    /// Resting-adult constraints for the default network layout.
    pub fn resting(base: &CirculationNetwork) -> Self {
        let lpm = l_per_min_to_si;
        let fixed = [
            ("heart_coronary", 0.2),
            ("head", 0.8),
            ("kidney", 1.0),
            ("hepatic", 0.24),
            ("portal", 0.96),
            ("liver", 1.2),
        ];
        Self {
            fixed_flows: fixed.iter().map(|&(k, v)| (k.to_string(), lpm(v))).collect(),
            limbs: Some(LimbRule {
                arms: "arms".into(),
                legs: "legs".into(),
                arms_min: lpm(0.2),
                legs_to_arms_min: 1.5,
                legs_max: lpm(1.0),
            }),
            spleen: Some(SpleenRule {
                fast: "spleen_fast".into(),
                slow: "spleen_slow".into(),
                companion: "digestive".into(),
                total: (lpm(0.1), lpm(0.25)),
                fast_fraction: 0.9,
                shared_inflow: lpm(0.96),
            }),
            residual: Some("other_torso".into()),
            transit_factor: (0.5, 2.0),
            resistance_factor: (0.5, 2.0),
            total_flow: base.globals.total_flow,
            total_volume: base.globals.total_volume,
        }
    }

    /// Zero-width bounds: every sample reproduces `base`.
    pub fn degenerate(base: &CirculationNetwork) -> Self {
        Self {
            fixed_flows: base.segments().iter().map(|s| (s.id.clone(), s.flow)).collect(),
            limbs: None,
            spleen: None,
            residual: None,
            transit_factor: (1.0, 1.0),
            resistance_factor: (0.5, 2.0),
            total_flow: base.globals.total_flow,
            total_volume: base.segments().iter().map(|s| s.transit_time * s.flow).sum(),
        }
    }

    fn check(&self, base: &CirculationNetwork) -> Result<()> {
        let ok = |(lo, hi): (f64, f64)| lo > 0.0 && lo <= hi;
        if !ok(self.transit_factor) || !ok(self.resistance_factor) {
            return Err(Error::config("factor bounds must satisfy 0 < lo <= hi"));
        }
        let mut named: Vec<&str> = self.fixed_flows.keys().map(String::as_str).collect();
        if let Some(l) = &self.limbs {
            named.extend([l.arms.as_str(), l.legs.as_str()]);
        }
        if let Some(s) = &self.spleen {
            named.extend([s.fast.as_str(), s.slow.as_str(), s.companion.as_str()]);
            if !ok(s.total) || !(0.0..=1.0).contains(&s.fast_fraction) {
                return Err(Error::config("spleen bounds are inconsistent"));
            }
        }
        named.extend(self.residual.as_deref());
        for id in named {
            base.require(id)?;
        }
        Ok(())
    }

    /// Draws one network satisfying every bound, by rejection.
    pub fn sample<R: Rng + ?Sized>(&self, base: &CirculationNetwork, rng: &mut R) -> Result<Sample> {
        self.check(base)?;
        let mut last = String::new();
        for attempt in 0..MAX_REJECTIONS {
            match self.try_sample(base, rng) {
                Ok(network) => return Ok(Sample { network, rejections: attempt }),
                Err(reason) => last = reason,
            }
        }
        Err(Error::Infeasible { rejections: MAX_REJECTIONS, last_reason: last })
    }

    fn try_sample<R: Rng + ?Sized>(&self, base: &CirculationNetwork, rng: &mut R) -> std::result::Result<CirculationNetwork, String> {
        let segs = base.segments();
        let n = segs.len();
        let mut flow: Vec<Option<f64>> = vec![None; n];
        let idx = |id: &str| base.index_of(id).expect("checked");
        let uniform = |rng: &mut R, lo: f64, hi: f64| if hi > lo { rng.gen_range(lo..=hi) } else { lo };

        for (id, &f) in &self.fixed_flows {
            flow[idx(id)] = Some(f);
        }
        if let Some(l) = &self.limbs {
            let arms_hi = l.legs_max / l.legs_to_arms_min;
            if arms_hi < l.arms_min {
                return Err("limb bounds leave no room".into());
            }
            let arms = uniform(rng, l.arms_min, arms_hi);
            let legs = uniform(rng, l.legs_to_arms_min * arms, l.legs_max);
            flow[idx(&l.arms)] = Some(arms);
            flow[idx(&l.legs)] = Some(legs);
        }
        if let Some(s) = &self.spleen {
            let total = uniform(rng, s.total.0, s.total.1);
            flow[idx(&s.fast)] = Some(s.fast_fraction * total);
            flow[idx(&s.slow)] = Some((1.0 - s.fast_fraction) * total);
            let rest = s.shared_inflow - total;
            if rest <= 0.0 {
                return Err(format!("`{}` flow would be nonpositive", s.companion));
            }
            flow[idx(&s.companion)] = Some(rest);
        }

        // branches leaving the heart
        let lung = base.lung_index();
        let source = base.successors(lung).next().ok_or("lungs have no successor")?;
        let branches: Vec<usize> = base.successors(source).collect();
        if let Some(r) = &self.residual {
            let ri = idx(r);
            let others: f64 = branches.iter().filter(|&&b| b != ri).map(|&b| flow[b].unwrap_or(segs[b].flow)).sum();
            let rest = self.total_flow - others;
            if rest <= 0.0 {
                return Err(format!("residual `{r}` flow would be nonpositive"));
            }
            flow[ri] = Some(rest);
        }
        for &b in &branches {
            if flow[b].is_none() {
                flow[b] = Some(segs[b].flow);
            }
        }

        // remaining segments carry what flows into them
        let junctions = base.junctions();
        let mut changed = true;
        while changed {
            changed = false;
            for j in &junctions {
                let inputs: Option<f64> = j.inputs.iter().map(|&i| flow[i]).sum();
                let Some(total) = inputs else { continue };
                let open: Vec<usize> = j.outputs.iter().copied().filter(|&o| flow[o].is_none()).collect();
                if open.len() == 1 && j.outputs.len() == 1 {
                    flow[open[0]] = Some(total);
                    changed = true;
                }
            }
        }
        let flow: Vec<f64> = flow
            .iter()
            .zip(segs)
            .map(|(f, s)| f.ok_or_else(|| format!("flow of `{}` is undetermined", s.id)))
            .collect::<std::result::Result<_, _>>()?;

        // transit times: pumps and lungs keep theirs
        let free = |s: &Segment| !matches!(s.kind, SegmentKind::Pump | SegmentKind::Lung);
        let mut transit: Vec<f64> = segs
            .iter()
            .map(|s| {
                if free(s) {
                    uniform(rng, self.transit_factor.0 * s.transit_time, self.transit_factor.1 * s.transit_time)
                } else {
                    s.transit_time
                }
            })
            .collect();
        let (mut fixed_v, mut free_v) = (0.0, 0.0);
        for ((s, t), f) in segs.iter().zip(&transit).zip(&flow) {
            if free(s) {
                free_v += t * f;
            } else {
                fixed_v += t * f;
            }
        }
        let scale = (self.total_volume - fixed_v) / free_v;
        if !(scale > 0.0) {
            return Err("fixed segments exceed the total volume".into());
        }
        for (s, t) in segs.iter().zip(transit.iter_mut()) {
            if free(s) {
                *t *= scale;
                let r = *t / s.transit_time;
                if r < self.transit_factor.0 * (1.0 - 1e-12) || r > self.transit_factor.1 * (1.0 + 1e-12) {
                    return Err(format!("rescaled transit of `{}` is {r:.3}x its base", s.id));
                }
            }
        }

        let mut out = Vec::with_capacity(n);
        for ((s, &t), &f) in segs.iter().zip(&transit).zip(&flow) {
            let resistance = match s.pressure_drop {
                Some(dp) => {
                    let r = dp / f;
                    if let Some(r0) = s.resistance {
                        let k = r / r0;
                        if k < self.resistance_factor.0 * (1.0 - 1e-12) || k > self.resistance_factor.1 * (1.0 + 1e-12) {
                            return Err(format!("resistance of `{}` is {k:.3}x its base", s.id));
                        }
                    }
                    Some(r)
                }
                None => None,
            };
            out.push(Segment { transit_time: t, flow: f, volume: t * f, resistance, ..s.clone() });
        }
        let globals = BloodGlobals { total_flow: self.total_flow, ..base.globals };
        base.with_segments(out, globals).map_err(|e| e.to_string())
    }
}

#[derive(Debug, Clone)]
pub struct Sample {
    pub network: CirculationNetwork,
    /// Draws rejected before this one.
    pub rejections: usize,
}

/// One constrained random network.
pub fn sample_parameters<R: Rng + ?Sized>(
    constraints: &ConstraintSet,
    base: &CirculationNetwork,
    rng: &mut R,
) -> Result<CirculationNetwork> {
    Ok(constraints.sample(base, rng)?.network)
}

/// Violations of `constraints` by `net`, relative to `base`.
pub fn constraint_violations(constraints: &ConstraintSet, base: &CirculationNetwork, net: &CirculationNetwork) -> Vec<String> {
    let mut v = Vec::new();
    let tol = 1e-9;
    let flow = |id: &str| net.segment(id).map_or(f64::NAN, |s| s.flow);
    for (id, &f) in &constraints.fixed_flows {
        if (flow(id) - f).abs() > tol * f {
            v.push(format!("`{id}` flow {} differs from fixed {f}", flow(id)));
        }
    }
    if let Some(l) = &constraints.limbs {
        let (a, g) = (flow(&l.arms), flow(&l.legs));
        if a < l.arms_min * (1.0 - tol) {
            v.push(format!("arms flow {a} below minimum"));
        }
        if g < l.legs_to_arms_min * a * (1.0 - tol) || g > l.legs_max * (1.0 + tol) {
            v.push(format!("legs flow {g} outside bounds for arms {a}"));
        }
    }
    if let Some(s) = &constraints.spleen {
        let (f, sl) = (flow(&s.fast), flow(&s.slow));
        let total = f + sl;
        if total < s.total.0 * (1.0 - tol) || total > s.total.1 * (1.0 + tol) {
            v.push(format!("spleen flow {total} outside bounds"));
        }
        if (f / total - s.fast_fraction).abs() > tol {
            v.push("spleen split differs".to_string());
        }
    }
    if let Some(r) = &constraints.residual {
        if !(flow(r) > 0.0) {
            v.push(format!("residual `{r}` flow is not positive"));
        }
    }
    for (s, b) in net.segments().iter().zip(base.segments()) {
        let k = s.transit_time / b.transit_time;
        let (lo, hi) = constraints.transit_factor;
        if k < lo * (1.0 - tol) || k > hi * (1.0 + tol) {
            v.push(format!("`{}` transit is {k}x base", s.id));
        }
        if let (Some(r), Some(r0)) = (s.resistance, b.resistance) {
            let k = r / r0;
            let (lo, hi) = constraints.resistance_factor;
            if k < lo * (1.0 - tol) || k > hi * (1.0 + tol) {
                v.push(format!("`{}` resistance is {k}x base", s.id));
            }
        }
    }
    let volume = net.total_segment_volume();
    if (volume / constraints.total_volume - 1.0).abs() > tol {
        v.push(format!("total volume {volume} differs from {}", constraints.total_volume));
    }
    v
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::default_network;
    use crate::netflow::validate_network;
    use crate::par::substream;
    use crate::units::si_to_l_per_min;

    #[test]
    fn samples_meet_constraints() {
        let base = default_network();
        let c = ConstraintSet::resting(&base);
        for i in 0..50 {
            let net = sample_parameters(&c, &base, &mut substream(3, i)).unwrap();
            assert_eq!(si_to_l_per_min(net.segment("kidney").unwrap().flow), 1.0);
            let arms = net.segment("arms").unwrap().flow;
            assert!(net.segment("legs").unwrap().flow >= 1.5 * arms * (1.0 - 1e-12));
            assert!(constraint_violations(&c, &base, &net).is_empty());
            let report = validate_network(&net);
            assert!(report.pass, "{:?}", report.failures());
        }
    }

    #[test]
    fn degenerate_reproduces_base() {
        let base = default_network();
        let c = ConstraintSet::degenerate(&base);
        let net = sample_parameters(&c, &base, &mut substream(1, 0)).unwrap();
        for (a, b) in net.segments().iter().zip(base.segments()) {
            assert_eq!(a.flow, b.flow);
            assert!((a.transit_time / b.transit_time - 1.0).abs() < 1e-12, "{}", a.id);
        }
    }

    #[test]
    fn infeasible_bounds() {
        let base = default_network();
        let mut c = ConstraintSet::resting(&base);
        c.transit_factor = (0.1, 0.2);
        match sample_parameters(&c, &base, &mut substream(1, 0)) {
            Err(Error::Infeasible { rejections, .. }) => assert_eq!(rejections, MAX_REJECTIONS),
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn unknown_segment_rejected() {
        let base = default_network();
        let mut c = ConstraintSet::resting(&base);
        c.residual = Some("tail".into());
        assert!(matches!(sample_parameters(&c, &base, &mut substream(1, 0)), Err(Error::Config(_))));
    }
}
