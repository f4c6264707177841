use crate::error::{Error, Result};
use crate::model::Segment;
use crate::transport::ConsumptionPolicy;

/// Uptake factor of one segment as a function of plasma concentration.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct UptakeRule {
    pub limited: f64,
    /// Limit applies only at or above this concentration.
    pub threshold: Option<f64>,
}

impl UptakeRule {
    pub fn full() -> Self {
        Self { limited: 1.0, threshold: None }
    }

    #[inline]
    pub fn at(&self, c: f64) -> f64 {
        match self.threshold {
            Some(th) if c < th => 1.0,
            _ => self.limited,
        }
    }
}

pub fn uptake_rule(policy: &ConsumptionPolicy, segment: &Segment) -> Result<UptakeRule> {
    match policy {
        ConsumptionPolicy::MaxUptake => Ok(UptakeRule::full()),
        ConsumptionPolicy::Fraction { fraction } => Ok(UptakeRule { limited: *fraction, threshold: None }),
        ConsumptionPolicy::LocationLimited(l) => {
            let u = l
                .by_segment
                .get(&segment.id)
                .or_else(|| l.by_kind.get(&segment.kind))
                .copied()
                .or(l.default)
                .ok_or_else(|| {
                    Error::config(format!(
                        "no uptake limit for segment `{}` of kind `{}`",
                        segment.id,
                        segment.kind.as_str()
                    ))
                })?;
            Ok(UptakeRule { limited: u, threshold: l.above_concentration })
        }
    }
}

/// Fraction of the diffusive flux a robot takes at this location.
pub fn uptake_factor(policy: &ConsumptionPolicy, segment: &Segment, concentration: f64) -> Result<f64> {
    Ok(uptake_rule(policy, segment)?.at(concentration))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{default_network, SegmentKind};
    use crate::transport::{sweep_circulation, LocationLimits, SwarmConfig};

    #[test]
    fn lookups() {
        let net = default_network();
        let legs = net.segment("legs").unwrap();
        let head = net.segment("head").unwrap();
        assert_eq!(uptake_factor(&ConsumptionPolicy::MaxUptake, legs, 1e22).unwrap(), 1.0);
        assert_eq!(uptake_factor(&ConsumptionPolicy::Fraction { fraction: 0.3 }, legs, 1e22).unwrap(), 0.3);
        let mut l = LocationLimits::default();
        l.by_segment.insert("legs".into(), 0.1);
        l.by_kind.insert(SegmentKind::Systemic, 0.8);
        let p = ConsumptionPolicy::LocationLimited(l.clone());
        assert_eq!(uptake_factor(&p, legs, 1e22).unwrap(), 0.1);
        assert_eq!(uptake_factor(&p, head, 1e22).unwrap(), 0.8);
        let lh = net.segment("left_heart").unwrap();
        assert!(matches!(uptake_factor(&p, lh, 1e22), Err(Error::Config(_))));
        l.above_concentration = Some(5e22);
        let p = ConsumptionPolicy::LocationLimited(l);
        assert_eq!(uptake_factor(&p, legs, 1e22).unwrap(), 1.0);
        assert_eq!(uptake_factor(&p, legs, 6e22).unwrap(), 0.1);
    }

    #[test]
    fn limiting_legs_raises_their_end_concentration() {
        let net = default_network();
        let k = net.constants;
        let full = sweep_circulation(&net, &SwarmConfig::new(1e12, &k)).unwrap();
        let mut l = LocationLimits { default: Some(1.0), ..Default::default() };
        l.by_segment.insert("legs".into(), 0.1);
        let limited =
            sweep_circulation(&net, &SwarmConfig::new(1e12, &k).with_policy(ConsumptionPolicy::LocationLimited(l))).unwrap();
        assert!(
            limited.segment("legs").unwrap().end_concentration() > full.segment("legs").unwrap().end_concentration()
        );
    }

    #[test]
    fn zero_fraction_matches_no_robots() {
        let net = default_network();
        let k = net.constants;
        let none = sweep_circulation(&net, &SwarmConfig::new(0.0, &k)).unwrap();
        let zero =
            sweep_circulation(&net, &SwarmConfig::new(1e12, &k).with_policy(ConsumptionPolicy::Fraction { fraction: 0.0 }))
                .unwrap();
        for (a, b) in none.segments.iter().zip(&zero.segments) {
            assert_eq!(a.end_concentration(), b.end_concentration(), "{}", a.id);
        }
    }
}
