use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::mitigation::TankSpec;
use crate::model::{PhysicalConstants, SegmentKind};

/// Per-location uptake limits. Lookup order: segment id, segment kind,
/// then `default`.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LocationLimits {
    #[serde(default)]
    pub by_segment: BTreeMap<String, f64>,
    #[serde(default)]
    pub by_kind: BTreeMap<SegmentKind, f64>,
    #[serde(default)]
    pub default: Option<f64>,
    /// When set, limits only apply where plasma concentration is at least
    /// this value (molecules/m³); elsewhere robots take everything.
    #[serde(default)]
    pub above_concentration: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(tag = "mode", rename_all = "kebab-case", deny_unknown_fields)]
pub enum ConsumptionPolicy {
    /// Absorb every molecule that reaches the surface.
    #[default]
    MaxUptake,
    Fraction {
        fraction: f64,
    },
    LocationLimited(LocationLimits),
}

fn check_unit(name: &str, u: f64) -> Result<()> {
    if (0.0..=1.0).contains(&u) {
        Ok(())
    } else {
        Err(Error::config(format!("{name} must lie in [0, 1], got {u}")))
    }
}

impl ConsumptionPolicy {
    pub fn validate(&self) -> Result<()> {
        match self {
            ConsumptionPolicy::MaxUptake => Ok(()),
            ConsumptionPolicy::Fraction { fraction } => check_unit("uptake fraction", *fraction),
            ConsumptionPolicy::LocationLimited(l) => {
                for (id, u) in &l.by_segment {
                    check_unit(&format!("uptake limit for `{id}`"), *u)?;
                }
                for (kind, u) in &l.by_kind {
                    check_unit(&format!("uptake limit for kind `{}`", kind.as_str()), *u)?;
                }
                if let Some(u) = l.default {
                    check_unit("default uptake limit", u)?;
                }
                if let Some(c) = l.above_concentration {
                    if !(c >= 0.0) {
                        return Err(Error::config("limit threshold concentration must be nonnegative"));
                    }
                }
                Ok(())
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SwarmConfig {
    pub robot_count: f64,
    /// m
    pub robot_radius: f64,
    #[serde(default)]
    pub policy: ConsumptionPolicy,
    #[serde(default)]
    pub tank: Option<TankSpec>,
}

impl SwarmConfig {
    /// Max-uptake swarm of default-sized robots.
    pub fn new(robot_count: f64, k: &PhysicalConstants) -> Self {
        Self { robot_count, robot_radius: k.robot_radius, policy: ConsumptionPolicy::MaxUptake, tank: None }
    }

    pub fn with_policy(mut self, policy: ConsumptionPolicy) -> Self {
        self.policy = policy;
        self
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.robot_count >= 0.0 && self.robot_count.is_finite()) {
            return Err(Error::config(format!("robot count must be nonnegative, got {}", self.robot_count)));
        }
        if !(self.robot_radius > 0.0 && self.robot_radius.is_finite()) {
            return Err(Error::config(format!("robot radius must be positive, got {}", self.robot_radius)));
        }
        self.policy.validate()?;
        if let Some(t) = &self.tank {
            t.validate()?;
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn policy_json_shapes() {
        let p: ConsumptionPolicy = serde_json::from_str(r#"{"mode":"max-uptake"}"#).unwrap();
        assert_eq!(p, ConsumptionPolicy::MaxUptake);
        let p: ConsumptionPolicy = serde_json::from_str(r#"{"mode":"fraction","fraction":0.25}"#).unwrap();
        assert_eq!(p, ConsumptionPolicy::Fraction { fraction: 0.25 });
        let p: ConsumptionPolicy =
            serde_json::from_str(r#"{"mode":"location-limited","by_segment":{"legs":0.1},"by_kind":{"systemic":1.0}}"#)
                .unwrap();
        let ConsumptionPolicy::LocationLimited(l) = p else { panic!() };
        assert_eq!(l.by_segment["legs"], 0.1);
        assert_eq!(l.by_kind[&SegmentKind::Systemic], 1.0);
    }

    #[test]
    fn rejects_bad_values() {
        assert!(ConsumptionPolicy::Fraction { fraction: 1.5 }.validate().is_err());
        let k = PhysicalConstants::default();
        assert!(SwarmConfig::new(-1.0, &k).validate().is_err());
        let mut s = SwarmConfig::new(1e11, &k);
        s.robot_radius = 0.0;
        assert!(s.validate().is_err());
    }
}
