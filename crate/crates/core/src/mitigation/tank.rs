use std::collections::BTreeMap;

use rand::Rng;
use serde::{Deserialize, Serialize};

use super::sampling::PathSampler;
use crate::error::{Error, Result};
use crate::model::{enumerate_paths, CirculationNetwork, PathSet, Segment};
use crate::par::{self, Execution};
use crate::stats::Histogram;
use crate::transport::{robot_flux, SwarmConfig, TransportContext};

/// Lung-return events before this time (s) are not recorded in distributions.
pub const TANK_WARMUP: f64 = 600.0;
pub const TANK_HISTOGRAM_BINS: usize = 20;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum TankPolicy {
    /// Draw whenever past the threshold and the tank is not empty.
    Always,
    /// Arm on reaching full, disarm on running empty.
    WhenFull,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum DrawMode {
    /// The tank alone supplies `draw_power`.
    #[default]
    TankOnly,
    /// The tank tops ambient uptake up to `draw_power`.
    Supplement,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TankSpec {
    /// molecules
    pub capacity: f64,
    /// W
    pub draw_power: f64,
    /// Seconds after leaving the lungs before the tank may be used.
    pub use_threshold: f64,
    pub policy: TankPolicy,
    #[serde(default)]
    pub draw: DrawMode,
}

impl Default for TankSpec {
    fn default() -> Self {
        Self { capacity: 1.8e10, draw_power: 100e-12, use_threshold: 60.0, policy: TankPolicy::Always, draw: DrawMode::TankOnly }
    }
}

impl TankSpec {
    pub fn with_policy(policy: TankPolicy) -> Self {
        Self { policy, ..Self::default() }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.capacity >= 0.0 && self.capacity.is_finite()) {
            return Err(Error::config("tank capacity must be nonnegative"));
        }
        if !(self.draw_power >= 0.0 && self.draw_power.is_finite()) {
            return Err(Error::config("tank draw power must be nonnegative"));
        }
        if !(self.use_threshold >= 0.0) {
            return Err(Error::config("tank use threshold must be nonnegative"));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TankEvent {
    /// Time of arrival at the lung capillaries (s).
    pub time: f64,
    pub path: String,
    /// Tank level on arrival, before refilling.
    pub fill_fraction: f64,
    /// Molecules drawn during the loop that just ended.
    pub drawn: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TankTrace {
    pub events: Vec<TankEvent>,
    pub capacity: f64,
    pub initial_level: f64,
    pub final_level: f64,
    pub added: f64,
    pub drawn: f64,
}

#[derive(Debug, Clone)]
struct Loop {
    /// Robot time from leaving the lung capillaries to re-entering them.
    until_lung: f64,
    /// Robot time inside the lung capillary window.
    window: f64,
    /// Cumulative supplement demand (robot time, molecules) along the loop.
    deficit: Option<(Vec<f64>, Vec<f64>)>,
}

impl Loop {
    fn demand(&self, spec: &TankSpec, draw_rate: f64) -> f64 {
        let start = spec.use_threshold;
        if start >= self.until_lung {
            return 0.0;
        }
        match &self.deficit {
            None => draw_rate * (self.until_lung - start),
            Some((t, d)) => {
                let at = |x: f64| -> f64 {
                    let j = t.partition_point(|&v| v < x);
                    if j == 0 {
                        return d[0];
                    }
                    if j >= t.len() {
                        return d[d.len() - 1];
                    }
                    let (t0, t1) = (t[j - 1], t[j]);
                    if t1 <= t0 {
                        d[j]
                    } else {
                        d[j - 1] + (d[j] - d[j - 1]) * (x - t0) / (t1 - t0)
                    }
                };
                (at(self.until_lung) - at(start)).max(0.0)
            }
        }
    }
}

/// Robot time ∫ h/h_D dτ over blood time [a, b] of a segment.
pub(crate) fn robot_time(seg: &Segment, hd: f64, a: f64, b: f64) -> Result<f64> {
    let p = seg.hematocrit_profile()?;
    let t = seg.transit_time;
    let bp: Vec<(f64, f64)> = p.breakpoints().iter().map(|&(f, h)| (f * t, h)).collect();
    let mut sum = 0.0;
    for w in bp.windows(2) {
        let ((x0, h0), (x1, h1)) = (w[0], w[1]);
        let lo = x0.max(a);
        let hi = x1.min(b);
        if hi > lo {
            let h = |x: f64| h0 + (h1 - h0) * (x - x0) / (x1 - x0);
            sum += 0.5 * (h(lo) + h(hi)) * (hi - lo);
        }
    }
    Ok(sum / hd)
}

/// Precomputed loop timings and fill/draw rates for tank simulation.
#[derive(Debug, Clone)]
pub struct TankModel {
    pub spec: TankSpec,
    pub paths: PathSet,
    sampler: PathSampler,
    loops: Vec<Loop>,
    /// Molecules added per lung pass.
    pub fill_per_pass: f64,
    /// Molecules per second drawn at `draw_power`.
    pub draw_rate: f64,
}

impl TankModel {
    /// Supplement mode takes ambient power from a sweep at the swarm's size.
    pub fn new(net: &CirculationNetwork, swarm: &SwarmConfig, spec: TankSpec) -> Result<Self> {
        spec.validate()?;
        swarm.validate()?;
        let k = &net.constants;
        let hd = k.discharge_hematocrit;
        let paths = enumerate_paths(net)?;
        let lung_i = net.lung_index();
        let lung = &net.segments()[lung_i];
        let (a, b) = lung
            .capillary_window_seconds()?
            .ok_or_else(|| Error::config("lung segment needs a capillary window"))?;
        let window = robot_time(lung, hd, a, b)?;
        let fill_per_pass = robot_flux(k.lung_exit_plasma_concentration, swarm.robot_radius, k) * window;
        let draw_rate = spec.draw_power / k.robot_energy_per_o2;

        let report = match spec.draw {
            DrawMode::TankOnly => None,
            DrawMode::Supplement => Some(TransportContext::new(net)?.sweep(swarm)?),
        };

        let mut loops = Vec::with_capacity(paths.len());
        for p in &paths.paths {
            let mut until = robot_time(lung, hd, b, lung.transit_time)? + robot_time(lung, hd, 0.0, a)?;
            for &i in p.segments.iter().filter(|&&i| i != lung_i) {
                let s = &net.segments()[i];
                until += robot_time(s, hd, 0.0, s.transit_time)?;
            }
            let deficit = report.as_ref().map(|r| {
                let mut pts: Vec<(f64, f64)> = Vec::new();
                let lung_trace = &r.segments[lung_i].outcome.trace.samples;
                let rb = lung_trace.iter().find(|s| s.time >= b).map_or(0.0, |s| s.robot_time);
                let mut offset = 0.0;
                for s in lung_trace.iter().filter(|s| s.time >= b) {
                    pts.push((s.robot_time - rb, s.robot_power));
                }
                offset += pts.last().map_or(0.0, |p| p.0);
                for &i in p.segments.iter().filter(|&&i| i != lung_i) {
                    let tr = &r.segments[i].outcome.trace.samples;
                    for s in tr {
                        pts.push((offset + s.robot_time, s.robot_power));
                    }
                    offset += tr.last().map_or(0.0, |s| s.robot_time);
                }
                for s in lung_trace.iter().filter(|s| s.time <= a) {
                    pts.push((offset + s.robot_time, s.robot_power));
                }
                let mut t = Vec::with_capacity(pts.len());
                let mut d = Vec::with_capacity(pts.len());
                let mut acc = 0.0;
                let rate = |pw: f64| (spec.draw_power - pw).max(0.0) / k.robot_energy_per_o2;
                for (j, &(x, pw)) in pts.iter().enumerate() {
                    if j > 0 {
                        let (x0, p0) = pts[j - 1];
                        acc += 0.5 * (rate(p0) + rate(pw)) * (x - x0).max(0.0);
                    }
                    t.push(x);
                    d.push(acc);
                }
                (t, d)
            });
            loops.push(Loop { until_lung: until, window, deficit });
        }
        let sampler = PathSampler::new(&paths)?;
        Ok(Self { spec, paths, sampler, loops, fill_per_pass, draw_rate })
    }

    /// Replaces flow weights by flow × factor for the named paths.
    pub fn with_path_weights(mut self, overrides: &BTreeMap<String, f64>) -> Result<Self> {
        self.sampler = PathSampler::with_overrides(&self.paths, overrides)?;
        Ok(self)
    }

    pub fn fill_fraction_per_pass(&self) -> f64 {
        if self.spec.capacity > 0.0 {
            (self.fill_per_pass / self.spec.capacity).min(1.0)
        } else {
            1.0
        }
    }

    /// Lung passes to fill an empty tank with no draws.
    pub fn passes_to_fill(&self) -> usize {
        if self.spec.capacity <= 0.0 {
            return 0;
        }
        (self.spec.capacity / self.fill_per_pass).ceil() as usize
    }

    /// Seconds a full tank lasts at the tank-only draw rate.
    pub fn full_tank_duration(&self) -> f64 {
        self.spec.capacity / self.draw_rate
    }

    /// One robot history starting as it leaves the lung capillaries.
    pub fn simulate<R: Rng + ?Sized>(&self, duration: f64, initial_level: f64, rng: &mut R) -> TankTrace {
        let spec = &self.spec;
        let cap = spec.capacity;
        let mut level = initial_level.clamp(0.0, cap);
        let mut armed = spec.policy == TankPolicy::Always || (cap > 0.0 && level >= cap);
        let mut t = 0.0;
        let (mut added, mut drawn_total) = (0.0, 0.0);
        let mut events = Vec::new();
        while t < duration {
            let i = self.sampler.sample_index(rng);
            let lp = &self.loops[i];
            let mut drawn = 0.0;
            if armed && level > 0.0 {
                let want = lp.demand(spec, self.draw_rate);
                drawn = want.min(level);
                level -= drawn;
                if want >= drawn && level <= 0.0 {
                    level = 0.0;
                    if spec.policy == TankPolicy::WhenFull {
                        armed = false;
                    }
                }
            }
            drawn_total += drawn;
            t += lp.until_lung;
            events.push(TankEvent {
                time: t,
                path: self.paths.paths[i].id.clone(),
                fill_fraction: if cap > 0.0 { level / cap } else { 0.0 },
                drawn,
            });
            let room = cap - level;
            let add = self.fill_per_pass.min(room);
            level += add;
            added += add;
            if cap > 0.0 && level >= cap {
                level = cap;
                armed = true;
            }
            t += lp.window;
        }
        TankTrace { events, capacity: cap, initial_level: initial_level.clamp(0.0, cap), final_level: level, added, drawn: drawn_total }
    }
}

/// One robot history of `duration` seconds, starting with an empty tank.
pub fn simulate_tank<R: Rng + ?Sized>(
    spec: &TankSpec,
    duration: f64,
    swarm: &SwarmConfig,
    net: &CirculationNetwork,
    rng: &mut R,
) -> Result<TankTrace> {
    if !(duration > 0.0) {
        return Err(Error::domain("duration must be positive"));
    }
    Ok(TankModel::new(net, swarm, *spec)?.simulate(duration, 0.0, rng))
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TankDistribution {
    pub policy: TankPolicy,
    pub histories: usize,
    pub warmup: f64,
    pub horizon: f64,
    /// Fill fraction at lung return over [0, 1].
    pub histogram: Histogram,
}

/// Fill-fraction histogram over lung returns of `histories` independent
/// robots, each run for the warmup plus `horizon` seconds from an empty tank;
/// only returns after the warmup are counted.
pub fn tank_distribution(
    model: &TankModel,
    histories: usize,
    horizon: f64,
    seed: u64,
    exec: Execution,
) -> Result<TankDistribution> {
    if histories == 0 {
        return Err(Error::domain("need at least one history"));
    }
    if !(horizon > 0.0) {
        return Err(Error::domain("horizon must be positive"));
    }
    let per: Vec<Vec<f64>> = par::map(exec, histories, |h| {
        let mut rng = par::substream(seed, h as u64);
        model
            .simulate(TANK_WARMUP + horizon, 0.0, &mut rng)
            .events
            .into_iter()
            .filter(|e| e.time >= TANK_WARMUP && e.time <= TANK_WARMUP + horizon)
            .map(|e| e.fill_fraction)
            .collect()
    });
    let mut histogram = Histogram::new(0.0, 1.0, TANK_HISTOGRAM_BINS);
    for v in per.into_iter().flatten() {
        histogram.add(v);
    }
    Ok(TankDistribution { policy: model.spec.policy, histories, warmup: TANK_WARMUP, horizon, histogram })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::default_network;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn model(spec: TankSpec) -> TankModel {
        let net = default_network();
        TankModel::new(&net, &SwarmConfig::new(3e11, &net.constants), spec).unwrap()
    }

    #[test]
    fn fill_and_drain_rates() {
        let m = model(TankSpec::default());
        // 1.8e9/s over 0.75 s × 0.33/0.45 of robot time
        assert!((m.fill_fraction_per_pass() - 0.055).abs() < 0.002, "{}", m.fill_fraction_per_pass());
        assert_eq!(m.passes_to_fill(), 19);
        assert!((m.full_tank_duration() - 59.94).abs() < 0.05);
    }

    #[test]
    fn legs_loop_timing() {
        let m = model(TankSpec::default());
        let i = m.paths.paths.iter().position(|p| p.id == "legs").unwrap();
        // 134 s of blood time less ~1.6 s of faster cell travel in capillaries
        assert!(m.loops[i].until_lung > 130.0 && m.loops[i].until_lung < 134.0);
    }

    #[test]
    fn tank_bounds_and_conservation() {
        for policy in [TankPolicy::Always, TankPolicy::WhenFull] {
            let m = model(TankSpec::with_policy(policy));
            let mut rng = ChaCha8Rng::seed_from_u64(11);
            let tr = m.simulate(7200.0, 0.0, &mut rng);
            assert!(tr.events.iter().all(|e| (0.0..=1.0).contains(&e.fill_fraction)));
            assert!(tr.events.windows(2).all(|w| w[1].time > w[0].time));
            assert!(tr.drawn <= tr.added + tr.initial_level + 1e-3);
            assert!((tr.initial_level + tr.added - tr.drawn - tr.final_level).abs() < 1.0);
        }
    }

    #[test]
    fn reproducible() {
        let m = model(TankSpec::with_policy(TankPolicy::WhenFull));
        let a = m.simulate(3600.0, 0.0, &mut ChaCha8Rng::seed_from_u64(5));
        let b = m.simulate(3600.0, 0.0, &mut ChaCha8Rng::seed_from_u64(5));
        assert_eq!(a, b);
    }

    #[test]
    fn zero_capacity_is_degenerate() {
        let m = model(TankSpec { capacity: 0.0, ..TankSpec::default() });
        let d = tank_distribution(&m, 20, 600.0, 1, Execution::Sequential).unwrap();
        assert_eq!(d.histogram.counts[0], d.histogram.total());
        assert!(d.histogram.total() > 0);
    }

    #[test]
    fn supplement_draws_less() {
        let only = model(TankSpec::default());
        let sup = model(TankSpec { draw: DrawMode::Supplement, ..TankSpec::default() });
        let i = only.paths.paths.iter().position(|p| p.id == "legs").unwrap();
        let a = only.loops[i].demand(&only.spec, only.draw_rate);
        let b = sup.loops[i].demand(&sup.spec, sup.draw_rate);
        assert!(b < a && b > 0.0, "{a} {b}");
    }
}
