use std::collections::BTreeMap;

use serde::Serialize;

use super::ode::{self, State, Tolerance};
use super::oxygen::{hill, invert, total_oxygen, total_oxygen_at, BloodState};
use super::swarm::SwarmConfig;
use crate::error::{Error, Result};
use crate::mitigation::{uptake_rule, UptakeRule};
use crate::model::{CirculationNetwork, HematocritProfile, PhysicalConstants, SegmentKind, TissueMode};

/// Exit fraction of total oxygen that calibrates coronary demand.
pub const CORONARY_EXIT_FRACTION: f64 = 0.3;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct IntegratorSettings {
    pub rtol: f64,
    /// Absolute tolerance as a fraction of lung-exit total oxygen.
    pub atol_fraction: f64,
    /// Step cap as a fraction of each hematocrit-profile piece.
    pub max_step_fraction: f64,
    /// Uniform trace intervals per segment (profile knots are added).
    pub trace_intervals: usize,
}

impl Default for IntegratorSettings {
    fn default() -> Self {
        Self { rtol: 1e-10, atol_fraction: 1e-14, max_step_fraction: 0.01, trace_intervals: 200 }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct TraceSample {
    /// Blood time since segment entry (s).
    pub time: f64,
    /// Time experienced by cell-borne robots, ∫ h/h_D dτ (s).
    pub robot_time: f64,
    /// Oxygen per m³ of flowing blood.
    pub total_oxygen: f64,
    pub state: BloodState,
    /// Power of one robot (W).
    pub robot_power: f64,
    pub relative_tissue_power: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SegmentTrace {
    pub segment: String,
    pub samples: Vec<TraceSample>,
}

impl SegmentTrace {
    pub fn min_robot_power(&self) -> f64 {
        self.samples.iter().map(|s| s.robot_power).fold(f64::INFINITY, f64::min)
    }

    pub fn max_robot_power(&self) -> f64 {
        self.samples.iter().map(|s| s.robot_power).fold(f64::NEG_INFINITY, f64::max)
    }

    pub fn sample_at(&self, time: f64) -> Option<&TraceSample> {
        self.samples.iter().find(|s| (s.time - time).abs() <= 1e-9 * time.abs().max(1.0))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct CapillaryExit {
    pub time: f64,
    pub plasma_concentration: f64,
    pub robot_power: f64,
    /// Present only for segments with tissue demand.
    pub relative_tissue_power: Option<f64>,
}

/// Result of carrying blood through one segment.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SegmentOutcome {
    pub inlet: BloodState,
    pub outlet: BloodState,
    pub inlet_total_oxygen: f64,
    pub outlet_total_oxygen: f64,
    /// Molecules per m³ of blood taken by robots during the transit.
    pub robot_consumed: f64,
    /// Molecules per m³ of blood taken by tissue during the transit.
    pub tissue_consumed: f64,
    pub min_robot_power: f64,
    pub min_robot_power_time: f64,
    pub max_robot_power: f64,
    pub max_robot_power_time: f64,
    pub capillary_exit: Option<CapillaryExit>,
    pub min_relative_tissue_power: Option<f64>,
    pub trace: SegmentTrace,
}

/// Tissue demand multipliers fitted to the coronary exit anchor, by segment id.
#[derive(Debug, Clone, PartialEq, Default, Serialize)]
pub struct TissueCalibration {
    pub coronary: BTreeMap<String, f64>,
}

impl TissueCalibration {
    pub fn for_network(net: &CirculationNetwork) -> Result<Self> {
        Ok(TransportContext::new(net)?.calibration)
    }
}

#[derive(Debug, Clone)]
pub(crate) struct Prepared {
    pub transit: f64,
    pub profile: HematocritProfile,
    /// Breakpoint and window times (s), sorted.
    pub knots: Vec<f64>,
    pub window: Option<(f64, f64)>,
    /// Tissue uptake rate at unsaturated kinetics (molecules/m³/s).
    pub tissue_rate: f64,
    pub has_tissue: bool,
    pub is_lung: bool,
}

impl Prepared {
    fn hematocrit(&self, tau: f64) -> f64 {
        self.profile.eval((tau / self.transit).clamp(0.0, 1.0))
    }
}

/// Robot-side inputs of a span integration.
#[derive(Debug, Clone, Copy)]
pub(crate) struct Robots {
    /// Robots per m³ of blood at discharge hematocrit.
    pub density: f64,
    /// 4πDr (m³/s).
    pub capture: f64,
    pub uptake: UptakeRule,
}

/// Per-network state shared by segment integrations and sweeps.
#[derive(Debug, Clone)]
pub struct TransportContext<'a> {
    pub(crate) net: &'a CirculationNetwork,
    pub(crate) k: PhysicalConstants,
    pub(crate) segs: Vec<Prepared>,
    pub calibration: TissueCalibration,
    pub settings: IntegratorSettings,
    /// Total oxygen of blood leaving the lung capillaries.
    pub(crate) lung_total: f64,
}

impl<'a> TransportContext<'a> {
    pub fn new(net: &'a CirculationNetwork) -> Result<Self> {
        Self::with_settings(net, IntegratorSettings::default())
    }

    pub fn with_settings(net: &'a CirculationNetwork, settings: IntegratorSettings) -> Result<Self> {
        let k = net.constants;
        let q0 = |p: f64| p / (k.tissue_energy_per_o2 * k.capillary_volume());
        let mut segs = Vec::with_capacity(net.segments().len());
        for s in net.segments() {
            let profile = s.hematocrit_profile()?;
            let t = s.transit_time;
            let window = profile.capillary_window().map(|(a, b)| (a * t, b * t));
            let mut knots: Vec<f64> = profile.knots().into_iter().map(|f| f * t).collect();
            knots.sort_by(f64::total_cmp);
            let base = q0(s.tissue.per_capillary_power);
            let tissue_rate = match (s.tissue.mode, window) {
                (TissueMode::None, _) | (_, None) => 0.0,
                (TissueMode::Standard | TissueMode::Coronary, Some(_)) => base,
                (TissueMode::ScaledByTransit, Some((a, b))) => base * 1.0 / (b - a),
            };
            segs.push(Prepared {
                transit: t,
                profile,
                knots,
                window,
                tissue_rate,
                has_tissue: s.tissue.mode != TissueMode::None && tissue_rate > 0.0,
                is_lung: s.kind == SegmentKind::Lung,
            });
        }
        let lung_total = total_oxygen_at(k.lung_exit_plasma_concentration, k.discharge_hematocrit, &k);
        let mut ctx = Self { net, k, segs, calibration: TissueCalibration::default(), settings, lung_total };
        for (i, s) in net.segments().iter().enumerate() {
            if s.tissue.mode == TissueMode::Coronary && ctx.segs[i].tissue_rate > 0.0 {
                let m = ctx.calibrate_coronary(i)?;
                ctx.segs[i].tissue_rate *= m;
                ctx.calibration.coronary.insert(s.id.clone(), m);
            }
        }
        Ok(ctx)
    }

    pub fn network(&self) -> &CirculationNetwork {
        self.net
    }

    pub fn constants(&self) -> &PhysicalConstants {
        &self.k
    }

    /// Blood leaving the lung capillaries.
    pub fn lung_exit_state(&self) -> BloodState {
        BloodState::lung_exit(&self.k)
    }

    /// Bisection on the demand multiplier so that, without robots, blood
    /// entering the capillary window at lung-exit oxygen leaves it with
    /// the anchor fraction.
    fn calibrate_coronary(&self, i: usize) -> Result<f64> {
        let (a, b) = self.segs[i].window.expect("tissue implies window");
        let base = self.segs[i].tissue_rate;
        let none = Robots { density: 0.0, capture: 0.0, uptake: UptakeRule::full() };
        let exit_ratio = |m: f64| -> Result<f64> {
            let mut sink = Vec::new();
            let y = self.span(i, &none, a, b, [self.lung_total, 0.0, 0.0], base * m, 0.0, &mut sink)?;
            Ok(y[0] / self.lung_total)
        };
        let (mut lo, mut hi) = (0.0, 1.0);
        while exit_ratio(hi)? > CORONARY_EXIT_FRACTION {
            lo = hi;
            hi *= 2.0;
            if hi > 1e6 {
                return Err(Error::config("coronary calibration did not bracket the exit anchor"));
            }
        }
        for _ in 0..100 {
            let mid = 0.5 * (lo + hi);
            if exit_ratio(mid)? > CORONARY_EXIT_FRACTION {
                lo = mid;
            } else {
                hi = mid;
            }
            if hi - lo <= 1e-13 * hi {
                break;
            }
        }
        Ok(0.5 * (lo + hi))
    }

    pub(crate) fn robots(&self, i: usize, swarm: &SwarmConfig) -> Result<Robots> {
        let k = &self.k;
        Ok(Robots {
            density: swarm.robot_count / self.net.globals.total_volume,
            capture: 4.0 * std::f64::consts::PI * k.oxygen_diffusion_coefficient * swarm.robot_radius,
            uptake: uptake_rule(&swarm.policy, &self.net.segments()[i])?,
        })
    }

    fn sample(&self, i: usize, robots: &Robots, tau: f64, robot_time: f64, y: &State) -> TraceSample {
        let k = &self.k;
        let hd = k.discharge_hematocrit;
        let c = invert(y[0].max(0.0), hd, k, None);
        let h = self.segs[i].hematocrit(tau);
        TraceSample {
            time: tau,
            robot_time,
            total_oxygen: y[0],
            state: BloodState {
                plasma_concentration: c,
                cell_saturation: hill(c, k.hill_exponent, k.hill_c50),
                local_hematocrit: h,
                equilibrated: true,
            },
            robot_power: robots.uptake.at(c) * robots.capture * c * k.robot_energy_per_o2,
            relative_tissue_power: c / (c + k.tissue_michaelis_constant),
        }
    }

    /// Integrates [T, robot uptake, tissue uptake] over blood time [ta, tb]
    /// of segment `i`, pushing samples (including both ends) to `out`.
    #[allow(clippy::too_many_arguments)]
    pub(crate) fn span(
        &self,
        i: usize,
        robots: &Robots,
        ta: f64,
        tb: f64,
        y0: State,
        tissue_rate: f64,
        robot_time0: f64,
        out: &mut Vec<TraceSample>,
    ) -> Result<State> {
        let p = &self.segs[i];
        let k = &self.k;
        let hd = k.discharge_hematocrit;
        let km = k.tissue_michaelis_constant;
        let t = p.transit;
        let n = self.settings.trace_intervals.max(1);
        let eps = 1e-9 * t;

        let mut points: Vec<f64> = (0..=n).map(|j| t * j as f64 / n as f64).collect();
        points.extend(p.knots.iter().copied());
        points.retain(|&x| x > ta + eps && x < tb - eps);
        points.push(ta);
        points.push(tb);
        points.sort_by(f64::total_cmp);
        points.dedup_by(|a, b| (*a - *b).abs() <= eps);

        let tol = Tolerance { rtol: self.settings.rtol, atol: self.settings.atol_fraction * self.lung_total, max_step: t };
        let mut y = y0;
        let mut robot_time = robot_time0;
        let mut step = f64::INFINITY;
        let mut guess: Option<f64> = None;
        out.push(self.sample(i, robots, ta, robot_time, &y));
        for w in points.windows(2) {
            let (s0, s1) = (w[0], w[1]);
            let mid = 0.5 * (s0 + s1);
            let kj = p.knots.partition_point(|&x| x <= mid);
            let (pa, pb) = (p.knots[kj.saturating_sub(1)], p.knots[kj.min(p.knots.len() - 1)]);
            let (ha, hb) = (p.hematocrit(pa), p.hematocrit(pb));
            let piece = (pb - pa).max(eps);
            let in_window = p.window.is_some_and(|(a, b)| mid > a && mid < b);
            let q = if in_window { tissue_rate } else { 0.0 };
            let h_at = |tau: f64| ha + (hb - ha) * (tau - pa) / piece;
            let rhs = |tau: f64, y: &State| -> State {
                let c = invert(y[0].max(0.0), hd, k, guess);
                guess = Some(c);
                let robot = robots.density * (h_at(tau) / hd) * robots.uptake.at(c) * robots.capture * c;
                let tissue = if q > 0.0 { q * c / (c + km) } else { 0.0 };
                [-(robot + tissue), robot, tissue]
            };
            let local = Tolerance { max_step: self.settings.max_step_fraction * piece, ..tol };
            if !step.is_finite() {
                step = local.max_step;
            }
            y = ode::integrate(rhs, s0, s1, y, &mut step, local).map_err(|u| Error::Numerical {
                segment: self.net.segments()[i].id.clone(),
                time: u.t,
                total_oxygen: u.y[0],
                reason: "step size underflow".into(),
            })?;
            robot_time += 0.5 * (h_at(s0) + h_at(s1)) / hd * (s1 - s0);
            out.push(self.sample(i, robots, s1, robot_time, &y));
        }
        Ok(y)
    }

    /// Carries `inlet` through segment `i`. Lung segments reload the blood
    /// at the end of their capillary window.
    pub fn integrate_segment(&self, i: usize, inlet: &BloodState, swarm: &SwarmConfig) -> Result<SegmentOutcome> {
        swarm.validate()?;
        let robots = self.robots(i, swarm)?;
        let p = &self.segs[i];
        let t_in = total_oxygen(inlet, &self.k);
        let mut samples = Vec::new();
        let mut extra = Vec::new();
        let y = if p.is_lung {
            let (_, b) = p.window.ok_or_else(|| Error::config("lung segment needs a capillary window"))?;
            let head = self.span(i, &robots, 0.0, b, [t_in, 0.0, 0.0], p.tissue_rate, 0.0, &mut samples)?;
            let pre = samples.pop().expect("span pushes its end");
            extra.push(pre);
            self.span(i, &robots, b, p.transit, [self.lung_total, head[1], head[2]], p.tissue_rate, pre.robot_time, &mut samples)?
        } else {
            self.span(i, &robots, 0.0, p.transit, [t_in, 0.0, 0.0], p.tissue_rate, 0.0, &mut samples)?
        };
        Ok(self.outcome(i, *inlet, t_in, y, samples, &extra))
    }

    pub(crate) fn outcome(
        &self,
        i: usize,
        inlet: BloodState,
        t_in: f64,
        y: State,
        samples: Vec<TraceSample>,
        extra: &[TraceSample],
    ) -> SegmentOutcome {
        let p = &self.segs[i];
        let all = || samples.iter().chain(extra);
        let min = all().min_by(|a, b| a.robot_power.total_cmp(&b.robot_power)).expect("nonempty");
        let max = all().max_by(|a, b| a.robot_power.total_cmp(&b.robot_power)).expect("nonempty");
        let last = samples.last().expect("nonempty");
        let eps = 1e-9 * p.transit;
        let capillary_exit = p.window.and_then(|(_, b)| {
            samples.iter().find(|s| (s.time - b).abs() <= eps).map(|s| CapillaryExit {
                time: s.time,
                plasma_concentration: s.state.plasma_concentration,
                robot_power: s.robot_power,
                relative_tissue_power: p.has_tissue.then_some(s.relative_tissue_power),
            })
        });
        let min_relative_tissue_power = match (p.has_tissue, p.window) {
            (true, Some((a, b))) => samples
                .iter()
                .filter(|s| s.time >= a - eps && s.time <= b + eps)
                .map(|s| s.relative_tissue_power)
                .reduce(f64::min),
            _ => None,
        };
        let outlet = BloodState { local_hematocrit: self.k.discharge_hematocrit, ..last.state };
        SegmentOutcome {
            inlet,
            outlet,
            inlet_total_oxygen: t_in,
            outlet_total_oxygen: y[0],
            robot_consumed: y[1],
            tissue_consumed: y[2],
            min_robot_power: min.robot_power,
            min_robot_power_time: min.time,
            max_robot_power: max.robot_power,
            max_robot_power_time: max.time,
            capillary_exit,
            min_relative_tissue_power,
            trace: SegmentTrace { segment: self.net.segments()[i].id.clone(), samples },
        }
    }
}

/// Carries `inlet` through the named segment of `net`.
pub fn integrate_segment(
    net: &CirculationNetwork,
    segment: &str,
    inlet: &BloodState,
    swarm: &SwarmConfig,
) -> Result<(BloodState, SegmentTrace)> {
    let ctx = TransportContext::new(net)?;
    let i = net.require(segment)?;
    let out = ctx.integrate_segment(i, inlet, swarm)?;
    Ok((out.outlet, out.trace))
}
