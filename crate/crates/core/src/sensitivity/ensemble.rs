use serde::Serialize;

use super::constraints::ConstraintSet;
use crate::error::Result;
use crate::model::CirculationNetwork;
use crate::par::{self, Execution};
use crate::stats::{coefficient_of_variation, quantile, Histogram};
use crate::transport::{SwarmConfig, SystemReport, TransportContext};

/// Gap in sorted minimum tissue power that separates two clusters.
pub const BIMODAL_MIN_GAP: f64 = 0.2;
/// Share of samples required on each side of the gap.
pub const BIMODAL_MIN_SHARE: f64 = 0.1;
pub const ENSEMBLE_HISTOGRAM_BINS: usize = 20;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SampleMetrics {
    pub sample: usize,
    pub robot_count: f64,
    /// Flow-weighted robot power at capillary exit (W).
    pub mean_power: f64,
    pub min_concentration: f64,
    pub min_concentration_segment: String,
    pub min_tissue_power: f64,
    pub min_tissue_power_segment: String,
}

impl SampleMetrics {
    pub fn from_report(sample: usize, r: &SystemReport) -> Self {
        let tissue = r.min_relative_tissue_power.as_ref();
        Self {
            sample,
            robot_count: r.robot_count,
            mean_power: r.mean_capillary_exit_power(),
            min_concentration: r.min_end_concentration.value,
            min_concentration_segment: r.min_end_concentration.segment.clone(),
            min_tissue_power: tissue.map_or(f64::NAN, |e| e.value),
            min_tissue_power_segment: tissue.map_or_else(String::new, |e| e.segment.clone()),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RobotCountSummary {
    pub robot_count: f64,
    pub power_cv: f64,
    pub power_histogram: Histogram,
    pub concentration_histogram: Histogram,
    pub tissue_power_histogram: Histogram,
    pub bimodal_tissue_power: bool,
    /// Share of samples whose minimum concentration lies in each segment.
    pub concentration_locations: Vec<(String, f64)>,
    pub tissue_power_locations: Vec<(String, f64)>,
    pub concentration_iqr: f64,
    pub concentration_median: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct EnsembleResult {
    pub seed: u64,
    pub robot_counts: Vec<f64>,
    /// Sample-major, robot count minor.
    pub metrics: Vec<SampleMetrics>,
    pub summaries: Vec<RobotCountSummary>,
    pub rejections: usize,
    #[serde(skip)]
    pub networks: Vec<CirculationNetwork>,
}

impl EnsembleResult {
    pub fn samples(&self) -> usize {
        self.networks.len()
    }

    pub fn for_count(&self, robot_count: f64) -> impl Iterator<Item = &SampleMetrics> {
        self.metrics.iter().filter(move |m| m.robot_count == robot_count)
    }

    pub fn summary(&self, robot_count: f64) -> Option<&RobotCountSummary> {
        self.summaries.iter().find(|s| s.robot_count == robot_count)
    }
}

/// Two clusters separated by a wide empty gap, each holding a fair share.
pub fn is_bimodal(values: &[f64]) -> bool {
    let mut v: Vec<f64> = values.iter().copied().filter(|x| x.is_finite()).collect();
    if v.len() < 2 {
        return false;
    }
    v.sort_by(f64::total_cmp);
    let (i, gap) = v
        .windows(2)
        .enumerate()
        .map(|(i, w)| (i, w[1] - w[0]))
        .max_by(|a, b| a.1.total_cmp(&b.1))
        .expect("two values");
    let below = (i + 1) as f64 / v.len() as f64;
    gap > BIMODAL_MIN_GAP && below >= BIMODAL_MIN_SHARE && 1.0 - below >= BIMODAL_MIN_SHARE
}

fn shares(labels: impl Iterator<Item = String>) -> Vec<(String, f64)> {
    let mut counts = std::collections::BTreeMap::<String, usize>::new();
    let mut n = 0;
    for l in labels {
        *counts.entry(l).or_default() += 1;
        n += 1;
    }
    let mut out: Vec<(String, f64)> = counts.into_iter().map(|(k, c)| (k, c as f64 / n as f64)).collect();
    out.sort_by(|a, b| b.1.total_cmp(&a.1).then(a.0.cmp(&b.0)));
    out
}

fn summarize(robot_count: f64, m: &[&SampleMetrics]) -> RobotCountSummary {
    let power: Vec<f64> = m.iter().map(|x| x.mean_power).collect();
    let conc: Vec<f64> = m.iter().map(|x| x.min_concentration).collect();
    let tissue: Vec<f64> = m.iter().map(|x| x.min_tissue_power).filter(|x| x.is_finite()).collect();
    let mut tissue_hist = Histogram::new(0.0, 1.0, ENSEMBLE_HISTOGRAM_BINS);
    for &t in &tissue {
        tissue_hist.add(t);
    }
    RobotCountSummary {
        robot_count,
        power_cv: coefficient_of_variation(&power),
        power_histogram: Histogram::from_values(&power, ENSEMBLE_HISTOGRAM_BINS),
        concentration_histogram: Histogram::from_values(&conc, ENSEMBLE_HISTOGRAM_BINS),
        tissue_power_histogram: tissue_hist,
        bimodal_tissue_power: is_bimodal(&tissue),
        concentration_locations: shares(m.iter().map(|x| x.min_concentration_segment.clone())),
        tissue_power_locations: shares(m.iter().map(|x| x.min_tissue_power_segment.clone())),
        concentration_iqr: quantile(&conc, 0.75) - quantile(&conc, 0.25),
        concentration_median: quantile(&conc, 0.5),
    }
}

/// Sweeps `n_samples` constrained random networks at each robot count.
/// Sample `i` draws from substream `i` of `seed`, so results do not depend
/// on the execution mode.
pub fn run_ensemble(
    constraints: &ConstraintSet,
    base: &CirculationNetwork,
    n_samples: usize,
    robot_counts: &[f64],
    seed: u64,
    exec: Execution,
) -> Result<EnsembleResult> {
    if n_samples == 0 {
        return Err(crate::Error::domain("ensemble needs at least one sample"));
    }
    let runs = par::try_map(exec, n_samples, |i| {
        let sample = constraints.sample(base, &mut par::substream(seed, i as u64))?;
        let ctx = TransportContext::new(&sample.network)?;
        let mut metrics = Vec::with_capacity(robot_counts.len());
        for &n in robot_counts {
            let mut r = ctx.sweep(&SwarmConfig::new(n, &sample.network.constants))?;
            r.drop_traces();
            metrics.push(SampleMetrics::from_report(i, &r));
        }
        Ok((sample, metrics))
    })?;
    let mut networks = Vec::with_capacity(n_samples);
    let mut metrics = Vec::with_capacity(n_samples * robot_counts.len());
    let mut rejections = 0;
    for (s, m) in runs {
        rejections += s.rejections;
        networks.push(s.network);
        metrics.extend(m);
    }
    let summaries = robot_counts
        .iter()
        .map(|&n| summarize(n, &metrics.iter().filter(|m| m.robot_count == n).collect::<Vec<_>>()))
        .collect();
    Ok(EnsembleResult { seed, robot_counts: robot_counts.to_vec(), metrics, summaries, rejections, networks })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::default_network;
    use crate::transport::sweep_circulation;

    #[test]
    fn gap_test() {
        let mut v: Vec<f64> = (0..50).map(|i| 0.1 + 0.001 * i as f64).collect();
        assert!(!is_bimodal(&v));
        v.extend((0..50).map(|i| 0.8 + 0.001 * i as f64));
        assert!(is_bimodal(&v));
        v.truncate(50);
        v.extend((0..3).map(|_| 0.9));
        assert!(!is_bimodal(&v), "too few in the upper cluster");
        assert!(!is_bimodal(&[0.0; 10]));
    }

    #[test]
    fn degenerate_matches_default_sweep() {
        let base = default_network();
        let c = ConstraintSet::degenerate(&base);
        let e = run_ensemble(&c, &base, 1, &[3e11], 9, Execution::Sequential).unwrap();
        let r = sweep_circulation(&base, &SwarmConfig::new(3e11, &base.constants)).unwrap();
        let want = SampleMetrics::from_report(0, &r);
        let got = &e.metrics[0];
        assert!((got.mean_power / want.mean_power - 1.0).abs() < 1e-9);
        assert_eq!(got.min_concentration_segment, want.min_concentration_segment);
        assert!((got.min_tissue_power - want.min_tissue_power).abs() < 1e-9);
        assert_eq!(got.min_tissue_power_segment, want.min_tissue_power_segment);
    }

    #[test]
    fn reproducible_across_modes() {
        let base = default_network();
        let c = ConstraintSet::resting(&base);
        let a = run_ensemble(&c, &base, 4, &[1e11], 5, Execution::Sequential).unwrap();
        let b = run_ensemble(&c, &base, 4, &[1e11], 5, Execution::Parallel).unwrap();
        assert_eq!(a.metrics, b.metrics);
        assert_eq!(a.samples(), 4);
        assert!(run_ensemble(&c, &base, 0, &[1e11], 5, Execution::Sequential).is_err());
    }
}
