//! Small summary-statistics helpers shared by the Monte Carlo modules.

use serde::Serialize;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Histogram {
    pub lo: f64,
    pub hi: f64,
    pub counts: Vec<u64>,
}

impl Histogram {
    pub fn new(lo: f64, hi: f64, bins: usize) -> Self {
        assert!(bins > 0 && hi >= lo);
        Self { lo, hi, counts: vec![0; bins] }
    }

    /// Range taken from the data; a zero-width range gets a single bin.
    pub fn from_values(values: &[f64], bins: usize) -> Self {
        let lo = values.iter().copied().fold(f64::INFINITY, f64::min);
        let hi = values.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        if !(lo.is_finite() && hi.is_finite()) {
            return Self::new(0.0, 0.0, 1);
        }
        let mut h = if hi > lo { Self::new(lo, hi, bins) } else { Self::new(lo, hi, 1) };
        for &v in values {
            h.add(v);
        }
        h
    }

    pub fn width(&self) -> f64 {
        (self.hi - self.lo) / self.counts.len() as f64
    }

    pub fn left_edges(&self) -> Vec<f64> {
        (0..self.counts.len()).map(|i| self.lo + i as f64 * self.width()).collect()
    }

    /// Values at the top edge land in the last bin; out-of-range values are clamped.
    pub fn add(&mut self, v: f64) {
        let n = self.counts.len();
        let i = if self.hi > self.lo { ((v - self.lo) / (self.hi - self.lo) * n as f64 + 1e-9).floor() } else { 0.0 };
        let i = if i.is_nan() { 0 } else { (i.max(0.0) as usize).min(n - 1) };
        self.counts[i] += 1;
    }

    pub fn total(&self) -> u64 {
        self.counts.iter().sum()
    }

    /// Fraction of the mass in bins lying entirely below `x`.
    pub fn fraction_below(&self, x: f64) -> f64 {
        let total = self.total();
        if total == 0 {
            return 0.0;
        }
        let w = self.width();
        let below: u64 = self
            .counts
            .iter()
            .enumerate()
            .filter(|(i, _)| self.lo + (*i as f64 + 1.0) * w <= x + 1e-12)
            .map(|(_, c)| c)
            .sum();
        below as f64 / total as f64
    }

    /// Index of the most populated bin (lowest on ties).
    pub fn mode_bin(&self) -> usize {
        let max = self.counts.iter().copied().max().unwrap_or(0);
        self.counts.iter().position(|&c| c == max).unwrap_or(0)
    }
}

pub fn mean(v: &[f64]) -> f64 {
    v.iter().sum::<f64>() / v.len() as f64
}

/// Population standard deviation over mean.
pub fn coefficient_of_variation(v: &[f64]) -> f64 {
    let m = mean(v);
    let var = v.iter().map(|x| (x - m).powi(2)).sum::<f64>() / v.len() as f64;
    var.sqrt() / m.abs()
}

/// Linear-interpolated quantile of unsorted data, `q` in [0, 1].
pub fn quantile(v: &[f64], q: f64) -> f64 {
    let mut s = v.to_vec();
    s.sort_by(f64::total_cmp);
    let pos = q.clamp(0.0, 1.0) * (s.len() - 1) as f64;
    let i = pos.floor() as usize;
    let j = (i + 1).min(s.len() - 1);
    s[i] + (s[j] - s[i]) * (pos - i as f64)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn binning() {
        let mut h = Histogram::new(0.0, 1.0, 20);
        for v in [0.0, 0.04, 0.05, 0.29, 0.3, 1.0] {
            h.add(v);
        }
        assert_eq!(h.counts[0], 2);
        assert_eq!(h.counts[1], 1);
        assert_eq!(h.counts[19], 1);
        assert!((h.fraction_below(0.3) - 4.0 / 6.0).abs() < 1e-12);
        assert_eq!(h.mode_bin(), 0);
    }

    #[test]
    fn summary() {
        assert_eq!(mean(&[1.0, 2.0, 3.0]), 2.0);
        assert!((quantile(&[3.0, 1.0, 2.0, 4.0], 0.5) - 2.5).abs() < 1e-12);
        assert_eq!(coefficient_of_variation(&[2.0, 2.0]), 0.0);
        let h = Histogram::from_values(&[5.0, 5.0], 10);
        assert_eq!(h.counts, vec![2]);
    }
}
