use std::collections::BTreeMap;

use rand::distributions::{Distribution, WeightedIndex};
use rand::Rng;

use crate::error::{Error, Result};
use crate::model::{CirculationPath, PathSet};

/// Flow-weighted path choice, with optional per-path weight overrides
/// (e.g. zero weight to model robots that avoid a branch).
#[derive(Debug, Clone)]
pub struct PathSampler {
    probabilities: Vec<f64>,
    dist: WeightedIndex<f64>,
}

impl PathSampler {
    pub fn new(paths: &PathSet) -> Result<Self> {
        Self::with_overrides(paths, &BTreeMap::new())
    }

    /// `overrides` maps path id to a factor multiplying that path's flow.
    pub fn with_overrides(paths: &PathSet, overrides: &BTreeMap<String, f64>) -> Result<Self> {
        if paths.is_empty() {
            return Err(Error::domain("cannot sample from an empty path set"));
        }
        for (id, w) in overrides {
            if paths.get(id).is_none() {
                return Err(Error::config(format!("weight override for unknown path `{id}`")));
            }
            if !(*w >= 0.0 && w.is_finite()) {
                return Err(Error::config(format!("weight override for `{id}` must be nonnegative")));
            }
        }
        let weights: Vec<f64> =
            paths.paths.iter().map(|p| p.flow * overrides.get(&p.id).copied().unwrap_or(1.0)).collect();
        let total: f64 = weights.iter().sum();
        let dist = WeightedIndex::new(&weights).map_err(|e| Error::config(format!("path weights: {e}")))?;
        Ok(Self { probabilities: weights.iter().map(|w| w / total).collect(), dist })
    }

    pub fn probabilities(&self) -> &[f64] {
        &self.probabilities
    }

    pub fn sample_index<R: Rng + ?Sized>(&self, rng: &mut R) -> usize {
        self.dist.sample(rng)
    }
}

/// Picks a path with probability proportional to its flow.
pub fn sample_path<'p, R: Rng + ?Sized>(paths: &'p PathSet, rng: &mut R) -> Result<&'p CirculationPath> {
    let s = PathSampler::new(paths)?;
    Ok(&paths.paths[s.sample_index(rng)])
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{default_network, enumerate_paths};
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn legs_probability() {
        let paths = enumerate_paths(&default_network()).unwrap();
        let s = PathSampler::new(&paths).unwrap();
        let i = paths.paths.iter().position(|p| p.id == "legs").unwrap();
        assert!((s.probabilities()[i] - 0.12).abs() < 1e-3);
        assert!((s.probabilities().iter().sum::<f64>() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn empirical_frequencies() {
        let paths = enumerate_paths(&default_network()).unwrap();
        let s = PathSampler::new(&paths).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        let n = 100_000;
        let mut counts = vec![0usize; paths.len()];
        for _ in 0..n {
            counts[s.sample_index(&mut rng)] += 1;
        }
        for (c, p) in counts.iter().zip(s.probabilities()) {
            let sigma = (n as f64 * p * (1.0 - p)).sqrt();
            assert!((*c as f64 - n as f64 * p).abs() <= 3.0 * sigma + 1.0, "{c} vs {}", n as f64 * p);
        }
    }

    #[test]
    fn override_removes_path() {
        let paths = enumerate_paths(&default_network()).unwrap();
        let mut o = BTreeMap::new();
        o.insert("spleen_slow".to_string(), 0.0);
        let s = PathSampler::with_overrides(&paths, &o).unwrap();
        let i = paths.paths.iter().position(|p| p.id == "spleen_slow").unwrap();
        assert_eq!(s.probabilities()[i], 0.0);
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        assert!((0..10_000).all(|_| s.sample_index(&mut rng) != i));
        o.insert("nowhere".to_string(), 1.0);
        assert!(PathSampler::with_overrides(&paths, &o).is_err());
    }
}
