//! Small numeric helpers shared by the detector, discriminator and reconstruction.

use serde::{Deserialize, Serialize};

/// Sum of absolute coordinate differences.
#[inline]
pub fn l1(a: &[f64], b: &[f64]) -> f64 {
    debug_assert_eq!(a.len(), b.len());
    a.iter().zip(b).map(|(x, y)| (x - y).abs()).sum()
}

/// Mean plus `k` population standard deviations. Returns `None` on empty input.
pub fn mean_plus_k_std(values: &[f64], k: f64) -> Option<f64> {
    if values.is_empty() {
        return None;
    }
    let n = values.len() as f64;
    let mean = values.iter().sum::<f64>() / n;
    let var = values.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / n;
    Some(mean + k * var.sqrt())
}

/// Welford accumulator for running mean and population variance.
#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
pub struct RunningStats {
    count: u64,
    mean: f64,
    m2: f64,
}

impl RunningStats {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn push(&mut self, value: f64) {
        self.count += 1;
        let delta = value - self.mean;
        self.mean += delta / self.count as f64;
        self.m2 += delta * (value - self.mean);
    }

    pub fn count(&self) -> u64 {
        self.count
    }

    pub fn mean(&self) -> f64 {
        self.mean
    }

    pub fn population_std(&self) -> f64 {
        if self.count == 0 {
            0.0
        } else {
            (self.m2 / self.count as f64).max(0.0).sqrt()
        }
    }

    pub fn mean_plus_k_std(&self, k: f64) -> Option<f64> {
        (self.count > 0).then(|| self.mean + k * self.population_std())
    }

    pub fn clear(&mut self) {
        *self = Self::default();
    }
}
