#![allow(dead_code)]

use seqdrift::harness::{DatasetSpec, ExperimentConfig, Method};
use seqdrift::streams::{DriftSchedule, SynthConfig};
use seqdrift::ReconstructionConfig;

/// Two-cluster, 8-feature mixture with a drift at `drift_at`.
pub fn mixture(method: Method, seed: u64, schedule: DriftSchedule, n_test: usize, window: usize) -> ExperimentConfig {
    let mut cfg = ExperimentConfig {
        method,
        seed,
        dataset: DatasetSpec::Synthetic {
            schedule,
            stream: SynthConfig { n_test, ..SynthConfig::default() },
            seed: None,
        },
        ..ExperimentConfig::default()
    };
    cfg.oselm.hidden_dim = 6;
    cfg.detector.window = window;
    cfg
}

/// 511-bin fan spectrum, one class, 700 test samples.
pub fn fan(seed: u64, schedule: DriftSchedule, window: usize) -> ExperimentConfig {
    let mut cfg = ExperimentConfig {
        method: Method::Proposed,
        seed,
        dataset: DatasetSpec::Synthetic { schedule, stream: SynthConfig::fan(), seed: None },
        ..ExperimentConfig::default()
    };
    cfg.oselm.hidden_dim = 22;
    cfg.detector.window = window;
    cfg.reconstruction = ReconstructionConfig { n_search: 50, n_update: 150, n: 400 };
    cfg
}
