use std::hint::black_box;
use std::time::Instant;

use serde::{Deserialize, Serialize};

use crate::detector::centroid_displacement;
use crate::discriminator::{predict_with, Discriminator};
use crate::error::{Error, Result};
use crate::reconstruction::{nearest, ReconstructionConfig, ReconstructionState};

pub const PHASE_NAMES: [&str; 6] = [
    "label_prediction",
    "distance_computation",
    "retrain_without_prediction",
    "retrain_with_prediction",
    "coordinate_init",
    "coordinate_update",
];

/// Mean wall-clock microseconds per sample for each pipeline phase.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PhaseTimings {
    pub samples: usize,
    pub label_prediction: f64,
    pub distance_computation: f64,
    pub retrain_without_prediction: f64,
    pub retrain_with_prediction: f64,
    pub coordinate_init: f64,
    pub coordinate_update: f64,
}

impl PhaseTimings {
    pub fn entries(&self) -> [(&'static str, f64); 6] {
        [
            (PHASE_NAMES[0], self.label_prediction),
            (PHASE_NAMES[1], self.distance_computation),
            (PHASE_NAMES[2], self.retrain_without_prediction),
            (PHASE_NAMES[3], self.retrain_with_prediction),
            (PHASE_NAMES[4], self.coordinate_init),
            (PHASE_NAMES[5], self.coordinate_update),
        ]
    }
}

fn mean_micros<F: FnMut(&[f64]) -> Result<()>>(stream: &[Vec<f64>], n: usize, mut f: F) -> Result<f64> {
    let start = Instant::now();
    for i in 0..n {
        f(&stream[i % stream.len()])?;
    }
    Ok(start.elapsed().as_secs_f64() * 1e6 / n as f64)
}

/// Times each phase over `n` samples drawn cyclically from `stream`.
/// `n` below 100 is raised to 100.
pub fn time_phases(
    d: &Discriminator,
    stream: &[Vec<f64>],
    recon_cfg: ReconstructionConfig,
    n: usize,
) -> Result<PhaseTimings> {
    if stream.is_empty() {
        return Err(Error::Empty("benchmark stream"));
    }
    let n = n.max(100);
    let c = d.num_classes();

    let label_prediction = mean_micros(stream, n, |x| {
        black_box(d.predict(x)?);
        Ok(())
    })?;

    let mut cor = d.train_cor().to_vec();
    let mut num = vec![0u64; c];
    let mut label = 0usize;
    let distance_computation = mean_micros(stream, n, |x| {
        let row = &mut cor[label];
        let k = num[label] as f64;
        row.iter_mut().zip(x).for_each(|(r, v)| *r = (*r * k + v) / (k + 1.0));
        num[label] += 1;
        black_box(centroid_displacement(&cor, d.train_cor()));
        label = (label + 1) % c;
        Ok(())
    })?;

    let mut models = d.instances().to_vec();
    let cor = d.train_cor().to_vec();
    let retrain_without_prediction = mean_micros(stream, n, |x| {
        let k = nearest(&cor, x);
        models[k].seq_train(x)
    })?;
    let retrain_with_prediction = mean_micros(stream, n, |x| {
        let p = predict_with(&models, x)?;
        models[p.label].seq_train(x)
    })?;

    let mut recon = ReconstructionState::new(d, recon_cfg, 1.0)?;
    recon.begin(d)?;
    let coordinate_init = mean_micros(stream, n, |x| {
        black_box(recon.init_coord(x));
        Ok(())
    })?;
    let coordinate_update = mean_micros(stream, n, |x| {
        black_box(recon.update_coord(x));
        Ok(())
    })?;

    Ok(PhaseTimings {
        samples: n,
        label_prediction,
        distance_computation,
        retrain_without_prediction,
        retrain_with_prediction,
        coordinate_init,
        coordinate_update,
    })
}
