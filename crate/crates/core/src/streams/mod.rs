//! Data ingestion and generation.

mod kmeans;
mod loader;
mod nslkdd;
mod synth;

use serde::{Deserialize, Serialize};

pub use kmeans::kmeans_label;
pub use loader::{load_csv, write_csv, CsvSchema, MinMax};
pub use nslkdd::{parse_kdd_file, prepare_nslkdd, KddRecord, NslKddConfig, NSL_KDD_DRIFT_INDEX, NSL_KDD_FEATURES};
pub use synth::{gen_drift_stream, DriftKind, DriftSchedule, Profile, SynthConfig};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StreamSample {
    pub index: usize,
    pub x: Vec<f64>,
    pub true_label: Option<usize>,
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct StreamMeta {
    pub dim: usize,
    pub num_classes: usize,
    pub label_names: Vec<String>,
    /// Test-stream indices at which the concept changes.
    pub drift_points: Vec<usize>,
}

/// Initial training rows plus the test stream.
#[derive(Debug, Clone, PartialEq)]
pub struct Dataset {
    pub train: Vec<Vec<f64>>,
    pub train_labels: Option<Vec<usize>>,
    pub test: Vec<StreamSample>,
    pub meta: StreamMeta,
}
