use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::detector::DetectorConfig;
use crate::error::{Error, Result};
use crate::oselm::{Activation, OselmParams};
use crate::reconstruction::ReconstructionConfig;
use crate::streams::{CsvSchema, DriftSchedule, NslKddConfig, SynthConfig};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum Method {
    /// Centroid drift detector with sequential reconstruction.
    #[default]
    Proposed,
    /// Initially trained model, never updated.
    BaselineNoDetector,
    /// No detector; the winning instance keeps training with a forgetting rate.
    OnladForgetting,
}

impl Method {
    pub fn as_str(self) -> &'static str {
        match self {
            Method::Proposed => "proposed",
            Method::BaselineNoDetector => "baseline_no_detector",
            Method::OnladForgetting => "onlad_forgetting",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum DatasetSpec {
    Synthetic {
        schedule: DriftSchedule,
        #[serde(default)]
        stream: SynthConfig,
        /// Stream seed; defaults to the experiment seed.
        #[serde(default)]
        seed: Option<u64>,
    },
    Csv {
        path: PathBuf,
        #[serde(default)]
        schema: CsvSchema,
    },
    NslKdd(NslKddConfig),
}

impl Default for DatasetSpec {
    fn default() -> Self {
        DatasetSpec::Synthetic { schedule: DriftSchedule::sudden(2000), stream: SynthConfig::default(), seed: None }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct OselmSection {
    pub hidden_dim: usize,
    pub activation: Activation,
    pub ridge_lambda: f64,
    /// Only meaningful for `onlad_forgetting`.
    pub forgetting_rate: Option<f64>,
}

impl Default for OselmSection {
    fn default() -> Self {
        Self { hidden_dim: 22, activation: Activation::Sigmoid, ridge_lambda: 0.01, forgetting_rate: None }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum Labeling {
    /// Use the labels shipped with the training rows.
    #[default]
    Truth,
    /// Cluster the training rows with k-means.
    Kmeans,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct TrainingConfig {
    pub epochs: usize,
    /// `theta_error` = mean + `k_err` std of training anomaly scores.
    pub k_err: f64,
    pub labeling: Labeling,
    /// Defaults to the class count reported by the dataset.
    pub num_classes: Option<usize>,
    pub kmeans_iters: usize,
}

impl Default for TrainingConfig {
    fn default() -> Self {
        Self { epochs: 3, k_err: 1.0, labeling: Labeling::Truth, num_classes: None, kmeans_iters: 100 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct ExperimentConfig {
    pub method: Method,
    pub seed: u64,
    /// Rolling-accuracy window of the reported timeline.
    pub smoothing_window: usize,
    /// Spacing of timeline points in the report.
    pub timeline_stride: usize,
    /// Spacing of state-size measurements.
    pub audit_stride: usize,
    /// Start from a saved discriminator instead of fitting one.
    pub model: Option<PathBuf>,
    pub dataset: DatasetSpec,
    pub oselm: OselmSection,
    pub training: TrainingConfig,
    pub detector: DetectorConfig,
    pub reconstruction: ReconstructionConfig,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        Self {
            method: Method::Proposed,
            seed: 0,
            smoothing_window: 200,
            timeline_stride: 10,
            audit_stride: 1000,
            model: None,
            dataset: DatasetSpec::default(),
            oselm: OselmSection::default(),
            training: TrainingConfig::default(),
            detector: DetectorConfig::default(),
            reconstruction: ReconstructionConfig::default(),
        }
    }
}

impl ExperimentConfig {
    pub fn from_toml_str(text: &str) -> Result<Self> {
        let cfg: Self = toml::from_str(text).map_err(|e| Error::Config(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| Error::Config(format!("{}: {e}", path.display())))?;
        let mut cfg = Self::from_toml_str(&text)?;
        // relative dataset paths resolve against the config file
        if let Some(base) = path.parent() {
            cfg.rebase_paths(base);
        }
        Ok(cfg)
    }

    fn rebase_paths(&mut self, base: &Path) {
        let fix = |p: &mut PathBuf| {
            if p.is_relative() {
                *p = base.join(&*p);
            }
        };
        match &mut self.dataset {
            DatasetSpec::Csv { path, .. } => fix(path),
            DatasetSpec::NslKdd(c) => {
                fix(&mut c.train_path);
                fix(&mut c.test_path);
            }
            DatasetSpec::Synthetic { .. } => {}
        }
        if let Some(m) = self.model.as_mut() {
            fix(m);
        }
    }

    pub fn to_toml_string(&self) -> Result<String> {
        toml::to_string(self).map_err(|e| Error::Config(e.to_string()))
    }

    pub fn validate(&self) -> Result<()> {
        if self.smoothing_window == 0 || self.timeline_stride == 0 || self.audit_stride == 0 {
            return Err(Error::Config("smoothing_window, timeline_stride and audit_stride must be positive".into()));
        }
        if self.training.epochs == 0 {
            return Err(Error::Config("training.epochs must be positive".into()));
        }
        if !(self.training.k_err >= 0.0) {
            return Err(Error::Config("training.k_err must be non-negative".into()));
        }
        match (self.method, self.oselm.forgetting_rate) {
            (Method::OnladForgetting, None) => {
                return Err(Error::Config("onlad_forgetting requires oselm.forgetting_rate".into()));
            }
            (Method::OnladForgetting, Some(r)) if !(r > 0.0 && r <= 1.0) => {
                return Err(Error::Config(format!("oselm.forgetting_rate must lie in (0, 1], got {r}")));
            }
            (Method::Proposed | Method::BaselineNoDetector, Some(r)) if r != 1.0 => {
                return Err(Error::Config(format!(
                    "oselm.forgetting_rate = {r} only applies to onlad_forgetting"
                )));
            }
            _ => {}
        }
        if self.method == Method::Proposed {
            self.detector.validate()?;
            self.reconstruction.validate()?;
        }
        if let DatasetSpec::Synthetic { schedule, .. } = &self.dataset {
            schedule.validate()?;
        }
        Ok(())
    }

    /// Network parameters for a dataset of dimension `dim`.
    pub fn oselm_params(&self, dim: usize) -> OselmParams {
        OselmParams {
            input_dim: dim,
            hidden_dim: self.oselm.hidden_dim,
            activation: self.oselm.activation,
            seed: self.seed,
            ridge_lambda: self.oselm.ridge_lambda,
            forgetting_rate: 1.0,
        }
    }
}
