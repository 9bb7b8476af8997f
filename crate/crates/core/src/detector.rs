//! Fully sequential, centroid-based drift detector.
//!
//! Each sample is labelled by the discriminator. An anomaly score at or above
//! `theta_error` opens a check window of `W` samples during which the recent
//! per-label centroids are updated with every sample and its predicted label.
//! When the window fills, the summed L1 displacement between recent and
//! trained centroids is compared with `theta_drift`. A drift hands every
//! following sample to the reconstruction until it completes.

use serde::{Deserialize, Serialize};

use crate::discriminator::{Discriminator, Prediction, Thresholds};
use crate::error::{check_dim, check_finite, Error, Result};
use crate::reconstruction::{match_clusters, Finalized, Phase, ReconstructionConfig, ReconstructionState};
use crate::stats::l1;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct DetectorConfig {
    pub window: usize,
    /// Manual override of the calibrated anomaly-score trigger.
    pub theta_error: Option<f64>,
    /// Manual override of the calibrated drift threshold.
    pub theta_drift: Option<f64>,
    /// Reset recent centroids to the trained ones whenever a window opens.
    /// When false they persist and start from the trained counts.
    pub reset_on_window: bool,
    /// Exponential weight given to the newest sample in the recent centroid.
    /// `None` keeps the plain running mean.
    pub recency_weight: Option<f64>,
}

impl Default for DetectorConfig {
    fn default() -> Self {
        Self { window: 100, theta_error: None, theta_drift: None, reset_on_window: true, recency_weight: None }
    }
}

impl DetectorConfig {
    pub fn with_window(window: usize) -> Self {
        Self { window, ..Self::default() }
    }

    pub fn validate(&self) -> Result<()> {
        if self.window == 0 {
            return Err(Error::InvalidParams("window size must be at least 1".into()));
        }
        for (name, v) in [("theta_error", self.theta_error), ("theta_drift", self.theta_drift)] {
            if let Some(v) = v {
                if v.is_nan() || v < 0.0 {
                    return Err(Error::InvalidParams(format!("{name} override must be non-negative")));
                }
            }
        }
        if let Some(w) = self.recency_weight {
            if !(w > 0.0 && w <= 1.0) {
                return Err(Error::InvalidParams(format!("recency_weight must lie in (0, 1], got {w}")));
            }
        }
        Ok(())
    }

    /// Calibrated thresholds with any manual overrides applied.
    pub fn effective_thresholds(&self, d: &Discriminator) -> Thresholds {
        let th = d.thresholds();
        Thresholds {
            theta_error: self.theta_error.unwrap_or(th.theta_error),
            theta_drift: self.theta_drift.unwrap_or(th.theta_drift),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Mode {
    Normal,
    Checking,
    Reconstructing,
}

impl Mode {
    pub fn as_str(self) -> &'static str {
        match self {
            Mode::Normal => "normal",
            Mode::Checking => "checking",
            Mode::Reconstructing => "reconstructing",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DetectorState {
    drift: bool,
    check: bool,
    win: usize,
    window: usize,
    cor: Vec<Vec<f64>>,
    num: Vec<u64>,
    dist: f64,
    last_label: usize,
}

/// Observable result of one detector step.
#[derive(Debug, Clone, PartialEq)]
pub struct StepOutcome {
    /// Label in the original label space, with the score behind it.
    pub prediction: Option<Prediction>,
    pub drift_detected: bool,
    pub mode: Mode,
    pub dist: f64,
    pub phase: Option<Phase>,
    /// Set on the sample that completed a reconstruction.
    pub finalized: Option<Finalized>,
    /// Set when a reconstruction was aborted; the old model stays in place.
    pub reconstruction_error: Option<String>,
}

impl DetectorState {
    /// Fresh state: no drift, no open window, recent centroids equal to the
    /// trained ones.
    pub fn new(d: &Discriminator, cfg: &DetectorConfig) -> Result<Self> {
        cfg.validate()?;
        let num = if cfg.reset_on_window { vec![0; d.num_classes()] } else { d.train_num().to_vec() };
        Ok(Self {
            drift: false,
            check: false,
            win: 0,
            window: cfg.window,
            cor: d.train_cor().to_vec(),
            num,
            dist: 0.0,
            last_label: 0,
        })
    }

    pub fn drift(&self) -> bool {
        self.drift
    }

    pub fn check(&self) -> bool {
        self.check
    }

    pub fn win(&self) -> usize {
        self.win
    }

    pub fn window(&self) -> usize {
        self.window
    }

    pub fn recent_centroids(&self) -> &[Vec<f64>] {
        &self.cor
    }

    pub fn recent_counts(&self) -> &[u64] {
        &self.num
    }

    pub fn dist(&self) -> f64 {
        self.dist
    }

    pub fn last_label(&self) -> usize {
        self.last_label
    }

    pub fn mode(&self) -> Mode {
        if self.drift {
            Mode::Reconstructing
        } else if self.check {
            Mode::Checking
        } else {
            Mode::Normal
        }
    }

    fn reset_to(&mut self, d: &Discriminator, cfg: &DetectorConfig) {
        for (row, trained) in self.cor.iter_mut().zip(d.train_cor()) {
            row.copy_from_slice(trained);
        }
        if cfg.reset_on_window {
            self.num.iter_mut().for_each(|n| *n = 0);
        } else {
            self.num.copy_from_slice(d.train_num());
        }
        self.drift = false;
        self.check = false;
        self.win = 0;
        self.dist = 0.0;
        self.window = cfg.window;
    }

    /// Processes one sample.
    pub fn step(
        &mut self,
        cfg: &DetectorConfig,
        d: &mut Discriminator,
        recon: &mut ReconstructionState,
        x: &[f64],
    ) -> Result<StepOutcome> {
        check_dim(d.dim(), x.len())?;
        check_dim(d.num_classes(), self.cor.len())?;
        check_finite(x)?;
        let th = cfg.effective_thresholds(d);
        let mut out = StepOutcome {
            prediction: None,
            drift_detected: false,
            mode: self.mode(),
            dist: self.dist,
            phase: None,
            finalized: None,
            reconstruction_error: None,
        };

        if !self.drift {
            let pred = d.predict(x)?;
            self.last_label = pred.label;
            out.prediction = Some(pred);
            if !self.check && pred.score >= th.theta_error {
                self.check = true;
                self.win = 0;
                if cfg.reset_on_window {
                    for (row, trained) in self.cor.iter_mut().zip(d.train_cor()) {
                        row.copy_from_slice(trained);
                    }
                    self.num.iter_mut().for_each(|n| *n = 0);
                    self.dist = 0.0;
                }
            }
            if self.check && self.win < self.window {
                let c = pred.label;
                self.update_recent(c, x, cfg.recency_weight);
                self.dist = centroid_displacement(&self.cor, d.train_cor());
                self.win += 1;
                out.mode = Mode::Checking;
                if self.win == self.window {
                    self.drift = self.dist >= th.theta_drift;
                    self.check = false;
                    out.drift_detected = self.drift;
                }
            } else {
                out.mode = Mode::Normal;
            }
            out.dist = self.dist;
        }

        if self.drift {
            out.mode = Mode::Reconstructing;
            if out.drift_detected {
                recon.begin(d)?;
            }
            let phase = recon.config().phase_of(recon.count());
            out.phase = Some(phase);
            match recon.reconstruct_step(d, x) {
                Ok((step, finalized)) => {
                    if out.prediction.is_none() {
                        out.prediction = Some(Prediction { label: step.cluster, score: step.score });
                    }
                    if let Some(fin) = finalized {
                        if let Some(p) = out.prediction.as_mut() {
                            if !out.drift_detected {
                                p.label = fin.mapping[step.cluster];
                            }
                        }
                        out.finalized = Some(fin);
                        self.reset_to(d, cfg);
                    } else if !out.drift_detected {
                        // report in the old label space
                        let mapping = match_clusters(recon.coordinates(), d.train_cor());
                        if let Some(p) = out.prediction.as_mut() {
                            p.label = mapping[step.cluster];
                        }
                    }
                }
                Err(e @ (Error::ReconstructionFailed(_) | Error::NumericalDegeneracy { .. })) => {
                    out.reconstruction_error = Some(e.to_string());
                    self.reset_to(d, cfg);
                    if out.prediction.is_none() {
                        out.prediction = Some(d.predict(x)?);
                    }
                }
                Err(e) => return Err(e),
            }
        }
        Ok(out)
    }

    fn update_recent(&mut self, c: usize, x: &[f64], recency_weight: Option<f64>) {
        let n = self.num[c] as f64;
        let row = &mut self.cor[c];
        match recency_weight {
            Some(w) if self.num[c] > 0 => row.iter_mut().zip(x).for_each(|(r, v)| *r += w * (v - *r)),
            _ => row.iter_mut().zip(x).for_each(|(r, v)| *r = (*r * n + v) / (n + 1.0)),
        }
        self.num[c] += 1;
    }
}

/// Discriminator, detector and reconstruction workspace bundled together.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DriftMonitor {
    config: DetectorConfig,
    discriminator: Discriminator,
    state: DetectorState,
    recon: ReconstructionState,
}

impl DriftMonitor {
    pub fn new(
        discriminator: Discriminator,
        config: DetectorConfig,
        recon_config: ReconstructionConfig,
        k_err: f64,
    ) -> Result<Self> {
        let state = DetectorState::new(&discriminator, &config)?;
        let recon = ReconstructionState::new(&discriminator, recon_config, k_err)?;
        Ok(Self { config, discriminator, state, recon })
    }

    pub fn step(&mut self, x: &[f64]) -> Result<StepOutcome> {
        self.state.step(&self.config, &mut self.discriminator, &mut self.recon, x)
    }

    pub fn config(&self) -> &DetectorConfig {
        &self.config
    }

    pub fn discriminator(&self) -> &Discriminator {
        &self.discriminator
    }

    pub fn state(&self) -> &DetectorState {
        &self.state
    }

    pub fn reconstruction(&self) -> &ReconstructionState {
        &self.recon
    }

    pub fn thresholds(&self) -> Thresholds {
        self.config.effective_thresholds(&self.discriminator)
    }
}

/// Summed L1 distance between recent and trained centroids over all labels.
pub fn centroid_displacement(recent: &[Vec<f64>], trained: &[Vec<f64>]) -> f64 {
    recent.iter().zip(trained).map(|(r, t)| l1(r, t)).sum()
}
