use std::collections::VecDeque;
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::audit::audit_state_size;
use super::bench::{time_phases, PhaseTimings};
use super::config::{DatasetSpec, ExperimentConfig, Labeling, Method};
use crate::checkpoint::{self, encoded_len};
use crate::detector::{DriftMonitor, Mode};
use crate::discriminator::Discriminator;
use crate::error::{Error, Result};
use crate::streams::{gen_drift_stream, kmeans_label, load_csv, prepare_nslkdd, Dataset};

/// One line of the per-sample trace.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TraceRecord {
    pub index: usize,
    pub true_label: Option<usize>,
    pub predicted_label: usize,
    pub score: f64,
    pub dist: f64,
    pub mode: Mode,
    pub drift_detected: bool,
    pub phase: Option<String>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct DetectionDelay {
    pub drift_index: usize,
    pub detected_index: usize,
    pub delay: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentReport {
    pub method: Method,
    pub seed: u64,
    pub samples: usize,
    /// Cumulative accuracy over every labelled test sample.
    pub accuracy_overall: f64,
    /// `(index, accuracy over the trailing smoothing window)`.
    pub accuracy_timeline: Vec<(usize, f64)>,
    pub drift_points: Vec<usize>,
    pub detections: Vec<usize>,
    pub detection_delays: Vec<DetectionDelay>,
    /// Drift points with no detection attributed to them.
    pub missed_drifts: Vec<usize>,
    pub false_alarms: usize,
    pub reconstructions_completed: Vec<usize>,
    pub reconstruction_failures: Vec<(usize, String)>,
    /// `(index, serialized state bytes)`.
    pub state_bytes_timeline: Vec<(usize, u64)>,
    /// Wall-clock only; never part of a determinism comparison.
    pub phase_timings: Option<PhaseTimings>,
}

impl ExperimentReport {
    /// Copy with wall-clock measurements removed.
    pub fn without_timings(&self) -> Self {
        Self { phase_timings: None, ..self.clone() }
    }

    /// Accuracy over test indices `[from, to)`, recomputed from a trace.
    pub fn window_accuracy(trace: &[TraceRecord], from: usize, to: usize) -> Option<f64> {
        let (hits, total) = trace
            .iter()
            .filter(|r| r.index >= from && r.index < to)
            .filter_map(|r| r.true_label.map(|t| t == r.predicted_label))
            .fold((0usize, 0usize), |(h, n), ok| (h + usize::from(ok), n + 1));
        (total > 0).then(|| hits as f64 / total as f64)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentOutput {
    pub report: ExperimentReport,
    pub trace: Vec<TraceRecord>,
}

pub fn load_dataset(cfg: &ExperimentConfig) -> Result<Dataset> {
    match &cfg.dataset {
        DatasetSpec::Synthetic { schedule, stream, seed } => gen_drift_stream(schedule, stream, seed.unwrap_or(cfg.seed)),
        DatasetSpec::Csv { path, schema } => load_csv(path, schema),
        DatasetSpec::NslKdd(c) => prepare_nslkdd(c),
    }
}

/// Initial training labels and discriminator for `ds`, or the checkpoint named
/// in the config.
pub fn fit_discriminator(cfg: &ExperimentConfig, ds: &Dataset) -> Result<Discriminator> {
    if let Some(path) = &cfg.model {
        let d: Discriminator = checkpoint::load(path)?;
        if d.dim() != ds.meta.dim {
            return Err(Error::DimensionMismatch { expected: ds.meta.dim, got: d.dim() });
        }
        return Ok(d);
    }
    let classes = cfg.training.num_classes.unwrap_or(ds.meta.num_classes);
    let labels = match cfg.training.labeling {
        Labeling::Truth => ds
            .train_labels
            .clone()
            .ok_or_else(|| Error::Config("training rows carry no labels; use labeling = \"kmeans\"".into()))?,
        Labeling::Kmeans => kmeans_label(&ds.train, classes, cfg.seed, cfg.training.kmeans_iters)?,
    };
    Discriminator::fit_initial(
        &ds.train,
        &labels,
        classes,
        &cfg.oselm_params(ds.meta.dim),
        cfg.training.epochs,
        cfg.training.k_err,
    )
}

enum Runner {
    Proposed(Box<DriftMonitor>),
    Static(Discriminator),
    Forgetting(Discriminator),
}

impl Runner {
    fn state_bytes(&self) -> u64 {
        match self {
            Runner::Proposed(m) => audit_state_size(m.state(), m.discriminator(), m.reconstruction()).total(),
            Runner::Static(d) | Runner::Forgetting(d) => encoded_len(d),
        }
    }
}

/// Trains, calibrates and streams the whole test split through the configured
/// method.
pub fn run_experiment(cfg: &ExperimentConfig) -> Result<ExperimentOutput> {
    cfg.validate()?;
    let ds = load_dataset(cfg)?;
    let d = fit_discriminator(cfg, &ds)?;
    run_on_dataset(cfg, &ds, d)
}

pub(crate) fn run_on_dataset(cfg: &ExperimentConfig, ds: &Dataset, d: Discriminator) -> Result<ExperimentOutput> {
    let bench_stream: Vec<Vec<f64>> = ds.test.iter().take(200).map(|s| s.x.clone()).collect();
    let timings = match cfg.method {
        Method::Proposed if !bench_stream.is_empty() => {
            Some(time_phases(&d, &bench_stream, cfg.reconstruction, 100)?)
        }
        _ => None,
    };

    let mut runner = match cfg.method {
        Method::Proposed => Runner::Proposed(Box::new(DriftMonitor::new(
            d,
            cfg.detector,
            cfg.reconstruction,
            cfg.training.k_err,
        )?)),
        Method::BaselineNoDetector => Runner::Static(d),
        Method::OnladForgetting => {
            let mut d = d;
            let rate = cfg.oselm.forgetting_rate.unwrap_or(1.0);
            for m in d.instances_mut() {
                m.set_forgetting_rate(rate)?;
            }
            Runner::Forgetting(d)
        }
    };

    let mut trace = Vec::with_capacity(ds.test.len());
    let mut detections = Vec::new();
    let mut completed = Vec::new();
    let mut failures = Vec::new();
    let mut state_bytes = Vec::new();
    let mut timeline = Vec::new();
    let mut recent: VecDeque<bool> = VecDeque::with_capacity(cfg.smoothing_window);
    let mut recent_hits = 0usize;
    let (mut hits, mut labelled) = (0usize, 0usize);

    for (i, sample) in ds.test.iter().enumerate() {
        let record = match &mut runner {
            Runner::Proposed(m) => {
                let out = m.step(&sample.x)?;
                let pred = out.prediction.ok_or(Error::Empty("prediction"))?;
                if out.drift_detected {
                    detections.push(sample.index);
                }
                if out.finalized.is_some() {
                    completed.push(sample.index);
                }
                if let Some(msg) = out.reconstruction_error {
                    failures.push((sample.index, msg));
                }
                TraceRecord {
                    index: sample.index,
                    true_label: sample.true_label,
                    predicted_label: pred.label,
                    score: pred.score,
                    dist: out.dist,
                    mode: out.mode,
                    drift_detected: out.drift_detected,
                    phase: out.phase.map(|p| p.as_str().to_string()),
                }
            }
            Runner::Static(d) => {
                let pred = d.predict(&sample.x)?;
                plain_record(sample.index, sample.true_label, pred.label, pred.score)
            }
            Runner::Forgetting(d) => {
                let pred = d.predict(&sample.x)?;
                d.instances_mut()[pred.label].seq_train(&sample.x)?;
                plain_record(sample.index, sample.true_label, pred.label, pred.score)
            }
        };

        if let Some(t) = record.true_label {
            let ok = t == record.predicted_label;
            labelled += 1;
            hits += usize::from(ok);
            if recent.len() == cfg.smoothing_window {
                recent_hits -= usize::from(recent.pop_front().unwrap_or(false));
            }
            recent.push_back(ok);
            recent_hits += usize::from(ok);
            if i % cfg.timeline_stride == 0 {
                timeline.push((record.index, recent_hits as f64 / recent.len() as f64));
            }
        }
        if (i + 1) % cfg.audit_stride == 0 || i + 1 == ds.test.len() {
            state_bytes.push((i + 1, runner.state_bytes()));
        }
        trace.push(record);
    }

    let (delays, missed, false_alarms) = attribute_detections(&ds.meta.drift_points, &detections);
    let report = ExperimentReport {
        method: cfg.method,
        seed: cfg.seed,
        samples: trace.len(),
        accuracy_overall: if labelled > 0 { hits as f64 / labelled as f64 } else { 0.0 },
        accuracy_timeline: timeline,
        drift_points: ds.meta.drift_points.clone(),
        detections,
        detection_delays: delays,
        missed_drifts: missed,
        false_alarms,
        reconstructions_completed: completed,
        reconstruction_failures: failures,
        state_bytes_timeline: state_bytes,
        phase_timings: timings,
    };
    Ok(ExperimentOutput { report, trace })
}

fn plain_record(index: usize, true_label: Option<usize>, label: usize, score: f64) -> TraceRecord {
    TraceRecord {
        index,
        true_label,
        predicted_label: label,
        score,
        dist: 0.0,
        mode: Mode::Normal,
        drift_detected: false,
        phase: None,
    }
}

/// Each detection goes to the latest drift point at or before it that has not
/// been claimed yet; anything else is a false alarm.
pub(crate) fn attribute_detections(
    drift_points: &[usize],
    detections: &[usize],
) -> (Vec<DetectionDelay>, Vec<usize>, usize) {
    let mut points = drift_points.to_vec();
    points.sort_unstable();
    let mut claimed = vec![false; points.len()];
    let mut delays = Vec::new();
    let mut false_alarms = 0;
    for &t in detections {
        let latest = points.iter().rposition(|&p| p <= t);
        match latest {
            Some(j) if !claimed[j] => {
                claimed[j] = true;
                delays.push(DetectionDelay { drift_index: points[j], detected_index: t, delay: t - points[j] });
            }
            _ => false_alarms += 1,
        }
    }
    let missed = points.iter().zip(&claimed).filter(|(_, &c)| !c).map(|(&p, _)| p).collect();
    (delays, missed, false_alarms)
}

pub fn write_trace_csv(trace: &[TraceRecord], path: &Path) -> Result<()> {
    let mut w = csv::Writer::from_path(path)?;
    w.write_record(["index", "true_label", "predicted_label", "score", "dist", "mode", "drift_detected", "phase"])?;
    for r in trace {
        w.write_record([
            r.index.to_string(),
            r.true_label.map(|l| l.to_string()).unwrap_or_default(),
            r.predicted_label.to_string(),
            r.score.to_string(),
            r.dist.to_string(),
            r.mode.as_str().to_string(),
            r.drift_detected.to_string(),
            r.phase.clone().unwrap_or_default(),
        ])?;
    }
    w.flush()?;
    Ok(())
}
