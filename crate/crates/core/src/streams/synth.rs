//! Seeded synthetic streams for the four drift shapes.
//!
//! Two profiles are available. `Mixture` is a Gaussian mixture whose last
//! cluster is displaced by the drift to the far side of cluster 0. `Fan`
//! emits 511-bin vibration-like spectra of a single machine state; the new
//! concept adds fault peaks and raises the broadband floor.
//!
//! Every sample consumes the same random draws whatever the drift kind, so
//! the pre-drift part of a stream is bit-identical across kinds for one seed.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use super::{Dataset, StreamMeta, StreamSample};
use crate::error::{Error, Result};

pub const FAN_BINS: usize = 511;

/// Fraction of the first-to-last cluster offset by which the mixture moves.
const CONCEPT_SHIFT: f64 = 0.6;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DriftKind {
    Sudden,
    Gradual,
    Incremental,
    Reoccurring,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DriftSchedule {
    pub kind: DriftKind,
    pub drift_at: usize,
    /// End of the ramp (gradual, incremental) or revert point (reoccurring).
    #[serde(default)]
    pub drift_end: Option<usize>,
}

impl DriftSchedule {
    pub fn sudden(drift_at: usize) -> Self {
        Self { kind: DriftKind::Sudden, drift_at, drift_end: None }
    }

    pub fn gradual(drift_at: usize, drift_end: usize) -> Self {
        Self { kind: DriftKind::Gradual, drift_at, drift_end: Some(drift_end) }
    }

    pub fn incremental(drift_at: usize, drift_end: usize) -> Self {
        Self { kind: DriftKind::Incremental, drift_at, drift_end: Some(drift_end) }
    }

    pub fn reoccurring(drift_at: usize, drift_end: usize) -> Self {
        Self { kind: DriftKind::Reoccurring, drift_at, drift_end: Some(drift_end) }
    }

    pub fn validate(&self) -> Result<()> {
        if self.drift_at == 0 {
            return Err(Error::InvalidParams("drift_at must be positive".into()));
        }
        match (self.kind, self.drift_end) {
            (_, Some(end)) if end <= self.drift_at => {
                Err(Error::InvalidParams(format!("drift_end ({end}) must exceed drift_at ({})", self.drift_at)))
            }
            (DriftKind::Sudden, _) | (_, Some(_)) => Ok(()),
            (kind, None) => Err(Error::InvalidParams(format!("{kind:?} drift needs drift_end"))),
        }
    }

    /// Probability (gradual) or interpolation weight (incremental) of the new
    /// concept at stream index `t`; 0 or 1 for sudden and reoccurring.
    pub fn new_concept_weight(&self, t: usize) -> f64 {
        let (a, e) = (self.drift_at, self.drift_end.unwrap_or(self.drift_at));
        match self.kind {
            DriftKind::Sudden => f64::from(u8::from(t >= a)),
            DriftKind::Reoccurring => f64::from(u8::from(t >= a && t < e)),
            DriftKind::Gradual | DriftKind::Incremental => {
                if t < a {
                    0.0
                } else if t >= e {
                    1.0
                } else {
                    (t - a) as f64 / (e - a) as f64
                }
            }
        }
    }

    pub fn drift_points(&self) -> Vec<usize> {
        match (self.kind, self.drift_end) {
            (DriftKind::Reoccurring, Some(end)) => vec![self.drift_at, end],
            _ => vec![self.drift_at],
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum Profile {
    #[default]
    Mixture,
    Fan,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SynthConfig {
    pub profile: Profile,
    /// Feature count; ignored by the fan profile (always 511).
    pub dim: usize,
    /// Cluster count; the fan profile always has one.
    pub classes: usize,
    pub n_train: usize,
    pub n_test: usize,
    /// Per-coordinate offset between cluster means.
    pub separation: f64,
    pub noise: f64,
}

impl Default for SynthConfig {
    fn default() -> Self {
        Self { profile: Profile::Mixture, dim: 8, classes: 2, n_train: 1000, n_test: 4000, separation: 0.3, noise: 0.05 }
    }
}

impl SynthConfig {
    pub fn fan() -> Self {
        Self { profile: Profile::Fan, dim: FAN_BINS, classes: 1, n_train: 200, n_test: 700, separation: 0.0, noise: 0.03 }
    }

    pub fn effective_dim(&self) -> usize {
        match self.profile {
            Profile::Mixture => self.dim,
            Profile::Fan => FAN_BINS,
        }
    }

    pub fn effective_classes(&self) -> usize {
        match self.profile {
            Profile::Mixture => self.classes,
            Profile::Fan => 1,
        }
    }

    fn validate(&self) -> Result<()> {
        if self.effective_dim() == 0 || self.effective_classes() == 0 || self.n_train == 0 || self.n_test == 0 {
            return Err(Error::InvalidParams("synthetic stream needs positive dim, classes and lengths".into()));
        }
        if !(self.noise >= 0.0 && self.noise.is_finite()) {
            return Err(Error::InvalidParams("noise must be a non-negative number".into()));
        }
        Ok(())
    }
}

/// Old and new per-class mean vectors.
struct Concepts {
    old: Vec<Vec<f64>>,
    new: Vec<Vec<f64>>,
}

fn mixture_concepts(cfg: &SynthConfig, rng: &mut ChaCha8Rng) -> Concepts {
    let (d, c) = (cfg.dim, cfg.classes);
    let center: Vec<f64> = (0..d).map(|_| rng.random_range(0.4..0.6)).collect();
    let signs: Vec<Vec<f64>> =
        (0..c).map(|_| (0..d).map(|_| if rng.random_bool(0.5) { 1.0 } else { -1.0 }).collect()).collect();
    let offset = |k: usize| -> Vec<f64> { center.iter().zip(&signs[k]).map(|(m, s)| m + cfg.separation * s).collect() };
    let old: Vec<Vec<f64>> = (0..c).map(|k| if k == 0 && c > 1 { center.clone() } else { offset(k) }).collect();
    // translate the whole concept past the midpoint between the first and
    // last cluster (or shift a lone cluster by twice the separation)
    let shift: Vec<f64> = if c > 1 {
        old[c - 1].iter().zip(&old[0]).map(|(a, b)| CONCEPT_SHIFT * (a - b)).collect()
    } else {
        signs[0].iter().map(|s| 2.0 * cfg.separation * s).collect()
    };
    let new = old.iter().map(|m| m.iter().zip(&shift).map(|(a, b)| a + b).collect()).collect();
    Concepts { old, new }
}

fn peak(f: f64, center: f64, width: f64) -> f64 {
    let z = (f - center) / width;
    (-0.5 * z * z).exp()
}

fn fan_concepts(kind: DriftKind, rng: &mut ChaCha8Rng) -> Concepts {
    let f0 = rng.random_range(30.0..40.0);
    let normal: Vec<f64> = (1..=FAN_BINS)
        .map(|bin| {
            let f = bin as f64;
            let harmonics: f64 = (1..=8).map(|k| 0.5 / k as f64 * peak(f, k as f64 * f0, 1.5)).sum();
            0.1 + 0.05 * (-f / 200.0).exp() + harmonics
        })
        .collect();
    let fault: Vec<f64> = (1..=FAN_BINS)
        .map(|bin| {
            let f = bin as f64;
            match kind {
                // unbalance from holes: strong 1x and 2x rotation components
                DriftKind::Sudden | DriftKind::Incremental => {
                    0.05 + 0.35 * peak(f, f0, 1.5) + 0.15 * peak(f, 2.0 * f0, 1.5)
                }
                // chipped blade: blade-pass components
                DriftKind::Gradual | DriftKind::Reoccurring => {
                    0.045 + 0.3 * peak(f, 7.0 * f0, 2.0) + 0.15 * peak(f, 14.0 * f0, 2.0)
                }
            }
        })
        .collect();
    let damaged = normal.iter().zip(&fault).map(|(a, b)| a + b).collect();
    Concepts { old: vec![normal], new: vec![damaged] }
}

/// Generates a training set from the old concept and a test stream that
/// follows `schedule`.
pub fn gen_drift_stream(schedule: &DriftSchedule, cfg: &SynthConfig, seed: u64) -> Result<Dataset> {
    schedule.validate()?;
    cfg.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let concepts = match cfg.profile {
        Profile::Mixture => mixture_concepts(cfg, &mut rng),
        Profile::Fan => fan_concepts(schedule.kind, &mut rng),
    };
    let (dim, classes) = (cfg.effective_dim(), cfg.effective_classes());
    let noise = Normal::new(0.0, cfg.noise).map_err(|e| Error::InvalidParams(e.to_string()))?;

    let mut draw = |weight: f64| -> (Vec<f64>, usize) {
        let class = rng.random_range(0..classes);
        let u: f64 = rng.random();
        let (old, new) = (&concepts.old[class], &concepts.new[class]);
        let x = match schedule.kind {
            DriftKind::Incremental => (0..dim)
                .map(|j| (1.0 - weight) * old[j] + weight * new[j] + noise.sample(&mut rng))
                .collect(),
            _ => {
                let mean = if u < weight { new } else { old };
                mean.iter().map(|m| m + noise.sample(&mut rng)).collect()
            }
        };
        (x, class)
    };

    let mut train = Vec::with_capacity(cfg.n_train);
    let mut train_labels = Vec::with_capacity(cfg.n_train);
    for _ in 0..cfg.n_train {
        let (x, c) = draw(0.0);
        train.push(x);
        train_labels.push(c);
    }
    let test = (0..cfg.n_test)
        .map(|index| {
            let (x, c) = draw(schedule.new_concept_weight(index));
            StreamSample { index, x, true_label: Some(c) }
        })
        .collect();

    let label_names = match cfg.profile {
        Profile::Mixture => (0..classes).map(|c| format!("c{c}")).collect(),
        Profile::Fan => vec!["normal".into()],
    };
    Ok(Dataset {
        train,
        train_labels: Some(train_labels),
        test,
        meta: StreamMeta { dim, num_classes: classes, label_names, drift_points: schedule.drift_points() },
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn schedule_validation() {
        assert!(DriftSchedule::sudden(0).validate().is_err());
        assert!(DriftSchedule::gradual(100, 50).validate().is_err());
        assert!(DriftSchedule { kind: DriftKind::Reoccurring, drift_at: 5, drift_end: None }.validate().is_err());
        assert!(DriftSchedule::sudden(120).validate().is_ok());
    }

    #[test]
    fn sudden_boundary() {
        let s = DriftSchedule::sudden(120);
        assert_eq!(s.new_concept_weight(119), 0.0);
        assert_eq!(s.new_concept_weight(120), 1.0);

        let ds = gen_drift_stream(&s, &SynthConfig { noise: 0.0, n_test: 200, ..SynthConfig::default() }, 3).unwrap();
        // without noise every sample of a class sits exactly on one of two means
        let moved: Vec<&StreamSample> = ds.test.iter().filter(|s| s.true_label == Some(1)).collect();
        let before = moved.iter().find(|s| s.index < 120).unwrap();
        let after = moved.iter().find(|s| s.index >= 120).unwrap();
        assert_ne!(before.x, after.x);
        assert!(moved.iter().filter(|s| s.index < 120).all(|s| s.x == before.x));
        assert!(moved.iter().filter(|s| s.index >= 120).all(|s| s.x == after.x));
    }

    #[test]
    fn fan_profile_shape() {
        let ds = gen_drift_stream(&DriftSchedule::sudden(120), &SynthConfig::fan(), 1).unwrap();
        assert_eq!(ds.meta.dim, 511);
        assert_eq!(ds.test.len(), 700);
        assert!(ds.test.iter().all(|s| s.x.len() == 511));
        assert_eq!(ds.meta.num_classes, 1);
    }

    #[test]
    fn reoccurring_reverts() {
        let s = DriftSchedule::reoccurring(120, 170);
        assert_eq!(s.new_concept_weight(119), 0.0);
        assert_eq!(s.new_concept_weight(169), 1.0);
        assert_eq!(s.new_concept_weight(170), 0.0);
        assert_eq!(s.drift_points(), vec![120, 170]);
    }

    #[test]
    fn gradual_mix_follows_linear_ramp() {
        // Monte-Carlo check of the new-concept fraction per decile of the ramp.
        let s = DriftSchedule::gradual(1, 10_001);
        let cfg = SynthConfig { classes: 1, dim: 1, noise: 0.0, n_train: 1, n_test: 10_001, ..SynthConfig::default() };
        let ds = gen_drift_stream(&s, &cfg, 11).unwrap();
        let new_value = {
            let c = gen_drift_stream(&DriftSchedule::sudden(1), &cfg, 11).unwrap();
            c.test[5000].x[0]
        };
        for decile in 0..10 {
            let lo = 1 + decile * 1000;
            let seg = &ds.test[lo..lo + 1000];
            let frac = seg.iter().filter(|s| s.x[0] == new_value).count() as f64 / 1000.0;
            let expected = (decile as f64 + 0.5) / 10.0;
            assert!((frac - expected).abs() <= 0.03, "decile {decile}: {frac} vs {expected}");
        }
    }

    #[test]
    fn incremental_interpolates_means() {
        let s = DriftSchedule::incremental(10, 20);
        assert_eq!(s.new_concept_weight(15), 0.5);
        let cfg = SynthConfig { classes: 1, dim: 2, noise: 0.0, n_test: 30, ..SynthConfig::default() };
        let ds = gen_drift_stream(&s, &cfg, 2).unwrap();
        let (a, b, mid) = (&ds.test[0].x, &ds.test[25].x, &ds.test[15].x);
        for j in 0..2 {
            assert!((mid[j] - 0.5 * (a[j] + b[j])).abs() < 1e-12);
        }
    }

    #[test]
    fn pre_drift_segments_match_across_kinds() {
        let cfg = SynthConfig { n_test: 300, ..SynthConfig::default() };
        let kinds = [
            DriftSchedule::sudden(150),
            DriftSchedule::gradual(150, 250),
            DriftSchedule::incremental(150, 250),
            DriftSchedule::reoccurring(150, 200),
        ];
        let streams: Vec<Dataset> = kinds.iter().map(|k| gen_drift_stream(k, &cfg, 8).unwrap()).collect();
        for ds in &streams[1..] {
            assert_eq!(ds.train, streams[0].train);
            assert_eq!(ds.test[..150], streams[0].test[..150]);
        }
    }

    #[test]
    fn generation_is_pure() {
        let s = DriftSchedule::gradual(100, 400);
        let cfg = SynthConfig::default();
        assert_eq!(gen_drift_stream(&s, &cfg, 5).unwrap(), gen_drift_stream(&s, &cfg, 5).unwrap());
        assert_ne!(gen_drift_stream(&s, &cfg, 5).unwrap(), gen_drift_stream(&s, &cfg, 6).unwrap());
    }
}
