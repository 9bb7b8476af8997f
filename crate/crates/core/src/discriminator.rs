//! Multi-instance discriminative model: one autoencoder per label.
//!
//! The label of a sample is the index of the instance that reconstructs it
//! best. Each label also carries a trained centroid, which the detector uses
//! as its reference point, and the two thresholds the detector compares
//! against.

use serde::{Deserialize, Serialize};

use crate::error::{check_dim, Error, Result};
use crate::oselm::{OselmModel, OselmParams};
use crate::stats::{l1, mean_plus_k_std};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Prediction {
    pub label: usize,
    pub score: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Thresholds {
    pub theta_error: f64,
    pub theta_drift: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Discriminator {
    instances: Vec<OselmModel>,
    /// C rows of length D.
    train_cor: Vec<Vec<f64>>,
    train_num: Vec<u64>,
    theta_error: f64,
    theta_drift: f64,
}

/// Seed used for the instance of `label` given the base seed.
pub fn instance_seed(base: u64, label: usize) -> u64 {
    base.wrapping_add((label as u64).wrapping_mul(0x9E37_79B9_7F4A_7C15))
}

impl Discriminator {
    /// Assembles a discriminator from already-built parts.
    pub fn from_parts(
        instances: Vec<OselmModel>,
        train_cor: Vec<Vec<f64>>,
        train_num: Vec<u64>,
        thresholds: Thresholds,
    ) -> Result<Self> {
        let classes = instances.len();
        if classes == 0 {
            return Err(Error::Empty("discriminator needs at least one instance"));
        }
        check_dim(classes, train_cor.len())?;
        check_dim(classes, train_num.len())?;
        let (d, h) = (instances[0].input_dim(), instances[0].hidden_dim());
        for m in &instances {
            if m.input_dim() != d || m.hidden_dim() != h {
                return Err(Error::InvalidParams("instances must share (D, H)".into()));
            }
        }
        for row in &train_cor {
            check_dim(d, row.len())?;
        }
        let mut disc = Self { instances, train_cor, train_num, theta_error: 0.0, theta_drift: 0.0 };
        disc.set_thresholds(thresholds)?;
        Ok(disc)
    }

    /// Trains one instance per label on its samples for `epochs` passes, sets
    /// the trained centroids and calibrates both thresholds on the same data.
    pub fn fit_initial(
        samples: &[Vec<f64>],
        labels: &[usize],
        num_classes: usize,
        params: &OselmParams,
        epochs: usize,
        k_err: f64,
    ) -> Result<Self> {
        if samples.is_empty() {
            return Err(Error::Empty("initial training set"));
        }
        check_dim(samples.len(), labels.len())?;
        if num_classes == 0 {
            return Err(Error::InvalidParams("num_classes must be positive".into()));
        }
        if epochs == 0 {
            return Err(Error::InvalidParams("epochs must be positive".into()));
        }
        let d = params.input_dim;
        let mut sums = vec![vec![0.0; d]; num_classes];
        let mut counts = vec![0u64; num_classes];
        for (x, &label) in samples.iter().zip(labels) {
            check_dim(d, x.len())?;
            if label >= num_classes {
                return Err(Error::LabelOutOfRange { label, classes: num_classes });
            }
            counts[label] += 1;
            sums[label].iter_mut().zip(x).for_each(|(s, v)| *s += v);
        }
        if let Some(empty) = counts.iter().position(|&n| n == 0) {
            return Err(Error::EmptyClass(empty));
        }
        let train_cor: Vec<Vec<f64>> = sums
            .into_iter()
            .zip(&counts)
            .map(|(s, &n)| s.into_iter().map(|v| v / n as f64).collect())
            .collect();

        let mut instances = (0..num_classes)
            .map(|c| {
                let p = OselmParams {
                    seed: instance_seed(params.seed, c),
                    forgetting_rate: 1.0,
                    ..params.clone()
                };
                OselmModel::new(p)
            })
            .collect::<Result<Vec<_>>>()?;
        for _ in 0..epochs {
            for (x, &label) in samples.iter().zip(labels) {
                instances[label].seq_train(x)?;
            }
        }

        let mut disc = Self {
            instances,
            train_cor,
            train_num: counts,
            theta_error: 0.0,
            theta_drift: 0.0,
        };
        let th = disc.calibrate(samples, k_err)?;
        disc.set_thresholds(th)?;
        Ok(disc)
    }

    pub fn num_classes(&self) -> usize {
        self.instances.len()
    }

    pub fn dim(&self) -> usize {
        self.instances[0].input_dim()
    }

    pub fn instances(&self) -> &[OselmModel] {
        &self.instances
    }

    pub fn instances_mut(&mut self) -> &mut [OselmModel] {
        &mut self.instances
    }

    pub fn train_cor(&self) -> &[Vec<f64>] {
        &self.train_cor
    }

    pub fn train_num(&self) -> &[u64] {
        &self.train_num
    }

    pub fn thresholds(&self) -> Thresholds {
        Thresholds { theta_error: self.theta_error, theta_drift: self.theta_drift }
    }

    pub fn set_thresholds(&mut self, th: Thresholds) -> Result<()> {
        if th.theta_error.is_nan() || th.theta_error < 0.0 || th.theta_drift.is_nan() || th.theta_drift < 0.0 {
            return Err(Error::InvalidParams(format!("thresholds must be non-negative, got {th:?}")));
        }
        self.theta_error = th.theta_error;
        self.theta_drift = th.theta_drift;
        Ok(())
    }

    /// Swaps in a rebuilt model. Shapes must match the current one.
    pub fn replace(&mut self, instances: Vec<OselmModel>, train_cor: Vec<Vec<f64>>, train_num: Vec<u64>, th: Thresholds) -> Result<()> {
        let next = Self::from_parts(instances, train_cor, train_num, th)?;
        check_dim(self.num_classes(), next.num_classes())?;
        check_dim(self.dim(), next.dim())?;
        *self = next;
        Ok(())
    }

    /// Lowest anomaly score over all instances; ties go to the lowest index.
    pub fn predict(&self, x: &[f64]) -> Result<Prediction> {
        predict_with(&self.instances, x)
    }

    /// `theta_drift` from the L1 distance of each sample to the trained
    /// centroid of its predicted label (mean plus one population std);
    /// `theta_error` from the winning anomaly scores (mean plus `k_err` std).
    pub fn calibrate(&self, samples: &[Vec<f64>], k_err: f64) -> Result<Thresholds> {
        if samples.is_empty() {
            return Err(Error::Empty("calibration samples"));
        }
        let mut dist = Vec::with_capacity(samples.len());
        let mut err = Vec::with_capacity(samples.len());
        for x in samples {
            let p = self.predict(x)?;
            dist.push(l1(x, &self.train_cor[p.label]));
            err.push(p.score);
        }
        Ok(Thresholds {
            theta_error: mean_plus_k_std(&err, k_err).unwrap_or(0.0).max(0.0),
            theta_drift: drift_threshold(&dist).unwrap_or(0.0),
        })
    }
}

/// Mean plus population standard deviation of a distance array.
pub fn drift_threshold(dist: &[f64]) -> Option<f64> {
    mean_plus_k_std(dist, 1.0)
}

/// Argmin prediction over an arbitrary set of instances.
pub fn predict_with(instances: &[OselmModel], x: &[f64]) -> Result<Prediction> {
    let scores = instances.iter().map(|m| m.anomaly_score(x)).collect::<Result<Vec<_>>>()?;
    let (label, score) = argmin(&scores).ok_or(Error::Empty("no instances"))?;
    Ok(Prediction { label, score })
}

/// Index and value of the smallest entry, first index on ties.
pub fn argmin(values: &[f64]) -> Option<(usize, f64)> {
    let mut it = values.iter().copied().enumerate();
    let first = it.next()?;
    Some(it.fold(first, |best, (i, v)| if v < best.1 { (i, v) } else { best }))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::oselm::Activation;
    use nalgebra::{DMatrix, DVector};
    use proptest::prelude::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn blobs(n_per: usize, centers: &[Vec<f64>], spread: f64, seed: u64) -> (Vec<Vec<f64>>, Vec<usize>) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut xs = Vec::new();
        let mut ys = Vec::new();
        for i in 0..n_per {
            for (c, center) in centers.iter().enumerate() {
                xs.push(center.iter().map(|v| v + rng.random_range(-spread..spread)).collect());
                ys.push(c);
                let _ = i;
            }
        }
        (xs, ys)
    }

    #[test]
    fn centroids_of_constant_clusters() {
        let xs = vec![vec![0.0], vec![0.0], vec![10.0], vec![10.0]];
        let ys = vec![0, 0, 1, 1];
        let d = Discriminator::fit_initial(&xs, &ys, 2, &OselmParams::new(1, 2), 1, 1.0).unwrap();
        assert_eq!(d.train_cor(), &[vec![0.0], vec![10.0]]);
        assert_eq!(d.train_num(), &[2, 2]);
    }

    #[test]
    fn empty_class_is_named() {
        let xs = vec![vec![0.0], vec![1.0]];
        let err = Discriminator::fit_initial(&xs, &[0, 0], 3, &OselmParams::new(1, 2), 1, 1.0).unwrap_err();
        assert!(matches!(err, Error::EmptyClass(1)));
    }

    #[test]
    fn dimension_and_label_errors() {
        let xs = vec![vec![0.0, 1.0], vec![1.0]];
        assert!(Discriminator::fit_initial(&xs, &[0, 0], 1, &OselmParams::new(2, 2), 1, 1.0).is_err());
        let xs = vec![vec![0.0], vec![1.0]];
        let err = Discriminator::fit_initial(&xs, &[0, 4], 2, &OselmParams::new(1, 2), 1, 1.0).unwrap_err();
        assert!(matches!(err, Error::LabelOutOfRange { label: 4, classes: 2 }));
    }

    #[test]
    fn centroids_match_direct_means() {
        let centers = vec![vec![0.2, 0.3, 0.9], vec![0.8, 0.1, 0.4], vec![0.5, 0.5, 0.5]];
        let (xs, ys) = blobs(40, &centers, 0.1, 3);
        let d = Discriminator::fit_initial(&xs, &ys, 3, &OselmParams::new(3, 4), 2, 1.0).unwrap();
        for c in 0..3 {
            let members: Vec<&Vec<f64>> = xs.iter().zip(&ys).filter(|(_, &y)| y == c).map(|(x, _)| x).collect();
            for j in 0..3 {
                let mean = members.iter().map(|x| x[j]).sum::<f64>() / members.len() as f64;
                assert!((d.train_cor()[c][j] - mean).abs() < 1e-12);
            }
            assert_eq!(d.train_num()[c], members.len() as u64);
        }
    }

    #[test]
    fn single_class_always_label_zero() {
        let (xs, ys) = blobs(30, &[vec![0.5, 0.5]], 0.2, 1);
        let d = Discriminator::fit_initial(&xs, &ys, 1, &OselmParams::new(2, 3), 1, 1.0).unwrap();
        for x in &xs {
            let p = d.predict(x).unwrap();
            assert_eq!(p.label, 0);
            assert_eq!(p.score, d.instances()[0].anomaly_score(x).unwrap());
        }
    }

    #[test]
    fn exact_reconstructor_wins() {
        let params = OselmParams { activation: Activation::Identity, ..OselmParams::new(2, 2) };
        let mut a = OselmModel::new(params.clone()).unwrap();
        let mut b = OselmModel::new(params).unwrap();
        a.set_input_weights(DMatrix::identity(2, 2), DVector::zeros(2)).unwrap();
        b.set_input_weights(DMatrix::identity(2, 2), DVector::zeros(2)).unwrap();
        b.set_output_weights(DMatrix::identity(2, 2)).unwrap();
        let th = Thresholds { theta_error: 1.0, theta_drift: 1.0 };
        let d = Discriminator::from_parts(vec![a, b], vec![vec![0.0; 2]; 2], vec![1, 1], th).unwrap();
        let p = d.predict(&[0.3, 0.6]).unwrap();
        assert_eq!(p, Prediction { label: 1, score: 0.0 });
    }

    #[test]
    fn ties_break_to_lowest_index() {
        let m = OselmModel::new(OselmParams::new(2, 2)).unwrap();
        let th = Thresholds { theta_error: 0.0, theta_drift: 0.0 };
        let d = Discriminator::from_parts(vec![m.clone(), m.clone(), m], vec![vec![0.0; 2]; 3], vec![1; 3], th).unwrap();
        assert_eq!(d.predict(&[0.4, 0.1]).unwrap().label, 0);
    }

    #[test]
    fn predict_matches_exhaustive_scan() {
        let centers = vec![vec![0.1; 4], vec![0.5; 4], vec![0.9; 4]];
        let (xs, ys) = blobs(30, &centers, 0.15, 8);
        let d = Discriminator::fit_initial(&xs, &ys, 3, &OselmParams::new(4, 3).with_seed(4), 1, 1.0).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(77);
        for _ in 0..100 {
            let x: Vec<f64> = (0..4).map(|_| rng.random_range(0.0..1.0)).collect();
            let scores: Vec<f64> = d.instances().iter().map(|m| m.anomaly_score(&x).unwrap()).collect();
            let mut best = 0;
            for i in 1..scores.len() {
                if scores[i] < scores[best] {
                    best = i;
                }
            }
            let p = d.predict(&x).unwrap();
            assert_eq!(p.label, best);
            assert_eq!(p.score, scores[best]);
        }
    }

    #[test]
    fn drift_threshold_uses_population_std() {
        assert_eq!(drift_threshold(&[5.0; 9]), Some(5.0));
        assert_eq!(drift_threshold(&[0.0, 2.0]), Some(2.0));
        assert_eq!(drift_threshold(&[]), None);
    }

    #[test]
    fn calibrate_matches_independent_pass() {
        let centers = vec![vec![0.2, 0.2], vec![0.8, 0.7]];
        let (xs, ys) = blobs(50, &centers, 0.1, 6);
        let d = Discriminator::fit_initial(&xs, &ys, 2, &OselmParams::new(2, 3), 3, 1.0).unwrap();
        let th = d.calibrate(&xs, 1.0).unwrap();

        let mut dist = Vec::new();
        for x in &xs {
            let p = d.predict(x).unwrap();
            let c = &d.train_cor()[p.label];
            dist.push((x[0] - c[0]).abs() + (x[1] - c[1]).abs());
        }
        let n = dist.len() as f64;
        let mu = dist.iter().sum::<f64>() / n;
        let sd = (dist.iter().map(|v| (v - mu).powi(2)).sum::<f64>() / n).sqrt();
        assert!((th.theta_drift - (mu + sd)).abs() <= 1e-12);
        assert_eq!(d.thresholds(), th);
        assert!(d.calibrate(&[], 1.0).is_err());
    }

    #[test]
    fn permuted_fit_gives_same_centroids_and_weights() {
        let centers = vec![vec![0.2, 0.8, 0.1], vec![0.7, 0.3, 0.9]];
        let (xs, ys) = blobs(60, &centers, 0.1, 10);
        let params = OselmParams::new(3, 5).with_seed(9);
        let a = Discriminator::fit_initial(&xs, &ys, 2, &params, 1, 1.0).unwrap();
        let mut idx: Vec<usize> = (0..xs.len()).rev().collect();
        idx.rotate_left(17);
        let xs2: Vec<Vec<f64>> = idx.iter().map(|&i| xs[i].clone()).collect();
        let ys2: Vec<usize> = idx.iter().map(|&i| ys[i]).collect();
        let b = Discriminator::fit_initial(&xs2, &ys2, 2, &params, 1, 1.0).unwrap();
        for c in 0..2 {
            for j in 0..3 {
                assert!((a.train_cor()[c][j] - b.train_cor()[c][j]).abs() < 1e-12);
            }
            let (ba, bb) = (a.instances()[c].beta(), b.instances()[c].beta());
            assert!((ba - bb).norm() / ba.norm() <= 1e-6);
        }
    }

    proptest! {
        #[test]
        fn argmin_invariant_under_uniform_scaling(
            scores in proptest::collection::vec(0.0f64..10.0, 1..6),
            scale in 0.01f64..100.0,
        ) {
            let scaled: Vec<f64> = scores.iter().map(|s| s * scale).collect();
            prop_assert_eq!(argmin(&scores).map(|b| b.0), argmin(&scaled).map(|b| b.0));
        }
    }
}
