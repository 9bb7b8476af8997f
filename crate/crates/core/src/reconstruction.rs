//! Unsupervised, purely sequential rebuild of the discriminative model after a
//! detected drift.
//!
//! Samples are consumed in four consecutive phases:
//!
//! 1. `[0, n_search)`: coordinate search. The first C samples seed the C
//!    coordinates; afterwards a sample replaces whichever coordinate maximizes
//!    the all-pairs L1 spread, if any replacement increases it.
//! 2. `[n_search, n_update)`: sequential k-means refinement of the coordinates.
//! 3. `[n_update, n / 2)`: fresh instances trained on nearest-coordinate labels.
//! 4. `[n / 2, n)`: fresh instances trained on their own predicted labels.
//!
//! After the last sample the fresh instances, coordinates and recalibrated
//! thresholds replace those of the discriminator.

use serde::{Deserialize, Serialize};

use crate::discriminator::{argmin, instance_seed, predict_with, Discriminator, Thresholds};
use crate::error::{check_dim, Error, Result};
use crate::oselm::{OselmModel, OselmParams};
use crate::stats::{l1, RunningStats};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(default)]
pub struct ReconstructionConfig {
    pub n_search: u64,
    pub n_update: u64,
    pub n: u64,
}

impl Default for ReconstructionConfig {
    fn default() -> Self {
        Self { n_search: 50, n_update: 150, n: 600 }
    }
}

impl ReconstructionConfig {
    pub fn validate(&self) -> Result<()> {
        let ok = self.n_search > 0
            && self.n_search <= self.n_update
            && self.n_update <= self.n / 2
            && self.n / 2 <= self.n;
        if !ok {
            return Err(Error::InvalidParams(format!(
                "reconstruction requires 0 < n_search <= n_update <= n/2 (got {}, {}, {})",
                self.n_search, self.n_update, self.n
            )));
        }
        Ok(())
    }

    pub fn validate_for(&self, num_classes: usize) -> Result<()> {
        self.validate()?;
        if (self.n_search as usize) < num_classes {
            return Err(Error::InvalidParams(format!(
                "n_search ({}) must be at least the number of classes ({num_classes})",
                self.n_search
            )));
        }
        Ok(())
    }

    pub fn phase_of(&self, count: u64) -> Phase {
        if count < self.n_search {
            Phase::CoordinateSearch
        } else if count < self.n_update {
            Phase::CoordinateUpdate
        } else if count < self.n / 2 {
            Phase::RetrainByCentroid
        } else {
            Phase::RetrainByModel
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Phase {
    CoordinateSearch,
    CoordinateUpdate,
    RetrainByCentroid,
    RetrainByModel,
}

impl Phase {
    pub fn as_str(self) -> &'static str {
        match self {
            Phase::CoordinateSearch => "coordinate_search",
            Phase::CoordinateUpdate => "coordinate_update",
            Phase::RetrainByCentroid => "retrain_by_centroid",
            Phase::RetrainByModel => "retrain_by_model",
        }
    }
}

/// Result of feeding one sample to an active reconstruction.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ReconStep {
    pub phase: Phase,
    /// Workspace cluster index assigned to the sample.
    pub cluster: usize,
    /// Anomaly score of the fresh instance for `cluster`, before training.
    pub score: f64,
    pub still_running: bool,
}

/// What `finalize` installed.
#[derive(Debug, Clone, PartialEq)]
pub struct Finalized {
    /// `mapping[cluster] = label` used to reorder the rebuilt instances.
    pub mapping: Vec<usize>,
    pub thresholds: Thresholds,
}

/// Reconstruction workspace. Allocated once per discriminator shape so that
/// its footprint never changes between idle and active periods.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReconstructionState {
    config: ReconstructionConfig,
    active: bool,
    count: u64,
    cor: Vec<Vec<f64>>,
    num: Vec<u64>,
    fresh_models: Vec<OselmModel>,
    dist_log: RunningStats,
    err_log: RunningStats,
    k_err: f64,
    /// Number of reconstructions started so far; mixes into fresh seeds.
    generation: u64,
}

impl ReconstructionState {
    /// Idle workspace shaped after `d`.
    pub fn new(d: &Discriminator, config: ReconstructionConfig, k_err: f64) -> Result<Self> {
        config.validate_for(d.num_classes())?;
        let fresh_models = d.instances().to_vec();
        Ok(Self {
            config,
            active: false,
            count: 0,
            cor: d.train_cor().to_vec(),
            num: vec![0; d.num_classes()],
            fresh_models,
            dist_log: RunningStats::new(),
            err_log: RunningStats::new(),
            k_err,
            generation: 0,
        })
    }

    /// Starts a rebuild: empties the workspace and reinitializes C fresh
    /// instances with seeds that differ from every previous generation.
    pub fn begin(&mut self, d: &Discriminator) -> Result<()> {
        check_dim(self.cor.len(), d.num_classes())?;
        self.generation += 1;
        let base: &OselmParams = d.instances()[0].params();
        for (c, slot) in self.fresh_models.iter_mut().enumerate() {
            let params = OselmParams {
                seed: instance_seed(base.seed ^ self.generation.wrapping_mul(0xD1B5_4A32_D192_ED03), c),
                forgetting_rate: 1.0,
                ..base.clone()
            };
            *slot = OselmModel::new(params)?;
        }
        for (row, trained) in self.cor.iter_mut().zip(d.train_cor()) {
            row.copy_from_slice(trained);
        }
        self.num.iter_mut().for_each(|n| *n = 0);
        self.dist_log.clear();
        self.err_log.clear();
        self.count = 0;
        self.active = true;
        Ok(())
    }

    pub fn is_active(&self) -> bool {
        self.active
    }

    pub fn config(&self) -> &ReconstructionConfig {
        &self.config
    }

    pub fn count(&self) -> u64 {
        self.count
    }

    pub fn generation(&self) -> u64 {
        self.generation
    }

    pub fn coordinates(&self) -> &[Vec<f64>] {
        &self.cor
    }

    pub fn counts(&self) -> &[u64] {
        &self.num
    }

    pub fn fresh_models(&self) -> &[OselmModel] {
        &self.fresh_models
    }

    pub fn dist_log(&self) -> &RunningStats {
        &self.dist_log
    }

    pub fn err_log(&self) -> &RunningStats {
        &self.err_log
    }

    /// Replaces at most one coordinate with `x`, choosing the substitution
    /// that maximizes the all-pairs L1 spread. Returns the replaced index, or
    /// `None` when no substitution strictly increases the spread.
    pub fn init_coord(&mut self, x: &[f64]) -> Option<usize> {
        let mut best = pairwise_spread(&self.cor);
        let mut label = None;
        for c in 0..self.cor.len() {
            let spread = spread_with_substitution(&self.cor, c, x);
            if best < spread {
                best = spread;
                label = Some(c);
            }
        }
        if let Some(c) = label {
            self.cor[c].copy_from_slice(x);
        }
        label
    }

    /// Sequential k-means step on the nearest coordinate. Returns its index.
    pub fn update_coord(&mut self, x: &[f64]) -> usize {
        let label = nearest(&self.cor, x);
        let n = self.num[label] as f64;
        for (c, v) in self.cor[label].iter_mut().zip(x) {
            *c = (*c * n + v) / (n + 1.0);
        }
        self.num[label] += 1;
        label
    }

    /// Cluster index the workspace would assign to `x` right now.
    pub fn assign(&self, x: &[f64]) -> Result<usize> {
        match self.config.phase_of(self.count) {
            Phase::RetrainByModel => Ok(predict_with(&self.fresh_models, x)?.label),
            _ => Ok(nearest(&self.cor, x)),
        }
    }

    /// Feeds one post-drift sample. On the last sample the rebuilt model is
    /// installed into `d` and `still_running` is false. Any error aborts the
    /// rebuild and leaves `d` untouched.
    pub fn reconstruct_step(&mut self, d: &mut Discriminator, x: &[f64]) -> Result<(ReconStep, Option<Finalized>)> {
        if !self.active {
            return Err(Error::ReconstructionFailed("no reconstruction in progress".into()));
        }
        check_dim(d.dim(), x.len())?;
        match self.step_inner(d, x) {
            Ok(out) => Ok(out),
            Err(e) => {
                self.abort();
                Err(e)
            }
        }
    }

    fn step_inner(&mut self, d: &mut Discriminator, x: &[f64]) -> Result<(ReconStep, Option<Finalized>)> {
        let k = self.count;
        self.count += 1;
        if k == self.config.n_search {
            // every seed is a real sample
            self.num.iter_mut().for_each(|n| *n = 1);
        }
        let phase = self.config.phase_of(k);
        let classes = self.cor.len() as u64;
        let (cluster, score) = match phase {
            Phase::CoordinateSearch => {
                let cluster = if k < classes {
                    self.cor[k as usize].copy_from_slice(x);
                    k as usize
                } else {
                    self.init_coord(x).unwrap_or_else(|| nearest(&self.cor, x))
                };
                (cluster, self.fresh_models[cluster].anomaly_score(x)?)
            }
            Phase::CoordinateUpdate => {
                let cluster = self.update_coord(x);
                (cluster, self.fresh_models[cluster].anomaly_score(x)?)
            }
            Phase::RetrainByCentroid => {
                let cluster = nearest(&self.cor, x);
                let score = self.fresh_models[cluster].anomaly_score(x)?;
                self.log_and_train(cluster, x)?;
                (cluster, score)
            }
            Phase::RetrainByModel => {
                let p = predict_with(&self.fresh_models, x)?;
                self.log_and_train(p.label, x)?;
                (p.label, p.score)
            }
        };
        let still_running = self.count < self.config.n;
        let finalized = if still_running { None } else { Some(self.finalize(d)?) };
        Ok((ReconStep { phase, cluster, score, still_running }, finalized))
    }

    /// Trains the cluster's model on `x`, then logs its distance to the
    /// coordinate and the updated model's reconstruction error.
    fn log_and_train(&mut self, cluster: usize, x: &[f64]) -> Result<()> {
        self.dist_log.push(l1(x, &self.cor[cluster]));
        let model = &mut self.fresh_models[cluster];
        model.seq_train(x)?;
        self.err_log.push(model.anomaly_score(x)?);
        Ok(())
    }

    /// Installs the rebuilt instances, coordinates and thresholds into `d`.
    /// Clusters are reordered so that each lands on the old label whose
    /// trained centroid it matches best.
    pub fn finalize(&mut self, d: &mut Discriminator) -> Result<Finalized> {
        if self.count != self.config.n {
            return Err(Error::ReconstructionFailed(format!(
                "finalize called at count {} of {}",
                self.count, self.config.n
            )));
        }
        if let Some(c) = (0..self.cor.len())
            .find(|&c| self.num[c] == 0 || self.fresh_models[c].trained_count() == 0)
        {
            self.abort();
            return Err(Error::ReconstructionFailed(format!("cluster {c} received no samples")));
        }
        let thresholds = Thresholds {
            theta_error: self.err_log.mean_plus_k_std(self.k_err).unwrap_or(0.0).max(0.0),
            theta_drift: self.dist_log.mean_plus_k_std(1.0).unwrap_or(0.0),
        };
        let mapping = match_clusters(&self.cor, d.train_cor());
        let classes = self.cor.len();
        let mut order = vec![0; classes];
        for (cluster, &label) in mapping.iter().enumerate() {
            order[label] = cluster;
        }
        let instances: Vec<OselmModel> = order.iter().map(|&c| self.fresh_models[c].clone()).collect();
        let cor: Vec<Vec<f64>> = order.iter().map(|&c| self.cor[c].clone()).collect();
        let num: Vec<u64> = order.iter().map(|&c| self.num[c]).collect();
        d.replace(instances, cor, num, thresholds)?;
        self.count = 0;
        self.active = false;
        Ok(Finalized { mapping, thresholds })
    }

    pub fn abort(&mut self) {
        self.count = 0;
        self.active = false;
    }
}

/// All-pairs L1 spread of a coordinate set.
pub fn pairwise_spread(cor: &[Vec<f64>]) -> f64 {
    let mut total = 0.0;
    for j in 0..cor.len() {
        for k in (j + 1)..cor.len() {
            total += l1(&cor[j], &cor[k]);
        }
    }
    total
}

fn spread_with_substitution(cor: &[Vec<f64>], replaced: usize, x: &[f64]) -> f64 {
    let row = |i: usize| if i == replaced { x } else { cor[i].as_slice() };
    let mut total = 0.0;
    for j in 0..cor.len() {
        for k in (j + 1)..cor.len() {
            total += l1(row(j), row(k));
        }
    }
    total
}

/// Index of the L1-nearest row, first index on ties.
pub fn nearest(cor: &[Vec<f64>], x: &[f64]) -> usize {
    let dists: Vec<f64> = cor.iter().map(|c| l1(c, x)).collect();
    argmin(&dists).map(|b| b.0).unwrap_or(0)
}

const EXACT_MATCH_MAX: usize = 7;

/// One-to-one assignment of new clusters to old labels minimizing the total
/// L1 distance between matched centroids. Exhaustive for small C, greedy on
/// the closest remaining pair otherwise. Returns `mapping[cluster] = label`.
pub fn match_clusters(new: &[Vec<f64>], old: &[Vec<f64>]) -> Vec<usize> {
    let c = new.len();
    let cost: Vec<Vec<f64>> = new.iter().map(|n| old.iter().map(|o| l1(n, o)).collect()).collect();
    if c <= EXACT_MATCH_MAX {
        let mut perm: Vec<usize> = (0..c).collect();
        let mut best = perm.clone();
        let mut best_cost = f64::INFINITY;
        permute(&mut perm, 0, &mut |p| {
            let total: f64 = p.iter().enumerate().map(|(i, &j)| cost[i][j]).sum();
            if total < best_cost {
                best_cost = total;
                best.copy_from_slice(p);
            }
        });
        best
    } else {
        let mut mapping = vec![usize::MAX; c];
        let mut used = vec![false; c];
        let mut pairs: Vec<(usize, usize)> = (0..c).flat_map(|i| (0..c).map(move |j| (i, j))).collect();
        pairs.sort_by(|a, b| cost[a.0][a.1].total_cmp(&cost[b.0][b.1]));
        for (i, j) in pairs {
            if mapping[i] == usize::MAX && !used[j] {
                mapping[i] = j;
                used[j] = true;
            }
        }
        mapping
    }
}

// Lexicographic enumeration keeps the identity first so ties favour it.
fn permute(p: &mut Vec<usize>, k: usize, visit: &mut dyn FnMut(&[usize])) {
    if k == p.len() {
        visit(p);
        return;
    }
    for i in k..p.len() {
        p[k..=i].rotate_right(1);
        permute(p, k + 1, visit);
        p[k..=i].rotate_left(1);
    }
}
