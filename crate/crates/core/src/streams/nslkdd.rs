//! NSL-KDD preparation: `normal` vs `neptune`, numeric features only.
//!
//! The initial training rows and the pre-drift part of the test stream are
//! drawn without replacement from `KDDTrain+.txt`; the post-drift part is the
//! filtered `KDDTest+.txt` in file order. The concept change is therefore the
//! train/test distribution shift of the original benchmark.

use std::fs::File;
use std::io::{BufRead, BufReader};
use std::path::{Path, PathBuf};

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::{Dataset, MinMax, StreamMeta, StreamSample};
use crate::error::{Error, Result};

/// 41 raw features minus protocol_type, service and flag.
pub const NSL_KDD_FEATURES: usize = 38;
pub const NSL_KDD_DRIFT_INDEX: usize = 8333;
const CATEGORICAL: [usize; 3] = [1, 2, 3];
const RAW_FEATURES: usize = 41;
const LABELS: [&str; 2] = ["normal", "neptune"];

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct NslKddConfig {
    pub train_path: PathBuf,
    pub test_path: PathBuf,
    pub seed: u64,
    pub n_train: usize,
    pub n_test: usize,
    pub drift_index: usize,
}

impl Default for NslKddConfig {
    fn default() -> Self {
        Self {
            train_path: PathBuf::from("data/KDDTrain+.txt"),
            test_path: PathBuf::from("data/KDDTest+.txt"),
            seed: 0,
            n_train: 2522,
            n_test: 22701,
            drift_index: NSL_KDD_DRIFT_INDEX,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct KddRecord {
    pub features: Vec<f64>,
    pub label: String,
}

fn missing(path: &Path) -> Error {
    Error::DatasetMissing(format!(
        "{} not found. Download KDDTrain+.txt and KDDTest+.txt from the NSL-KDD \
         distribution (https://www.unb.ca/cic/datasets/nsl.html) and point \
         dataset.train_path / dataset.test_path at them",
        path.display()
    ))
}

/// Parses a raw NSL-KDD file (41 features, label, optional difficulty).
pub fn parse_kdd_file(path: &Path) -> Result<Vec<KddRecord>> {
    let file = File::open(path).map_err(|e| match e.kind() {
        std::io::ErrorKind::NotFound => missing(path),
        _ => Error::Io(e),
    })?;
    let mut out = Vec::new();
    for (i, line) in BufReader::new(file).lines().enumerate() {
        let line = line?;
        let line = line.trim();
        if line.is_empty() || line.starts_with('@') {
            continue;
        }
        let bad = |msg: String| Error::MalformedRow { path: path.to_path_buf(), row: i + 1, msg };
        let fields: Vec<&str> = line.split(',').map(str::trim).collect();
        if fields.len() != RAW_FEATURES + 1 && fields.len() != RAW_FEATURES + 2 {
            return Err(bad(format!("expected 42 or 43 fields, found {}", fields.len())));
        }
        let mut features = Vec::with_capacity(NSL_KDD_FEATURES);
        for (j, f) in fields[..RAW_FEATURES].iter().enumerate() {
            if CATEGORICAL.contains(&j) {
                continue;
            }
            features.push(f.parse::<f64>().map_err(|_| bad(format!("column {j}: {f:?} is not a number")))?);
        }
        out.push(KddRecord { features, label: fields[RAW_FEATURES].trim_end_matches('.').to_string() });
    }
    Ok(out)
}

fn label_id(label: &str) -> Option<usize> {
    LABELS.iter().position(|l| *l == label)
}

/// Builds the normalized training set and the drifting test stream.
pub fn prepare_nslkdd(cfg: &NslKddConfig) -> Result<Dataset> {
    if cfg.drift_index > cfg.n_test {
        return Err(Error::Config("drift_index must not exceed n_test".into()));
    }
    let keep = |r: KddRecord| label_id(&r.label).map(|id| (r.features, id));
    let mut pool: Vec<(Vec<f64>, usize)> = parse_kdd_file(&cfg.train_path)?.into_iter().filter_map(keep).collect();
    let shifted: Vec<(Vec<f64>, usize)> = parse_kdd_file(&cfg.test_path)?.into_iter().filter_map(keep).collect();

    let need_train = cfg.n_train + cfg.drift_index;
    let need_test = cfg.n_test - cfg.drift_index;
    if pool.len() < need_train {
        return Err(Error::DatasetMissing(format!(
            "{} has {} normal/neptune rows, {need_train} required",
            cfg.train_path.display(),
            pool.len()
        )));
    }
    if shifted.len() < need_test {
        return Err(Error::DatasetMissing(format!(
            "{} has {} normal/neptune rows, {need_test} required",
            cfg.test_path.display(),
            shifted.len()
        )));
    }

    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    pool.shuffle(&mut rng);
    pool.truncate(need_train);
    let pre_drift = pool.split_off(cfg.n_train);
    let train = pool;

    let scaler = MinMax::fit(&train.iter().map(|(x, _)| x.clone()).collect::<Vec<_>>())?;
    let normalized = |mut x: Vec<f64>| {
        scaler.transform(&mut x);
        x
    };
    let train_labels = train.iter().map(|(_, y)| *y).collect();
    let train_rows = train.into_iter().map(|(x, _)| normalized(x)).collect();
    let test = pre_drift
        .into_iter()
        .chain(shifted.into_iter().take(need_test))
        .enumerate()
        .map(|(index, (x, y))| StreamSample { index, x: normalized(x), true_label: Some(y) })
        .collect();

    Ok(Dataset {
        train: train_rows,
        train_labels: Some(train_labels),
        test,
        meta: StreamMeta {
            dim: NSL_KDD_FEATURES,
            num_classes: LABELS.len(),
            label_names: LABELS.iter().map(|s| s.to_string()).collect(),
            drift_points: vec![cfg.drift_index],
        },
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::io::Write;

    fn kdd_line(label: &str, seed: usize) -> String {
        let mut f: Vec<String> = (0..RAW_FEATURES).map(|j| ((j * 7 + seed * 13) % 50).to_string()).collect();
        f[1] = "tcp".into();
        f[2] = "http".into();
        f[3] = "SF".into();
        f.push(label.into());
        f.push("20".into());
        f.join(",")
    }

    fn fixture(dir: &Path, name: &str, rows: &[(&str, usize)]) -> PathBuf {
        let path = dir.join(name);
        let mut file = File::create(&path).unwrap();
        for (label, n) in rows {
            for i in 0..*n {
                writeln!(file, "{}", kdd_line(label, i)).unwrap();
            }
        }
        path
    }

    fn small_cfg(dir: &Path) -> NslKddConfig {
        NslKddConfig {
            train_path: fixture(dir, "train.txt", &[("normal", 40), ("neptune", 30), ("smurf", 10)]),
            test_path: fixture(dir, "test.txt", &[("neptune", 12), ("normal", 15), ("satan", 3)]),
            seed: 4,
            n_train: 20,
            n_test: 50,
            drift_index: 30,
        }
    }

    #[test]
    fn drops_categorical_columns() {
        let dir = tempfile::tempdir().unwrap();
        let p = fixture(dir.path(), "a.txt", &[("normal", 2)]);
        let rows = parse_kdd_file(&p).unwrap();
        assert_eq!(rows.len(), 2);
        assert!(rows.iter().all(|r| r.features.len() == NSL_KDD_FEATURES && r.label == "normal"));
    }

    #[test]
    fn split_sizes_and_drift_point() {
        let dir = tempfile::tempdir().unwrap();
        let ds = prepare_nslkdd(&small_cfg(dir.path())).unwrap();
        assert_eq!(ds.train.len(), 20);
        assert_eq!(ds.test.len(), 50);
        assert_eq!(ds.meta.drift_points, vec![30]);
        assert_eq!(ds.meta.dim, 38);
        // post-drift rows come from the test file, in file order
        assert_eq!(ds.test[30].true_label, Some(1));
        assert_eq!(ds.test[42].true_label, Some(0));
        assert!(ds.train.iter().flatten().all(|v| (0.0..=1.0).contains(v)));
    }

    #[test]
    fn deterministic_per_seed() {
        let dir = tempfile::tempdir().unwrap();
        let cfg = small_cfg(dir.path());
        assert_eq!(prepare_nslkdd(&cfg).unwrap(), prepare_nslkdd(&cfg).unwrap());
    }

    #[test]
    fn missing_file_explains_download() {
        let cfg = NslKddConfig { train_path: "/nonexistent/KDDTrain+.txt".into(), ..NslKddConfig::default() };
        let msg = prepare_nslkdd(&cfg).unwrap_err().to_string();
        assert!(msg.contains("Download"), "{msg}");
    }

    #[test]
    fn insufficient_rows_rejected() {
        let dir = tempfile::tempdir().unwrap();
        let cfg = NslKddConfig { n_train: 60, ..small_cfg(dir.path()) };
        assert!(matches!(prepare_nslkdd(&cfg), Err(Error::DatasetMissing(_))));
    }
}
