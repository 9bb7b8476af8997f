use std::collections::HashMap;
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::{Dataset, StreamMeta, StreamSample};
use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct CsvSchema {
    pub delimiter: char,
    pub has_header: bool,
    /// Header name of the label column; `None` means every column is a feature.
    pub label_column: Option<String>,
    /// Rows `[0, train_rows)` form the initial training set.
    pub train_rows: usize,
    pub normalize: bool,
    /// Known label values in id order. Empty: ids assigned in order of first
    /// appearance among training rows.
    pub labels: Vec<String>,
    pub drift_points: Vec<usize>,
}

impl Default for CsvSchema {
    fn default() -> Self {
        Self {
            delimiter: ',',
            has_header: true,
            label_column: Some("label".into()),
            train_rows: 0,
            normalize: true,
            labels: Vec::new(),
            drift_points: Vec::new(),
        }
    }
}

/// Per-feature min-max scaling fitted on training rows. Constant features map
/// to 0 and transformed values are clipped to `[0, 1]`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MinMax {
    pub min: Vec<f64>,
    pub max: Vec<f64>,
}

impl MinMax {
    pub fn fit(rows: &[Vec<f64>]) -> Result<Self> {
        let first = rows.first().ok_or(Error::Empty("normalization rows"))?;
        let mut min = first.clone();
        let mut max = first.clone();
        for row in rows {
            for (j, &v) in row.iter().enumerate() {
                min[j] = min[j].min(v);
                max[j] = max[j].max(v);
            }
        }
        Ok(Self { min, max })
    }

    pub fn transform(&self, row: &mut [f64]) {
        for (j, v) in row.iter_mut().enumerate() {
            let span = self.max[j] - self.min[j];
            *v = if span > 0.0 { ((*v - self.min[j]) / span).clamp(0.0, 1.0) } else { 0.0 };
        }
    }

    pub fn denormalize(&self, row: &mut [f64]) {
        for (j, v) in row.iter_mut().enumerate() {
            *v = self.min[j] + *v * (self.max[j] - self.min[j]);
        }
    }
}

/// Reads a delimited file into a training set and a test stream.
pub fn load_csv(path: &Path, schema: &CsvSchema) -> Result<Dataset> {
    let mut reader = csv::ReaderBuilder::new()
        .delimiter(u8::try_from(schema.delimiter).map_err(|_| Error::Config("delimiter must be ASCII".into()))?)
        .has_headers(schema.has_header)
        .from_path(path)?;

    let label_idx = match (&schema.label_column, schema.has_header) {
        (None, _) => None,
        (Some(name), true) => Some(
            reader
                .headers()?
                .iter()
                .position(|h| h.trim() == name)
                .ok_or_else(|| Error::Config(format!("label column {name:?} not in header")))?,
        ),
        (Some(name), false) => {
            Some(name.parse::<usize>().map_err(|_| Error::Config("without a header, label_column must be an index".into()))?)
        }
    };

    let mut label_ids: HashMap<String, usize> =
        schema.labels.iter().enumerate().map(|(i, l)| (l.clone(), i)).collect();
    let mut label_names = schema.labels.clone();
    let fixed_labels = !schema.labels.is_empty();

    let mut rows = Vec::new();
    let mut labels = Vec::new();
    let mut dim = None;
    for (i, record) in reader.records().enumerate() {
        let row_no = i + 1 + usize::from(schema.has_header);
        let bad = |msg: String| Error::MalformedRow { path: path.to_path_buf(), row: row_no, msg };
        let record = record?;
        let mut x = Vec::with_capacity(record.len());
        let mut label = None;
        for (j, field) in record.iter().enumerate() {
            if Some(j) == label_idx {
                let key = field.trim().to_string();
                let id = match label_ids.get(&key) {
                    Some(&id) => id,
                    None if !fixed_labels && i < schema.train_rows => {
                        let id = label_names.len();
                        label_ids.insert(key.clone(), id);
                        label_names.push(key);
                        id
                    }
                    None => return Err(bad(format!("unknown label {key:?}"))),
                };
                label = Some(id);
            } else {
                let v: f64 = field.trim().parse().map_err(|_| bad(format!("column {j}: {field:?} is not a number")))?;
                if !v.is_finite() {
                    return Err(bad(format!("column {j}: non-finite value")));
                }
                x.push(v);
            }
        }
        match dim {
            None => dim = Some(x.len()),
            Some(d) if d != x.len() => return Err(bad(format!("expected {d} features, found {}", x.len()))),
            _ => {}
        }
        rows.push(x);
        labels.push(label);
    }

    if schema.train_rows == 0 || schema.train_rows > rows.len() {
        return Err(Error::Config(format!(
            "train_rows must be in 1..={} for {}",
            rows.len(),
            path.display()
        )));
    }
    if schema.normalize {
        let scaler = MinMax::fit(&rows[..schema.train_rows])?;
        rows.iter_mut().for_each(|r| scaler.transform(r));
    }

    let test_rows = rows.split_off(schema.train_rows);
    let test_labels = labels.split_off(schema.train_rows);
    let train_labels = label_idx.map(|_| labels.into_iter().map(|l| l.expect("label column present")).collect());
    let test = test_rows
        .into_iter()
        .zip(test_labels)
        .enumerate()
        .map(|(index, (x, true_label))| StreamSample { index, x, true_label })
        .collect();
    Ok(Dataset {
        train: rows,
        train_labels,
        test,
        meta: StreamMeta {
            dim: dim.unwrap_or(0),
            num_classes: label_names.len().max(1),
            label_names,
            drift_points: schema.drift_points.clone(),
        },
    })
}

/// Writes training rows followed by the test stream with a trailing `label`
/// column, readable by [`load_csv`] with `train_rows = train.len()`.
pub fn write_csv(ds: &Dataset, path: &Path) -> Result<()> {
    let mut w = csv::Writer::from_path(path)?;
    let mut header: Vec<String> = (0..ds.meta.dim).map(|j| format!("f{j}")).collect();
    header.push("label".into());
    w.write_record(&header)?;
    let name = |l: Option<usize>| match l {
        Some(id) => ds.meta.label_names.get(id).cloned().unwrap_or_else(|| id.to_string()),
        None => String::new(),
    };
    let train_labels = ds.train_labels.clone().unwrap_or_default();
    for (i, x) in ds.train.iter().enumerate() {
        let mut rec: Vec<String> = x.iter().map(|v| v.to_string()).collect();
        rec.push(name(train_labels.get(i).copied()));
        w.write_record(&rec)?;
    }
    for s in &ds.test {
        let mut rec: Vec<String> = s.x.iter().map(|v| v.to_string()).collect();
        rec.push(name(s.true_label));
        w.write_record(&rec)?;
    }
    w.flush()?;
    Ok(())
}
