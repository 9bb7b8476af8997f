use std::path::PathBuf;

use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid parameter: {0}")]
    InvalidParams(String),

    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },

    #[error("non-finite value at coordinate {coord}")]
    NonFinite { coord: usize },

    #[error("numerical degeneracy in rank-1 update (denominator {denominator:e})")]
    NumericalDegeneracy { denominator: f64 },

    #[error("class {0} has no samples")]
    EmptyClass(usize),

    #[error("label {label} out of range for {classes} classes")]
    LabelOutOfRange { label: usize, classes: usize },

    #[error("empty input: {0}")]
    Empty(&'static str),

    #[error("reconstruction failed: {0}")]
    ReconstructionFailed(String),

    #[error("{path}: row {row}: {msg}")]
    MalformedRow { path: PathBuf, row: usize, msg: String },

    #[error("dataset unavailable: {0}")]
    DatasetMissing(String),

    #[error("config: {0}")]
    Config(String),

    #[error("checkpoint: {0}")]
    Checkpoint(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn check_dim(expected: usize, got: usize) -> Result<()> {
    if expected != got {
        return Err(Error::DimensionMismatch { expected, got });
    }
    Ok(())
}

pub(crate) fn check_finite(x: &[f64]) -> Result<()> {
    match x.iter().position(|v| !v.is_finite()) {
        Some(coord) => Err(Error::NonFinite { coord }),
        None => Ok(()),
    }
}
