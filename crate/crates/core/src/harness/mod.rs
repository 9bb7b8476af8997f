//! Experiment driver behind the `seqdrift` binary.

mod audit;
mod bench;
mod config;
mod experiment;

pub use audit::{audit_state_size, StateAudit};
pub use bench::{time_phases, PhaseTimings, PHASE_NAMES};
pub use config::{DatasetSpec, ExperimentConfig, Labeling, Method, OselmSection, TrainingConfig};
pub use experiment::{
    fit_discriminator, load_dataset, run_experiment, write_trace_csv, DetectionDelay, ExperimentOutput,
    ExperimentReport, TraceRecord,
};
