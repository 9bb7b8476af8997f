//! Constant-memory concept drift detection for sequentially trained
//! autoencoders.
//!
//! The crate couples per-label OS-ELM autoencoders ([`oselm`],
//! [`discriminator`]) with a centroid-displacement drift detector
//! ([`detector`]) and an unsupervised, sample-by-sample model rebuild
//! ([`reconstruction`]). [`streams`] loads and generates data and [`harness`]
//! runs the experiments behind the `seqdrift` binary.

pub mod checkpoint;
pub mod detector;
pub mod discriminator;
pub mod error;
pub mod harness;
pub mod oselm;
pub mod reconstruction;
pub mod stats;
pub mod streams;

pub use detector::{DetectorConfig, DetectorState, DriftMonitor, Mode, StepOutcome};
pub use discriminator::{Discriminator, Prediction, Thresholds};
pub use error::{Error, Result};
pub use oselm::{Activation, OselmModel, OselmParams};
pub use reconstruction::{Phase, ReconstructionConfig, ReconstructionState};
