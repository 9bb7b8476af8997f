use serde::{Deserialize, Serialize};

use crate::checkpoint::encoded_len;
use crate::detector::DetectorState;
use crate::discriminator::Discriminator;
use crate::reconstruction::ReconstructionState;

/// Serialized size of every piece of state a running pipeline carries.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct StateAudit {
    pub detector: u64,
    pub discriminator: u64,
    pub reconstruction: u64,
}

impl StateAudit {
    pub fn total(&self) -> u64 {
        self.detector + self.discriminator + self.reconstruction
    }
}

/// Canonical serialized size of detector, discriminator and reconstruction
/// workspace.
pub fn audit_state_size(detector: &DetectorState, d: &Discriminator, r: &ReconstructionState) -> StateAudit {
    StateAudit { detector: encoded_len(detector), discriminator: encoded_len(d), reconstruction: encoded_len(r) }
}
