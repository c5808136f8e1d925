use serde::{Deserialize, Serialize};

use super::crypto::Millis;
use crate::mobility::VehicleId;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TimingKind {
    Sign,
    Verify,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", tag = "type", content = "id")]
pub enum Actor {
    Rsu,
    Vehicle(VehicleId),
    Attacker,
}

/// Wall-clock duration of one backend call.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TimingSample {
    pub kind: TimingKind,
    pub duration: Millis,
    pub actor: Actor,
    pub step_index: u64,
}
