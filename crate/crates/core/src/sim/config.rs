//! Scenario configuration: JSON document, unknown keys rejected.
//!
//! The JSON schema for this format is published in
//! `scenarios/scenario.schema.json` at the repository root.

use std::collections::BTreeSet;
use std::fmt;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use thiserror::Error;

use super::clock::SimClock;

#[derive(Debug, Error)]
pub enum ConfigError {
    #[error("cannot read scenario {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("scenario parse error: {0}")]
    Parse(#[from] serde_json::Error),
    #[error("invalid scenario: `{field}` {constraint}")]
    Validation { field: String, constraint: String },
}

fn invalid(field: impl Into<String>, constraint: impl Into<String>) -> ConfigError {
    ConfigError::Validation {
        field: field.into(),
        constraint: constraint.into(),
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScenarioConfig {
    /// Simulated duration, seconds.
    pub duration: f64,
    #[serde(default = "default_step_size")]
    pub step_size: f64,
    pub seed: u64,
    pub intersection: IntersectionSpec,
    #[serde(default)]
    pub vehicles: Vec<VehicleSpec>,
    pub rsu: RsuSpec,
    #[serde(default)]
    pub channel: ChannelSpec,
    pub crypto: CryptoSpec,
    #[serde(default)]
    pub attacks: Vec<AttackSpec>,
}

fn default_step_size() -> f64 {
    SimClock::DEFAULT_STEP
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct IntersectionSpec {
    pub id: u32,
    pub reference_point: [f64; 2],
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct VehicleSpec {
    pub id: u16,
    pub route: RouteSpec,
    #[serde(default)]
    pub entry_time: f64,
    pub speed_profile: Vec<SpeedSegment>,
}

/// Polyline route with the arc-length at which it crosses the
/// intersection reference point.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RouteSpec {
    pub points: Vec<[f64; 2]>,
    pub reference_arc_length: f64,
}

/// Constant speed from simulation time `from` until the next segment.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SpeedSegment {
    pub from: f64,
    pub speed: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RsuSpec {
    pub position: [f64; 2],
    #[serde(default = "default_ttc_threshold")]
    pub ttc_threshold: f64,
    #[serde(default = "default_warning_rate")]
    pub warning_rate: f64,
    #[serde(default = "default_sender_id")]
    pub sender_id: u32,
}

fn default_ttc_threshold() -> f64 {
    2.0
}

fn default_warning_rate() -> f64 {
    10.0
}

fn default_sender_id() -> u32 {
    0x5253_5501
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ChannelSpec {
    #[serde(default)]
    pub loss_model: LossModelSpec,
    #[serde(default)]
    pub airtime_model: AirtimeModel,
    /// Bits per second.
    #[serde(default = "default_data_rate")]
    pub data_rate: f64,
    /// CBR observation window, seconds.
    #[serde(default = "default_cbr_window")]
    pub cbr_window: f64,
}

impl Default for ChannelSpec {
    fn default() -> Self {
        Self {
            loss_model: LossModelSpec::default(),
            airtime_model: AirtimeModel::default(),
            data_rate: default_data_rate(),
            cbr_window: default_cbr_window(),
        }
    }
}

fn default_data_rate() -> f64 {
    6.0e6
}

fn default_cbr_window() -> f64 {
    1.0
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum LossModelSpec {
    /// Independent per-receiver loss with probability `p`.
    Bernoulli { p: f64 },
    /// Whole-broadcast drop for the listed transmission indices.
    Trace { drop_set: Vec<u64> },
}

impl Default for LossModelSpec {
    fn default() -> Self {
        LossModelSpec::Bernoulli { p: 0.0 }
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum AirtimeModel {
    /// `bytes * 8 / data_rate`
    #[default]
    SizeOverRate,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CryptoSpec {
    #[serde(default = "default_scheme")]
    pub scheme: String,
    pub key_seed: String,
    #[serde(default = "default_freshness_ms")]
    pub freshness_ms: u64,
    #[serde(default = "default_replay_window")]
    pub replay_window: usize,
    #[serde(default = "default_true")]
    pub replay_protection: bool,
    /// Attach the certificate only to the first envelope and let vehicles
    /// cache it.
    #[serde(default)]
    pub cache_certificates: bool,
    /// Certificate lifetime; defaults to the scenario duration.
    #[serde(default)]
    pub certificate_lifetime_ms: Option<u64>,
}

pub const SCHEME_FALCON_512: &str = "falcon-512";

fn default_scheme() -> String {
    SCHEME_FALCON_512.to_owned()
}

fn default_freshness_ms() -> u64 {
    500
}

fn default_replay_window() -> usize {
    128
}

fn default_true() -> bool {
    true
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum AttackKind {
    Forge,
    Tamper,
    Replay,
}

impl AttackKind {
    pub const ALL: [AttackKind; 3] = [AttackKind::Forge, AttackKind::Tamper, AttackKind::Replay];

    pub fn as_str(self) -> &'static str {
        match self {
            AttackKind::Forge => "forge",
            AttackKind::Tamper => "tamper",
            AttackKind::Replay => "replay",
        }
    }
}

impl fmt::Display for AttackKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

/// One adversarial campaign: `count` injections, one per step, starting at
/// `start_step`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum AttackSpec {
    /// Outsider signs its own warning with its own key pair.
    Forge {
        start_step: u64,
        count: u64,
        #[serde(default = "default_attacker_seed")]
        attacker_seed: String,
        /// Copy the genuine trust-anchor fingerprint into the forged
        /// certificate's issuer field.
        #[serde(default)]
        spoof_issuer: bool,
    },
    /// Genuine envelope with one payload bit flipped, original signature.
    Tamper {
        start_step: u64,
        count: u64,
        /// Payload bit to flip (MSB-first); random per injection when absent.
        #[serde(default)]
        bit: Option<usize>,
    },
    /// Byte-identical retransmission of an envelope captured
    /// `capture_delay_steps` earlier.
    Replay {
        start_step: u64,
        count: u64,
        capture_delay_steps: u64,
    },
}

fn default_attacker_seed() -> String {
    "attacker".to_owned()
}

impl AttackSpec {
    pub fn kind(&self) -> AttackKind {
        match self {
            AttackSpec::Forge { .. } => AttackKind::Forge,
            AttackSpec::Tamper { .. } => AttackKind::Tamper,
            AttackSpec::Replay { .. } => AttackKind::Replay,
        }
    }

    pub fn start_step(&self) -> u64 {
        match *self {
            AttackSpec::Forge { start_step, .. }
            | AttackSpec::Tamper { start_step, .. }
            | AttackSpec::Replay { start_step, .. } => start_step,
        }
    }

    pub fn count(&self) -> u64 {
        match *self {
            AttackSpec::Forge { count, .. }
            | AttackSpec::Tamper { count, .. }
            | AttackSpec::Replay { count, .. } => count,
        }
    }

    pub fn is_active_at(&self, step: u64) -> bool {
        step >= self.start_step() && step - self.start_step() < self.count()
    }
}

impl ScenarioConfig {
    pub fn from_json(text: &str) -> Result<Self, ConfigError> {
        let config: ScenarioConfig = serde_json::from_str(text)?;
        config.validate()?;
        Ok(config)
    }

    pub fn validate(&self) -> Result<(), ConfigError> {
        if !(self.duration.is_finite() && self.duration > 0.0) {
            return Err(invalid("duration", "must be > 0"));
        }
        if !(self.step_size.is_finite() && self.step_size > 0.0) {
            return Err(invalid("step_size", "must be > 0"));
        }
        if self.step_size > self.duration {
            return Err(invalid("step_size", "must not exceed duration"));
        }

        let mut ids = BTreeSet::new();
        for (i, v) in self.vehicles.iter().enumerate() {
            let at = |f: &str| format!("vehicles[{i}].{f}");
            if v.id == 0 {
                return Err(invalid(at("id"), "must be >= 1"));
            }
            if !ids.insert(v.id) {
                return Err(invalid(at("id"), format!("duplicate vehicle id {}", v.id)));
            }
            if !(v.entry_time.is_finite() && v.entry_time >= 0.0) {
                return Err(invalid(at("entry_time"), "must be >= 0"));
            }
            if v.entry_time >= self.duration {
                return Err(invalid(at("entry_time"), "must be < duration"));
            }
            if v.route.points.len() < 2 {
                return Err(invalid(at("route.points"), "needs at least 2 points"));
            }
            if v.route.points.iter().flatten().any(|c| !c.is_finite()) {
                return Err(invalid(at("route.points"), "coordinates must be finite"));
            }
            let length = polyline_length(&v.route.points);
            if length <= 0.0 {
                return Err(invalid(at("route.points"), "route length must be > 0"));
            }
            let r = v.route.reference_arc_length;
            if !(r.is_finite() && (0.0..=length).contains(&r)) {
                return Err(invalid(
                    at("route.reference_arc_length"),
                    format!("must lie within [0, {length}]"),
                ));
            }
            if v.speed_profile.is_empty() {
                return Err(invalid(at("speed_profile"), "needs at least one segment"));
            }
            let mut prev = f64::NEG_INFINITY;
            for (j, seg) in v.speed_profile.iter().enumerate() {
                if !(seg.from.is_finite() && seg.from >= 0.0 && seg.from > prev) {
                    return Err(invalid(
                        at(&format!("speed_profile[{j}].from")),
                        "must be >= 0 and strictly increasing",
                    ));
                }
                if !(seg.speed.is_finite() && seg.speed >= 0.0) {
                    return Err(invalid(at(&format!("speed_profile[{j}].speed")), "must be >= 0"));
                }
                prev = seg.from;
            }
        }

        if !(self.rsu.ttc_threshold.is_finite() && self.rsu.ttc_threshold > 0.0) {
            return Err(invalid("rsu.ttc_threshold", "must be > 0"));
        }
        if !(self.rsu.warning_rate.is_finite() && self.rsu.warning_rate > 0.0) {
            return Err(invalid("rsu.warning_rate", "must be > 0"));
        }

        match &self.channel.loss_model {
            LossModelSpec::Bernoulli { p } => {
                if !(0.0..=1.0).contains(p) {
                    return Err(invalid("channel.loss_model.p", "must lie within [0, 1]"));
                }
            }
            LossModelSpec::Trace { drop_set } => {
                let distinct: BTreeSet<_> = drop_set.iter().collect();
                if distinct.len() != drop_set.len() {
                    return Err(invalid("channel.loss_model.drop_set", "indices must be distinct"));
                }
            }
        }
        if !(self.channel.data_rate.is_finite() && self.channel.data_rate > 0.0) {
            return Err(invalid("channel.data_rate", "must be > 0"));
        }
        if !(self.channel.cbr_window.is_finite() && self.channel.cbr_window > 0.0) {
            return Err(invalid("channel.cbr_window", "must be > 0"));
        }

        if self.crypto.scheme != SCHEME_FALCON_512 {
            return Err(invalid(
                "crypto.scheme",
                format!("unsupported scheme {:?}, expected {SCHEME_FALCON_512:?}", self.crypto.scheme),
            ));
        }
        if self.crypto.replay_window == 0 {
            return Err(invalid("crypto.replay_window", "must be >= 1"));
        }
        if self.duration_ms() > u64::from(u32::MAX) {
            return Err(invalid("duration", "must fit in 32-bit milliseconds"));
        }

        for (i, a) in self.attacks.iter().enumerate() {
            if a.count() == 0 {
                return Err(invalid(format!("attacks[{i}].count"), "must be >= 1"));
            }
            if let AttackSpec::Replay {
                capture_delay_steps, ..
            } = a
            {
                if *capture_delay_steps == 0 {
                    return Err(invalid(format!("attacks[{i}].capture_delay_steps"), "must be >= 1"));
                }
            }
        }
        Ok(())
    }

    pub fn duration_ms(&self) -> u64 {
        (self.duration * 1000.0).round() as u64
    }

    /// SHA-256 of the canonical JSON serialization, hex encoded.
    pub fn digest(&self) -> String {
        let canonical = serde_json::to_vec(self).expect("config serializes");
        let hash = Sha256::digest(&canonical);
        hash.iter().map(|b| format!("{b:02x}")).collect()
    }
}

pub fn polyline_length(points: &[[f64; 2]]) -> f64 {
    points
        .windows(2)
        .map(|w| (w[1][0] - w[0][0]).hypot(w[1][1] - w[0][1]))
        .sum()
}

pub fn load_scenario(path: impl AsRef<Path>) -> Result<ScenarioConfig, ConfigError> {
    let path = path.as_ref();
    let text = std::fs::read_to_string(path).map_err(|source| ConfigError::Io {
        path: path.to_owned(),
        source,
    })?;
    ScenarioConfig::from_json(&text)
}
