use serde::Serialize;

use crate::messaging::certificate::{Certificate, Fingerprint};
use crate::messaging::crypto::{CryptoError, SignatureBackend, SigningKey};
use crate::messaging::message::{
    next_msg_count, IcaMessage, EVENT_INTERSECTION_COLLISION_WARNING, MAX_CONFLICTING_VEHICLES,
};
use crate::messaging::timing::{Actor, TimingSample};
use crate::messaging::wire::SignedEnvelope;
use crate::messaging::{keygen, sign_envelope};
use crate::mobility::{conflicting_ids, detect_conflicts, ConflictPair, VehicleState};
use crate::sim::clock::SimClock;

#[derive(Debug, Clone)]
pub struct Emission {
    pub envelope: SignedEnvelope,
    pub bytes: Vec<u8>,
    pub message: IcaMessage,
    pub conflicts: Vec<ConflictPair>,
    pub timing: TimingSample,
}

#[derive(Debug, Clone, Serialize)]
pub struct WarningLogEntry {
    pub step: u64,
    pub msg_count: u8,
    pub pairs: Vec<ConflictPair>,
}

/// Roadside unit: senses, detects TTC conflicts, signs and emits at most
/// one aggregated warning per warning interval.
pub struct RsuAgent {
    pub sender_id: [u8; 4],
    pub position: [f64; 2],
    pub intersection_id: u32,
    pub ttc_threshold: f64,
    pub warning_rate: f64,
    signing_key: SigningKey,
    certificate: Certificate,
    certificate_bytes: Vec<u8>,
    attach_certificate_once: bool,
    interval_ms: u64,
    msg_count: u8,
    last_emit_ms: Option<u64>,
    emitted: u64,
    warning_log: Vec<WarningLogEntry>,
}

pub struct RsuParams {
    pub sender_id: u32,
    pub position: [f64; 2],
    pub intersection_id: u32,
    pub ttc_threshold: f64,
    pub warning_rate: f64,
    pub key_seed: Vec<u8>,
    pub validity_ms: (u32, u32),
    pub attach_certificate_once: bool,
}

impl RsuAgent {
    pub fn provision(backend: &mut dyn SignatureBackend, params: RsuParams) -> Result<Self, CryptoError> {
        let sender_id = params.sender_id.to_be_bytes();
        let (signing_key, certificate) = keygen(
            backend,
            &params.key_seed,
            sender_id,
            params.validity_ms.0,
            params.validity_ms.1,
        )?;
        let certificate_bytes = certificate.encode();
        Ok(Self {
            sender_id,
            position: params.position,
            intersection_id: params.intersection_id,
            ttc_threshold: params.ttc_threshold,
            warning_rate: params.warning_rate,
            signing_key,
            certificate,
            certificate_bytes,
            attach_certificate_once: params.attach_certificate_once,
            interval_ms: (1000.0 / params.warning_rate).round() as u64,
            msg_count: 0,
            last_emit_ms: None,
            emitted: 0,
            warning_log: Vec::new(),
        })
    }

    pub fn certificate(&self) -> &Certificate {
        &self.certificate
    }

    pub fn trust_anchor(&self) -> Fingerprint {
        self.certificate.fingerprint()
    }

    pub fn emitted(&self) -> u64 {
        self.emitted
    }

    pub fn warning_log(&self) -> &[WarningLogEntry] {
        &self.warning_log
    }

    fn interval_elapsed(&self, now_ms: u64) -> bool {
        self.last_emit_ms
            .is_none_or(|last| now_ms.saturating_sub(last) >= self.interval_ms)
    }

    /// Runs conflict detection on the current snapshot and, when a conflict
    /// exists and the warning interval has elapsed, signs and returns one
    /// ICA envelope listing the conflicting vehicles.
    pub fn step(
        &mut self,
        backend: &mut dyn SignatureBackend,
        vehicles: &[VehicleState],
        clock: &SimClock,
    ) -> Result<Option<Emission>, CryptoError> {
        let conflicts = detect_conflicts(vehicles, self.ttc_threshold);
        let now_ms = clock.now_ms();
        if conflicts.is_empty() || !self.interval_elapsed(now_ms) {
            return Ok(None);
        }
        let mut ids = conflicting_ids(&conflicts);
        ids.truncate(MAX_CONFLICTING_VEHICLES);
        let message = IcaMessage {
            msg_count: self.msg_count,
            sender_id: self.sender_id,
            timestamp_ms: now_ms as u32,
            intersection_id: self.intersection_id,
            event_flag: EVENT_INTERSECTION_COLLISION_WARNING,
            conflicting_vehicles: ids,
        };
        let certificate = if self.attach_certificate_once && self.emitted > 0 {
            Vec::new()
        } else {
            self.certificate_bytes.clone()
        };
        let (envelope, timing) = sign_envelope(
            backend,
            &self.signing_key,
            message.encode(),
            certificate,
            Actor::Rsu,
            clock.step_index(),
        )?;
        self.warning_log.push(WarningLogEntry {
            step: clock.step_index(),
            msg_count: message.msg_count,
            pairs: conflicts.clone(),
        });
        self.msg_count = next_msg_count(self.msg_count);
        self.last_emit_ms = Some(now_ms);
        self.emitted += 1;
        let bytes = envelope.encode();
        Ok(Some(Emission {
            envelope,
            bytes,
            message,
            conflicts,
            timing,
        }))
    }
}
