//! Outsider adversary: forges, tampers with, and replays ICA envelopes
//! through the same broadcast path as the RSU.

use crate::channel::{Channel, ChannelEvent, Transmitter};
use crate::messaging::certificate::{Certificate, Fingerprint};
use crate::messaging::crypto::{CryptoError, SignatureBackend, SigningKey};
use crate::messaging::message::{next_msg_count, IcaMessage, EVENT_INTERSECTION_COLLISION_WARNING};
use crate::messaging::timing::Actor;
use crate::messaging::wire::{SignedEnvelope, PAYLOAD_OFFSET};
use crate::messaging::{keygen, sign_envelope};
use crate::mobility::VehicleId;
use crate::sim::clock::SimClock;
use crate::sim::config::{AttackKind, AttackSpec};
use crate::sim::rng::RngStream;

/// Captured genuine envelopes kept for tamper/replay.
const CAPTURE_RETENTION: usize = 256;

struct Forger {
    key: SigningKey,
    certificate: Vec<u8>,
    msg_count: u8,
}

#[derive(Debug, Clone)]
pub struct Injection {
    pub kind: AttackKind,
    pub event: ChannelEvent,
    pub bytes: Vec<u8>,
    /// Step the source envelope was captured at (tamper, replay).
    pub source_step: Option<u64>,
    /// Flipped payload bit (tamper).
    pub flipped_bit: Option<usize>,
}

#[derive(Debug, Clone, Default)]
pub struct InjectionBatch {
    pub injections: Vec<Injection>,
    pub skipped: Vec<(AttackKind, String)>,
}

/// Envelope bytes, source capture step, flipped bit.
type Crafted = (Vec<u8>, Option<u64>, Option<usize>);

pub struct AttackInjector {
    specs: Vec<AttackSpec>,
    forgers: Vec<Option<Forger>>,
    backend: Box<dyn SignatureBackend>,
    rng: RngStream,
    captured: Vec<(u64, Vec<u8>)>,
    victim_sender: [u8; 4],
    intersection_id: u32,
    trust_anchor: Fingerprint,
    seed: u64,
}

impl AttackInjector {
    /// `backend` signs forged envelopes and must not share a nonce stream
    /// with the RSU.
    pub fn new(
        specs: Vec<AttackSpec>,
        backend: Box<dyn SignatureBackend>,
        seed: u64,
        victim_sender: [u8; 4],
        intersection_id: u32,
        trust_anchor: Fingerprint,
    ) -> Self {
        let forgers = specs.iter().map(|_| None).collect();
        Self {
            specs,
            forgers,
            backend,
            rng: RngStream::new(seed, RngStream::ATTACK),
            captured: Vec::new(),
            victim_sender,
            intersection_id,
            trust_anchor,
            seed,
        }
    }

    pub fn is_idle(&self) -> bool {
        self.specs.is_empty()
    }

    /// Eavesdrops a genuine broadcast.
    pub fn capture(&mut self, step: u64, bytes: &[u8]) {
        if self.specs.is_empty() {
            return;
        }
        if self.captured.len() == CAPTURE_RETENTION {
            self.captured.remove(0);
        }
        self.captured.push((step, bytes.to_vec()));
    }

    fn forger(&mut self, idx: usize) -> Result<&mut Forger, CryptoError> {
        if self.forgers[idx].is_none() {
            let AttackSpec::Forge {
                attacker_seed,
                spoof_issuer,
                ..
            } = &self.specs[idx]
            else {
                unreachable!("forger requested for non-forge spec");
            };
            let seed = format!("{attacker_seed}:{}:{idx}", self.seed);
            let (key, mut cert): (SigningKey, Certificate) =
                keygen(self.backend.as_mut(), seed.as_bytes(), self.victim_sender, 0, u32::MAX)?;
            if *spoof_issuer {
                cert.issuer_fingerprint = self.trust_anchor;
            }
            self.forgers[idx] = Some(Forger {
                key,
                certificate: cert.encode(),
                msg_count: 0,
            });
        }
        Ok(self.forgers[idx].as_mut().expect("initialized above"))
    }

    /// Injects every campaign active at the current step, in config order,
    /// through `channel`. Runs after the genuine broadcast of the step.
    pub fn inject(
        &mut self,
        clock: &SimClock,
        channel: &mut Channel,
        receivers: &[VehicleId],
    ) -> Result<InjectionBatch, CryptoError> {
        let step = clock.step_index();
        let mut batch = InjectionBatch::default();
        for idx in 0..self.specs.len() {
            if !self.specs[idx].is_active_at(step) {
                continue;
            }
            let kind = self.specs[idx].kind();
            let crafted = match self.specs[idx].clone() {
                AttackSpec::Forge { .. } => Some(self.forge(idx, clock, receivers)?),
                AttackSpec::Tamper { bit, .. } => self.tamper(bit),
                AttackSpec::Replay {
                    capture_delay_steps, ..
                } => self.replay(step, capture_delay_steps),
            };
            match crafted {
                Some((bytes, source_step, flipped_bit)) => {
                    let event = channel.broadcast(bytes.len(), step, Transmitter::Adversary { attack: kind }, receivers);
                    batch.injections.push(Injection {
                        kind,
                        event,
                        bytes,
                        source_step,
                        flipped_bit,
                    });
                }
                None => batch
                    .skipped
                    .push((kind, "no captured genuine envelope available".to_owned())),
            }
        }
        Ok(batch)
    }

    fn forge(
        &mut self,
        idx: usize,
        clock: &SimClock,
        receivers: &[VehicleId],
    ) -> Result<Crafted, CryptoError> {
        let victim_sender = self.victim_sender;
        let intersection_id = self.intersection_id;
        let mut targets: Vec<VehicleId> = receivers.iter().copied().take(2).collect();
        if targets.is_empty() {
            targets.push(1);
        }
        let forger = self.forger(idx)?;
        let msg = IcaMessage {
            msg_count: forger.msg_count,
            sender_id: victim_sender,
            timestamp_ms: clock.now_ms() as u32,
            intersection_id,
            event_flag: EVENT_INTERSECTION_COLLISION_WARNING,
            conflicting_vehicles: targets,
        };
        forger.msg_count = next_msg_count(forger.msg_count);
        let key = forger.key.clone();
        let cert = forger.certificate.clone();
        let (envelope, _) = sign_envelope(self.backend.as_mut(), &key, msg.encode(), cert, Actor::Attacker, clock.step_index())?;
        Ok((envelope.encode(), None, None))
    }

    fn tamper(&mut self, bit: Option<usize>) -> Option<Crafted> {
        let (src_step, bytes) = self.captured.last()?.clone();
        let payload_bits = SignedEnvelope::decode(&bytes).ok()?.payload.len() * 8;
        if payload_bits == 0 {
            return None;
        }
        let bit = match bit {
            Some(b) => b % payload_bits,
            None => self.rng.below(payload_bits as u64) as usize,
        };
        let mut out = bytes;
        out[PAYLOAD_OFFSET + bit / 8] ^= 0x80 >> (bit % 8);
        Some((out, Some(src_step), Some(bit)))
    }

    fn replay(&self, step: u64, delay: u64) -> Option<Crafted> {
        let cutoff = step.checked_sub(delay)?;
        self.captured
            .iter()
            .rev()
            .find(|(s, _)| *s <= cutoff)
            .map(|(s, b)| (b.clone(), Some(*s), None))
    }
}
