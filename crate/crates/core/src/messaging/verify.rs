//! Receiver-side checks, applied in a fixed order so the first failure
//! determines the reported reason:
//!
//! 1. signature over `version | msg_type | payload` under the certificate key
//! 2. payload structure
//! 3. certificate validity period
//! 4. certificate trust (self-issued digest equals the provisioned anchor)
//! 5. timestamp freshness
//! 6. `(sender_id, msg_count)` not seen before

use std::collections::VecDeque;
use std::fmt;

use serde::{Deserialize, Serialize};

use super::certificate::{Certificate, Fingerprint};
use super::crypto::{Millis, SignatureBackend};
use super::message::IcaMessage;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RejectReason {
    Malformed,
    MissingCertificate,
    BadSignature,
    CertificateExpired,
    UntrustedIssuer,
    Stale,
    Replay,
}

impl RejectReason {
    pub fn as_str(self) -> &'static str {
        match self {
            RejectReason::Malformed => "malformed",
            RejectReason::MissingCertificate => "missing_certificate",
            RejectReason::BadSignature => "bad_signature",
            RejectReason::CertificateExpired => "certificate_expired",
            RejectReason::UntrustedIssuer => "untrusted_issuer",
            RejectReason::Stale => "stale",
            RejectReason::Replay => "replay",
        }
    }
}

impl fmt::Display for RejectReason {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", tag = "verdict", content = "reason")]
pub enum Verdict {
    Accept,
    Reject(RejectReason),
}

impl Verdict {
    pub fn is_accept(self) -> bool {
        matches!(self, Verdict::Accept)
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct VerifyPolicy {
    pub trust_anchor: Fingerprint,
    pub freshness_ms: u64,
    pub replay_protection: bool,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
struct SeenMessage {
    sender_id: [u8; 4],
    msg_count: u8,
    timestamp_ms: u64,
}

/// Recently accepted `(sender_id, msg_count)` pairs.
///
/// Holds at most `capacity` entries. Entries older than the freshness
/// window are dropped as well: the freshness check already rejects
/// anything that old, and dropping them lets a sender's `msg_count` wrap
/// around without the new message colliding with a stale entry.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ReplayWindow {
    capacity: usize,
    entries: VecDeque<SeenMessage>,
}

impl ReplayWindow {
    pub const DEFAULT_CAPACITY: usize = 128;

    pub fn new(capacity: usize) -> Self {
        Self {
            capacity: capacity.max(1),
            entries: VecDeque::with_capacity(capacity.max(1)),
        }
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn contains(&self, sender_id: [u8; 4], msg_count: u8, now_ms: u64, freshness_ms: u64) -> bool {
        self.entries.iter().any(|e| {
            e.sender_id == sender_id && e.msg_count == msg_count && now_ms.saturating_sub(e.timestamp_ms) <= freshness_ms
        })
    }

    pub fn record(&mut self, msg: &IcaMessage, now_ms: u64, freshness_ms: u64) {
        self.entries
            .retain(|e| now_ms.saturating_sub(e.timestamp_ms) <= freshness_ms);
        while self.entries.len() >= self.capacity {
            self.entries.pop_front();
        }
        self.entries.push_back(SeenMessage {
            sender_id: msg.sender_id,
            msg_count: msg.msg_count,
            timestamp_ms: u64::from(msg.timestamp_ms),
        });
    }
}

impl Default for ReplayWindow {
    fn default() -> Self {
        Self::new(Self::DEFAULT_CAPACITY)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct VerifyOutcome {
    pub verdict: Verdict,
    /// Duration of the signature verification call, when one was made.
    pub timing: Option<Millis>,
    /// Decoded payload, available once the signature has been checked.
    pub message: Option<IcaMessage>,
}

impl VerifyOutcome {
    fn reject(reason: RejectReason, timing: Option<Millis>, message: Option<IcaMessage>) -> Self {
        Self {
            verdict: Verdict::Reject(reason),
            timing,
            message,
        }
    }
}

/// Runs every check against `signed_prefix` (`version | msg_type | payload`).
/// Pure: the replay window is only read. Callers record accepted messages
/// with [`ReplayWindow::record`].
pub fn verify(
    backend: &dyn SignatureBackend,
    cert: &Certificate,
    signed_prefix: &[u8],
    signature: &[u8],
    now_ms: u64,
    replay: &ReplayWindow,
    policy: &VerifyPolicy,
) -> VerifyOutcome {
    if cert.scheme_id != backend.scheme() {
        return VerifyOutcome::reject(RejectReason::BadSignature, None, None);
    }
    let (valid, timing) = backend.verify(&cert.verification_key, signed_prefix, signature);
    if !valid {
        return VerifyOutcome::reject(RejectReason::BadSignature, timing, None);
    }

    let Some(payload) = signed_prefix.get(2..) else {
        return VerifyOutcome::reject(RejectReason::Malformed, timing, None);
    };
    let msg = match IcaMessage::decode(payload) {
        Ok(m) => m,
        Err(_) => return VerifyOutcome::reject(RejectReason::Malformed, timing, None),
    };

    if !cert.is_valid_at(now_ms) {
        return VerifyOutcome::reject(RejectReason::CertificateExpired, timing, Some(msg));
    }
    if cert.fingerprint() != cert.issuer_fingerprint || cert.issuer_fingerprint != policy.trust_anchor {
        return VerifyOutcome::reject(RejectReason::UntrustedIssuer, timing, Some(msg));
    }
    let ts = u64::from(msg.timestamp_ms);
    if ts > now_ms || now_ms - ts > policy.freshness_ms {
        return VerifyOutcome::reject(RejectReason::Stale, timing, Some(msg));
    }
    if policy.replay_protection && replay.contains(msg.sender_id, msg.msg_count, now_ms, policy.freshness_ms) {
        return VerifyOutcome::reject(RejectReason::Replay, timing, Some(msg));
    }
    VerifyOutcome {
        verdict: Verdict::Accept,
        timing,
        message: Some(msg),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::messaging::crypto::{KeyPair, MockBackend};
    use crate::messaging::message::EVENT_INTERSECTION_COLLISION_WARNING;
    use crate::messaging::wire::SignedEnvelope;

    struct Fixture {
        backend: MockBackend,
        keys: KeyPair,
        cert: Certificate,
        policy: VerifyPolicy,
    }

    fn fixture() -> Fixture {
        let mut backend = MockBackend::default();
        let keys = backend.keygen(b"rsu").unwrap();
        let cert = Certificate::self_issued(*b"RSU1", 0, 10_000, backend.scheme(), keys.verification_key.clone());
        let policy = VerifyPolicy {
            trust_anchor: cert.fingerprint(),
            freshness_ms: 500,
            replay_protection: true,
        };
        Fixture {
            backend,
            keys,
            cert,
            policy,
        }
    }

    fn message(count: u8, ts: u32) -> IcaMessage {
        IcaMessage {
            msg_count: count,
            sender_id: *b"RSU1",
            timestamp_ms: ts,
            intersection_id: 829,
            event_flag: EVENT_INTERSECTION_COLLISION_WARNING,
            conflicting_vehicles: vec![1, 2],
        }
    }

    fn sign(f: &mut Fixture, msg: &IcaMessage) -> SignedEnvelope {
        let mut env = SignedEnvelope::ica(msg.encode(), f.cert.encode(), vec![]);
        env.signature = f.backend.sign(&f.keys.signing_key, &env.signed_prefix()).unwrap().0;
        env
    }

    fn check(f: &Fixture, env: &SignedEnvelope, now: u64, window: &ReplayWindow) -> Verdict {
        verify(&f.backend, &f.cert, &env.signed_prefix(), &env.signature, now, window, &f.policy).verdict
    }

    #[test]
    fn fresh_unseen_accepts() {
        let mut f = fixture();
        let env = sign(&mut f, &message(0, 1000));
        assert_eq!(check(&f, &env, 1000, &ReplayWindow::default()), Verdict::Accept);
    }

    #[test]
    fn second_delivery_is_replay() {
        let mut f = fixture();
        let msg = message(3, 1000);
        let env = sign(&mut f, &msg);
        let mut window = ReplayWindow::default();
        assert_eq!(check(&f, &env, 1000, &window), Verdict::Accept);
        window.record(&msg, 1000, 500);
        assert_eq!(check(&f, &env, 1000, &window), Verdict::Reject(RejectReason::Replay));
        assert_eq!(check(&f, &env, 1100, &window), Verdict::Reject(RejectReason::Replay));
    }

    #[test]
    fn flipped_bit_is_bad_signature() {
        let mut f = fixture();
        let mut env = sign(&mut f, &message(0, 1000));
        env.payload[0] ^= 0x80;
        assert_eq!(
            check(&f, &env, 1000, &ReplayWindow::default()),
            Verdict::Reject(RejectReason::BadSignature)
        );
    }

    #[test]
    fn stale_and_future_timestamps() {
        let mut f = fixture();
        let env = sign(&mut f, &message(0, 1000));
        let w = ReplayWindow::default();
        assert_eq!(check(&f, &env, 1500, &w), Verdict::Accept);
        assert_eq!(check(&f, &env, 1501, &w), Verdict::Reject(RejectReason::Stale));
        assert_eq!(check(&f, &env, 999, &w), Verdict::Reject(RejectReason::Stale));
    }

    #[test]
    fn expired_certificate() {
        let mut f = fixture();
        let env = sign(&mut f, &message(0, 10_001));
        assert_eq!(
            check(&f, &env, 10_001, &ReplayWindow::default()),
            Verdict::Reject(RejectReason::CertificateExpired)
        );
    }

    #[test]
    fn other_anchor_is_untrusted() {
        let mut f = fixture();
        let env = sign(&mut f, &message(0, 1000));
        f.policy.trust_anchor = [9; 32];
        assert_eq!(
            check(&f, &env, 1000, &ReplayWindow::default()),
            Verdict::Reject(RejectReason::UntrustedIssuer)
        );
    }

    #[test]
    fn spoofed_issuer_field_is_untrusted() {
        let mut f = fixture();
        let mut attacker = MockBackend::default();
        let keys = attacker.keygen(b"attacker").unwrap();
        let mut cert = Certificate::self_issued(*b"RSU1", 0, 10_000, attacker.scheme(), keys.verification_key);
        cert.issuer_fingerprint = f.policy.trust_anchor;
        let msg = message(0, 1000);
        let mut env = SignedEnvelope::ica(msg.encode(), cert.encode(), vec![]);
        env.signature = attacker.sign(&keys.signing_key, &env.signed_prefix()).unwrap().0;
        f.cert = cert;
        assert_eq!(
            check(&f, &env, 1000, &ReplayWindow::default()),
            Verdict::Reject(RejectReason::UntrustedIssuer)
        );
    }

    #[test]
    fn check_order_signature_first() {
        // Bad signature AND stale AND untrusted: signature wins.
        let mut f = fixture();
        let mut env = sign(&mut f, &message(0, 0));
        env.signature[0] ^= 1;
        f.policy.trust_anchor = [0; 32];
        assert_eq!(
            check(&f, &env, 9000, &ReplayWindow::default()),
            Verdict::Reject(RejectReason::BadSignature)
        );
    }

    #[test]
    fn replay_protection_can_be_disabled() {
        let mut f = fixture();
        let msg = message(0, 1000);
        let env = sign(&mut f, &msg);
        let mut window = ReplayWindow::default();
        window.record(&msg, 1000, 500);
        f.policy.replay_protection = false;
        assert_eq!(check(&f, &env, 1100, &window), Verdict::Accept);
    }

    #[test]
    fn verdict_is_pure() {
        let mut f = fixture();
        let env = sign(&mut f, &message(1, 1000));
        let w = ReplayWindow::default();
        let a = verify(&f.backend, &f.cert, &env.signed_prefix(), &env.signature, 1000, &w, &f.policy);
        let b = verify(&f.backend, &f.cert, &env.signed_prefix(), &env.signature, 1000, &w, &f.policy);
        assert_eq!(a, b);
    }

    #[test]
    fn window_capacity_and_expiry() {
        let mut w = ReplayWindow::new(4);
        for c in 0..6 {
            w.record(&message(c, 1000), 1000, 500);
        }
        assert_eq!(w.len(), 4);
        assert!(!w.contains(*b"RSU1", 0, 1000, 500));
        assert!(w.contains(*b"RSU1", 5, 1000, 500));
        // Old entries expire with the freshness window.
        w.record(&message(9, 2000), 2000, 500);
        assert_eq!(w.len(), 1);
    }

    #[test]
    fn msg_count_wrap_is_not_replay() {
        // 10 Hz sender wraps msg_count every 12.8 s, far beyond freshness.
        let mut w = ReplayWindow::default();
        for i in 0..300u32 {
            let msg = message((i % 128) as u8, i * 100);
            let now = u64::from(i) * 100;
            assert!(!w.contains(msg.sender_id, msg.msg_count, now, 500), "message {i}");
            w.record(&msg, now, 500);
        }
    }
}
