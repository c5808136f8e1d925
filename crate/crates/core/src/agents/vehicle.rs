use serde::Serialize;

use crate::messaging::certificate::Certificate;
use crate::messaging::timing::{Actor, TimingKind, TimingSample};
use crate::messaging::verify::{verify, RejectReason, ReplayWindow, Verdict, VerifyPolicy};
use crate::messaging::wire::SignedEnvelope;
use crate::messaging::{IcaMessage, Millis, SignatureBackend};
use crate::mobility::VehicleId;
use crate::sim::config::AttackKind;

/// Ground truth about a transmission, known to the simulator and used only
/// for accounting.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case", tag = "type", content = "attack")]
pub enum Provenance {
    Genuine,
    Adversarial(AttackKind),
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RxRecord {
    pub step: u64,
    pub tx_index: u64,
    pub verdict: Verdict,
    pub timing: Option<TimingSample>,
    pub provenance: Provenance,
}

/// Verdict, verification timing, and for accepted envelopes the message
/// plus the certificate if one was attached.
type Evaluation = (Verdict, Option<TimingSample>, Option<(IcaMessage, Option<Certificate>)>);

pub struct VehicleAgent {
    pub id: VehicleId,
    policy: VerifyPolicy,
    replay_window: ReplayWindow,
    cached_certificate: Option<Certificate>,
    rx_log: Vec<RxRecord>,
    /// Genuine warnings broadcast while this vehicle was active.
    pub expected_count: u64,
    /// Genuine warnings accepted.
    pub received_count: u64,
}

impl VehicleAgent {
    pub fn new(id: VehicleId, policy: VerifyPolicy, replay_capacity: usize) -> Self {
        Self {
            id,
            policy,
            replay_window: ReplayWindow::new(replay_capacity),
            cached_certificate: None,
            rx_log: Vec::new(),
            expected_count: 0,
            received_count: 0,
        }
    }

    pub fn rx_log(&self) -> &[RxRecord] {
        &self.rx_log
    }

    pub fn verify_durations(&self) -> impl Iterator<Item = Millis> + '_ {
        self.rx_log.iter().filter_map(|r| r.timing.map(|t| t.duration))
    }

    fn evaluate(&self, backend: &dyn SignatureBackend, bytes: &[u8], now_ms: u64, step: u64) -> Evaluation {
        let Ok(envelope) = SignedEnvelope::decode(bytes) else {
            return (Verdict::Reject(RejectReason::Malformed), None, None);
        };
        let (cert, attached) = if envelope.certificate.is_empty() {
            match &self.cached_certificate {
                Some(c) => (c.clone(), false),
                None => return (Verdict::Reject(RejectReason::MissingCertificate), None, None),
            }
        } else {
            match Certificate::decode(&envelope.certificate) {
                Ok(c) => (c, true),
                Err(_) => return (Verdict::Reject(RejectReason::Malformed), None, None),
            }
        };
        let outcome = verify(
            backend,
            &cert,
            &envelope.signed_prefix(),
            &envelope.signature,
            now_ms,
            &self.replay_window,
            &self.policy,
        );
        let timing = outcome.timing.map(|duration| TimingSample {
            kind: TimingKind::Verify,
            duration,
            actor: Actor::Vehicle(self.id),
            step_index: step,
        });
        let accepted = outcome
            .message
            .filter(|_| outcome.verdict.is_accept())
            .map(|m| (m, attached.then_some(cert)));
        (outcome.verdict, timing, accepted)
    }

    /// Decode, verify, and update counters, replay window and receive log.
    /// Total over arbitrary bytes.
    pub fn on_receive(
        &mut self,
        backend: &dyn SignatureBackend,
        bytes: &[u8],
        now_ms: u64,
        step: u64,
        tx_index: u64,
        provenance: Provenance,
    ) -> Verdict {
        let (verdict, timing, accepted) = self.evaluate(backend, bytes, now_ms, step);
        if let Some((msg, cert)) = accepted {
            self.replay_window.record(&msg, now_ms, self.policy.freshness_ms);
            if let Some(cert) = cert {
                self.cached_certificate = Some(cert);
            }
            if provenance == Provenance::Genuine {
                self.received_count += 1;
            }
        }
        self.rx_log.push(RxRecord {
            step,
            tx_index,
            verdict,
            timing,
            provenance,
        });
        verdict
    }
}
