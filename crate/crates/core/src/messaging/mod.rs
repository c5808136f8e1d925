//! ICA message, certificate and signed envelope, plus the signature
//! backends and the receiver-side verification pipeline.

pub mod certificate;
pub mod crypto;
pub mod message;
pub mod timing;
pub mod verify;
pub mod wire;

pub use certificate::Certificate;
pub use crypto::{BackendKind, CryptoError, KeyPair, Millis, SignatureBackend, SigningKey};
pub use message::IcaMessage;
pub use timing::{Actor, TimingKind, TimingSample};
pub use verify::{RejectReason, ReplayWindow, Verdict, VerifyPolicy};
pub use wire::{DecodeError, SignedEnvelope};

use certificate::Fingerprint;

/// Generates a key pair from `seed` and wraps the verification key in a
/// self-issued certificate valid over `[not_before, not_after]` ms.
pub fn keygen(
    backend: &mut dyn SignatureBackend,
    seed: &[u8],
    subject_id: [u8; 4],
    not_before: u32,
    not_after: u32,
) -> Result<(SigningKey, Certificate), CryptoError> {
    let KeyPair {
        signing_key,
        verification_key,
    } = backend.keygen(seed)?;
    let cert = Certificate::self_issued(subject_id, not_before, not_after, backend.scheme(), verification_key);
    Ok((signing_key, cert))
}

/// Signs `version | msg_type | payload` and assembles the envelope. The
/// timing sample covers the backend call only.
pub fn sign_envelope(
    backend: &mut dyn SignatureBackend,
    key: &SigningKey,
    payload: Vec<u8>,
    certificate: Vec<u8>,
    actor: Actor,
    step_index: u64,
) -> Result<(SignedEnvelope, TimingSample), CryptoError> {
    let mut envelope = SignedEnvelope::ica(payload, certificate, Vec::new());
    let prefix = envelope.signed_prefix();
    let (signature, duration) = backend.sign(key, &prefix)?;
    envelope.signature = signature;
    let sample = TimingSample {
        kind: TimingKind::Sign,
        duration,
        actor,
        step_index,
    };
    Ok((envelope, sample))
}

/// The fingerprint receivers should be provisioned with for `cert`.
pub fn trust_anchor_for(cert: &Certificate) -> Fingerprint {
    cert.fingerprint()
}
