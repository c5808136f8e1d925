//! X.509-style certificate carrying the sender's verification key.
//!
//! ```text
//! subject_id(4) | not_before_ms(4) | not_after_ms(4) | scheme_id(1)
//!   | key_len(2) | verification_key | issuer_fingerprint(32)
//! ```
//!
//! Certificates are self-issued roots: `issuer_fingerprint` is the SHA-256
//! of every preceding field, and receivers trust a certificate only when
//! that digest both recomputes and equals their provisioned anchor.

use sha2::{Digest, Sha256};

use super::crypto::SchemeId;
use super::wire::{put_prefixed, DecodeError, Reader};

pub type Fingerprint = [u8; 32];

#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct Certificate {
    pub subject_id: [u8; 4],
    pub not_before: u32,
    pub not_after: u32,
    pub scheme_id: SchemeId,
    pub verification_key: Vec<u8>,
    pub issuer_fingerprint: Fingerprint,
}

impl Certificate {
    pub fn self_issued(
        subject_id: [u8; 4],
        not_before: u32,
        not_after: u32,
        scheme_id: SchemeId,
        verification_key: Vec<u8>,
    ) -> Self {
        let mut cert = Self {
            subject_id,
            not_before,
            not_after,
            scheme_id,
            verification_key,
            issuer_fingerprint: [0; 32],
        };
        cert.issuer_fingerprint = cert.fingerprint();
        cert
    }

    fn tbs_bytes(&self) -> Vec<u8> {
        let mut out = Vec::with_capacity(15 + self.verification_key.len());
        out.extend_from_slice(&self.subject_id);
        out.extend_from_slice(&self.not_before.to_be_bytes());
        out.extend_from_slice(&self.not_after.to_be_bytes());
        out.push(self.scheme_id.0);
        put_prefixed(&mut out, &self.verification_key);
        out
    }

    /// Digest over all fields except the issuer fingerprint itself.
    pub fn fingerprint(&self) -> Fingerprint {
        Sha256::digest(self.tbs_bytes()).into()
    }

    pub fn is_valid_at(&self, now_ms: u64) -> bool {
        u64::from(self.not_before) <= now_ms && now_ms <= u64::from(self.not_after)
    }

    pub fn encode(&self) -> Vec<u8> {
        let mut out = self.tbs_bytes();
        out.extend_from_slice(&self.issuer_fingerprint);
        out
    }

    pub fn decode(bytes: &[u8]) -> Result<Self, DecodeError> {
        let mut r = Reader::new(bytes);
        let subject_id = r.array("subject_id")?;
        let not_before = r.u32("not_before")?;
        let not_after = r.u32("not_after")?;
        let scheme_id = SchemeId(r.u8("scheme_id")?);
        let verification_key = r.prefixed("verification_key")?.to_vec();
        let issuer_fingerprint = r.array("issuer_fingerprint")?;
        r.finish()?;
        if not_before > not_after {
            return Err(DecodeError::Invalid {
                field: "validity",
                reason: format!("not_before {not_before} > not_after {not_after}"),
            });
        }
        match scheme_id.verification_key_len() {
            None => {
                return Err(DecodeError::Invalid {
                    field: "scheme_id",
                    reason: format!("unknown scheme {:#04x}", scheme_id.0),
                })
            }
            Some(len) if len != verification_key.len() => {
                return Err(DecodeError::Invalid {
                    field: "verification_key",
                    reason: format!("{} bytes, scheme requires {len}", verification_key.len()),
                })
            }
            Some(_) => {}
        }
        Ok(Self {
            subject_id,
            not_before,
            not_after,
            scheme_id,
            verification_key,
            issuer_fingerprint,
        })
    }
}
