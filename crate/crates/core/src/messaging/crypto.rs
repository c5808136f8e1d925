//! Signature backends.
//!
//! [`FalconBackend`] wraps the `fn-dsa` Falcon-512 implementation. Key
//! generation and signing draw from seeded streams, so a scenario produces
//! the same keys and signatures on every run; only the measured timings
//! vary. [`MockBackend`] keeps the Falcon-512 key and signature sizes but
//! replaces the math with SHA-256 and reports fixed timings, for tests that
//! need byte-stable reports.

use std::fmt;
use std::str::FromStr;
use std::time::Instant;

use fn_dsa::{
    sign_key_size, signature_size, vrfy_key_size, KeyPairGenerator, KeyPairGeneratorStandard,
    SigningKey as _, SigningKeyStandard, VerifyingKey as _, VerifyingKeyStandard, DOMAIN_NONE,
    FN_DSA_LOGN_512, HASH_ID_RAW,
};
use rand::SeedableRng;
use rand_chacha::ChaCha20Rng;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use thiserror::Error;

use crate::sim::rng::RngStream;

pub const FALCON_512_VERIFICATION_KEY_LEN: usize = vrfy_key_size(FN_DSA_LOGN_512);
pub const FALCON_512_MAX_SIGNATURE_LEN: usize = signature_size(FN_DSA_LOGN_512);
const FALCON_512_SIGNING_KEY_LEN: usize = sign_key_size(FN_DSA_LOGN_512);

/// Duration in milliseconds.
#[derive(Debug, Clone, Copy, PartialEq, PartialOrd, Default, Serialize, Deserialize)]
#[serde(transparent)]
pub struct Millis(pub f64);

impl Millis {
    pub fn from_instant(start: Instant) -> Self {
        // Instant can report zero for very short calls on coarse clocks.
        let ns = start.elapsed().as_nanos().max(1);
        Millis(ns as f64 / 1e6)
    }
}

impl fmt::Display for Millis {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{:.3} ms", self.0)
    }
}

/// Certificate scheme identifier.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct SchemeId(pub u8);

impl SchemeId {
    pub const FALCON_512: SchemeId = SchemeId(0x01);
    /// Mock backend with Falcon-512 sizes.
    pub const MOCK_FALCON_512: SchemeId = SchemeId(0xF1);

    pub fn verification_key_len(self) -> Option<usize> {
        match self {
            SchemeId::FALCON_512 | SchemeId::MOCK_FALCON_512 => Some(FALCON_512_VERIFICATION_KEY_LEN),
            _ => None,
        }
    }
}

#[derive(Debug, Error)]
pub enum CryptoError {
    #[error("backend {backend} does not support {what}")]
    Unsupported { backend: &'static str, what: String },
    #[error("malformed signing key")]
    BadSigningKey,
    #[error("signing failed")]
    SignFailed,
    #[error("unknown crypto backend {0:?} (expected \"falcon\" or \"mock\")")]
    UnknownBackend(String),
}

#[derive(Clone, PartialEq, Eq)]
pub struct SigningKey(Vec<u8>);

impl SigningKey {
    pub fn as_bytes(&self) -> &[u8] {
        &self.0
    }
}

impl fmt::Debug for SigningKey {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "SigningKey({} bytes)", self.0.len())
    }
}

#[derive(Debug, Clone)]
pub struct KeyPair {
    pub signing_key: SigningKey,
    pub verification_key: Vec<u8>,
}

pub trait SignatureBackend {
    fn name(&self) -> &'static str;

    fn scheme(&self) -> SchemeId;

    /// Deterministic for a fixed seed.
    fn keygen(&mut self, seed: &[u8]) -> Result<KeyPair, CryptoError>;

    /// Returns the signature and the duration of the signing call alone.
    fn sign(&mut self, key: &SigningKey, message: &[u8]) -> Result<(Vec<u8>, Millis), CryptoError>;

    /// `None` timing means no cryptographic call was made because the key
    /// did not decode.
    fn verify(&self, verification_key: &[u8], message: &[u8], signature: &[u8]) -> (bool, Option<Millis>);
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum BackendKind {
    #[default]
    Falcon,
    Mock,
}

impl BackendKind {
    pub const ENV_VAR: &'static str = "PQV2X_BACKEND";

    /// Reads `PQV2X_BACKEND`; unset means Falcon.
    pub fn from_env() -> Result<Self, CryptoError> {
        match std::env::var(Self::ENV_VAR) {
            Ok(v) => v.parse(),
            Err(_) => Ok(BackendKind::Falcon),
        }
    }

    pub fn as_str(self) -> &'static str {
        match self {
            BackendKind::Falcon => "falcon",
            BackendKind::Mock => "mock",
        }
    }

    /// `nonce_stream` feeds the per-signature randomness.
    pub fn instantiate(self, nonce_stream: RngStream) -> Box<dyn SignatureBackend> {
        match self {
            BackendKind::Falcon => Box::new(FalconBackend::new(nonce_stream)),
            BackendKind::Mock => Box::new(MockBackend::default()),
        }
    }
}

impl FromStr for BackendKind {
    type Err = CryptoError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.trim().to_ascii_lowercase().as_str() {
            "falcon" | "falcon-512" | "falcon512" => Ok(BackendKind::Falcon),
            "mock" => Ok(BackendKind::Mock),
            other => Err(CryptoError::UnknownBackend(other.to_owned())),
        }
    }
}

fn seed_rng(seed: &[u8]) -> ChaCha20Rng {
    ChaCha20Rng::from_seed(Sha256::digest(seed).into())
}

pub struct FalconBackend {
    nonces: RngStream,
}

impl FalconBackend {
    pub fn new(nonces: RngStream) -> Self {
        Self { nonces }
    }
}

impl SignatureBackend for FalconBackend {
    fn name(&self) -> &'static str {
        "falcon-512"
    }

    fn scheme(&self) -> SchemeId {
        SchemeId::FALCON_512
    }

    fn keygen(&mut self, seed: &[u8]) -> Result<KeyPair, CryptoError> {
        let mut rng = seed_rng(seed);
        let mut kg = KeyPairGeneratorStandard::default();
        let mut sk = vec![0u8; FALCON_512_SIGNING_KEY_LEN];
        let mut vk = vec![0u8; FALCON_512_VERIFICATION_KEY_LEN];
        kg.keygen(FN_DSA_LOGN_512, &mut rng, &mut sk, &mut vk);
        Ok(KeyPair {
            signing_key: SigningKey(sk),
            verification_key: vk,
        })
    }

    fn sign(&mut self, key: &SigningKey, message: &[u8]) -> Result<(Vec<u8>, Millis), CryptoError> {
        let mut sk = SigningKeyStandard::decode(&key.0).ok_or(CryptoError::BadSigningKey)?;
        let mut sig = vec![0u8; FALCON_512_MAX_SIGNATURE_LEN];
        let start = Instant::now();
        sk.sign(&mut self.nonces, &DOMAIN_NONE, &HASH_ID_RAW, message, &mut sig);
        let elapsed = Millis::from_instant(start);
        Ok((sig, elapsed))
    }

    fn verify(&self, verification_key: &[u8], message: &[u8], signature: &[u8]) -> (bool, Option<Millis>) {
        let Some(vk) = VerifyingKeyStandard::decode(verification_key) else {
            return (false, None);
        };
        let start = Instant::now();
        let ok = vk.verify(signature, &DOMAIN_NONE, &HASH_ID_RAW, message);
        (ok, Some(Millis::from_instant(start)))
    }
}

/// SHA-256 in counter mode, truncated to `len` bytes.
fn expand(parts: &[&[u8]], len: usize) -> Vec<u8> {
    let mut out = Vec::with_capacity(len + 32);
    let mut counter = 0u32;
    while out.len() < len {
        let mut h = Sha256::new();
        h.update(counter.to_be_bytes());
        for p in parts {
            h.update((p.len() as u64).to_be_bytes());
            h.update(p);
        }
        out.extend_from_slice(&h.finalize());
        counter += 1;
    }
    out.truncate(len);
    out
}

/// Not a signature scheme: anyone holding the verification key can sign.
/// It exists for reproducible tests and reports.
#[derive(Debug, Clone, Copy)]
pub struct MockBackend {
    pub sign_time: Millis,
    pub verify_time: Millis,
}

impl Default for MockBackend {
    fn default() -> Self {
        Self {
            sign_time: Millis(0.30),
            verify_time: Millis(0.11),
        }
    }
}

impl SignatureBackend for MockBackend {
    fn name(&self) -> &'static str {
        "mock"
    }

    fn scheme(&self) -> SchemeId {
        SchemeId::MOCK_FALCON_512
    }

    fn keygen(&mut self, seed: &[u8]) -> Result<KeyPair, CryptoError> {
        let vk = expand(&[b"mock-vk", seed], FALCON_512_VERIFICATION_KEY_LEN);
        Ok(KeyPair {
            signing_key: SigningKey(vk.clone()),
            verification_key: vk,
        })
    }

    fn sign(&mut self, key: &SigningKey, message: &[u8]) -> Result<(Vec<u8>, Millis), CryptoError> {
        if key.0.len() != FALCON_512_VERIFICATION_KEY_LEN {
            return Err(CryptoError::BadSigningKey);
        }
        let sig = expand(&[b"mock-sig", &key.0, message], FALCON_512_MAX_SIGNATURE_LEN);
        Ok((sig, self.sign_time))
    }

    fn verify(&self, verification_key: &[u8], message: &[u8], signature: &[u8]) -> (bool, Option<Millis>) {
        if verification_key.len() != FALCON_512_VERIFICATION_KEY_LEN {
            return (false, None);
        }
        let expected = expand(&[b"mock-sig", verification_key, message], FALCON_512_MAX_SIGNATURE_LEN);
        (expected == signature, Some(self.verify_time))
    }
}
