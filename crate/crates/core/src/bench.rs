//! Standalone signing and verification micro-benchmark over
//! representative ICA envelopes.

use serde::Serialize;
use thiserror::Error;

use crate::messaging::crypto::{BackendKind, CryptoError};
use crate::messaging::message::{IcaMessage, EVENT_INTERSECTION_COLLISION_WARNING};
use crate::messaging::{keygen, SignedEnvelope};
use crate::metrics::stats::{sample_stats, TimingStats};
use crate::sim::rng::RngStream;

pub const DEFAULT_ITERATIONS: usize = 1000;

#[derive(Debug, Error)]
pub enum BenchError {
    #[error("benchmarking requires a real signature backend, got {0}")]
    MockBackend(&'static str),
    #[error("iterations must be at least 1")]
    TooFewIterations,
    #[error(transparent)]
    Crypto(#[from] CryptoError),
    #[error("signature produced at iteration {0} failed to verify")]
    VerifyFailed(usize),
}

#[derive(Debug, Clone, Serialize)]
pub struct BenchReport {
    pub backend: String,
    pub iterations: usize,
    pub sign: TimingStats,
    pub verify: TimingStats,
    pub signature_len_max: usize,
    pub verification_key_len: usize,
}

/// Signed prefixes for warnings naming two and eight vehicles.
fn representative_prefixes() -> Vec<Vec<u8>> {
    [2u16, 8]
        .iter()
        .map(|&n| {
            let msg = IcaMessage {
                msg_count: 7,
                sender_id: *b"RSU\x01",
                timestamp_ms: 2300,
                intersection_id: 829,
                event_flag: EVENT_INTERSECTION_COLLISION_WARNING,
                conflicting_vehicles: (1..=n).collect(),
            };
            SignedEnvelope::ica(msg.encode(), Vec::new(), Vec::new()).signed_prefix()
        })
        .collect()
}

/// Signs and verifies `iterations` times, alternating the two-vehicle and
/// eight-vehicle prefixes. Only the backend calls are timed.
pub fn bench_crypto(kind: BackendKind, iterations: usize, seed: u64) -> Result<BenchReport, BenchError> {
    if kind == BackendKind::Mock {
        return Err(BenchError::MockBackend(kind.as_str()));
    }
    if iterations == 0 {
        return Err(BenchError::TooFewIterations);
    }
    let mut backend = kind.instantiate(RngStream::new(seed, RngStream::RSU_SIGN));
    let (key, cert) = keygen(backend.as_mut(), b"bench-rsu", *b"RSU\x01", 0, u32::MAX)?;
    let prefixes = representative_prefixes();

    let mut sign = Vec::with_capacity(iterations);
    let mut verify = Vec::with_capacity(iterations);
    let mut signature_len_max = 0;
    for i in 0..iterations {
        let prefix = &prefixes[i % prefixes.len()];
        let (sig, t_sign) = backend.sign(&key, prefix)?;
        let (ok, t_verify) = backend.verify(&cert.verification_key, prefix, &sig);
        let t_verify = match (ok, t_verify) {
            (true, Some(t)) => t,
            _ => return Err(BenchError::VerifyFailed(i)),
        };
        signature_len_max = signature_len_max.max(sig.len());
        sign.push(t_sign.0);
        verify.push(t_verify.0);
    }
    Ok(BenchReport {
        backend: backend.name().to_owned(),
        iterations,
        sign: sample_stats(&sign).expect("non-empty").into(),
        verify: sample_stats(&verify).expect("non-empty").into(),
        signature_len_max,
        verification_key_len: cert.verification_key.len(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn mock_is_refused() {
        assert!(matches!(
            bench_crypto(BackendKind::Mock, 10, 1),
            Err(BenchError::MockBackend(_))
        ));
    }

    #[test]
    fn single_iteration_has_no_std() {
        let r = bench_crypto(BackendKind::Falcon, 1, 1).unwrap();
        assert_eq!(r.sign.n, 1);
        assert!(r.sign.std.is_none());
        assert!(r.verify.std.is_none());
    }

    #[test]
    fn falcon_small_run() {
        let r = bench_crypto(BackendKind::Falcon, 20, 1).unwrap();
        assert_eq!(r.sign.n, 20);
        assert_eq!(r.verify.n, 20);
        assert_eq!(r.verification_key_len, 897);
        assert!(r.signature_len_max <= 666);
    }
}
