use rand::{CryptoRng, Error, Rng, RngCore, SeedableRng};
use rand_chacha::ChaCha20Rng;
use sha2::{Digest, Sha256};

/// Deterministic random stream identified by `(seed, label)`.
///
/// The ChaCha20 key is `SHA-256(seed_le || label)`, so each concern
/// (channel loss, attack timing, signing nonces) draws from its own
/// sequence and a new consumer never shifts the draws of an existing one.
#[derive(Debug, Clone)]
pub struct RngStream {
    seed: u64,
    label: String,
    inner: ChaCha20Rng,
}

impl RngStream {
    pub const CHANNEL_LOSS: &'static str = "channel-loss";
    pub const ATTACK: &'static str = "attack";
    pub const RSU_SIGN: &'static str = "rsu-sign";
    pub const ATTACKER_SIGN: &'static str = "attacker-sign";

    pub fn new(seed: u64, label: &str) -> Self {
        let mut hasher = Sha256::new();
        hasher.update(seed.to_le_bytes());
        hasher.update(label.as_bytes());
        let key: [u8; 32] = hasher.finalize().into();
        Self {
            seed,
            label: label.to_owned(),
            inner: ChaCha20Rng::from_seed(key),
        }
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    pub fn label(&self) -> &str {
        &self.label
    }

    /// Uniform draw in `[0, 1)`.
    pub fn unit(&mut self) -> f64 {
        self.inner.gen::<f64>()
    }

    pub fn below(&mut self, bound: u64) -> u64 {
        self.inner.gen_range(0..bound)
    }
}

impl RngCore for RngStream {
    fn next_u32(&mut self) -> u32 {
        self.inner.next_u32()
    }

    fn next_u64(&mut self) -> u64 {
        self.inner.next_u64()
    }

    fn fill_bytes(&mut self, dest: &mut [u8]) {
        self.inner.fill_bytes(dest)
    }

    fn try_fill_bytes(&mut self, dest: &mut [u8]) -> Result<(), Error> {
        self.inner.try_fill_bytes(dest)
    }
}

impl CryptoRng for RngStream {}
