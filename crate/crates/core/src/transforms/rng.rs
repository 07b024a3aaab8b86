use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use sha2::{Digest, Sha256};

/// Seed shared by a whole run. Each example draws from its own stream, keyed
/// by `SHA-256("narc-rng-v1" || seed (LE) || id)` and fed to ChaCha8, so the
/// output does not depend on iteration or thread order.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct SeededRng {
    pub seed: u64,
}

impl SeededRng {
    pub const ALGORITHM: &'static str = "chacha8(sha256(seed, id))";

    pub fn new(seed: u64) -> Self {
        SeededRng { seed }
    }

    pub fn stream(&self, id: &str) -> ChaCha8Rng {
        ChaCha8Rng::from_seed(self.key(id))
    }

    fn key(&self, id: &str) -> [u8; 32] {
        let mut hasher = Sha256::new();
        hasher.update(b"narc-rng-v1");
        hasher.update(self.seed.to_le_bytes());
        hasher.update(id.as_bytes());
        hasher.finalize().into()
    }
}
