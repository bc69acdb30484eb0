//! Stable seed derivation.
//!
//! Every random stream in the pipeline is keyed by a base seed plus a list of
//! string labels (category, language pair, record id, ...). The derivation is
//! a SHA-256 over the labels, so it does not depend on `Hash` implementations
//! or platform word size.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use sha2::{Digest, Sha256};

pub fn derive_seed(base: u64, parts: &[&str]) -> u64 {
    let mut hasher = Sha256::new();
    hasher.update(base.to_le_bytes());
    for part in parts {
        hasher.update((part.len() as u64).to_le_bytes());
        hasher.update(part.as_bytes());
    }
    let digest = hasher.finalize();
    let mut bytes = [0u8; 8];
    bytes.copy_from_slice(&digest[..8]);
    u64::from_le_bytes(bytes)
}

pub fn rng_from(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

pub fn derive_rng(base: u64, parts: &[&str]) -> ChaCha8Rng {
    rng_from(derive_seed(base, parts))
}
