//! Seed derivation shared by every stochastic component.
//!
//! A component seed is the first eight bytes (little endian) of
//! `SHA-256(master_seed_le || component || index_le)`. The hash is platform
//! independent, so derived streams agree across machines and thread counts.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use sha2::{Digest, Sha256};

pub type Rng = ChaCha8Rng;

pub fn derive_seed(master: u64, component: &str, index: u64) -> u64 {
    let mut hasher = Sha256::new();
    hasher.update(master.to_le_bytes());
    hasher.update(component.as_bytes());
    hasher.update(index.to_le_bytes());
    let digest = hasher.finalize();
    let mut bytes = [0u8; 8];
    bytes.copy_from_slice(&digest[..8]);
    u64::from_le_bytes(bytes)
}

pub fn rng_from_seed(seed: u64) -> Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

pub fn derived_rng(master: u64, component: &str, index: u64) -> Rng {
    rng_from_seed(derive_seed(master, component, index))
}

/// Hex SHA-256 of arbitrary bytes, used for audit hashes.
pub fn sha256_hex(bytes: &[u8]) -> String {
    let digest = Sha256::digest(bytes);
    digest.iter().map(|b| format!("{b:02x}")).collect()
}
