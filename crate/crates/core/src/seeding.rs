//! Seed derivation shared by every randomized stage.

use sha2::{Digest, Sha256};

/// First 8 bytes (big-endian) of SHA-256 over `label`.
pub fn stable_hash(label: &str) -> u64 {
    let digest = Sha256::digest(label.as_bytes());
    let mut bytes = [0u8; 8];
    bytes.copy_from_slice(&digest[..8]);
    u64::from_be_bytes(bytes)
}

/// Per-item seed: `seed XOR stable_hash(label)`.
pub fn derive_seed(seed: u64, label: &str) -> u64 {
    seed ^ stable_hash(label)
}
