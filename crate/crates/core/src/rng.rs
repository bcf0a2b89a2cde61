//! Seeded randomness. ChaCha8 streams are platform independent; sub-seeds
//! are derived by hashing so that every component of a run draws from its
//! own stream.

use rand_chacha::ChaCha8Rng;
use rand_core::{RngCore, SeedableRng};
use sha2::{Digest, Sha256};

use crate::error::{Error, Result};

#[derive(Clone, Debug)]
pub struct SeededRng(ChaCha8Rng);

impl SeededRng {
    pub fn new(seed: u64) -> Self {
        Self(ChaCha8Rng::seed_from_u64(seed))
    }

    pub fn next_u64(&mut self) -> u64 {
        self.0.next_u64()
    }

    /// Uniform in `[0, 1)` with 53 random bits.
    pub fn next_f64(&mut self) -> f64 {
        (self.0.next_u64() >> 11) as f64 * (1.0 / (1u64 << 53) as f64)
    }
}

const SUBSEED_DOMAIN: &[u8] = b"hoal/subseed/v1";

/// Derives an independent 64-bit seed for `(label, index)` under `master`.
///
/// The seed is the first 8 bytes (little endian) of
/// `SHA-256(domain || master_le || len(label)_le || label || index_le)`.
pub fn derive_subseed(master: u64, label: &str, index: u64) -> Result<u64> {
    if label.is_empty() {
        return Err(Error::Empty("subseed label"));
    }
    let digest = sha256(&[
        SUBSEED_DOMAIN,
        &master.to_le_bytes(),
        &(label.len() as u64).to_le_bytes(),
        label.as_bytes(),
        &index.to_le_bytes(),
    ]);
    let mut head = [0u8; 8];
    head.copy_from_slice(&digest[..8]);
    Ok(u64::from_le_bytes(head))
}

fn sha256(parts: &[&[u8]]) -> [u8; 32] {
    let mut h = Sha256::new();
    for p in parts {
        h.update(p);
    }
    let mut out = [0u8; 32];
    out.copy_from_slice(&h.finalize());
    out
}
