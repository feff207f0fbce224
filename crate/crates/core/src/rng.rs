//! Deterministic random-stream derivation.
//!
//! A single master seed fans out into independent streams, one per
//! `(purpose, indices)` key. Every sample, training iteration, measurement
//! and data draw in the crate pulls from its own keyed stream, so results do
//! not depend on evaluation order or thread count, and any individual stream
//! can be reproduced in isolation.

use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

/// Factory for reproducible random streams keyed off one master seed.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct Streams {
    master: u64,
}

impl Streams {
    pub fn new(master_seed: u64) -> Self {
        Self { master: master_seed }
    }

    pub fn master(&self) -> u64 {
        self.master
    }

    /// Derives the stream for `(purpose, indices)`.
    ///
    /// The key is hashed with SHA-256 (purpose length-prefixed, indices in
    /// little-endian order) and the digest seeds a ChaCha8 generator, so
    /// distinct keys yield statistically independent streams and the same
    /// key always yields the same stream.
    pub fn stream(&self, purpose: &str, indices: &[u64]) -> ChaCha8Rng {
        let mut hasher = Sha256::new();
        hasher.update(self.master.to_le_bytes());
        hasher.update((purpose.len() as u64).to_le_bytes());
        hasher.update(purpose.as_bytes());
        for &index in indices {
            hasher.update(index.to_le_bytes());
        }
        let digest: [u8; 32] = hasher.finalize().into();
        ChaCha8Rng::from_seed(digest)
    }

    /// Convenience for reconstructing the stream a [`SeedRecord`] describes.
    pub fn stream_for(&self, record: &SeedRecord) -> ChaCha8Rng {
        self.stream(&record.purpose, &record.indices)
    }
}

/// Serializable description of how a stream was derived, stored alongside
/// generated artifacts so any draw can be replayed later.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct SeedRecord {
    pub master_seed: u64,
    pub purpose: String,
    pub indices: Vec<u64>,
}

impl SeedRecord {
    pub fn new(master_seed: u64, purpose: &str, indices: &[u64]) -> Self {
        Self {
            master_seed,
            purpose: purpose.to_string(),
            indices: indices.to_vec(),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::Rng;

    #[test]
    fn same_key_same_stream() {
        let streams = Streams::new(42);
        let a: Vec<u64> = streams.stream("x", &[1, 2]).sample_iter(rand::distributions::Standard).take(8).collect();
        let b: Vec<u64> = streams.stream("x", &[1, 2]).sample_iter(rand::distributions::Standard).take(8).collect();
        assert_eq!(a, b);
    }

    #[test]
    fn distinct_keys_distinct_streams() {
        let streams = Streams::new(42);
        let base: u64 = streams.stream("x", &[1, 2]).gen();
        assert_ne!(base, streams.stream("x", &[1, 3]).gen::<u64>());
        assert_ne!(base, streams.stream("x", &[2, 1]).gen::<u64>());
        assert_ne!(base, streams.stream("y", &[1, 2]).gen::<u64>());
        assert_ne!(base, Streams::new(43).stream("x", &[1, 2]).gen::<u64>());
    }

    #[test]
    fn purpose_is_length_prefixed() {
        // "ab" + [0x636465...] must not collide with "abc" + shifted indices;
        // the cheap check below just pins two adjacent purposes apart.
        let streams = Streams::new(7);
        let a: u64 = streams.stream("ab", &[]).gen();
        let b: u64 = streams.stream("abc", &[]).gen();
        assert_ne!(a, b);
    }

    #[test]
    fn seed_record_replays() {
        let streams = Streams::new(9);
        let record = SeedRecord::new(9, "data", &[3, 0]);
        let direct: u64 = streams.stream("data", &[3, 0]).gen();
        let replayed: u64 = streams.stream_for(&record).gen();
        assert_eq!(direct, replayed);
    }
}
