//! Deterministic random-number substreams.
//!
//! Every stochastic step draws from its own stream keyed by
//! `(master_seed, tag, index)`. The key is hashed with SHA-256 and the digest
//! seeds a ChaCha8 generator, so a stream depends only on its key and never on
//! which thread asked for it or in what order.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

pub type Stream = ChaCha8Rng;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(transparent)]
pub struct SeedSpec {
    pub master_seed: u64,
}

impl SeedSpec {
    pub fn new(master_seed: u64) -> Self {
        SeedSpec { master_seed }
    }

    fn digest(&self, tag: &str, index: u64) -> [u8; 32] {
        let mut h = Sha256::new();
        h.update(b"fkrfe/v1");
        h.update(self.master_seed.to_le_bytes());
        h.update((tag.len() as u64).to_le_bytes());
        h.update(tag.as_bytes());
        h.update(index.to_le_bytes());
        h.finalize().into()
    }

    /// Independent generator for `(tag, index)`.
    pub fn substream(&self, tag: &str, index: u64) -> Stream {
        ChaCha8Rng::from_seed(self.digest(tag, index))
    }

    /// A derived seed for a nested stage, e.g. one benchmark replication.
    pub fn child(&self, tag: &str, index: u64) -> SeedSpec {
        let d = self.digest(tag, index);
        let mut b = [0u8; 8];
        b.copy_from_slice(&d[..8]);
        SeedSpec::new(u64::from_le_bytes(b))
    }
}

impl From<u64> for SeedSpec {
    fn from(s: u64) -> Self {
        SeedSpec::new(s)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::seq::SliceRandom;
    use rand::RngCore;

    #[test]
    fn same_key_same_stream() {
        let s = SeedSpec::new(42);
        let a: Vec<u64> = (0..8).map({
            let mut r = s.substream("tree", 0);
            move |_| r.next_u64()
        }).collect();
        let mut r = s.substream("tree", 0);
        let b: Vec<u64> = (0..8).map(|_| r.next_u64()).collect();
        assert_eq!(a, b);
    }

    #[test]
    fn distinct_keys_differ() {
        let s = SeedSpec::new(42);
        let x = s.substream("tree", 0).next_u64();
        assert_ne!(x, s.substream("tree", 1).next_u64());
        assert_ne!(x, s.substream("perm", 0).next_u64());
        assert_ne!(x, SeedSpec::new(43).substream("tree", 0).next_u64());
        // tag/index boundary must not alias
        assert_ne!(
            s.substream("ab", 0).next_u64(),
            s.substream("a", u64::from(b'b')).next_u64()
        );
    }

    #[test]
    fn child_seeds_are_deterministic() {
        let s = SeedSpec::new(7);
        assert_eq!(s.child("rep", 3), s.child("rep", 3));
        assert_ne!(s.child("rep", 3), s.child("rep", 4));
    }

    // Frozen replay: the permutation of 0..100 drawn from (7, "perm", 7).
    // Recorded from a first run; any change to the hashing, generator, or
    // shuffle algorithm shows up here.
    #[test]
    fn perm_stream_replays() {
        let mut v: Vec<u32> = (0..100).collect();
        v.shuffle(&mut SeedSpec::new(7).substream("perm", 7));
        let head: Vec<u32> = v[..10].to_vec();
        assert_eq!(head, PERM_HEAD);
        let mut sorted = v.clone();
        sorted.sort_unstable();
        assert_eq!(sorted, (0..100).collect::<Vec<_>>());
    }

    const PERM_HEAD: [u32; 10] = [81, 57, 70, 96, 11, 65, 90, 63, 4, 34];
}
