//! Counter-based stream derivation.
//!
//! Every random value is addressed by `(master_seed, stream id, position)`.
//! The master seed expands to a ChaCha8 key; the stream id selects one of the
//! 2^64 independent ChaCha streams. Stream ids are hashes of a domain label
//! (node name, empirical source, replicate index) and a chunk index, so any
//! chunk can be regenerated in isolation on any worker.

use rand_chacha::ChaCha8Rng;
use rand_core::{RngCore, SeedableRng};

const GOLDEN_GAMMA: u64 = 0x9e37_79b9_7f4a_7c15;

/// SplitMix64 finalizer.
#[inline]
pub fn mix64(mut z: u64) -> u64 {
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

/// Order-sensitive combination of two 64-bit words.
#[inline]
pub fn combine(a: u64, b: u64) -> u64 {
    mix64(a.wrapping_add(GOLDEN_GAMMA) ^ mix64(b.wrapping_add(GOLDEN_GAMMA.rotate_left(17))))
}

/// FNV-1a of a label; stable across platforms and releases.
pub fn label_hash(label: &str) -> u64 {
    let mut h: u64 = 0xcbf2_9ce4_8422_2325;
    for b in label.as_bytes() {
        h ^= u64::from(*b);
        h = h.wrapping_mul(0x0000_0100_0000_01b3);
    }
    mix64(h)
}

/// Seed of the `index`-th derived run (seed replicate, study replication...)
/// within a domain.
pub fn derive_seed(master_seed: u64, domain: &str, index: u64) -> u64 {
    combine(combine(master_seed, label_hash(domain)), index)
}

/// A single random stream with a draw counter.
pub struct Stream {
    rng: ChaCha8Rng,
    consumed: u64,
}

impl Stream {
    pub fn new(master_seed: u64, stream_id: u64) -> Self {
        let mut key = [0u8; 32];
        let mut s = master_seed;
        for word in key.chunks_exact_mut(8) {
            s = s.wrapping_add(GOLDEN_GAMMA);
            word.copy_from_slice(&mix64(s).to_le_bytes());
        }
        let mut rng = ChaCha8Rng::from_seed(key);
        rng.set_stream(stream_id);
        Stream { rng, consumed: 0 }
    }

    /// Stream for `label` restricted to chunk `chunk`.
    pub fn for_chunk(master_seed: u64, label: u64, chunk: u64) -> Self {
        Self::new(master_seed, combine(label, chunk))
    }

    #[inline]
    pub fn next_u64(&mut self) -> u64 {
        self.consumed += 1;
        self.rng.next_u64()
    }

    /// Uniform on the open interval (0, 1) with 53 bits of resolution.
    #[inline]
    pub fn next_open01(&mut self) -> f64 {
        ((self.next_u64() >> 11) as f64 + 0.5) * (1.0 / (1u64 << 53) as f64)
    }

    /// Index in `0..len` by multiply-high (one draw, bias below 2^-64 · len).
    #[inline]
    pub fn next_index(&mut self, len: usize) -> usize {
        ((u128::from(self.next_u64()) * len as u128) >> 64) as usize
    }

    pub fn consumed(&self) -> u64 {
        self.consumed
    }
}
