//! Counter-based seeding.
//!
//! Every random quantity in the crate is addressed by a key path
//! `(master seed, domain, index, ...)`. Keys are mixed with the SplitMix64
//! finaliser, so a site depth or a trial stream never depends on how many
//! other sites or trials were drawn before it.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

/// Stream type used for all simulation work.
pub type Stream = ChaCha8Rng;

const GOLDEN: u64 = 0x9e37_79b9_7f4a_7c15;

#[inline]
pub fn mix64(mut z: u64) -> u64 {
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

/// Hashes an ordered sequence of words into one 64-bit key.
#[inline]
pub fn key(words: &[u64]) -> u64 {
    let mut h = 0x6a09_e667_f3bc_c909u64;
    for &w in words {
        h = mix64(h.wrapping_add(GOLDEN) ^ mix64(w.wrapping_add(GOLDEN)));
    }
    h
}

/// Maps 64 random bits to the open interval (0, 1).
#[inline]
pub fn open01(bits: u64) -> f64 {
    ((bits >> 12) as f64 + 0.5) * (1.0 / (1u64 << 52) as f64)
}

/// Domain tags that keep different uses of one master seed apart.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
#[repr(u64)]
pub enum Domain {
    Landscape = 1,
    Path = 2,
    Panel = 3,
    Srw = 4,
    Misc = 5,
}

/// Derives independent streams from a master seed.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct SeedSplitter {
    master: u64,
}

impl SeedSplitter {
    pub fn new(master: u64) -> Self {
        Self { master }
    }

    pub fn master(&self) -> u64 {
        self.master
    }

    /// 64-bit child seed for `(domain, path...)`.
    pub fn seed(&self, domain: Domain, path: &[u64]) -> u64 {
        let mut words = Vec::with_capacity(path.len() + 2);
        words.push(self.master);
        words.push(domain as u64);
        words.extend_from_slice(path);
        key(&words)
    }

    pub fn stream(&self, domain: Domain, path: &[u64]) -> Stream {
        let s = self.seed(domain, path);
        let mut bytes = [0u8; 32];
        for (i, chunk) in bytes.chunks_mut(8).enumerate() {
            chunk.copy_from_slice(&mix64(s ^ (i as u64).wrapping_mul(GOLDEN)).to_le_bytes());
        }
        Stream::from_seed(bytes)
    }
}

/// Convenience: stream for a bare seed.
pub fn stream_from_seed(seed: u64) -> Stream {
    SeedSplitter::new(seed).stream(Domain::Misc, &[])
}
