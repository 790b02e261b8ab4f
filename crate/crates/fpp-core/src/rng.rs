//! Counter-based pseudo-randomness.
//!
//! Every random quantity in this crate is a pure function of a 64-bit seed
//! and an integer key (edge coordinates, replica index, generation number,
//! ...).  There is no mutable generator state, so results never depend on
//! query order, thread scheduling, or how work is split across workers.
//!
//! The mixer is the splitmix64 finalizer applied along the key words.  It is
//! a bijection on u64 with full avalanche, which is plenty for Monte Carlo
//! work; the distribution tests in `weights` double-check the output stream
//! against analytic CDFs with a Kolmogorov-Smirnov test.

const GOLDEN: u64 = 0x9e37_79b9_7f4a_7c15;

/// splitmix64 finalizer: a fast, well-mixed bijection on u64.
#[inline]
pub fn mix64(mut z: u64) -> u64 {
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

/// Incremental hash over a sequence of words.  Feed the key, then `finish`.
#[derive(Clone, Copy, Debug)]
pub struct KeyHash(u64);

impl KeyHash {
    #[inline]
    pub fn new(seed: u64) -> Self {
        KeyHash(mix64(seed ^ GOLDEN))
    }

    #[inline]
    pub fn push(&mut self, word: u64) {
        self.0 = mix64(self.0 ^ word.wrapping_add(GOLDEN));
    }

    #[inline]
    pub fn push_i64(&mut self, word: i64) {
        self.push(word as u64);
    }

    #[inline]
    pub fn finish(self) -> u64 {
        self.0
    }
}

/// Hash a seed plus a slice of key words into one u64.
#[inline]
pub fn hash_words(seed: u64, words: &[u64]) -> u64 {
    let mut h = KeyHash::new(seed);
    for &w in words {
        h.push(w);
    }
    h.finish()
}

/// Map a hash to a uniform double in [0, 1) using the top 53 bits.
#[inline]
pub fn unit_f64(h: u64) -> f64 {
    (h >> 11) as f64 * (1.0 / (1u64 << 53) as f64)
}

/// Stable per-replica seed: a function of the master seed, an experiment
/// tag, and the replica index only.  Replicas can therefore run in any
/// order, on any number of workers, and still see identical randomness.
pub fn derive_seed(master: u64, tag: &str, index: u64) -> u64 {
    let mut h = KeyHash::new(master);
    for chunk in tag.as_bytes().chunks(8) {
        let mut w = [0u8; 8];
        w[..chunk.len()].copy_from_slice(chunk);
        h.push(u64::from_le_bytes(w));
    }
    h.push(tag.len() as u64);
    h.push(index);
    h.finish()
}
