//! Counter-based, splittable random streams.
//!
//! A [`CounterRng`] is a 64-bit key plus a position counter. Output word `i`
//! of a stream is a keyed hash of `i`, so any word can be computed directly
//! without advancing state, and [`CounterRng::split`] derives child keys by
//! hashing the parent key with a tag. Sampling code keys every block node and
//! every Monte Carlo replicate by its path in this tree, which makes results
//! independent of evaluation order and worker count.

use rand_core::RngCore;

const GOLDEN: u64 = 0x9e37_79b9_7f4a_7c15;
const SPLIT_SALT: u64 = 0xd1b5_4a32_d192_ed03;
const SEED_SALT: u64 = 0x8cb9_2ba7_2f3d_8dd7;

/// Murmur3-style finalizer (the SplitMix64 variant).
#[inline(always)]
fn fmix64(mut z: u64) -> u64 {
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

#[inline(always)]
fn keyed_word(key: u64, counter: u64) -> u64 {
    let x = fmix64(counter.wrapping_mul(GOLDEN) ^ key);
    fmix64(x.wrapping_add(key.rotate_left(32)) ^ GOLDEN)
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct CounterRng {
    key: u64,
    counter: u64,
}

impl CounterRng {
    pub fn new(seed: u64) -> Self {
        Self {
            key: fmix64(seed ^ SEED_SALT).wrapping_add(GOLDEN),
            counter: 0,
        }
    }

    /// Child stream for `tag`. Depends only on the key, never on how many
    /// words the parent has produced.
    #[inline]
    pub fn split(&self, tag: u64) -> Self {
        let t = fmix64(tag.wrapping_add(SPLIT_SALT));
        Self {
            key: fmix64(self.key ^ t.rotate_left(17)).wrapping_add(t),
            counter: 0,
        }
    }

    pub fn key(&self) -> u64 {
        self.key
    }

    /// Word at absolute position `index`, without touching the counter.
    #[inline(always)]
    pub fn word(&self, index: u64) -> u64 {
        keyed_word(self.key, index)
    }

    /// Uniform on the open interval (0, 1), 52 bits of resolution.
    #[inline(always)]
    pub fn next_open01(&mut self) -> f64 {
        open01(self.next_u64())
    }

    /// Uniform integer on `0..bound` by multiply-shift with rejection.
    pub fn next_below(&mut self, bound: u64) -> u64 {
        assert!(bound > 0);
        let threshold = bound.wrapping_neg() % bound;
        loop {
            let m = (self.next_u64() as u128) * (bound as u128);
            if (m as u64) >= threshold {
                return (m >> 64) as u64;
            }
        }
    }
}

/// Maps the top 52 bits of `word` to the midpoint grid of (0, 1). Both
/// endpoints are excluded exactly.
#[inline(always)]
pub(crate) fn open01(word: u64) -> f64 {
    ((word >> 12) as f64 + 0.5) * (1.0 / (1u64 << 52) as f64)
}

impl RngCore for CounterRng {
    fn next_u32(&mut self) -> u32 {
        (self.next_u64() >> 32) as u32
    }

    #[inline(always)]
    fn next_u64(&mut self) -> u64 {
        let w = keyed_word(self.key, self.counter);
        self.counter = self.counter.wrapping_add(1);
        w
    }

    fn fill_bytes(&mut self, dst: &mut [u8]) {
        for chunk in dst.chunks_mut(8) {
            let bytes = self.next_u64().to_le_bytes();
            chunk.copy_from_slice(&bytes[..chunk.len()]);
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn same_seed_same_stream() {
        let mut a = CounterRng::new(42);
        let mut b = CounterRng::new(42);
        for _ in 0..100 {
            assert_eq!(a.next_u64(), b.next_u64());
        }
    }

    #[test]
    fn word_matches_sequential_draws() {
        let r = CounterRng::new(7).split(3);
        let mut s = r.clone();
        for i in 0..32 {
            assert_eq!(r.word(i), s.next_u64());
        }
    }

    #[test]
    fn split_ignores_parent_position() {
        let mut a = CounterRng::new(9);
        let b = a.clone();
        a.next_u64();
        a.next_u64();
        assert_eq!(a.split(5), b.split(5));
        assert_ne!(b.split(5), b.split(6));
    }

    #[test]
    fn open01_never_hits_endpoints() {
        assert!(open01(0) > 0.0);
        assert!(open01(u64::MAX) < 1.0);
    }

    #[test]
    fn uniform_moments_and_sibling_correlation() {
        let root = CounterRng::new(2024);
        let n = 200_000;
        let (mut s, mut s2, mut cross) = (0.0, 0.0, 0.0);
        for i in 0..n {
            let u = open01(root.split(i).word(0)) - 0.5;
            let v = open01(root.split(i + 1).word(0)) - 0.5;
            s += u;
            s2 += u * u;
            cross += u * v;
        }
        let n = n as f64;
        // sd of the mean of U-1/2 is sqrt(1/12/n) ~ 6.5e-4
        assert!((s / n).abs() < 4.0 * (1.0f64 / 12.0 / n).sqrt());
        assert!((s2 / n - 1.0 / 12.0).abs() < 1e-3);
        assert!((cross / n).abs() < 4.0 * (1.0f64 / 144.0 / n).sqrt());
    }

    #[test]
    fn next_below_covers_range_evenly() {
        let mut r = CounterRng::new(1);
        let mut counts = [0u32; 6];
        for _ in 0..60_000 {
            counts[r.next_below(6) as usize] += 1;
        }
        for c in counts {
            assert!((c as i64 - 10_000).abs() < 400, "{counts:?}");
        }
    }
}
