//! Seed derivation and fast uniform digits for lattice steps.
//!
//! Every stochastic task `i` of a run with master seed `s` draws from its own
//! generator seeded with `derive_seed(s, i)`, so results never depend on how
//! tasks are scheduled across workers.

use rand::{RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub type TaskRng = ChaCha8Rng;

/// SplitMix64 finalizer.
pub fn splitmix64(mut x: u64) -> u64 {
    x = x.wrapping_add(0x9E37_79B9_7F4A_7C15);
    x = (x ^ (x >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    x = (x ^ (x >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    x ^ (x >> 31)
}

pub fn derive_seed(seed: u64, index: u64) -> u64 {
    splitmix64(seed ^ splitmix64(index.wrapping_add(0x5851_F42D_4C95_7F2D)))
}

pub fn seeded(seed: u64) -> TaskRng {
    ChaCha8Rng::seed_from_u64(seed)
}

pub fn task_rng(seed: u64, index: u64) -> TaskRng {
    ChaCha8Rng::seed_from_u64(derive_seed(seed, index))
}

/// Uniform digits in `0..base` extracted several at a time from one 32-bit word.
///
/// A word `x` is accepted when `x < floor(2^32 / base^k) * base^k`; the `k`
/// base-`base` digits of `x mod base^k` are then independent and uniform.
#[derive(Debug, Clone)]
pub struct DigitStream {
    base: u32,
    per_word: u32,
    modulus: u64,
    threshold: u64,
    buffer: u32,
    left: u32,
}

impl DigitStream {
    pub fn new(base: u32) -> Self {
        assert!(base >= 2, "digit base must be at least 2");
        let mut modulus: u64 = 1;
        let mut per_word = 0;
        while modulus * base as u64 <= 1u64 << 32 {
            modulus *= base as u64;
            per_word += 1;
        }
        let threshold = ((1u64 << 32) / modulus) * modulus;
        Self { base, per_word, modulus, threshold, buffer: 0, left: 0 }
    }

    pub fn base(&self) -> u32 {
        self.base
    }

    #[inline]
    pub fn next<R: RngCore + ?Sized>(&mut self, rng: &mut R) -> u32 {
        if self.left == 0 {
            loop {
                let x = rng.next_u32() as u64;
                if x < self.threshold {
                    self.buffer = (x % self.modulus) as u32;
                    break;
                }
            }
            self.left = self.per_word;
        }
        let digit = self.buffer % self.base;
        self.buffer /= self.base;
        self.left -= 1;
        digit
    }
}
