//! Portable seeded randomness.
//!
//! The generator is SplitMix64 viewed as a counter-based stream. Draw `n`
//! (starting at `n = 1`) for seed `s` is
//!
//! ```text
//! x = s + n * 0x9E3779B97F4A7C15          (mod 2^64)
//! x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9 (mod 2^64)
//! x = (x ^ (x >> 27)) * 0x94D049BB133111EB (mod 2^64)
//! x =  x ^ (x >> 31)
//! ```
//!
//! Floats in `[0, 1)` take the top 53 bits: `(x >> 11) * 2^-53`.
//!
//! Child seeds are derived from a parent seed and a label with
//! `mix(parent ^ fnv1a64(label))`, where `mix` is the three finalizer lines
//! above and `fnv1a64` is the standard 64-bit FNV-1a hash of the UTF-8 label.

use serde::{Deserialize, Serialize};

const GAMMA: u64 = 0x9E37_79B9_7F4A_7C15;

#[inline]
fn mix(mut z: u64) -> u64 {
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

pub fn fnv1a64(label: &str) -> u64 {
    let mut h: u64 = 0xcbf2_9ce4_8422_2325;
    for b in label.bytes() {
        h ^= b as u64;
        h = h.wrapping_mul(0x0000_0100_0000_01b3);
    }
    h
}

/// Seed for a named sub-stream of `parent`.
pub fn derive_seed(parent: u64, label: &str) -> u64 {
    mix(parent ^ fnv1a64(label))
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Rng {
    seed: u64,
    counter: u64,
}

impl Rng {
    pub fn new(seed: u64) -> Self {
        Self { seed, counter: 0 }
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    pub fn counter(&self) -> u64 {
        self.counter
    }

    /// Independent stream keyed by `label`; does not advance `self`.
    pub fn fork(&self, label: &str) -> Rng {
        Rng::new(derive_seed(self.seed, label))
    }

    pub fn next_u64(&mut self) -> u64 {
        self.counter = self.counter.wrapping_add(1);
        mix(self.seed.wrapping_add(self.counter.wrapping_mul(GAMMA)))
    }

    /// Uniform in `[0, 1)`.
    pub fn next_f64(&mut self) -> f64 {
        (self.next_u64() >> 11) as f64 * (1.0 / (1u64 << 53) as f64)
    }

    /// Uniform in `[lo, hi)`.
    pub fn uniform(&mut self, lo: f64, hi: f64) -> f64 {
        lo + (hi - lo) * self.next_f64()
    }

    /// Uniform integer in `[0, n)`. Uses multiply-shift, so there is a bias of
    /// at most `n / 2^64`.
    pub fn below(&mut self, n: usize) -> usize {
        assert!(n > 0);
        ((self.next_u64() as u128 * n as u128) >> 64) as usize
    }

    pub fn bernoulli(&mut self, p: f64) -> bool {
        self.next_f64() < p
    }

    pub fn shuffle<T>(&mut self, items: &mut [T]) {
        for i in (1..items.len()).rev() {
            let j = self.below(i + 1);
            items.swap(i, j);
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    // Frozen from an independent Python implementation of the same recurrence.
    #[test]
    fn golden_sequence_seed_42() {
        let mut rng = Rng::new(42);
        let draws: Vec<u64> = (0..1000).map(|_| rng.next_u64()).collect();
        assert_eq!(
            &draws[..4],
            &[
                0xbdd7_3226_2feb_6e95,
                0x28ef_e333_b266_f103,
                0x4752_6757_130f_9f52,
                0x581c_e1ff_0e4a_e394
            ]
        );
        let folded = draws
            .iter()
            .enumerate()
            .fold(0u64, |acc, (i, x)| acc ^ x.rotate_left((i % 64) as u32));
        assert_eq!(folded, 0x3454_de1c_9d15_daae);
        let sum = draws.iter().fold(0u64, |a, x| a.wrapping_add(*x));
        assert_eq!(sum, 14_290_365_857_367_870_679);
    }

    #[test]
    fn golden_floats_seed_7() {
        let mut rng = Rng::new(7);
        assert_eq!(rng.next_f64(), 0.3898297483912715);
        assert_eq!(rng.next_f64(), 0.01678829452815611);
        assert_eq!(rng.next_f64(), 0.9007606806068834);
    }

    #[test]
    fn golden_derived_seeds() {
        assert_eq!(derive_seed(7, "world"), 0xcada_3a2f_408f_d84c);
        assert_eq!(derive_seed(7, "controller"), 0x63ab_3437_8bed_a7ea);
    }

    #[test]
    fn identical_seeds_identical_streams() {
        let mut a = Rng::new(99);
        let mut b = Rng::new(99);
        for _ in 0..1000 {
            assert_eq!(a.next_u64(), b.next_u64());
        }
    }

    #[test]
    fn below_and_shuffle_stay_in_bounds() {
        let mut rng = Rng::new(1);
        for n in 1..50 {
            assert!(rng.below(n) < n);
        }
        let mut v: Vec<usize> = (0..20).collect();
        rng.shuffle(&mut v);
        let mut sorted = v.clone();
        sorted.sort();
        assert_eq!(sorted, (0..20).collect::<Vec<_>>());
    }
}
