//! Seeded randomness.
//!
//! Every random stream in the crate is a xoshiro256++ generator whose 256-bit
//! state is filled by four successive SplitMix64 outputs of the 64-bit seed.
//! Uniform indices are drawn with Lemire's multiply-and-reject method on
//! `next_u64`, and shuffles are Fisher–Yates from the back, so a seed fixes the
//! exact sequence independent of platform word size.

use rand::{RngCore, SeedableRng};
use rand_xoshiro::Xoshiro256PlusPlus;

pub type SeededRng = Xoshiro256PlusPlus;

pub fn seeded(seed: u64) -> SeededRng {
    Xoshiro256PlusPlus::seed_from_u64(seed)
}

/// Derive an independent seed for a named sub-stream.
pub fn derive_seed(seed: u64, stream: u64) -> u64 {
    let mut z = seed ^ stream.wrapping_mul(0x9e37_79b9_7f4a_7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

/// Uniform integer in `[0, bound)`. `bound` must be positive.
pub fn index<R: RngCore + ?Sized>(rng: &mut R, bound: usize) -> usize {
    debug_assert!(bound > 0);
    let s = bound as u64;
    let mut m = u128::from(rng.next_u64()) * u128::from(s);
    if (m as u64) < s {
        let threshold = s.wrapping_neg() % s;
        while (m as u64) < threshold {
            m = u128::from(rng.next_u64()) * u128::from(s);
        }
    }
    (m >> 64) as usize
}

/// Uniform real in `[0, 1)` from the top 53 bits.
pub fn unit<R: RngCore + ?Sized>(rng: &mut R) -> f64 {
    (rng.next_u64() >> 11) as f64 * (1.0 / (1u64 << 53) as f64)
}

pub fn shuffle<T, R: RngCore + ?Sized>(rng: &mut R, items: &mut [T]) {
    for i in (1..items.len()).rev() {
        let j = index(rng, i + 1);
        items.swap(i, j);
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    // Independent transcription of the reference generators.
    fn splitmix(state: &mut u64) -> u64 {
        *state = state.wrapping_add(0x9e3779b97f4a7c15);
        let mut z = *state;
        z = (z ^ (z >> 30)).wrapping_mul(0xbf58476d1ce4e5b9);
        z = (z ^ (z >> 27)).wrapping_mul(0x94d049bb133111eb);
        z ^ (z >> 31)
    }

    fn xoshiro_next(s: &mut [u64; 4]) -> u64 {
        let result = s[0].wrapping_add(s[3]).rotate_left(23).wrapping_add(s[0]);
        let t = s[1] << 17;
        s[2] ^= s[0];
        s[3] ^= s[1];
        s[1] ^= s[2];
        s[0] ^= s[3];
        s[2] ^= t;
        s[3] = s[3].rotate_left(45);
        result
    }

    #[test]
    fn stream_matches_reference_construction() {
        for seed in [0u64, 1, 42, u64::MAX] {
            let mut sm = seed;
            let mut state = [0u64; 4];
            for w in &mut state {
                *w = splitmix(&mut sm);
            }
            let mut rng = seeded(seed);
            for _ in 0..100 {
                assert_eq!(rng.next_u64(), xoshiro_next(&mut state));
            }
        }
    }

    #[test]
    fn known_vector_seed_zero() {
        // First outputs for seed 0, recorded from the reference construction.
        let mut sm = 0u64;
        let mut state = [0u64; 4];
        for w in &mut state {
            *w = splitmix(&mut sm);
        }
        assert_eq!(state[0], 0xe220a8397b1dcdaf);
        let mut rng = seeded(0);
        let first = rng.next_u64();
        assert_eq!(first, xoshiro_next(&mut state));
    }

    #[test]
    fn index_stays_in_range_and_covers() {
        let mut rng = seeded(5);
        let mut seen = [0usize; 7];
        for _ in 0..7000 {
            seen[index(&mut rng, 7)] += 1;
        }
        assert!(seen.iter().all(|&c| c > 800 && c < 1200), "{seen:?}");
    }

    #[test]
    fn shuffle_is_a_permutation() {
        let mut rng = seeded(9);
        let mut v: Vec<usize> = (0..50).collect();
        shuffle(&mut rng, &mut v);
        let mut s = v.clone();
        s.sort_unstable();
        assert_eq!(s, (0..50).collect::<Vec<_>>());
        assert_ne!(v, s);
    }
}
