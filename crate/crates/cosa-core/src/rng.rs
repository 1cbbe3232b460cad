//! Deterministic, splittable random streams.
//!
//! Every consumer of randomness derives its own stream from the run seed, a
//! purpose tag, and a counter. Streams are independent of execution order
//! and thread count, which is what makes runs reproducible and resumable:
//! the stream for step `s` can be reconstructed without replaying steps
//! `0..s`.
//!
//! Derivation: the `(seed, tag, counter)` triple is mixed with splitmix64
//! into a 32-byte ChaCha key. All floating-point draws happen in `f64` and
//! are then cast to the target scalar so the `f32` and `f64` pipelines see
//! the same underlying sequence.

use crate::scalar::Scalar;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

#[inline]
fn splitmix64(state: &mut u64) -> u64 {
    *state = state.wrapping_add(0x9E37_79B9_7F4A_7C15);
    let mut z = *state;
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

#[inline]
fn fnv1a64(bytes: &[u8]) -> u64 {
    let mut h: u64 = 0xcbf2_9ce4_8422_2325;
    for &b in bytes {
        h ^= b as u64;
        h = h.wrapping_mul(0x0000_0100_0000_01B3);
    }
    h
}

/// Deterministic generator for `(seed, tag, counter)`.
pub fn stream(seed: u64, tag: &str, counter: u64) -> ChaCha8Rng {
    let mut state = seed ^ fnv1a64(tag.as_bytes()) ^ counter.wrapping_mul(0x9E37_79B9_7F4A_7C15);
    let mut key = [0u8; 32];
    for chunk in key.chunks_exact_mut(8) {
        chunk.copy_from_slice(&splitmix64(&mut state).to_le_bytes());
    }
    ChaCha8Rng::from_seed(key)
}

/// `n` i.i.d. draws from `N(0, std^2)`.
pub fn randn_vec<S: Scalar>(rng: &mut ChaCha8Rng, n: usize, std: f64) -> Vec<S> {
    (0..n)
        .map(|_| {
            let x: f64 = StandardNormal.sample(rng);
            S::from_f64(x * std)
        })
        .collect()
}

/// `n` i.i.d. draws from `U(lo, hi)`.
pub fn uniform_vec<S: Scalar>(rng: &mut ChaCha8Rng, n: usize, lo: f64, hi: f64) -> Vec<S> {
    (0..n).map(|_| S::from_f64(rng.gen_range(lo..hi))).collect()
}

/// `n` i.i.d. draws from Gumbel(0, 1), computed as `-ln(-ln U)`.
pub fn gumbel_vec<S: Scalar>(rng: &mut ChaCha8Rng, n: usize) -> Vec<S> {
    (0..n)
        .map(|_| {
            // Uniform in the open interval to keep both logs finite.
            let u: f64 = rng.gen_range(1e-12..1.0);
            S::from_f64(-(-u.ln()).ln())
        })
        .collect()
}
