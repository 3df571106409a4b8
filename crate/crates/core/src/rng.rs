//! Counter-based randomness.
//!
//! Every random quantity in the crate is addressed by a `(seed, counter)` pair
//! instead of being drawn from a shared sequential stream. The generator is
//! ChaCha8 (`rand_chacha`): `seed` is expanded into a key with
//! `SeedableRng::seed_from_u64` and `counter` selects the ChaCha stream. Any
//! single column of a matrix, or any single Monte Carlo trial, can therefore
//! be regenerated without touching the others, and parallel runs reproduce
//! sequential ones bit for bit.

use rand::{RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;

/// Identifier written into matrix files. Bump when the mapping below changes.
pub const PRNG_ID: &str = "chacha8-stream-v1";

const DERIVE_DOMAIN: u64 = 0x9e37_79b9_7f4a_7c15;

/// Generator for stream `counter` under key `seed`.
pub fn stream(seed: u64, counter: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(counter);
    rng
}

/// Child seed number `counter` of `seed`.
pub fn derive_seed(seed: u64, counter: u64) -> u64 {
    stream(seed ^ DERIVE_DOMAIN, counter).next_u64()
}

/// Maps a uniform 64-bit word onto `[0, n)` as `floor(u * n / 2^64)`.
#[inline]
pub fn bounded(u: u64, n: u64) -> u64 {
    ((u as u128 * n as u128) >> 64) as u64
}
