//! Seed splitting.
//!
//! Every random draw in the crate comes from a ChaCha8 stream addressed by
//! `(seed, purpose, index)`. The purpose selects the key, the index selects
//! the ChaCha stream, so block `k` of a generator is reproducible on its own.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

/// Independent purposes that may share one user seed.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
#[repr(u64)]
pub enum Purpose {
    Driver = 1,
    Phase = 2,
    Noise = 3,
    Sampler = 4,
    RulerExtension = 5,
    Series = 6,
}

fn mix(mut z: u64) -> u64 {
    // splitmix64 finalizer
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Generator for one `(seed, purpose, index)` stream.
pub fn stream(seed: u64, purpose: Purpose, index: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(mix(seed ^ mix(purpose as u64)));
    rng.set_stream(index);
    rng
}

/// Derives a child seed, e.g. one per Monte-Carlo trial.
pub fn derive_seed(seed: u64, index: u64) -> u64 {
    mix(mix(seed) ^ index.wrapping_mul(0xD1B5_4A32_D192_ED03))
}
