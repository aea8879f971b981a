//! Seed plumbing. Every random draw in the crate comes from a [`TrialRng`]
//! built from an explicit 64-bit seed, so a run is a pure function of its
//! parameters and seeds.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

pub type TrialRng = ChaCha8Rng;

/// Independent streams split off one seed.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Stream {
    Design = 1,
    Infection = 2,
    Grouping = 3,
}

pub fn rng_from_seed(seed: u64) -> TrialRng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// RNG for one named stream of a seeded instance.
pub fn stream_rng(seed: u64, stream: Stream) -> TrialRng {
    rng_from_seed(mix(seed, stream as u64))
}

/// Seed of one Monte Carlo trial; depends only on `(master, m, trial)`.
pub fn trial_seed(master: u64, m: u64, trial: u64) -> u64 {
    mix(mix(master, m), trial)
}

fn mix(a: u64, b: u64) -> u64 {
    splitmix64(a ^ splitmix64(b.wrapping_add(0x9E37_79B9_7F4A_7C15)))
}

fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}
