//! Seeded random streams.
//!
//! Every consumer of randomness asks for a stream by `(seed, purpose, index)`.
//! Streams are ChaCha8 instances keyed by the seed and the purpose and
//! separated by the ChaCha stream id, so replicate `k` draws the same numbers
//! whichever worker thread runs it and however many replicates exist.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

/// What a stream is used for. Keeps simulation and resampling draws apart
/// even when they share a master seed.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Purpose {
    Simulation = 1,
    Bootstrap = 2,
    Locations = 3,
    MonteCarlo = 4,
}

/// splitmix64 finalizer
fn mix(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Derives a child seed, e.g. one per Monte Carlo replicate.
pub fn derive_seed(seed: u64, purpose: Purpose, index: u64) -> u64 {
    mix(mix(seed ^ mix(purpose as u64)) ^ index)
}

pub fn stream(seed: u64, purpose: Purpose, index: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(mix(seed ^ mix(purpose as u64)));
    rng.set_stream(index);
    rng
}
