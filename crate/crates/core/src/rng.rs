//! Counter-style random streams: every (seed, stream) pair names an
//! independent, reproducible sequence.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

pub fn stream(seed: u64, stream: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    rng
}

/// Stream id for a pair of indices.
pub fn key(a: u64, b: u64) -> u64 {
    (a << 32) ^ b
}
