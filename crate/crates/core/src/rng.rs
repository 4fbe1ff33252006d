//! Seeded random streams. Every stochastic step draws from its own ChaCha
//! stream keyed by the run seed and a purpose tag.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

pub type SimRng = ChaCha8Rng;

/// Purpose tags for independent streams derived from one seed.
pub mod tag {
    pub const PAYLOAD: u64 = 1;
    pub const TRAINING: u64 = 2;
    pub const NOISE: u64 = 3;
    pub const LOOP_NOISE: u64 = 4;
    /// Neighbour channels use `NEIGHBOUR + index`.
    pub const NEIGHBOUR: u64 = 16;
}

pub fn stream(seed: u64, tag: u64) -> SimRng {
    let mut r = ChaCha8Rng::seed_from_u64(seed);
    r.set_stream(tag);
    r
}
