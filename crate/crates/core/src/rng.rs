//! Named random sub-streams derived from a single user seed.
//!
//! Every consumer of randomness draws from its own ChaCha stream so that,
//! for example, changing the random baseline never perturbs graph generation.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Stream {
    GraphGen = 1,
    Features = 2,
    Splits = 3,
    RandomBaseline = 4,
    DmaxSampling = 5,
}

pub fn substream(seed: u64, stream: Stream) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream as u64);
    rng
}
