//! Named random streams derived from one replication seed.
//!
//! Every consumer of randomness in a replication draws from its own ChaCha
//! stream so that, for example, extra tie-breaking in one policy never shifts
//! the reward tape seen by another.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
#[repr(u64)]
pub enum Stream {
    World = 1,
    RewardTape = 2,
    Actions = 3,
    Classifier = 4,
}

pub fn stream(seed: u64, which: Stream) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(which as u64);
    rng
}
