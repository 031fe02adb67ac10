//! Seeded random streams.
//!
//! Every randomised unit of work (a k-means restart, a forest tree, a
//! cross-validation fold assignment) draws from its own ChaCha8 stream keyed
//! by `(seed, unit index)`, so results do not depend on scheduling.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

pub type Rng = ChaCha8Rng;

pub fn stream(seed: u64, unit: u64) -> Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(unit);
    rng
}
