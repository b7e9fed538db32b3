//! Seeded random streams.
//!
//! Every replicate draws from its own ChaCha8 stream: the 64-bit seed is
//! expanded to a 256-bit key with `SeedableRng::seed_from_u64` (PCG32 based,
//! fixed by `rand_core`), and the replicate index selects the ChaCha stream
//! number. Streams are therefore independent of execution order and identical
//! across platforms.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

pub type SimRng = ChaCha8Rng;

/// Stream `index` for base seed `seed`.
pub fn replicate_rng(seed: u64, index: u64) -> SimRng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(index);
    rng
}
