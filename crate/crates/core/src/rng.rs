//! Deterministic, splittable random number streams.
//!
//! Every sampler is a pure function of `(spec, grid, seed)`. Batches assign
//! path `k` the stream `k` of a ChaCha generator seeded once, so results are
//! identical regardless of how the batch is scheduled across threads.

use rand::SeedableRng;
use rand_chacha::ChaCha12Rng;

/// Generator for a single draw identified by `(seed, stream)`.
pub fn stream_rng(seed: u64, stream: u64) -> ChaCha12Rng {
    let mut rng = ChaCha12Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    rng
}

/// Generator for a standalone draw.
pub fn single_rng(seed: u64) -> ChaCha12Rng {
    stream_rng(seed, 0)
}
