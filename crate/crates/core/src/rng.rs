//! Seeded random streams.
//!
//! Every consumer derives its generator from the user seed plus a stream
//! number: `ChaCha8Rng::seed_from_u64(seed)` followed by `set_stream(stream)`.
//! ChaCha streams are independent and the derivation is identical on every
//! platform. Anchor table `t` uses stream `t`; other consumers use the
//! reserved streams below.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

pub(crate) const SPLIT_STREAM: u64 = u64::MAX;
pub(crate) const PROJECTION_STREAM: u64 = u64::MAX - 1;
pub(crate) const SYNTH_STREAM: u64 = u64::MAX - 2;

pub fn stream_rng(seed: u64, stream: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    rng
}
