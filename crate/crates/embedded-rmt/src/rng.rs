//! Splittable, counter-based random streams.
//!
//! Every independent random quantity is drawn from its own ChaCha stream
//! keyed by (master seed, sample index, entry index) through a splitmix-style
//! mix, so sampling is order-independent and bit-identical no matter how the
//! work is scheduled.

use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9e37_79b9_7f4a_7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

/// Mix a master seed with up to two stream coordinates into a stream key.
pub fn stream_key(seed: u64, a: u64, b: u64) -> u64 {
    splitmix64(splitmix64(splitmix64(seed) ^ a) ^ b)
}

/// A dedicated generator for one (seed, sample, entry) coordinate.
pub fn entry_rng(seed: u64, sample: u64, entry: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(stream_key(seed, sample, entry))
}
