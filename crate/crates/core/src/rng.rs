//! Named, counter-based random streams.
//!
//! Every consumer of randomness draws from its own ChaCha8 stream, keyed by
//! `(master seed, stream name)` and selected by a 64-bit stream index. A
//! trial's stream therefore depends only on its index, never on how many
//! other streams were used before it or on the order in which workers run.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

/// Per-satellite attribute sampling.
pub const CONSTELLATION: &str = "constellation";
/// Task arrivals, workloads and budgets.
pub const TASKS: &str = "tasks";
/// Per-trial draws of the random-selection heuristic.
pub const RANDOM_SELECTION: &str = "heuristic/random";
/// Per-trial tie-breaking among surplus candidates of the net-energy heuristic.
pub const NET_ENERGY_SELECTION: &str = "heuristic/min-net-energy";

pub type StreamRng = ChaCha8Rng;

/// Stream `index` of the family `name` under `master_seed`.
pub fn stream(master_seed: u64, name: &str, index: u64) -> StreamRng {
    let key = splitmix64(master_seed ^ fnv1a64(name.as_bytes()));
    let mut rng = ChaCha8Rng::seed_from_u64(key);
    rng.set_stream(index);
    rng
}

/// Uniform draw on `[lo, hi)` as an affine map of one unit draw, so that a
/// changed range reuses the same underlying sample.
pub fn uniform<R: Rng + ?Sized>(rng: &mut R, lo: f64, hi: f64) -> f64 {
    lo + (hi - lo) * rng.random::<f64>()
}

fn fnv1a64(bytes: &[u8]) -> u64 {
    bytes.iter().fold(0xcbf2_9ce4_8422_2325, |hash, &b| {
        (hash ^ u64::from(b)).wrapping_mul(0x0000_0100_0000_01b3)
    })
}

fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9e37_79b9_7f4a_7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}
