//! Named random sub-streams.
//!
//! Every consumer of randomness (spawn, scenario, wind, training noise,
//! evaluation) gets its own stream derived from one root seed, so toggling one
//! consumer never shifts the draws of another.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

pub type StreamRng = ChaCha8Rng;

pub const TRAIN: &str = "train";
pub const WIND: &str = "wind";
pub const SCENARIO: &str = "scenario";
pub const SPAWN: &str = "spawn";
pub const EVAL: &str = "eval";
pub const MEASUREMENT: &str = "measurement";

fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

fn fnv1a(bytes: &[u8]) -> u64 {
    bytes.iter().fold(0xcbf2_9ce4_8422_2325u64, |h, &b| {
        (h ^ b as u64).wrapping_mul(0x0000_0100_0000_01B3)
    })
}

/// Seed for stream `name` under `root`, further split by `index`.
pub fn derive_seed(root: u64, name: &str, index: u64) -> u64 {
    splitmix64(splitmix64(root ^ fnv1a(name.as_bytes())) ^ splitmix64(index.wrapping_add(1)))
}

pub fn stream(root: u64, name: &str) -> StreamRng {
    ChaCha8Rng::seed_from_u64(derive_seed(root, name, 0))
}

pub fn indexed_stream(root: u64, name: &str, index: u64) -> StreamRng {
    ChaCha8Rng::seed_from_u64(derive_seed(root, name, index))
}

/// Uniform draw in [0, 1) that depends only on `(seed, index)`.
pub fn hashed_unit(seed: u64, index: u64) -> f64 {
    (derive_seed(seed, "unit", index) >> 11) as f64 * (1.0 / (1u64 << 53) as f64)
}
