//! Seeded random streams.
//!
//! Every random choice in the crate draws from a ChaCha stream whose seed is
//! derived from a base seed and a fixed path of stream labels, so results do
//! not depend on evaluation order or thread scheduling.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

pub type Rng = ChaCha8Rng;

/// Stream labels used with [`derive_seed`].
pub mod stream {
    pub const SPACE: u64 = 0x5350_4143;
    pub const ORDER: u64 = 0x4f52_4445;
    pub const SPLIT: u64 = 0x5350_4c54;
    pub const FIT: u64 = 0x4649_5420;
    pub const TREE: u64 = 0x5452_4545;
    pub const EVAL: u64 = 0x4556_414c;
    pub const DATA: u64 = 0x4441_5441;
    pub const NOISE: u64 = 0x4e4f_4953;
    pub const FALLBACK: u64 = 0x4641_4c4c;
    pub const TUNE: u64 = 0x5455_4e45;
}

fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9e37_79b9_7f4a_7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

/// Mixes `stream` into `base`. Distinct `(base, stream)` pairs give
/// statistically independent child seeds.
pub fn derive_seed(base: u64, stream: u64) -> u64 {
    splitmix64(splitmix64(base) ^ stream.wrapping_mul(0xd605_bbb5_8c8a_bd43))
}

pub fn derive_path(base: u64, path: &[u64]) -> u64 {
    path.iter().fold(base, |acc, &s| derive_seed(acc, s))
}

pub fn rng_from(seed: u64) -> Rng {
    ChaCha8Rng::seed_from_u64(seed)
}
