//! Seeded random streams.
//!
//! Every random decision in a study is drawn from a ChaCha8 stream whose
//! 64-bit seed is `splitmix64(study_seed ^ tag)`. Tags are fixed per
//! procedure and per step, so adding a procedure or a step never shifts
//! the draws of another.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

pub type StudyRng = ChaCha8Rng;

pub const LANE_QUOTA: u64 = 0x51;
pub const LANE_SELECT: u64 = 0x53;
pub const LANE_PAIR: u64 = 0x50;
pub const LANE_GROUP: u64 = 0x47;

/// SplitMix64 finalizer; spreads nearby seeds across the whole 64-bit range.
pub fn splitmix64(x: u64) -> u64 {
    let mut z = x.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

pub fn derive_seed(seed: u64, tag: u64) -> u64 {
    splitmix64(seed ^ tag)
}

pub fn stream(seed: u64, tag: u64) -> StudyRng {
    StudyRng::seed_from_u64(derive_seed(seed, tag))
}

/// Stable 64-bit tag for an arbitrary label (FNV-1a).
pub fn label_tag(label: &str) -> u64 {
    label.bytes().fold(0xcbf2_9ce4_8422_2325u64, |h, b| (h ^ u64::from(b)).wrapping_mul(0x0100_0000_01b3))
}
