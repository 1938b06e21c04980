//! Deterministic seed derivation.
//!
//! All randomness in a run flows from one base seed. Sub-seeds are derived
//! by mixing structured offsets (run index, fold index, purpose tag) through
//! splitmix64, so every component is independently reproducible and two
//! components never share a stream by accident.

/// Purpose tags for derived seeds.
pub mod purpose {
    pub const MODEL_INIT: u64 = 0x01;
    pub const BATCHING: u64 = 0x02;
    pub const DROPOUT: u64 = 0x03;
    pub const FOLDS: u64 = 0x04;
    pub const TRAINING: u64 = 0x05;
}

fn splitmix64(mut x: u64) -> u64 {
    x = x.wrapping_add(0x9e37_79b9_7f4a_7c15);
    let mut z = x;
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

/// Derive a sub-seed from `base` and a list of structured offsets.
pub fn derive_seed(base: u64, parts: &[u64]) -> u64 {
    let mut state = splitmix64(base);
    for &part in parts {
        state = splitmix64(state ^ part.wrapping_mul(0xff51_afd7_ed55_8ccd));
    }
    state
}
