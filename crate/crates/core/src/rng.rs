//! Named, seeded random substreams.
//!
//! Every random draw in the toolkit comes from a ChaCha stream keyed by the
//! experiment seed plus a stream name, so one seed reproduces a whole run and
//! unrelated consumers (projections, anchors, pairs, triplets, splits) never
//! share state.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

pub type StreamRng = ChaCha8Rng;

pub const PROJECTION: &str = "projection";
pub const ANCHORS: &str = "anchors";
pub const PAIRS: &str = "pairs";
pub const TRIPLETS: &str = "triplets";
pub const SPLITS: &str = "splits";
pub const SYNTHETIC: &str = "synthetic";
pub const INIT: &str = "init";

/// FNV-1a, used only to turn stream names into stream ids.
fn fnv1a(name: &str) -> u64 {
    let mut h: u64 = 0xcbf2_9ce4_8422_2325;
    for b in name.bytes() {
        h ^= u64::from(b);
        h = h.wrapping_mul(0x0100_0000_01b3);
    }
    h
}

pub fn substream(seed: u64, name: &str) -> StreamRng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(fnv1a(name));
    rng
}

/// Derives a child seed, e.g. one per cohort or per grid point.
pub fn derive_seed(seed: u64, name: &str) -> u64 {
    use rand::RngCore;
    substream(seed, name).next_u64()
}
