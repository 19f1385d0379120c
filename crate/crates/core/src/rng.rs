//! Reproducible, splittable random streams.
//!
//! A [`RandomStream`] is a value naming a ChaCha8 keystream: the 64-bit seed
//! expands into the key and the stream id selects one of the 2^64 independent
//! keystreams under that key. Child streams are derived by hashing a tag into
//! the stream id, so a parallel computation that assigns work items to
//! derived streams by index produces the same numbers under any scheduling.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct RandomStream {
    pub seed: u64,
    pub stream_id: u64,
}

/// Purpose tags used when deriving child streams.
pub mod tags {
    pub const DATA: u64 = 0x4441_5441;
    pub const RADIUS: u64 = 0x5241_4449;
    pub const EB_RADIUS: u64 = 0x4542_5241;
    pub const CALIBRATION: u64 = 0x4341_4c49;
    pub const POSTERIOR: u64 = 0x504f_5354;
    pub const TRUTH: u64 = 0x5452_5554;
    pub const CHUNK: u64 = 0x4348_4e4b;
}

// splitmix64 finalizer
fn mix(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9e37_79b9_7f4a_7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

impl RandomStream {
    pub const fn new(seed: u64, stream_id: u64) -> Self {
        Self { seed, stream_id }
    }

    /// Child stream identified by `tag`. Pure function of `(self, tag)`.
    pub fn derive(&self, tag: u64) -> Self {
        Self {
            seed: self.seed,
            stream_id: mix(self.stream_id ^ mix(tag.wrapping_mul(0xd6e8_feb8_6659_fd93))),
        }
    }

    /// Shorthand for a chain of derivations.
    pub fn derive_path(&self, path: &[u64]) -> Self {
        path.iter().fold(*self, |s, &t| s.derive(t))
    }

    pub fn rng(&self) -> ChaCha8Rng {
        let mut rng = ChaCha8Rng::seed_from_u64(self.seed);
        rng.set_stream(self.stream_id);
        rng
    }
}

pub(crate) fn fill_standard_normal<R: rand::Rng>(rng: &mut R, out: &mut [f64]) {
    for x in out.iter_mut() {
        *x = StandardNormal.sample(rng);
    }
}
