//! Reproducible random substreams.
//!
//! Every draw in the crate comes from a ChaCha8 generator keyed by the master
//! seed and positioned on a stream id derived from a
//! `(trajectory, stage, major, minor, cell)` coordinate. A cell's samples
//! therefore never depend on evaluation order or worker count.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

/// Sampling phase that owns a family of substreams.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
#[repr(u64)]
pub enum Stage {
    QLearning = 1,
    Recentering = 2,
    InnerLoop = 3,
    Diagnostics = 4,
    ProbeInputs = 5,
}

/// Coordinates of one substream family; the cell index is appended when a
/// generator is created.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct RngStream {
    pub seed: u64,
    pub trajectory: u64,
    pub stage: Stage,
    pub major: u64,
    pub minor: u64,
}

impl RngStream {
    pub fn new(seed: u64, trajectory: u64, stage: Stage, major: u64, minor: u64) -> Self {
        Self {
            seed,
            trajectory,
            stage,
            major,
            minor,
        }
    }

    /// Stream id for `cell`.
    pub fn stream_id(&self, cell: u64) -> u64 {
        let mut h = splitmix64(self.trajectory);
        h = splitmix64(h ^ self.stage as u64);
        h = splitmix64(h ^ self.major);
        h = splitmix64(h ^ self.minor);
        splitmix64(h ^ cell)
    }

    pub fn rng(&self, cell: u64) -> ChaCha8Rng {
        let mut rng = ChaCha8Rng::seed_from_u64(self.seed);
        rng.set_stream(self.stream_id(cell));
        rng
    }
}

fn splitmix64(x: u64) -> u64 {
    let mut z = x.wrapping_add(0x9e37_79b9_7f4a_7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}
