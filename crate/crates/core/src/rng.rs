//! Counter-based random streams.
//!
//! Every random draw in a run comes from a stream keyed by
//! `(run_seed, cluster_id, iteration, slot)`. Streams never depend on
//! scheduling order, so stepping clusters on any number of threads yields the
//! same draws as a serial run.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

pub type StreamRng = ChaCha8Rng;

/// Iteration key reserved for optimizer calibration probes.
pub const CALIBRATION_ITERATION: u64 = u64::MAX;
/// Cluster key reserved for drawing initial parameters.
pub const INIT_CLUSTER: u64 = u64::MAX;

/// Slot 0 of a cluster iteration is the optimizer's own draws (perturbation
/// signs); loss evaluations use slots `1, 2, ...` in call order.
pub const OPTIMIZER_SLOT: u64 = 0;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub struct StreamKey {
    pub seed: u64,
    pub cluster: u64,
    pub iteration: u64,
    pub slot: u64,
}

impl StreamKey {
    pub fn new(seed: u64, cluster: u64, iteration: u64, slot: u64) -> Self {
        Self {
            seed,
            cluster,
            iteration,
            slot,
        }
    }

    pub fn with_slot(self, slot: u64) -> Self {
        Self { slot, ..self }
    }

    pub fn rng(&self) -> StreamRng {
        let mut state = splitmix(self.seed ^ 0x243f_6a88_85a3_08d3);
        let mut bytes = [0u8; 32];
        for (chunk, word) in
            bytes
                .chunks_exact_mut(8)
                .zip([self.cluster, self.iteration, self.slot, 0])
        {
            state = splitmix(state ^ word);
            chunk.copy_from_slice(&state.to_le_bytes());
        }
        ChaCha8Rng::from_seed(bytes)
    }
}

fn splitmix(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9e37_79b9_7f4a_7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}
