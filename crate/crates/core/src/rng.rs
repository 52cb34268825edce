//! Seeded random streams.
//!
//! Every consumer of randomness gets its own ChaCha stream keyed by a
//! `(domain, index)` pair under one seed, so adding a learner or changing `T`
//! never shifts the draws seen by anybody else.

use rand::{RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub type StreamRng = ChaCha8Rng;

/// Named stream domains. The discriminant is the high word of the ChaCha
/// stream id.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
#[repr(u64)]
pub enum Domain {
    Trial = 1,
    ThetaStar = 2,
    Experts = 3,
    Noise = 4,
    Learner = 5,
    Opponent = 6,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct SeedTree {
    seed: u64,
}

impl SeedTree {
    pub fn new(seed: u64) -> Self {
        Self { seed }
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    pub fn stream(&self, domain: Domain, index: u64) -> StreamRng {
        let mut rng = ChaCha8Rng::seed_from_u64(self.seed);
        rng.set_stream(((domain as u64) << 32) | (index & 0xffff_ffff));
        rng
    }

    /// Seed for trial `index` of an experiment rooted at this tree.
    pub fn trial_seed(&self, index: u64) -> u64 {
        self.stream(Domain::Trial, index).next_u64()
    }
}
