use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

/// Portable, reproducible generator used everywhere a seed is accepted.
pub(crate) fn seeded(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// Per-role seeds derived from one global run seed as
/// `global * SPACING + role_offset`, so neighbouring global seeds never share
/// a role seed.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct SeedPlan {
    pub global: u64,
}

impl SeedPlan {
    pub const ASSERTED: u64 = 0;
    pub const TEST: u64 = 1;
    pub const SPLIT: u64 = 2;
    pub const BATCH: u64 = 100;
    pub const INIT: u64 = 1_000;
    pub const TRAIN: u64 = 2_000;
    pub const FINE_TUNE: u64 = 3_000;
    pub const CORRUPT: u64 = 4_000;
    pub const BASELINE: u64 = 5_000;
    pub const SPACING: u64 = 1_000_000;

    pub fn new(global: u64) -> Self {
        SeedPlan { global }
    }

    pub fn derive(&self, role: u64) -> u64 {
        self.global.wrapping_mul(Self::SPACING).wrapping_add(role)
    }

    /// Seed of the `k`-th incoming batch (1-based).
    pub fn batch(&self, k: u64) -> u64 {
        self.derive(Self::BATCH + k)
    }
}
