//! Deterministic seed derivation and Gaussian draws.

use alloc::vec::Vec;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

/// The generator used for every stochastic draw in the crate.
pub type Rng = ChaCha8Rng;

const GOLDEN: u64 = 0x9e37_79b9_7f4a_7c15;

fn splitmix(mut z: u64) -> u64 {
    z = z.wrapping_add(GOLDEN);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

/// Hashes a master seed together with a path of indices (stream tag, batch,
/// instance, ...). Distinct paths give statistically independent seeds, so
/// per-instance generators do not depend on execution order.
pub fn derive_seed(master: u64, path: &[u64]) -> u64 {
    path.iter()
        .fold(splitmix(master), |acc, &p| splitmix(acc ^ splitmix(p.wrapping_add(GOLDEN))))
}

pub fn rng_for(master: u64, path: &[u64]) -> Rng {
    Rng::seed_from_u64(derive_seed(master, path))
}

pub fn standard_normal(rng: &mut Rng) -> f64 {
    StandardNormal.sample(rng)
}

pub fn standard_normal_vec(rng: &mut Rng, dim: usize) -> Vec<f64> {
    (0..dim).map(|_| standard_normal(rng)).collect()
}

/// Stream tags keep seeds of unrelated consumers apart.
pub mod stream {
    pub const FAST_DIRECT: u64 = 1;
    pub const FROZEN: u64 = 2;
    pub const DNO: u64 = 3;
    pub const RANDOM_SEARCH: u64 = 4;
    pub const GNSO: u64 = 5;
    pub const NOISY_TARGET: u64 = 6;
    pub const OBJECTIVE_NOISE: u64 = 7;
    pub const UNGUIDED: u64 = 8;
}
