//! The 2-D benchmark mixture and named parameter sets.

use alloc::vec;

use crate::error::Result;
use crate::mixture::{Component, MixtureModel};
use crate::sampler::MixtureSampler;
use crate::schedule::{NoiseSchedule, StepRule};

/// Three-component 2-D mixture used by the desk benchmarks.
pub fn benchmark_mixture() -> MixtureModel {
    MixtureModel::new(vec![
        Component::full(0.3, vec![-2.0, 0.0], vec![vec![0.3, 0.1], vec![0.1, 0.2]]),
        Component::isotropic(0.5, vec![2.0, 0.5], 0.25),
        Component::full(0.2, vec![0.0, 2.5], vec![vec![0.4, -0.1], vec![-0.1, 0.2]]),
    ])
    .expect("benchmark mixture is valid")
}

pub fn schedule(rule: StepRule, steps: usize, eta: f64) -> Result<NoiseSchedule> {
    match rule {
        StepRule::Ddim => NoiseSchedule::ddim_eta(steps, eta),
        StepRule::EulerMaruyama => NoiseSchedule::euler_sde(steps, eta),
    }
}

/// Benchmark mixture with a stochastic (`η = 1`) sampler.
pub fn benchmark_sampler(rule: StepRule, steps: usize) -> Result<MixtureSampler> {
    MixtureSampler::new(benchmark_mixture(), schedule(rule, steps, 1.0)?)
}

/// Published Fast Direct settings.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PaperDefaults {
    pub batch_queries: usize,
    pub batch_size: usize,
    pub step_size: f64,
    pub steps: usize,
    /// GP pseudo-target with `ℓ = √d` when true, historical optimum otherwise.
    pub gp: bool,
}

/// Image tasks: `N = 50`, `B = 32`, `α = 80`, `K = 8`, GP with `ℓ = √d`.
pub const PAPER_IMAGE: PaperDefaults = PaperDefaults { batch_queries: 50, batch_size: 32, step_size: 80.0, steps: 8, gp: true };
/// Molecule tasks: `N = 50`, `B = 32`, `α = 1e-2`, `K = 200`, historical optimum.
pub const PAPER_MOLECULE: PaperDefaults =
    PaperDefaults { batch_queries: 50, batch_size: 32, step_size: 1e-2, steps: 200, gp: false };

pub const PAPER_STEP_GRID: [f64; 5] = [20.0, 40.0, 80.0, 160.0, 320.0];
pub const PAPER_BATCH_GRID: [usize; 5] = [4, 8, 16, 32, 64];
pub const DESK_STEP_MULTIPLIERS: [f64; 5] = [0.25, 0.5, 1.0, 2.0, 4.0];
pub const DESK_BATCH_GRID: [usize; 4] = [4, 8, 16, 32];
/// `K′ = K / 2^j` for these `j`.
pub const DESK_TRUNCATION_HALVINGS: [u32; 4] = [0, 1, 2, 3];

/// Reported image-task average efficiency gains, kept for reference only.
pub const REFERENCE_IMAGE_GAINS: [f64; 3] = [10.00, 8.70, 6.67];
