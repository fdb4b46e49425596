//! Guided noise-sequence optimization toward a known target.
//!
//! Each iteration runs the chain, picks a direction from the trajectory and
//! the target, and moves every noise `ε_k` along it with norm re-projection.

use alloc::vec::Vec;

use crate::error::{check_dim, Error, Result};
use crate::noise::NoiseSequence;
use crate::sampler::{ChainSampler, Trajectory};
use crate::seed::{standard_normal_vec, Rng};
use crate::vector::{distance, norm, sub};

/// Which trajectory point the update direction `x* − ·` is taken from.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum DirectionRule {
    /// `x* − x_K`, shared by every noise.
    Universal,
    /// `x* − x_k` for noise `k`.
    Stepwise,
    /// `x* − x̂_k` for noise `k`, with `x̂_0 := x̂_1`.
    Predicted,
    /// `x* − x_{K′}` shared by every noise, `K′ = max(1, ⌊K / 2^halvings⌋)`.
    Truncated { halvings: u32 },
}

impl DirectionRule {
    /// The trajectory index used by [`DirectionRule::Truncated`].
    pub fn truncation_index(halvings: u32, steps: usize) -> usize {
        (steps >> halvings.min(63)).max(1)
    }

    /// Direction for noise `k`.
    pub fn direction(&self, target: &[f64], traj: &Trajectory, k: usize) -> Result<Vec<f64>> {
        let source = match *self {
            DirectionRule::Universal => traj.output(),
            DirectionRule::Stepwise => traj.state(k),
            DirectionRule::Predicted => traj.predicted_clean(k).ok_or_else(|| {
                Error::InvalidConfig("sampler does not emit predicted clean points".into())
            })?,
            DirectionRule::Truncated { halvings } => {
                traj.state(Self::truncation_index(halvings, traj.steps()).min(traj.steps()))
            }
        };
        Ok(sub(target, source))
    }

    fn is_shared(&self) -> bool {
        matches!(self, DirectionRule::Universal | DirectionRule::Truncated { .. })
    }
}

/// How the step size `α` is chosen.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum StepSize {
    Fixed(f64),
    /// `α = c / ‖d₀‖` where `d₀` is the first nonzero guidance direction,
    /// then held fixed.
    ScaleNormalized(f64),
}

impl StepSize {
    pub fn validate(&self) -> Result<()> {
        let v = match *self {
            StepSize::Fixed(v) | StepSize::ScaleNormalized(v) => v,
        };
        if v >= 0.0 && v.is_finite() {
            Ok(())
        } else {
            Err(Error::InvalidConfig("step size must be finite and nonnegative".into()))
        }
    }

    /// Resolves against the first direction norm; `None` while that norm is 0.
    pub fn resolve(&self, first_direction_norm: f64) -> Option<f64> {
        match *self {
            StepSize::Fixed(alpha) => Some(alpha),
            StepSize::ScaleNormalized(c) if first_direction_norm > 0.0 => Some(c / first_direction_norm),
            StepSize::ScaleNormalized(_) => None,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct GnsoConfig {
    pub step_size: StepSize,
    pub iterations: usize,
    pub direction: DirectionRule,
}

impl GnsoConfig {
    pub fn validate(&self) -> Result<()> {
        self.step_size.validate()?;
        if self.iterations == 0 {
            return Err(Error::InvalidConfig("gnso needs at least one iteration".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct GnsoOutcome {
    /// Chain realized from the final noise sequence.
    pub trajectory: Trajectory,
    /// `‖x* − x_K‖` before each update and after the last one (`T + 1` entries).
    pub distances: Vec<f64>,
    pub noise: NoiseSequence,
    /// The step size actually used (0 if the chain already sat on the target).
    pub step_size: f64,
}

/// Moves every noise of `noise` once. `step_size` is resolved lazily on the
/// first nonzero direction and cached in `resolved`.
pub(crate) fn guidance_update(
    noise: &mut NoiseSequence,
    traj: &Trajectory,
    target: &[f64],
    rule: DirectionRule,
    step_size: StepSize,
    resolved: &mut Option<f64>,
    iteration: usize,
) -> Result<()> {
    let shared = if rule.is_shared() { Some(rule.direction(target, traj, 0)?) } else { None };
    if resolved.is_none() {
        let first = match &shared {
            Some(d) => norm(d),
            None => norm(&DirectionRule::Universal.direction(target, traj, 0)?),
        };
        *resolved = step_size.resolve(first);
    }
    let alpha = resolved.unwrap_or(0.0);
    for k in 0..=noise.steps() {
        match &shared {
            Some(d) => noise.update(k, d, alpha, iteration)?,
            None => noise.update(k, &rule.direction(target, traj, k)?, alpha, iteration)?,
        }
    }
    Ok(())
}

/// Runs `config.iterations` guidance iterations from `noise` toward `target`.
pub fn gnso_run<S: ChainSampler + ?Sized>(
    sampler: &S,
    target: &[f64],
    config: &GnsoConfig,
    mut noise: NoiseSequence,
) -> Result<GnsoOutcome> {
    config.validate()?;
    check_dim(sampler.dim(), target.len())?;
    sampler.ensure_guidable()?;
    let mut resolved = None;
    let mut distances = Vec::with_capacity(config.iterations + 1);
    for t in 1..=config.iterations {
        let traj = sampler.run_chain(&noise)?;
        distances.push(distance(target, traj.output()));
        guidance_update(&mut noise, &traj, target, config.direction, config.step_size, &mut resolved, t)?;
    }
    let trajectory = sampler.run_chain(&noise)?;
    distances.push(distance(target, trajectory.output()));
    Ok(GnsoOutcome { trajectory, distances, noise, step_size: resolved.unwrap_or(0.0) })
}

#[derive(Debug, Clone, PartialEq)]
pub struct NoisyTargetOutcome {
    pub run: GnsoOutcome,
    pub noisy_target: Vec<f64>,
    pub clean_target: Vec<f64>,
}

/// [`gnso_run`] toward `target + noise_std·g` with `g ~ N(0, I)` drawn once
/// from `rng`.
pub fn gnso_run_noisy_target<S: ChainSampler + ?Sized>(
    sampler: &S,
    target: &[f64],
    noise_std: f64,
    config: &GnsoConfig,
    noise: NoiseSequence,
    rng: &mut Rng,
) -> Result<NoisyTargetOutcome> {
    if !(noise_std >= 0.0) || !noise_std.is_finite() {
        return Err(Error::InvalidConfig("target noise std must be finite and nonnegative".into()));
    }
    let g = standard_normal_vec(rng, target.len());
    let noisy_target: Vec<f64> = target.iter().zip(&g).map(|(x, gi)| x + noise_std * gi).collect();
    let run = gnso_run(sampler, &noisy_target, config, noise)?;
    Ok(NoisyTargetOutcome { run, noisy_target, clean_target: target.to_vec() })
}
