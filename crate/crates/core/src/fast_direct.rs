//! The online batch loop: each outer iteration draws fresh noise per
//! instance, guides it toward pseudo-targets from the model frozen at the
//! previous iteration, queries once per instance and refits.

use alloc::format;
use alloc::vec::Vec;

use crate::error::{Error, Result};
use crate::executor::InstanceExecutor;
use crate::gnso::{guidance_update, DirectionRule, StepSize};
use crate::noise::NoiseSequence;
use crate::objectives::{BudgetMeter, Objective};
use crate::sampler::{ChainSampler, Trajectory};
use crate::seed::{rng_for, stream};
use crate::surrogate::{PseudoTargetModel, PseudoTargetRule, QueryDataset};
use crate::trace::{Clock, RunTrace};

#[derive(Debug, Clone, PartialEq)]
pub struct FastDirectConfig {
    /// `N`.
    pub batch_queries: usize,
    /// `B`.
    pub batch_size: usize,
    pub step_size: StepSize,
    pub rule: PseudoTargetRule,
    /// Guidance direction; `Universal` is the standard `x̂* − x_K`.
    pub direction: DirectionRule,
    pub seed: u64,
}

impl FastDirectConfig {
    pub fn validate(&self) -> Result<()> {
        if self.batch_queries == 0 || self.batch_size == 0 {
            return Err(Error::InvalidConfig(format!(
                "batch_queries and batch_size must be positive, got N={} B={}",
                self.batch_queries, self.batch_size
            )));
        }
        self.step_size.validate()
    }

    pub fn total_queries(&self) -> u64 {
        (self.batch_queries * self.batch_size) as u64
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct InstanceState {
    pub noise: NoiseSequence,
    pub trajectory: Trajectory,
    pub last_objective: Option<f64>,
}

impl InstanceState {
    pub fn output(&self) -> &[f64] {
        self.trajectory.output()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct FastDirectOutcome {
    /// Instances of the last completed outer iteration.
    pub final_batch: Vec<InstanceState>,
    pub model: PseudoTargetModel,
    pub dataset: QueryDataset,
    pub trace: RunTrace,
}

impl FastDirectOutcome {
    pub fn final_outputs(&self) -> Vec<Vec<f64>> {
        self.final_batch.iter().map(|s| s.output().to_vec()).collect()
    }
}

/// Runs `iterations` guidance updates on `noise` against the frozen model and
/// returns the chain realized after the last update.
pub fn guide_instance<S: ChainSampler + ?Sized>(
    sampler: &S,
    model: &PseudoTargetModel,
    step_size: StepSize,
    direction: DirectionRule,
    mut noise: NoiseSequence,
    iterations: usize,
) -> Result<InstanceState> {
    let mut resolved = None;
    for t in 1..=iterations {
        let traj = sampler.run_chain(&noise)?;
        let target = model.pseudo_target(traj.output())?;
        guidance_update(&mut noise, &traj, &target, direction, step_size, &mut resolved, t)?;
    }
    let trajectory = sampler.run_chain(&noise)?;
    Ok(InstanceState { noise, trajectory, last_objective: None })
}

/// Full online run. A meter with fewer than `N·B` evaluations left is
/// refused up front; running dry later (a shared meter) returns the partial
/// result with the trace marked incomplete.
pub fn run<S, O, E, C>(
    config: &FastDirectConfig,
    sampler: &S,
    objective: &O,
    meter: &BudgetMeter,
    executor: &E,
    clock: &C,
) -> Result<FastDirectOutcome>
where
    S: ChainSampler + ?Sized,
    O: Objective + ?Sized,
    E: InstanceExecutor,
    C: Clock + ?Sized,
{
    config.validate()?;
    sampler.ensure_guidable()?;
    if meter.remaining() < config.total_queries() {
        return Err(Error::BudgetExhausted { limit: meter.limit() });
    }
    let start = clock.elapsed_seconds();
    let mut dataset = QueryDataset::new();
    let mut model = PseudoTargetModel::empty(&config.rule);
    let mut trace = RunTrace::new(objective.sense());
    let mut final_batch = Vec::new();

    for i in 1..=config.batch_queries {
        let frozen = &model;
        let batch = executor.map(config.batch_size, |b| {
            let mut rng = rng_for(config.seed, &[stream::FAST_DIRECT, i as u64, b as u64]);
            let noise = sampler.sample_noise(&mut rng);
            guide_instance(sampler, frozen, config.step_size, config.direction, noise, i)
        });
        let mut batch = batch.into_iter().collect::<Result<Vec<_>>>()?;

        let mut values = Vec::with_capacity(batch.len());
        for state in &mut batch {
            let y = match objective.evaluate(state.output(), meter) {
                Ok(y) => y,
                Err(Error::BudgetExhausted { .. }) => {
                    trace.mark_incomplete();
                    return Ok(FastDirectOutcome { final_batch, model, dataset, trace });
                }
                Err(e) => return Err(e),
            };
            state.last_objective = Some(y);
            dataset.push(state.output().to_vec(), y, i as u64)?;
            values.push(y);
        }
        trace.push_batch(i as u64, dataset.query_count(), &values, clock.elapsed_seconds() - start);
        model = PseudoTargetModel::fit(&config.rule, &dataset)?;
        final_batch = batch;
    }
    Ok(FastDirectOutcome { final_batch, model, dataset, trace })
}

/// Guidance with a fixed model and no queries: `batch_size` fresh instances,
/// each given `iterations` updates.
#[allow(clippy::too_many_arguments)]
pub fn run_frozen<S, E>(
    model: &PseudoTargetModel,
    batch_size: usize,
    iterations: usize,
    step_size: StepSize,
    direction: DirectionRule,
    seed: u64,
    sampler: &S,
    executor: &E,
) -> Result<Vec<InstanceState>>
where
    S: ChainSampler + ?Sized,
    E: InstanceExecutor,
{
    step_size.validate()?;
    sampler.ensure_guidable()?;
    executor
        .map(batch_size, |b| {
            let mut rng = rng_for(seed, &[stream::FROZEN, b as u64]);
            let noise = sampler.sample_noise(&mut rng);
            guide_instance(sampler, model, step_size, direction, noise, iterations)
        })
        .into_iter()
        .collect()
}

/// Unguided outputs, one fresh noise sequence per instance.
pub fn unguided_batch<S, E>(batch_size: usize, seed: u64, sampler: &S, executor: &E) -> Result<Vec<Vec<f64>>>
where
    S: ChainSampler + ?Sized,
    E: InstanceExecutor,
{
    executor
        .map(batch_size, |b| {
            let mut rng = rng_for(seed, &[stream::UNGUIDED, b as u64]);
            sampler.run_chain(&sampler.sample_noise(&mut rng)).map(Trajectory::into_output)
        })
        .into_iter()
        .collect()
}
