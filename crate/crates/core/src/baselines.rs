//! Instance-level zeroth-order noise optimization (DNO-style) and a random
//! search control.

use alloc::format;
use alloc::vec;
use alloc::vec::Vec;

use crate::error::{Error, Result};
use crate::executor::InstanceExecutor;
use crate::noise::NoiseSequence;
use crate::objectives::{BudgetMeter, Objective};
use crate::sampler::ChainSampler;
use crate::seed::{rng_for, standard_normal_vec, stream, Rng};
use crate::trace::{Clock, RunTrace};
use crate::vector::{dot, sub};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ZoConfig {
    /// Perturbations per estimate.
    pub q: usize,
    /// Perturbation scale `μ`.
    pub mu: f64,
    /// Optimization iterations `T`.
    pub iterations: usize,
    /// Gradient step `γ`; `None` means `0.1·μ`.
    pub learning_rate: Option<f64>,
    /// Divide the estimate by `μ`.
    pub normalize_by_mu: bool,
    /// Forward-difference step for the chain Jacobian.
    pub jacobian_step: f64,
}

impl ZoConfig {
    pub fn new(q: usize, mu: f64, iterations: usize) -> Self {
        Self { q, mu, iterations, learning_rate: None, normalize_by_mu: false, jacobian_step: 1e-6 }
    }

    pub fn validate(&self) -> Result<()> {
        if self.q == 0 {
            return Err(Error::InvalidConfig("zo q must be at least 1".into()));
        }
        if !(self.mu > 0.0) || !self.mu.is_finite() {
            return Err(Error::InvalidConfig(format!("zo mu must be positive, got {}", self.mu)));
        }
        if !(self.learning_rate() > 0.0) || !(self.jacobian_step > 0.0) {
            return Err(Error::InvalidConfig("zo learning_rate and jacobian_step must be positive".into()));
        }
        Ok(())
    }

    pub fn learning_rate(&self) -> f64 {
        self.learning_rate.unwrap_or(0.1 * self.mu)
    }

    pub fn evaluations_per_run(&self) -> u64 {
        (self.iterations * (self.q + 1)) as u64
    }
}

/// `Ĥ = (1/q) Σ (f(x_i) − f(x))(x_i − x)`, optionally divided by `μ`.
pub fn zo_estimate(base_value: f64, base_x: &[f64], perturbed: &[(f64, Vec<f64>)], mu: f64, normalize_by_mu: bool) -> Vec<f64> {
    let mut h = vec![0.0; base_x.len()];
    for (value, x) in perturbed {
        let dy = value - base_value;
        for ((hj, xj), bj) in h.iter_mut().zip(x).zip(base_x) {
            *hj += dy * (xj - bj);
        }
    }
    let denom = perturbed.len() as f64 * if normalize_by_mu { mu } else { 1.0 };
    h.iter_mut().for_each(|v| *v /= denom);
    h
}

#[derive(Debug, Clone, PartialEq)]
pub struct ZoGradient {
    pub estimate: Vec<f64>,
    pub base_x: Vec<f64>,
    pub base_value: f64,
}

/// One estimate at the chain output of `noise`; spends exactly `q + 1`
/// evaluations, the base first.
#[allow(clippy::too_many_arguments)]
pub fn zo_gradient<S, O>(
    noise: &NoiseSequence,
    sampler: &S,
    objective: &O,
    meter: &BudgetMeter,
    q: usize,
    mu: f64,
    normalize_by_mu: bool,
    rng: &mut Rng,
) -> Result<ZoGradient>
where
    S: ChainSampler + ?Sized,
    O: Objective + ?Sized,
{
    let base_x = sampler.run_chain(noise)?.into_output();
    let base_value = objective.evaluate(&base_x, meter)?;
    let flat = noise.flatten();
    let mut perturbed = Vec::with_capacity(q);
    for _ in 0..q {
        let xi = standard_normal_vec(rng, flat.len());
        let moved: Vec<f64> = flat.iter().zip(&xi).map(|(e, n)| e + mu * n).collect();
        let x = sampler.run_chain(&NoiseSequence::from_flat(&moved, noise.dim())?)?.into_output();
        let y = objective.evaluate(&x, meter)?;
        perturbed.push((y, x));
    }
    Ok(ZoGradient { estimate: zo_estimate(base_value, &base_x, &perturbed, mu, normalize_by_mu), base_x, base_value })
}

/// `vᵀ ∂M(E)/∂E` by forward differences over every noise coordinate. Issues
/// no objective queries.
pub fn chain_vjp<S: ChainSampler + ?Sized>(
    sampler: &S,
    noise: &NoiseSequence,
    base_x: &[f64],
    v: &[f64],
    h: f64,
) -> Result<Vec<f64>> {
    let flat = noise.flatten();
    let mut out = Vec::with_capacity(flat.len());
    let mut probe = flat.clone();
    for j in 0..flat.len() {
        probe[j] = flat[j] + h;
        let x = sampler.run_chain(&NoiseSequence::from_flat(&probe, noise.dim())?)?.into_output();
        probe[j] = flat[j];
        out.push(dot(v, &sub(&x, base_x)) / h);
    }
    Ok(out)
}

#[derive(Debug, Clone, PartialEq)]
pub struct DnoOutcome {
    /// Chain output of the final noise; not evaluated.
    pub x: Vec<f64>,
    pub noise: NoiseSequence,
    /// Base value `f(x)` at each completed iteration.
    pub base_values: Vec<f64>,
    pub evaluations: u64,
    pub complete: bool,
}

/// One DNO instance: `T` rounds of {estimate, pull back, step}. Stops early,
/// flagged incomplete, if the meter runs dry.
pub fn dno_run<S, O>(config: &ZoConfig, sampler: &S, objective: &O, meter: &BudgetMeter, rng: &mut Rng) -> Result<DnoOutcome>
where
    S: ChainSampler + ?Sized,
    O: Objective + ?Sized,
{
    config.validate()?;
    let mut noise = sampler.sample_noise(rng);
    let mut base_values = Vec::with_capacity(config.iterations);
    let mut complete = true;
    for _ in 0..config.iterations {
        let grad = match zo_gradient(&noise, sampler, objective, meter, config.q, config.mu, config.normalize_by_mu, rng) {
            Ok(g) => g,
            Err(Error::BudgetExhausted { .. }) => {
                complete = false;
                break;
            }
            Err(e) => return Err(e),
        };
        base_values.push(grad.base_value);
        let pull = chain_vjp(sampler, &noise, &grad.base_x, &grad.estimate, config.jacobian_step)?;
        let gamma = config.learning_rate();
        let stepped: Vec<f64> = noise.flatten().iter().zip(&pull).map(|(e, g)| e - gamma * g).collect();
        noise = NoiseSequence::from_flat(&stepped, noise.dim())?;
    }
    let evaluations = if complete { config.evaluations_per_run() } else { 0 };
    let x = sampler.run_chain(&noise)?.into_output();
    Ok(DnoOutcome { x, noise, base_values, evaluations, complete })
}

#[derive(Debug, Clone, PartialEq)]
pub struct DnoCohort {
    pub runs: Vec<DnoOutcome>,
    pub trace: RunTrace,
}

/// `M` independent DNO runs. Trace row `t` aggregates iteration `t` across
/// runs: mean and min of the base values, with `t·(q+1)·M` queries spent.
/// Rows share the cohort's elapsed time, apportioned evenly.
#[allow(clippy::too_many_arguments)]
pub fn dno_cohort<S, O, E, C>(
    config: &ZoConfig,
    repetitions: usize,
    sampler: &S,
    objective: &O,
    meter: &BudgetMeter,
    seed: u64,
    executor: &E,
    clock: &C,
) -> Result<DnoCohort>
where
    S: ChainSampler + ?Sized,
    O: Objective + ?Sized,
    E: InstanceExecutor,
    C: Clock + ?Sized,
{
    config.validate()?;
    if repetitions == 0 {
        return Err(Error::InvalidConfig("dno repetitions must be positive".into()));
    }
    let start = clock.elapsed_seconds();
    let runs = executor
        .map(repetitions, |m| {
            let mut rng = rng_for(seed, &[stream::DNO, m as u64]);
            dno_run(config, sampler, objective, meter, &mut rng)
        })
        .into_iter()
        .collect::<Result<Vec<_>>>()?;
    let elapsed = clock.elapsed_seconds() - start;
    let mut runs = runs;
    let counted = runs.iter().map(|r| r.base_values.len()).min().unwrap_or(0);
    let mut trace = RunTrace::new(objective.sense());
    let per_row = ((config.q + 1) * repetitions) as u64;
    for t in 0..counted {
        let values: Vec<f64> = runs.iter().map(|r| r.base_values[t]).collect();
        let wall = elapsed * (t + 1) as f64 / counted as f64;
        trace.push_batch((t + 1) as u64, per_row * (t + 1) as u64, &values, wall);
    }
    if runs.iter().any(|r| !r.complete) {
        trace.mark_incomplete();
    }
    for r in &mut runs {
        if r.complete {
            r.evaluations = config.evaluations_per_run();
        }
    }
    Ok(DnoCohort { runs, trace })
}

#[derive(Debug, Clone, PartialEq)]
pub struct RandomSearchOutcome {
    pub best_x: Vec<f64>,
    pub best_value: f64,
    pub trace: RunTrace,
}

/// Queries `budget` unguided samples in batches of `batch_size` and keeps the
/// best. The last batch may be short.
#[allow(clippy::too_many_arguments)]
pub fn random_search<S, O, E, C>(
    budget: usize,
    batch_size: usize,
    sampler: &S,
    objective: &O,
    meter: &BudgetMeter,
    seed: u64,
    executor: &E,
    clock: &C,
) -> Result<RandomSearchOutcome>
where
    S: ChainSampler + ?Sized,
    O: Objective + ?Sized,
    E: InstanceExecutor,
    C: Clock + ?Sized,
{
    if budget == 0 || batch_size == 0 {
        return Err(Error::InvalidConfig("random search budget and batch_size must be positive".into()));
    }
    let start = clock.elapsed_seconds();
    let mut trace = RunTrace::new(objective.sense());
    let mut best: Option<(Vec<f64>, f64)> = None;
    let mut spent = 0u64;
    let mut batch_index = 0u64;
    while (spent as usize) < budget {
        batch_index += 1;
        let n = batch_size.min(budget - spent as usize);
        let first = spent;
        let xs = executor
            .map(n, |b| {
                let mut rng = rng_for(seed, &[stream::RANDOM_SEARCH, first + b as u64]);
                sampler.run_chain(&sampler.sample_noise(&mut rng)).map(|t| t.into_output())
            })
            .into_iter()
            .collect::<Result<Vec<_>>>()?;
        let mut values = Vec::with_capacity(n);
        for x in xs {
            let y = match objective.evaluate(&x, meter) {
                Ok(y) => y,
                Err(Error::BudgetExhausted { .. }) => {
                    trace.mark_incomplete();
                    break;
                }
                Err(e) => return Err(e),
            };
            spent += 1;
            if best.as_ref().is_none_or(|(_, b)| y < *b) {
                best = Some((x, y));
            }
            values.push(y);
        }
        if values.is_empty() {
            break;
        }
        trace.push_batch(batch_index, spent, &values, clock.elapsed_seconds() - start);
        if !trace.is_complete() {
            break;
        }
    }
    let (best_x, best_value) = best.ok_or(Error::BudgetExhausted { limit: meter.limit() })?;
    Ok(RandomSearchOutcome { best_x, best_value, trace })
}
