//! Guidance from a fixed surrogate, with no further queries.

use std::fs;
use std::path::{Path, PathBuf};

use anyhow::{Context, Result};
use noiseguide_core::fast_direct::{run_frozen, unguided_batch};
use noiseguide_core::{BudgetMeter, InstanceExecutor, Objective, PseudoTargetModel, Sequential};

use crate::config::ExperimentConfig;
use crate::csv_io::{fmt_f64, read_dataset, write_samples, write_table};
use crate::parallel::RayonExecutor;
use crate::runner::seed_dir;

#[derive(Debug, Clone, PartialEq)]
pub struct FreezeSeed {
    pub seed_index: usize,
    /// Mean objective of the guided batch, user scale.
    pub guided_mean: f64,
    /// Mean objective of an unguided batch of the same size, user scale.
    pub unguided_mean: f64,
    /// Evaluations charged to the method. Always zero.
    pub queries_spent: u64,
    /// Evaluations made only to score the outputs.
    pub audit_evaluations: u64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct FreezeReport {
    pub output_dir: PathBuf,
    pub seeds: Vec<FreezeSeed>,
}

/// Fits the configured pseudo-target model to `dataset`, then guides fresh
/// batches with it for each seed. Outputs are scored on a separate audit
/// meter; the method's own meter has a limit of zero.
pub fn freeze_eval(dataset: &Path, config: &ExperimentConfig) -> Result<FreezeReport> {
    config.validate()?;
    let data = read_dataset(dataset)?;
    let output_dir = config.output_dir.join("freeze-eval");
    fs::create_dir_all(&output_dir).with_context(|| format!("creating {}", output_dir.display()))?;
    let seeds = (0..config.seeds.count)
        .map(|s| {
            if config.parallel {
                freeze_seed(config, &data, &output_dir, s, &RayonExecutor)
            } else {
                freeze_seed(config, &data, &output_dir, s, &Sequential)
            }
        })
        .collect::<Result<Vec<_>>>()?;
    let rows: Vec<Vec<String>> = seeds
        .iter()
        .map(|f| {
            vec![
                f.seed_index.to_string(),
                fmt_f64(f.guided_mean),
                fmt_f64(f.unguided_mean),
                f.queries_spent.to_string(),
                f.audit_evaluations.to_string(),
            ]
        })
        .collect();
    write_table(
        &output_dir.join("summary.csv"),
        &["seed_index", "guided_mean", "unguided_mean", "queries_spent", "audit_evaluations"],
        &rows,
    )?;
    Ok(FreezeReport { output_dir, seeds })
}

fn freeze_seed<E: InstanceExecutor>(
    config: &ExperimentConfig,
    data: &noiseguide_core::QueryDataset,
    root: &Path,
    s: usize,
    executor: &E,
) -> Result<FreezeSeed> {
    let seed = config.seed(s);
    let fd = config.fast_direct(seed)?;
    let sampler = config.sampler()?;
    let objective = config.objective(seed)?;
    let model = PseudoTargetModel::fit(&fd.rule, data)?;
    let iterations = config.frozen_iterations().unwrap_or(fd.batch_queries);
    let method_meter = BudgetMeter::new(0);
    let guided = run_frozen(&model, fd.batch_size, iterations, fd.step_size, fd.direction, seed, &sampler, executor)?;
    let unguided = unguided_batch(fd.batch_size, seed, &sampler, executor)?;

    let audit = BudgetMeter::unlimited();
    let sense = objective.sense();
    let score = |xs: &[Vec<f64>]| -> Result<Vec<f64>> {
        xs.iter().map(|x| Ok(sense.to_user(objective.evaluate(x, &audit)?))).collect()
    };
    let guided_x: Vec<Vec<f64>> = guided.iter().map(|g| g.output().to_vec()).collect();
    let guided_y = score(&guided_x)?;
    let unguided_y = score(&unguided)?;
    let dir = seed_dir(root, s);
    fs::create_dir_all(&dir)?;
    let pair = |xs: &[Vec<f64>], ys: &[f64]| xs.iter().cloned().zip(ys.iter().map(|y| Some(*y))).collect::<Vec<_>>();
    write_samples(&dir.join("guided.csv"), &pair(&guided_x, &guided_y))?;
    write_samples(&dir.join("unguided.csv"), &pair(&unguided, &unguided_y))?;
    let mean = |v: &[f64]| v.iter().sum::<f64>() / v.len() as f64;
    Ok(FreezeSeed {
        seed_index: s,
        guided_mean: mean(&guided_y),
        unguided_mean: mean(&unguided_y),
        queries_spent: method_meter.spent(),
        audit_evaluations: audit.spent(),
    })
}
