//! One-factor sweeps around a Fast Direct configuration.

use std::fs;
use std::path::PathBuf;

use anyhow::{bail, Result};
use noiseguide_core::fast_direct::unguided_batch;
use noiseguide_core::gnso::DirectionRule;
use noiseguide_core::presets::{DESK_BATCH_GRID, DESK_STEP_MULTIPLIERS, DESK_TRUNCATION_HALVINGS, PAPER_BATCH_GRID, PAPER_STEP_GRID};
use noiseguide_core::{BudgetMeter, Objective, Sequential};

use crate::config::{DirectionName, ExperimentConfig, GridName, MethodConfig};
use crate::csv_io::{fmt_f64, write_table};
use crate::runner::{run_experiment, RunSummary};

#[derive(Debug, Clone, Copy, PartialEq, Eq, clap::ValueEnum)]
pub enum AblationKind {
    StepSize,
    BatchSize,
    DirectionKprime,
}

impl AblationKind {
    pub fn name(self) -> &'static str {
        match self {
            AblationKind::StepSize => "step_size",
            AblationKind::BatchSize => "batch_size",
            AblationKind::DirectionKprime => "direction_kprime",
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct AblationCell {
    pub label: String,
    pub value: f64,
    pub summary: RunSummary,
    /// Mean over seeds of the final accumulated best, user scale.
    pub mean_final_best: f64,
    /// Mean over seeds of the last batch's mean objective, user scale.
    pub mean_final_batch: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct AblationReport {
    pub output_dir: PathBuf,
    pub cells: Vec<AblationCell>,
    /// Mean objective of unguided samples over the same seeds, user scale.
    pub unguided_mean: f64,
}

/// Grid values for `kind`: explicit overrides first, then the named grid.
pub fn grid(kind: AblationKind, config: &ExperimentConfig) -> Result<Vec<f64>> {
    let MethodConfig::FastDirect { step_size, .. } = &config.method else {
        bail!("ablations need a fast_direct method");
    };
    let a = &config.ablation;
    Ok(match kind {
        AblationKind::StepSize => match (&a.step_sizes, &a.step_multipliers, a.grid) {
            (Some(v), _, _) => v.clone(),
            (None, Some(m), _) => m.iter().map(|m| m * step_size).collect(),
            (None, None, GridName::Desk) => DESK_STEP_MULTIPLIERS.iter().map(|m| m * step_size).collect(),
            (None, None, GridName::Paper) => PAPER_STEP_GRID.to_vec(),
        },
        AblationKind::BatchSize => match (&a.batch_sizes, a.grid) {
            (Some(v), _) => v.iter().map(|b| *b as f64).collect(),
            (None, GridName::Desk) => DESK_BATCH_GRID.iter().map(|b| *b as f64).collect(),
            (None, GridName::Paper) => PAPER_BATCH_GRID.iter().map(|b| *b as f64).collect(),
        },
        AblationKind::DirectionKprime => {
            a.halvings.clone().unwrap_or(DESK_TRUNCATION_HALVINGS.to_vec()).into_iter().map(f64::from).collect()
        }
    })
}

fn cell_config(kind: AblationKind, base: &ExperimentConfig, value: f64, root: &std::path::Path) -> Result<(String, ExperimentConfig)> {
    let mut config = base.clone();
    let MethodConfig::FastDirect { step_size, batch_size, direction, halvings, .. } = &mut config.method else {
        bail!("ablations need a fast_direct method");
    };
    let label = match kind {
        AblationKind::StepSize => {
            *step_size = value;
            format!("step-{value}")
        }
        AblationKind::BatchSize => {
            *batch_size = value as usize;
            format!("batch-{}", value as usize)
        }
        AblationKind::DirectionKprime => {
            *direction = DirectionName::Truncated;
            *halvings = value as u32;
            format!("kprime-{}", DirectionRule::truncation_index(value as u32, base.sampler.steps))
        }
    };
    config.budget = config.required_budget();
    config.output_dir = root.join(&label);
    Ok((label, config))
}

pub fn ablate(kind: AblationKind, config: &ExperimentConfig) -> Result<AblationReport> {
    config.validate()?;
    let values = grid(kind, config)?;
    if values.is_empty() {
        bail!("ablation grid for {} is empty", kind.name());
    }
    let root = config.output_dir.join(format!("ablation-{}", kind.name()));
    fs::create_dir_all(&root)?;
    let mut cells = Vec::with_capacity(values.len());
    for value in values {
        let (label, cell) = cell_config(kind, config, value, &root)?;
        let summary = run_experiment(&cell)?;
        let mean = |f: fn(&crate::runner::SeedSummary) -> Option<f64>| {
            let v: Vec<f64> = summary.seeds.iter().filter_map(f).collect();
            v.iter().sum::<f64>() / v.len() as f64
        };
        let mean_final_best = mean(|s| s.final_accumulated_best);
        let mean_final_batch = mean(|s| s.final_batch_mean);
        cells.push(AblationCell { label, value, summary, mean_final_best, mean_final_batch });
    }
    let unguided_mean = unguided_reference(config)?;
    let rows: Vec<Vec<String>> = cells
        .iter()
        .map(|c| {
            vec![c.label.clone(), fmt_f64(c.value), fmt_f64(c.mean_final_best), fmt_f64(c.mean_final_batch), fmt_f64(unguided_mean)]
        })
        .collect();
    write_table(
        &root.join("grid.csv"),
        &["label", "value", "mean_final_best", "mean_final_batch", "unguided_mean"],
        &rows,
    )?;
    Ok(AblationReport { output_dir: root, cells, unguided_mean })
}

/// Unguided batches of the base batch size, scored on an audit meter.
fn unguided_reference(config: &ExperimentConfig) -> Result<f64> {
    let MethodConfig::FastDirect { batch_size, .. } = &config.method else { unreachable!() };
    let sampler = config.sampler()?;
    let audit = BudgetMeter::unlimited();
    let mut values = Vec::new();
    for s in 0..config.seeds.count {
        let seed = config.seed(s);
        let objective = config.objective(seed)?;
        for x in unguided_batch(*batch_size, seed, &sampler, &Sequential)? {
            values.push(objective.sense().to_user(objective.evaluate(&x, &audit)?));
        }
    }
    Ok(values.iter().sum::<f64>() / values.len() as f64)
}
