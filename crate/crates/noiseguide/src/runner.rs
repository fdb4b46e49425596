//! Runs a configured experiment and writes its artifacts.
//!
//! Layout under `output_dir`:
//! `manifest.toml` and one `seed-NNN/` directory per seed holding
//! `trace.csv`, `dataset.csv` and `samples.csv` as the method produces them.

use std::fs;
use std::path::{Path, PathBuf};

use anyhow::{Context, Result};
use noiseguide_core::baselines::{dno_cohort, random_search};
use noiseguide_core::fast_direct;
use noiseguide_core::gnso::{gnso_run, gnso_run_noisy_target};
use noiseguide_core::seed::{rng_for, stream};
use noiseguide_core::{BudgetMeter, ChainSampler, Clock, InstanceExecutor, NullClock, Objective, RunTrace, Sequential};

use crate::config::{ExperimentConfig, MethodConfig};
use crate::csv_io::{fmt_f64, write_dataset, write_samples, write_table, write_text, write_trace};
use crate::parallel::{RayonExecutor, WallClock};

#[derive(Debug, Clone, PartialEq)]
pub struct SeedSummary {
    pub seed_index: usize,
    pub seed: u64,
    pub dir: PathBuf,
    pub queries_spent: u64,
    pub complete: bool,
    /// Best value seen, on the user's scale. GNSO runs report none.
    pub final_accumulated_best: Option<f64>,
    /// Mean objective of the last batch, on the user's scale.
    pub final_batch_mean: Option<f64>,
    /// GNSO only: distance to the target after the last update.
    pub final_distance: Option<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunSummary {
    pub output_dir: PathBuf,
    pub method: &'static str,
    pub seeds: Vec<SeedSummary>,
}

pub fn seed_dir(root: &Path, index: usize) -> PathBuf {
    root.join(format!("seed-{index:03}"))
}

pub fn run_experiment(config: &ExperimentConfig) -> Result<RunSummary> {
    config.validate()?;
    fs::create_dir_all(&config.output_dir).with_context(|| format!("creating {}", config.output_dir.display()))?;
    let seeds = (0..config.seeds.count)
        .map(|s| match (config.parallel, config.record_wall_time) {
            (true, true) => run_seed(config, s, &RayonExecutor, &WallClock::start()),
            (true, false) => run_seed(config, s, &RayonExecutor, &NullClock),
            (false, true) => run_seed(config, s, &Sequential, &WallClock::start()),
            (false, false) => run_seed(config, s, &Sequential, &NullClock),
        })
        .collect::<Result<Vec<_>>>()?;
    let summary = RunSummary { output_dir: config.output_dir.clone(), method: config.method_name(), seeds };
    write_manifest(config, &summary)?;
    Ok(summary)
}

fn run_seed<E: InstanceExecutor, C: Clock>(config: &ExperimentConfig, s: usize, executor: &E, clock: &C) -> Result<SeedSummary> {
    let seed = config.seed(s);
    let dir = seed_dir(&config.output_dir, s);
    fs::create_dir_all(&dir).with_context(|| format!("creating {}", dir.display()))?;
    let sampler = config.sampler()?;
    let objective = config.objective(seed)?;
    let meter = BudgetMeter::new(config.budget);
    let sense = objective.sense();
    let mut summary = SeedSummary {
        seed_index: s,
        seed,
        dir: dir.clone(),
        queries_spent: 0,
        complete: true,
        final_accumulated_best: None,
        final_batch_mean: None,
        final_distance: None,
    };
    let finish = |summary: &mut SeedSummary, trace: &RunTrace| -> Result<()> {
        write_trace(&dir.join("trace.csv"), trace)?;
        summary.complete = trace.is_complete();
        summary.final_accumulated_best = trace.final_accumulated_best().map(|v| sense.to_user(v));
        summary.final_batch_mean = trace.rows().last().map(|r| sense.to_user(r.mean_objective));
        Ok(())
    };

    match &config.method {
        MethodConfig::FastDirect { .. } => {
            let fd = config.fast_direct(seed)?;
            let out = fast_direct::run(&fd, &sampler, &objective, &meter, executor, clock)?;
            finish(&mut summary, &out.trace)?;
            write_dataset(&dir.join("dataset.csv"), &out.dataset)?;
            let samples: Vec<_> = out.final_batch.iter().map(|st| (st.output().to_vec(), st.last_objective.map(|v| sense.to_user(v)))).collect();
            write_samples(&dir.join("samples.csv"), &samples)?;
        }
        MethodConfig::Dno { .. } => {
            let (zo, repetitions) = config.zo()?;
            let out = dno_cohort(&zo, repetitions, &sampler, &objective, &meter, seed, executor, clock)?;
            finish(&mut summary, &out.trace)?;
            let samples: Vec<_> = out.runs.iter().map(|r| (r.x.clone(), None)).collect();
            write_samples(&dir.join("samples.csv"), &samples)?;
        }
        MethodConfig::RandomSearch { batch_size } => {
            let out = random_search(config.budget as usize, *batch_size, &sampler, &objective, &meter, seed, executor, clock)?;
            finish(&mut summary, &out.trace)?;
            write_samples(&dir.join("samples.csv"), &[(out.best_x, Some(sense.to_user(out.best_value)))])?;
        }
        MethodConfig::Gnso { .. } => {
            let (gnso, target, target_noise_std) = config.gnso()?;
            let mut rng = rng_for(seed, &[stream::GNSO]);
            let noise = sampler.sample_noise(&mut rng);
            let run = if target_noise_std > 0.0 {
                gnso_run_noisy_target(&sampler, &target, target_noise_std, &gnso, noise, &mut rng)?.run
            } else {
                gnso_run(&sampler, &target, &gnso, noise)?
            };
            let rows: Vec<Vec<String>> =
                run.distances.iter().enumerate().map(|(t, d)| vec![t.to_string(), fmt_f64(*d)]).collect();
            write_table(&dir.join("distances.csv"), &["iteration", "distance"], &rows)?;
            write_samples(&dir.join("samples.csv"), &[(run.trajectory.output().to_vec(), None)])?;
            summary.final_distance = run.distances.last().copied();
        }
    }
    summary.queries_spent = meter.spent();
    Ok(summary)
}

fn write_manifest(config: &ExperimentConfig, summary: &RunSummary) -> Result<()> {
    let mut run = toml::Table::new();
    run.insert("version".into(), env!("CARGO_PKG_VERSION").into());
    run.insert("method".into(), summary.method.into());
    let seeds: Vec<toml::Value> = summary
        .seeds
        .iter()
        .map(|s| {
            let mut t = toml::Table::new();
            t.insert("index".into(), (s.seed_index as i64).into());
            // TOML integers are signed; the seed is stored as its bit pattern in hex.
            t.insert("seed".into(), format!("{:#018x}", s.seed).into());
            t.insert("queries_spent".into(), (s.queries_spent as i64).into());
            t.insert("complete".into(), s.complete.into());
            if let Some(v) = s.final_accumulated_best {
                t.insert("final_accumulated_best".into(), v.into());
            }
            if let Some(v) = s.final_distance {
                t.insert("final_distance".into(), v.into());
            }
            toml::Value::Table(t)
        })
        .collect();
    run.insert("seeds".into(), seeds.into());
    let mut doc = toml::Table::new();
    doc.insert("run".into(), run.into());
    doc.insert("config".into(), toml::Table::try_from(config)?.into());
    write_text(&config.output_dir.join("manifest.toml"), &toml::to_string(&doc)?)
}
