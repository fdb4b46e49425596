//! Experiment harness over `noiseguide-core`: TOML configs, CSV artifacts,
//! parallel execution and the `noiseguide` command line.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod ablation;
pub mod config;
pub mod csv_io;
pub mod freeze;
pub mod parallel;
pub mod report;
pub mod runner;

pub use ablation::{ablate, AblationKind, AblationReport};
pub use config::{ConfigError, ExperimentConfig};
pub use freeze::{freeze_eval, FreezeReport};
pub use parallel::{RayonExecutor, WallClock};
pub use report::compare_traces;
pub use runner::{run_experiment, RunSummary, SeedSummary};

pub fn load_config(path: &std::path::Path) -> anyhow::Result<ExperimentConfig> {
    use anyhow::Context;
    let text = std::fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
    ExperimentConfig::from_toml_str(&text).with_context(|| format!("loading {}", path.display()))
}
