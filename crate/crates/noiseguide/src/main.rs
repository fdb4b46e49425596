use std::path::PathBuf;

use anyhow::Result;
use clap::{Parser, Subcommand};
use noiseguide::{ablate, compare_traces, freeze_eval, load_config, run_experiment, AblationKind};

#[derive(Parser)]
#[command(name = "noiseguide", version, about = "Black-box guided sampling experiments")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run an experiment config.
    Run { config: PathBuf },
    /// Pairwise query-efficiency gains between saved traces.
    Compare {
        #[arg(required = true, num_args = 2..)]
        traces: Vec<PathBuf>,
        #[arg(long, default_value = "report.csv")]
        out: PathBuf,
    },
    /// Sweep one Fast Direct setting.
    Ablate { kind: AblationKind, config: PathBuf },
    /// Guide fresh batches with a surrogate fitted to a saved dataset.
    FreezeEval { dataset: PathBuf, config: PathBuf },
    /// Print a built-in preset.
    Preset { name: Option<String> },
}

fn main() -> Result<()> {
    match Cli::parse().command {
        Command::Run { config } => {
            let summary = run_experiment(&load_config(&config)?)?;
            for s in &summary.seeds {
                let value = s.final_accumulated_best.or(s.final_distance).map_or("-".to_owned(), |v| format!("{v:.6}"));
                println!("seed {:>3}  queries {:>6}  best {value}  {}", s.seed_index, s.queries_spent, s.dir.display());
            }
        }
        Command::Compare { traces, out } => {
            for row in compare_traces(&traces, &out)? {
                let gain = row.gain.gain().map_or("never matched".to_owned(), |g| format!("{g:.3}"));
                println!("{} vs {}: {gain}", row.a.display(), row.b.display());
            }
            println!("wrote {}", out.display());
        }
        Command::Ablate { kind, config } => {
            let report = ablate(kind, &load_config(&config)?)?;
            println!("unguided mean {:.6}", report.unguided_mean);
            for c in &report.cells {
                println!("{:<16} final best {:.6}  final batch mean {:.6}", c.label, c.mean_final_best, c.mean_final_batch);
            }
        }
        Command::FreezeEval { dataset, config } => {
            let report = freeze_eval(&dataset, &load_config(&config)?)?;
            for s in &report.seeds {
                println!(
                    "seed {:>3}  guided {:.6}  unguided {:.6}  queries {}",
                    s.seed_index, s.guided_mean, s.unguided_mean, s.queries_spent
                );
            }
        }
        Command::Preset { name } => match name {
            Some(name) => match noiseguide::config::preset_toml(&name) {
                Some(text) => print!("{}", text.trim_start()),
                None => anyhow::bail!("unknown preset `{name}`"),
            },
            None => noiseguide::config::PRESET_NAMES.iter().for_each(|n| println!("{n}")),
        },
    }
    Ok(())
}
