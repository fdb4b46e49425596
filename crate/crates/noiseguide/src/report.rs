//! Pairwise query-efficiency reports over saved traces.

use std::path::{Path, PathBuf};

use anyhow::{Context, Result};
use noiseguide_core::compare::{efficiency_gain, EfficiencyGain};
use noiseguide_core::presets::REFERENCE_IMAGE_GAINS;

use crate::csv_io::{fmt_f64, read_trace, write_table, write_text};

#[derive(Debug, Clone, PartialEq)]
pub struct ComparisonRow {
    pub a: PathBuf,
    pub b: PathBuf,
    pub gain: EfficiencyGain,
}

/// Compares every ordered pair of distinct traces and writes `out` plus a
/// `<out>.meta.toml` sidecar.
pub fn compare_traces(paths: &[PathBuf], out: &Path) -> Result<Vec<ComparisonRow>> {
    let traces = paths
        .iter()
        .map(|p| read_trace(p).with_context(|| format!("reading {}", p.display())))
        .collect::<Result<Vec<_>>>()?;
    let mut rows = Vec::new();
    for (i, a) in traces.iter().enumerate() {
        for (j, b) in traces.iter().enumerate() {
            if i != j {
                let gain = efficiency_gain(a, b).with_context(|| format!("comparing {} with {}", paths[i].display(), paths[j].display()))?;
                rows.push(ComparisonRow { a: paths[i].clone(), b: paths[j].clone(), gain });
            }
        }
    }
    let opt = |v: Option<f64>| v.map(fmt_f64).unwrap_or_default();
    let table: Vec<Vec<String>> = rows
        .iter()
        .map(|r| {
            vec![
                r.a.display().to_string(),
                r.b.display().to_string(),
                r.gain.budget_b.to_string(),
                r.gain.full_budget_b.to_string(),
                r.gain.n_star.map(|n| n.to_string()).unwrap_or_default(),
                opt(r.gain.gain()),
                opt(r.gain.gain_full_budget()),
            ]
        })
        .collect();
    write_table(out, &["a", "b", "budget_b", "full_budget_b", "n_star", "gain", "gain_full_budget"], &table)?;

    let mut meta = toml::Table::new();
    meta.insert("version".into(), env!("CARGO_PKG_VERSION").into());
    meta.insert("reference_image_gains".into(), REFERENCE_IMAGE_GAINS.iter().map(|g| toml::Value::from(*g)).collect::<Vec<_>>().into());
    meta.insert("reference_gains_reproduced".into(), false.into());
    meta.insert(
        "note".into(),
        "reference gains come from image-generation experiments and are listed for context; this report measures only the traces given".into(),
    );
    write_text(&meta_path(out), &toml::to_string(&meta)?)?;
    Ok(rows)
}

pub fn meta_path(out: &Path) -> PathBuf {
    let mut name = out.file_name().map(|n| n.to_os_string()).unwrap_or_default();
    name.push(".meta.toml");
    out.with_file_name(name)
}
