//! CSV artifacts. Floats are written in `{:.16e}` so every value round-trips
//! bit for bit.

use std::fs::File;
use std::io::Write;
use std::path::Path;

use anyhow::{anyhow, bail, Context, Result};
use noiseguide_core::surrogate::QueryRecord;
use noiseguide_core::{QueryDataset, RunTrace, Sense, TraceRow};

pub fn fmt_f64(v: f64) -> String {
    format!("{v:.16e}")
}

pub fn parse_f64(s: &str) -> Result<f64> {
    s.trim().parse::<f64>().with_context(|| format!("not a number: `{s}`"))
}

fn parse_u64(s: &str) -> Result<u64> {
    s.trim().parse::<u64>().with_context(|| format!("not an unsigned integer: `{s}`"))
}

fn sense_name(sense: Sense) -> &'static str {
    match sense {
        Sense::Minimize => "minimize",
        Sense::Maximize => "maximize",
    }
}

fn parse_sense(s: &str) -> Result<Sense> {
    match s {
        "minimize" => Ok(Sense::Minimize),
        "maximize" => Ok(Sense::Maximize),
        other => bail!("unknown sense `{other}`"),
    }
}

const TRACE_HEADER: [&str; 9] = [
    "batch_index",
    "queries_spent",
    "mean_objective",
    "best_objective",
    "accumulated_best",
    "user_accumulated_best",
    "wall_seconds",
    "sense",
    "complete",
];

pub fn write_trace(path: &Path, trace: &RunTrace) -> Result<()> {
    let mut w = csv::Writer::from_path(path).with_context(|| format!("creating {}", path.display()))?;
    w.write_record(TRACE_HEADER)?;
    let sense = sense_name(trace.sense());
    let complete = trace.is_complete().to_string();
    for r in trace.rows() {
        w.write_record([
            r.batch_index.to_string(),
            r.queries_spent.to_string(),
            fmt_f64(r.mean_objective),
            fmt_f64(r.best_objective),
            fmt_f64(r.accumulated_best),
            fmt_f64(trace.sense().to_user(r.accumulated_best)),
            fmt_f64(r.wall_seconds),
            sense.to_owned(),
            complete.clone(),
        ])?;
    }
    w.flush()?;
    Ok(())
}

pub fn read_trace(path: &Path) -> Result<RunTrace> {
    let mut r = csv::Reader::from_path(path).with_context(|| format!("opening {}", path.display()))?;
    let header = r.headers()?.clone();
    if header.iter().collect::<Vec<_>>() != TRACE_HEADER {
        bail!("{}: unexpected trace header", path.display());
    }
    let mut rows = Vec::new();
    let mut sense = Sense::Minimize;
    let mut complete = true;
    for (i, rec) in r.records().enumerate() {
        let rec = rec?;
        let field = |j: usize| rec.get(j).ok_or_else(|| anyhow!("{}: row {i} is short", path.display()));
        rows.push(TraceRow {
            batch_index: parse_u64(field(0)?)?,
            queries_spent: parse_u64(field(1)?)?,
            mean_objective: parse_f64(field(2)?)?,
            best_objective: parse_f64(field(3)?)?,
            accumulated_best: parse_f64(field(4)?)?,
            wall_seconds: parse_f64(field(6)?)?,
        });
        sense = parse_sense(field(7)?)?;
        complete = field(8)?.parse::<bool>().context("complete column")?;
    }
    if rows.is_empty() {
        bail!("{}: trace has no rows", path.display());
    }
    Ok(RunTrace::from_rows(rows, sense, complete))
}

pub fn write_dataset(path: &Path, data: &QueryDataset) -> Result<()> {
    let mut w = csv::Writer::from_path(path).with_context(|| format!("creating {}", path.display()))?;
    let d = data.records().first().map_or(0, |r| r.x.len());
    let mut header = vec!["record_index".to_owned()];
    header.extend((0..d).map(|j| format!("x{j}")));
    header.extend(["y".to_owned(), "batch_index".to_owned()]);
    w.write_record(&header)?;
    for (i, rec) in data.records().iter().enumerate() {
        let mut row = vec![i.to_string()];
        row.extend(rec.x.iter().map(|v| fmt_f64(*v)));
        row.extend([fmt_f64(rec.y), rec.batch_index.to_string()]);
        w.write_record(&row)?;
    }
    w.flush()?;
    Ok(())
}

pub fn read_dataset(path: &Path) -> Result<QueryDataset> {
    let mut r = csv::Reader::from_path(path).with_context(|| format!("opening {}", path.display()))?;
    let header = r.headers()?.clone();
    let n = header.len();
    if n < 3 || &header[0] != "record_index" || &header[n - 2] != "y" || &header[n - 1] != "batch_index" {
        bail!("{}: unexpected dataset header", path.display());
    }
    let d = n - 3;
    let mut records = Vec::new();
    for rec in r.records() {
        let rec = rec?;
        let x = (1..=d).map(|j| parse_f64(&rec[j])).collect::<Result<Vec<_>>>()?;
        records.push(QueryRecord { x, y: parse_f64(&rec[n - 2])?, batch_index: parse_u64(&rec[n - 1])? });
    }
    QueryDataset::from_records(records).map_err(|e| anyhow!("{}: {e}", path.display()))
}

/// Sample points, with the objective value when one was measured.
pub fn write_samples(path: &Path, samples: &[(Vec<f64>, Option<f64>)]) -> Result<()> {
    let mut w = csv::Writer::from_path(path).with_context(|| format!("creating {}", path.display()))?;
    let d = samples.first().map_or(0, |s| s.0.len());
    let mut header = vec!["instance".to_owned()];
    header.extend((0..d).map(|j| format!("x{j}")));
    header.push("objective".to_owned());
    w.write_record(&header)?;
    for (i, (x, y)) in samples.iter().enumerate() {
        let mut row = vec![i.to_string()];
        row.extend(x.iter().map(|v| fmt_f64(*v)));
        row.push(y.map(fmt_f64).unwrap_or_default());
        w.write_record(&row)?;
    }
    w.flush()?;
    Ok(())
}

/// Writes a header and rows of already formatted fields.
pub fn write_table(path: &Path, header: &[&str], rows: &[Vec<String>]) -> Result<()> {
    let mut w = csv::Writer::from_path(path).with_context(|| format!("creating {}", path.display()))?;
    w.write_record(header)?;
    for row in rows {
        w.write_record(row)?;
    }
    w.flush()?;
    Ok(())
}

pub fn write_text(path: &Path, text: &str) -> Result<()> {
    let mut f = File::create(path).with_context(|| format!("creating {}", path.display()))?;
    f.write_all(text.as_bytes())?;
    Ok(())
}
