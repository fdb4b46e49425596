//! Per-batch run records and the clock used to stamp them.

use alloc::vec::Vec;

use crate::objectives::Sense;

/// Source of elapsed seconds. The no-op clock keeps traces byte-stable.
pub trait Clock: Sync {
    fn elapsed_seconds(&self) -> f64;
}

#[derive(Debug, Clone, Copy, Default)]
pub struct NullClock;

impl Clock for NullClock {
    fn elapsed_seconds(&self) -> f64 {
        0.0
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TraceRow {
    pub batch_index: u64,
    pub queries_spent: u64,
    pub mean_objective: f64,
    pub best_objective: f64,
    pub accumulated_best: f64,
    pub wall_seconds: f64,
}

/// Objective statistics per batch query. Values are internal (minimized).
#[derive(Debug, Clone, PartialEq)]
pub struct RunTrace {
    rows: Vec<TraceRow>,
    sense: Sense,
    complete: bool,
}

impl RunTrace {
    pub fn new(sense: Sense) -> Self {
        Self { rows: Vec::new(), sense, complete: true }
    }

    /// Rebuilds a trace from stored rows, recomputing nothing.
    pub fn from_rows(rows: Vec<TraceRow>, sense: Sense, complete: bool) -> Self {
        Self { rows, sense, complete }
    }

    /// Appends a batch. `values` must be nonempty.
    pub fn push_batch(&mut self, batch_index: u64, queries_spent: u64, values: &[f64], wall_seconds: f64) {
        let mean = values.iter().sum::<f64>() / values.len() as f64;
        let best = values.iter().copied().fold(f64::INFINITY, f64::min);
        self.push_summary(batch_index, queries_spent, mean, best, wall_seconds);
    }

    pub fn push_summary(&mut self, batch_index: u64, queries_spent: u64, mean: f64, best: f64, wall_seconds: f64) {
        let accumulated_best = match self.rows.last() {
            Some(prev) => prev.accumulated_best.min(best),
            None => best,
        };
        self.rows.push(TraceRow {
            batch_index,
            queries_spent,
            mean_objective: mean,
            best_objective: best,
            accumulated_best,
            wall_seconds,
        });
    }

    pub fn rows(&self) -> &[TraceRow] {
        &self.rows
    }

    pub fn sense(&self) -> Sense {
        self.sense
    }

    pub fn is_complete(&self) -> bool {
        self.complete
    }

    pub fn mark_incomplete(&mut self) {
        self.complete = false;
    }

    pub fn final_accumulated_best(&self) -> Option<f64> {
        self.rows.last().map(|r| r.accumulated_best)
    }

    pub fn total_queries(&self) -> u64 {
        self.rows.last().map_or(0, |r| r.queries_spent)
    }
}
