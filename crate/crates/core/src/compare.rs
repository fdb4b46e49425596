//! Query-efficiency comparison between run traces.
//!
//! For traces `A` and `B`, `N*` is the first query count at which `A`'s
//! accumulated best is at least as good as `B`'s final accumulated best, and
//! `B`'s budget is the query count at which `B` first reached that value.
//! The gain is `budget_B / N*`. Measuring `B` at the point where it stopped
//! improving keeps `gain(A, A) = 1` and ignores trailing rows that change
//! nothing.

use crate::error::{Error, Result};
use crate::trace::RunTrace;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EfficiencyGain {
    /// Queries `B` needed to reach its final best.
    pub budget_b: u64,
    /// All queries `B` spent.
    pub full_budget_b: u64,
    /// `None` when `A` never matches `B`.
    pub n_star: Option<u64>,
}

impl EfficiencyGain {
    pub fn gain(&self) -> Option<f64> {
        self.n_star.map(|n| self.budget_b as f64 / n as f64)
    }

    pub fn gain_full_budget(&self) -> Option<f64> {
        self.n_star.map(|n| self.full_budget_b as f64 / n as f64)
    }
}

pub fn efficiency_gain(a: &RunTrace, b: &RunTrace) -> Result<EfficiencyGain> {
    if a.rows().is_empty() || b.rows().is_empty() {
        return Err(Error::InvalidConfig("cannot compare an empty trace".into()));
    }
    if a.sense() != b.sense() {
        return Err(Error::InvalidConfig("traces report different objective senses".into()));
    }
    let b_final = b.final_accumulated_best().expect("nonempty");
    let budget_b = b.rows().iter().find(|r| r.accumulated_best <= b_final).expect("final row qualifies").queries_spent;
    let n_star = a.rows().iter().find(|r| r.accumulated_best <= b_final).map(|r| r.queries_spent);
    Ok(EfficiencyGain { budget_b, full_budget_b: b.total_queries(), n_star })
}
