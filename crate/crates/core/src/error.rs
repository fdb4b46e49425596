use alloc::string::String;
use alloc::vec::Vec;

/// Errors raised by the guidance core.
#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum Error {
    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },

    #[error("invalid configuration: {0}")]
    InvalidConfig(String),

    #[error("covariance of component {component} is not symmetric positive definite")]
    NotPositiveDefinite { component: usize },

    #[error("sampler step {step} out of range 1..={steps}")]
    StepOutOfRange { step: usize, steps: usize },

    #[error("sampler injects no noise (eta = 0); guidance would have no effect")]
    DeterministicSampler,

    #[error("degenerate noise update at iteration {iteration}, step {step}: updated noise has zero norm")]
    DegenerateUpdate { iteration: usize, step: usize },

    #[error("gram solve failed ({reason}); offending records {records:?}")]
    GramSolve { reason: String, records: Vec<usize> },

    #[error("dataset is empty; no pseudo-target available")]
    EmptyDataset,

    #[error("evaluation budget of {limit} exhausted")]
    BudgetExhausted { limit: u64 },
}

pub type Result<T, E = Error> = core::result::Result<T, E>;

pub(crate) fn check_dim(expected: usize, found: usize) -> Result<()> {
    if expected == found {
        Ok(())
    } else {
        Err(Error::DimensionMismatch { expected, found })
    }
}
