use std::time::Instant;

use noiseguide_core::{Clock, InstanceExecutor};
use rayon::prelude::*;

/// Runs instance bodies on the global rayon pool. Results keep index order.
#[derive(Debug, Clone, Copy, Default)]
pub struct RayonExecutor;

impl InstanceExecutor for RayonExecutor {
    fn map<T, F>(&self, n: usize, f: F) -> Vec<T>
    where
        T: Send,
        F: Fn(usize) -> T + Sync + Send,
    {
        (0..n).into_par_iter().map(f).collect()
    }
}

/// Seconds since construction.
#[derive(Debug, Clone, Copy)]
pub struct WallClock(Instant);

impl WallClock {
    pub fn start() -> Self {
        Self(Instant::now())
    }
}

impl Clock for WallClock {
    fn elapsed_seconds(&self) -> f64 {
        self.0.elapsed().as_secs_f64()
    }
}
