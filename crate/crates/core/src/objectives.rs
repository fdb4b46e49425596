//! Budget-metered black-box objectives. Every objective is minimized
//! internally; `Sense` records how values are reported to the user.

use alloc::format;
use alloc::vec::Vec;
use core::sync::atomic::{AtomicUsize, Ordering};

use crate::error::{check_dim, Error, Result};
use crate::mixture::MixtureModel;
use crate::seed::{derive_seed, rng_for, standard_normal, standard_normal_vec, stream};
use crate::vector::{add, distance, scale};

/// Evaluation counter shared by everything that queries an objective.
/// Counts are held in a `usize`, so limits saturate at `usize::MAX`.
#[derive(Debug)]
pub struct BudgetMeter {
    limit: u64,
    spent: AtomicUsize,
}

impl BudgetMeter {
    pub fn new(limit: u64) -> Self {
        Self { limit: limit.min(usize::MAX as u64), spent: AtomicUsize::new(0) }
    }

    pub fn unlimited() -> Self {
        Self::new(u64::MAX)
    }

    pub fn limit(&self) -> u64 {
        self.limit
    }

    pub fn spent(&self) -> u64 {
        self.spent.load(Ordering::SeqCst) as u64
    }

    pub fn remaining(&self) -> u64 {
        self.limit - self.spent()
    }

    /// Claims one evaluation, returning the count after the claim.
    pub fn try_tick(&self) -> Result<u64> {
        let limit = self.limit as usize;
        self.spent
            .fetch_update(Ordering::SeqCst, Ordering::SeqCst, |s| (s < limit).then_some(s + 1))
            .map(|prev| prev as u64 + 1)
            .map_err(|_| Error::BudgetExhausted { limit: self.limit })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Sense {
    Minimize,
    Maximize,
}

impl Sense {
    /// Converts an internal (minimized) value to the user-facing scale.
    pub fn to_user(self, internal: f64) -> f64 {
        match self {
            Sense::Minimize => internal,
            Sense::Maximize => -internal,
        }
    }
}

/// A black-box objective. Only values come back; there is no gradient path.
pub trait Objective: Sync {
    fn evaluate(&self, x: &[f64], meter: &BudgetMeter) -> Result<f64>;
    fn sense(&self) -> Sense;
}

#[derive(Debug, Clone, PartialEq)]
pub enum ObjectiveKind {
    /// `‖x − x*‖`, or its square.
    TargetDistance { target: Vec<f64>, squared: bool },
    /// `−clamp(round(5 − s‖x − x*‖), 1, 5)`.
    QuantizedRating { target: Vec<f64>, scale: f64 },
    /// `−log p(x)` under the data mixture.
    ModeDensity { model: MixtureModel },
    /// `Σ x_j`, negated when maximizing.
    CoordinateSum { maximize: bool },
    /// Distance to `x* + target_noise_std·g`, with `g` drawn once from the
    /// objective seed.
    NoisyTargetDistance { target: Vec<f64>, target_noise_std: f64, squared: bool },
}

#[derive(Debug, Clone, PartialEq)]
pub struct ObjectiveSpec {
    kind: ObjectiveKind,
    noise_std: f64,
    seed: u64,
    corrupted_target: Option<Vec<f64>>,
}

impl ObjectiveSpec {
    pub fn new(kind: ObjectiveKind) -> Result<Self> {
        Self::with_noise(kind, 0.0, 0)
    }

    /// Adds `N(0, noise_std²)` evaluation noise. The draw is a function of
    /// `(seed, x)`, so repeated runs and any evaluation order agree.
    pub fn with_noise(kind: ObjectiveKind, noise_std: f64, seed: u64) -> Result<Self> {
        if !(noise_std >= 0.0) || !noise_std.is_finite() {
            return Err(Error::InvalidConfig(format!("objective noise_std must be nonnegative, got {noise_std}")));
        }
        let corrupted_target = match &kind {
            ObjectiveKind::QuantizedRating { scale, .. } if !(*scale > 0.0) => {
                return Err(Error::InvalidConfig(format!("rating scale must be positive, got {scale}")));
            }
            ObjectiveKind::NoisyTargetDistance { target, target_noise_std, .. } => {
                if !(*target_noise_std >= 0.0) {
                    return Err(Error::InvalidConfig(format!(
                        "target_noise_std must be nonnegative, got {target_noise_std}"
                    )));
                }
                let mut rng = rng_for(seed, &[stream::NOISY_TARGET]);
                let g = standard_normal_vec(&mut rng, target.len());
                Some(add(target, &scale(*target_noise_std, &g)))
            }
            _ => None,
        };
        Ok(Self { kind, noise_std, seed, corrupted_target })
    }

    pub fn kind(&self) -> &ObjectiveKind {
        &self.kind
    }

    pub fn noise_std(&self) -> f64 {
        self.noise_std
    }

    /// The corrupted target of a `NoisyTargetDistance` objective.
    pub fn corrupted_target(&self) -> Option<&[f64]> {
        self.corrupted_target.as_deref()
    }

    fn clean_value(&self, x: &[f64]) -> Result<f64> {
        Ok(match &self.kind {
            ObjectiveKind::TargetDistance { target, squared } => {
                check_dim(target.len(), x.len())?;
                distance_value(x, target, *squared)
            }
            ObjectiveKind::QuantizedRating { target, scale } => {
                check_dim(target.len(), x.len())?;
                -quantized_rating(distance(x, target), *scale)
            }
            ObjectiveKind::ModeDensity { model } => -model.log_density(x)?,
            ObjectiveKind::CoordinateSum { maximize } => {
                let s: f64 = x.iter().sum();
                if *maximize { -s } else { s }
            }
            ObjectiveKind::NoisyTargetDistance { squared, .. } => {
                let target = self.corrupted_target.as_deref().unwrap_or_default();
                check_dim(target.len(), x.len())?;
                distance_value(x, target, *squared)
            }
        })
    }

    fn evaluation_noise(&self, x: &[f64]) -> f64 {
        if self.noise_std == 0.0 {
            return 0.0;
        }
        let key: Vec<u64> = core::iter::once(stream::OBJECTIVE_NOISE).chain(x.iter().map(|v| v.to_bits())).collect();
        let mut rng = rng_for(derive_seed(self.seed, &key), &[]);
        self.noise_std * standard_normal(&mut rng)
    }
}

impl Objective for ObjectiveSpec {
    fn evaluate(&self, x: &[f64], meter: &BudgetMeter) -> Result<f64> {
        let value = self.clean_value(x)?;
        meter.try_tick()?;
        Ok(value + self.evaluation_noise(x))
    }

    fn sense(&self) -> Sense {
        match self.kind {
            ObjectiveKind::QuantizedRating { .. } | ObjectiveKind::CoordinateSum { maximize: true } => Sense::Maximize,
            _ => Sense::Minimize,
        }
    }
}

fn distance_value(x: &[f64], target: &[f64], squared: bool) -> f64 {
    let d = distance(x, target);
    if squared { d * d } else { d }
}

/// Integer rating in `{1..5}` for a distance `r`.
pub fn quantized_rating(r: f64, scale: f64) -> f64 {
    libm::round(5.0 - scale * r).clamp(1.0, 5.0)
}
