#![cfg_attr(not(test), no_std)]

#![allow(clippy::neg_cmp_op_on_partial_ord)]

extern crate alloc;

pub mod baselines;
pub mod compare;
pub mod error;
pub mod executor;
pub mod fast_direct;
pub mod gnso;
pub mod mixture;
pub mod noise;
pub mod objectives;
pub mod presets;
pub mod sampler;
pub mod schedule;
pub mod seed;
pub mod surrogate;
pub mod trace;
pub mod vector;

pub use error::{Error, Result};
pub use mixture::{exact_score, Component, MixtureModel, NoisyMarginal};
pub use noise::{update_noise, NoiseSequence};
pub use sampler::{ChainSampler, MixtureSampler, Trajectory};
pub use schedule::{NoiseSchedule, StepRule};
pub use executor::{InstanceExecutor, Sequential};
pub use objectives::{BudgetMeter, Objective, ObjectiveKind, ObjectiveSpec, Sense};
pub use surrogate::{GpSurrogate, KernelFamily, KernelSpec, PseudoTargetModel, PseudoTargetRule, QueryDataset};
pub use trace::{Clock, NullClock, RunTrace, TraceRow};
