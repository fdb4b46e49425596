//! Experiment configuration: a TOML file, optionally layered over a named
//! preset. Unknown keys are rejected.

use std::path::PathBuf;

use noiseguide_core::baselines::ZoConfig;
use noiseguide_core::fast_direct::FastDirectConfig;
use noiseguide_core::gnso::{DirectionRule, GnsoConfig, StepSize};
use noiseguide_core::mixture::{Component, MixtureModel};
use noiseguide_core::presets::{benchmark_mixture, schedule};
use noiseguide_core::sampler::MixtureSampler;
use noiseguide_core::schedule::StepRule;
use noiseguide_core::seed::derive_seed;
use noiseguide_core::surrogate::{KernelFamily, KernelSpec, PseudoTargetRule, Regularizer};
use noiseguide_core::{ObjectiveKind, ObjectiveSpec};
use serde::{Deserialize, Serialize};

#[derive(Debug, thiserror::Error)]
pub enum ConfigError {
    #[error("could not parse config: {0}")]
    Parse(String),
    #[error("unknown preset `{0}`; known presets: {known}", known = PRESET_NAMES.join(", "))]
    UnknownPreset(String),
    #[error("`{field}`: {message}")]
    Invalid { field: &'static str, message: String },
}

fn invalid(field: &'static str, message: impl Into<String>) -> ConfigError {
    ConfigError::Invalid { field, message: message.into() }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    /// Root directory for every artifact of the run.
    pub output_dir: PathBuf,
    /// Objective evaluations per seed; must match the method's accounting.
    pub budget: u64,
    /// Stamp traces with elapsed seconds. Off keeps CSVs byte-stable.
    #[serde(default)]
    pub record_wall_time: bool,
    /// Run seeds and instances on the rayon pool.
    #[serde(default = "yes")]
    pub parallel: bool,
    pub seeds: SeedConfig,
    #[serde(default)]
    pub model: ModelConfig,
    pub sampler: SamplerConfig,
    pub objective: ObjectiveConfig,
    pub method: MethodConfig,
    #[serde(default)]
    pub ablation: AblationConfig,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SeedConfig {
    pub master: u64,
    #[serde(default = "one_usize")]
    pub count: usize,
}

/// Mixture components; empty means the built-in 2-D benchmark.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ModelConfig {
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub components: Vec<ComponentConfig>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ComponentConfig {
    pub weight: f64,
    pub mean: Vec<f64>,
    /// Isotropic variance; exclusive with `covariance`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub variance: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub covariance: Option<Vec<Vec<f64>>>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SamplerRule {
    Ddim,
    Euler,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SamplerConfig {
    pub rule: SamplerRule,
    pub steps: usize,
    #[serde(default = "one")]
    pub eta: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum ObjectiveConfig {
    TargetDistance {
        target: Vec<f64>,
        #[serde(default)]
        squared: bool,
        #[serde(default)]
        noise_std: f64,
    },
    QuantizedRating {
        target: Vec<f64>,
        #[serde(default = "one")]
        scale: f64,
        #[serde(default)]
        noise_std: f64,
    },
    ModeDensity {
        #[serde(default)]
        noise_std: f64,
    },
    CoordinateSum {
        #[serde(default)]
        maximize: bool,
        #[serde(default)]
        noise_std: f64,
    },
    NoisyTargetDistance {
        target: Vec<f64>,
        target_noise_std: f64,
        #[serde(default)]
        squared: bool,
        #[serde(default)]
        noise_std: f64,
    },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum StepRuleName {
    #[default]
    Fixed,
    ScaleNormalized,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PseudoTargetName {
    #[default]
    Gp,
    HistoricalOptimal,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum KernelName {
    #[default]
    Gaussian,
    Matern52,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DirectionName {
    #[default]
    Universal,
    Stepwise,
    Predicted,
    Truncated,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum MethodConfig {
    FastDirect {
        batch_queries: usize,
        batch_size: usize,
        step_size: f64,
        #[serde(default)]
        step_rule: StepRuleName,
        #[serde(default)]
        pseudo_target: PseudoTargetName,
        #[serde(default)]
        kernel: KernelName,
        /// Defaults to `√d`.
        #[serde(default, skip_serializing_if = "Option::is_none")]
        lengthscale: Option<f64>,
        /// `λ = regularizer · mean(diag K)`.
        #[serde(default = "default_regularizer")]
        regularizer: f64,
        #[serde(default)]
        direction: DirectionName,
        /// `K′ = K / 2^halvings` for the truncated direction.
        #[serde(default)]
        halvings: u32,
        /// Guidance iterations in frozen mode; defaults to `batch_queries`.
        #[serde(default, skip_serializing_if = "Option::is_none")]
        frozen_iterations: Option<usize>,
    },
    Dno {
        q: usize,
        mu: f64,
        iterations: usize,
        repetitions: usize,
        /// Defaults to `0.1·mu`.
        #[serde(default, skip_serializing_if = "Option::is_none")]
        learning_rate: Option<f64>,
        #[serde(default)]
        normalize_by_mu: bool,
        #[serde(default = "default_jacobian_step")]
        jacobian_step: f64,
    },
    RandomSearch {
        batch_size: usize,
    },
    Gnso {
        target: Vec<f64>,
        iterations: usize,
        step_size: f64,
        #[serde(default = "scale_normalized")]
        step_rule: StepRuleName,
        #[serde(default)]
        direction: DirectionName,
        #[serde(default)]
        halvings: u32,
        /// Corrupts the target once per seed with this standard deviation.
        #[serde(default)]
        target_noise_std: f64,
    },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum GridName {
    #[default]
    Desk,
    Paper,
}

/// Grid overrides for `ablate`. Unset lists fall back to the named grid.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AblationConfig {
    #[serde(default)]
    pub grid: GridName,
    /// Multipliers of the configured step size (desk grid).
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub step_multipliers: Option<Vec<f64>>,
    /// Absolute step sizes (paper grid).
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub step_sizes: Option<Vec<f64>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub batch_sizes: Option<Vec<usize>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub halvings: Option<Vec<u32>>,
}

fn yes() -> bool {
    true
}
fn one() -> f64 {
    1.0
}
fn one_usize() -> usize {
    1
}
fn default_regularizer() -> f64 {
    1e-2
}
fn default_jacobian_step() -> f64 {
    1e-6
}
fn scale_normalized() -> StepRuleName {
    StepRuleName::ScaleNormalized
}

impl ExperimentConfig {
    /// Parses a config file body. A top-level `preset = "<name>"` key loads
    /// that preset first and applies the remaining keys over it.
    pub fn from_toml_str(text: &str) -> Result<Self, ConfigError> {
        let mut table: toml::Table = text.parse().map_err(|e: toml::de::Error| ConfigError::Parse(e.to_string()))?;
        if let Some(name) = table.remove("preset") {
            let name = name.as_str().ok_or_else(|| invalid("preset", "must be a string"))?.to_owned();
            let mut base: toml::Table = preset_toml(&name)
                .ok_or(ConfigError::UnknownPreset(name))?
                .parse()
                .expect("presets parse");
            merge(&mut base, table);
            table = base;
        }
        let config: Self = table.try_into().map_err(|e: toml::de::Error| ConfigError::Parse(e.to_string()))?;
        config.validate()?;
        Ok(config)
    }

    pub fn preset(name: &str) -> Result<Self, ConfigError> {
        let text = preset_toml(name).ok_or_else(|| ConfigError::UnknownPreset(name.to_owned()))?;
        Self::from_toml_str(text)
    }

    pub fn to_toml_string(&self) -> String {
        toml::to_string(self).expect("config serializes")
    }

    pub fn model(&self) -> Result<MixtureModel, ConfigError> {
        if self.model.components.is_empty() {
            return Ok(benchmark_mixture());
        }
        let components = self
            .model
            .components
            .iter()
            .map(|c| match (&c.variance, &c.covariance) {
                (Some(v), None) => Ok(Component::isotropic(c.weight, c.mean.clone(), *v)),
                (None, Some(cov)) => Ok(Component::full(c.weight, c.mean.clone(), cov.clone())),
                _ => Err(invalid("model.components", "each component needs exactly one of `variance` or `covariance`")),
            })
            .collect::<Result<Vec<_>, _>>()?;
        MixtureModel::new(components).map_err(|e| invalid("model.components", e.to_string()))
    }

    pub fn dim(&self) -> usize {
        self.model().map(|m| m.dim()).unwrap_or(0)
    }

    pub fn sampler(&self) -> Result<MixtureSampler, ConfigError> {
        let rule = match self.sampler.rule {
            SamplerRule::Ddim => StepRule::Ddim,
            SamplerRule::Euler => StepRule::EulerMaruyama,
        };
        let schedule = schedule(rule, self.sampler.steps, self.sampler.eta).map_err(|e| invalid("sampler", e.to_string()))?;
        MixtureSampler::new(self.model()?, schedule).map_err(|e| invalid("sampler", e.to_string()))
    }

    /// Seed value for seed index `s`.
    pub fn seed(&self, s: usize) -> u64 {
        derive_seed(self.seeds.master, &[s as u64])
    }

    pub fn objective(&self, seed: u64) -> Result<ObjectiveSpec, ConfigError> {
        let (kind, noise_std) = match &self.objective {
            ObjectiveConfig::TargetDistance { target, squared, noise_std } => {
                (ObjectiveKind::TargetDistance { target: target.clone(), squared: *squared }, *noise_std)
            }
            ObjectiveConfig::QuantizedRating { target, scale, noise_std } => {
                (ObjectiveKind::QuantizedRating { target: target.clone(), scale: *scale }, *noise_std)
            }
            ObjectiveConfig::ModeDensity { noise_std } => (ObjectiveKind::ModeDensity { model: self.model()? }, *noise_std),
            ObjectiveConfig::CoordinateSum { maximize, noise_std } => {
                (ObjectiveKind::CoordinateSum { maximize: *maximize }, *noise_std)
            }
            ObjectiveConfig::NoisyTargetDistance { target, target_noise_std, squared, noise_std } => (
                ObjectiveKind::NoisyTargetDistance {
                    target: target.clone(),
                    target_noise_std: *target_noise_std,
                    squared: *squared,
                },
                *noise_std,
            ),
        };
        ObjectiveSpec::with_noise(kind, noise_std, seed).map_err(|e| invalid("objective", e.to_string()))
    }

    pub fn fast_direct(&self, seed: u64) -> Result<FastDirectConfig, ConfigError> {
        let MethodConfig::FastDirect {
            batch_queries,
            batch_size,
            step_size,
            step_rule,
            pseudo_target,
            kernel,
            lengthscale,
            regularizer,
            direction,
            halvings,
            ..
        } = &self.method
        else {
            return Err(invalid("method.kind", "expected `fast_direct`"));
        };
        let family = match kernel {
            KernelName::Gaussian => KernelFamily::Gaussian,
            KernelName::Matern52 => KernelFamily::Matern52,
        };
        let kernel = match lengthscale {
            Some(l) => KernelSpec::new(family, *l).map_err(|e| invalid("method.lengthscale", e.to_string()))?,
            None => KernelSpec::sqrt_dim(family, self.dim()),
        };
        let rule = match pseudo_target {
            PseudoTargetName::Gp => PseudoTargetRule::Gp { kernel, regularizer: Regularizer::RelativeToDiagonal(*regularizer) },
            PseudoTargetName::HistoricalOptimal => PseudoTargetRule::HistoricalOptimal,
        };
        Ok(FastDirectConfig {
            batch_queries: *batch_queries,
            batch_size: *batch_size,
            step_size: step(*step_rule, *step_size),
            rule,
            direction: direction_rule(*direction, *halvings),
            seed,
        })
    }

    pub fn frozen_iterations(&self) -> Option<usize> {
        match &self.method {
            MethodConfig::FastDirect { batch_queries, frozen_iterations, .. } => Some(frozen_iterations.unwrap_or(*batch_queries)),
            _ => None,
        }
    }

    pub fn zo(&self) -> Result<(ZoConfig, usize), ConfigError> {
        let MethodConfig::Dno { q, mu, iterations, repetitions, learning_rate, normalize_by_mu, jacobian_step } = &self.method else {
            return Err(invalid("method.kind", "expected `dno`"));
        };
        let config = ZoConfig {
            q: *q,
            mu: *mu,
            iterations: *iterations,
            learning_rate: *learning_rate,
            normalize_by_mu: *normalize_by_mu,
            jacobian_step: *jacobian_step,
        };
        Ok((config, *repetitions))
    }

    pub fn gnso(&self) -> Result<(GnsoConfig, Vec<f64>, f64), ConfigError> {
        let MethodConfig::Gnso { target, iterations, step_size, step_rule, direction, halvings, target_noise_std } = &self.method
        else {
            return Err(invalid("method.kind", "expected `gnso`"));
        };
        let config = GnsoConfig {
            step_size: step(*step_rule, *step_size),
            iterations: *iterations,
            direction: direction_rule(*direction, *halvings),
        };
        Ok((config, target.clone(), *target_noise_std))
    }

    /// Evaluations the method will spend per seed.
    pub fn required_budget(&self) -> u64 {
        match &self.method {
            MethodConfig::FastDirect { batch_queries, batch_size, .. } => (batch_queries * batch_size) as u64,
            MethodConfig::Dno { q, iterations, repetitions, .. } => (iterations * (q + 1) * repetitions) as u64,
            MethodConfig::RandomSearch { .. } => self.budget,
            MethodConfig::Gnso { .. } => 0,
        }
    }

    pub fn method_name(&self) -> &'static str {
        match self.method {
            MethodConfig::FastDirect { .. } => "fast_direct",
            MethodConfig::Dno { .. } => "dno",
            MethodConfig::RandomSearch { .. } => "random_search",
            MethodConfig::Gnso { .. } => "gnso",
        }
    }

    pub fn validate(&self) -> Result<(), ConfigError> {
        if self.seeds.count == 0 {
            return Err(invalid("seeds.count", "must be at least 1"));
        }
        let model = self.model()?;
        let sampler = self.sampler()?;
        let d = model.dim();
        let target_dim = match &self.objective {
            ObjectiveConfig::TargetDistance { target, .. }
            | ObjectiveConfig::QuantizedRating { target, .. }
            | ObjectiveConfig::NoisyTargetDistance { target, .. } => Some(target.len()),
            _ => None,
        };
        if target_dim.is_some_and(|t| t != d) {
            return Err(invalid("objective.target", format!("has {} coordinates, model has {d}", target_dim.unwrap_or(0))));
        }
        self.objective(0)?;
        match &self.method {
            MethodConfig::FastDirect { batch_queries, batch_size, step_size, .. } => {
                if *batch_queries == 0 {
                    return Err(invalid("method.batch_queries", "must be at least 1"));
                }
                if *batch_size == 0 {
                    return Err(invalid("method.batch_size", "must be at least 1"));
                }
                if !(*step_size >= 0.0) {
                    return Err(invalid("method.step_size", "must be nonnegative"));
                }
                self.fast_direct(0)?.validate().map_err(|e| invalid("method", e.to_string()))?;
                if !sampler.schedule().is_stochastic() {
                    return Err(invalid("sampler.eta", "guidance needs a stochastic sampler (eta > 0)"));
                }
            }
            MethodConfig::Dno { .. } => {
                let (zo, repetitions) = self.zo()?;
                zo.validate().map_err(|e| invalid("method", e.to_string()))?;
                if repetitions == 0 {
                    return Err(invalid("method.repetitions", "must be at least 1"));
                }
            }
            MethodConfig::RandomSearch { batch_size } => {
                if *batch_size == 0 {
                    return Err(invalid("method.batch_size", "must be at least 1"));
                }
                if self.budget == 0 {
                    return Err(invalid("budget", "random search needs at least one evaluation"));
                }
            }
            MethodConfig::Gnso { target, .. } => {
                if target.len() != d {
                    return Err(invalid("method.target", format!("has {} coordinates, model has {d}", target.len())));
                }
                self.gnso()?.0.validate().map_err(|e| invalid("method", e.to_string()))?;
            }
        }
        if self.budget != self.required_budget() {
            return Err(invalid(
                "budget",
                format!("{} declared but {} spends exactly {} per seed", self.budget, self.method_name(), self.required_budget()),
            ));
        }
        Ok(())
    }
}

fn step(rule: StepRuleName, value: f64) -> StepSize {
    match rule {
        StepRuleName::Fixed => StepSize::Fixed(value),
        StepRuleName::ScaleNormalized => StepSize::ScaleNormalized(value),
    }
}

fn direction_rule(name: DirectionName, halvings: u32) -> DirectionRule {
    match name {
        DirectionName::Universal => DirectionRule::Universal,
        DirectionName::Stepwise => DirectionRule::Stepwise,
        DirectionName::Predicted => DirectionRule::Predicted,
        DirectionName::Truncated => DirectionRule::Truncated { halvings },
    }
}

fn merge(base: &mut toml::Table, over: toml::Table) {
    for (key, value) in over {
        match (base.get_mut(&key), value) {
            (Some(toml::Value::Table(b)), toml::Value::Table(o)) => merge(b, o),
            (_, value) => {
                base.insert(key, value);
            }
        }
    }
}

pub const PRESET_NAMES: [&str; 6] =
    ["paper-image-defaults", "paper-molecule-defaults", "desk-fast-direct", "desk-dno", "desk-random-search", "desk-gnso"];

/// Built-in presets as TOML text.
pub fn preset_toml(name: &str) -> Option<&'static str> {
    Some(match name {
        "paper-image-defaults" => PAPER_IMAGE,
        "paper-molecule-defaults" => PAPER_MOLECULE,
        "desk-fast-direct" => DESK_FAST_DIRECT,
        "desk-dno" => DESK_DNO,
        "desk-random-search" => DESK_RANDOM_SEARCH,
        "desk-gnso" => DESK_GNSO,
        _ => return None,
    })
}

const PAPER_IMAGE: &str = r#"
output_dir = "runs/paper-image-defaults"
budget = 1600
seeds = { master = 0, count = 1 }
sampler = { rule = "ddim", steps = 8 }
objective = { kind = "quantized_rating", target = [2.0, -2.0] }

[method]
kind = "fast_direct"
batch_queries = 50
batch_size = 32
step_size = 80.0
pseudo_target = "gp"
"#;

const PAPER_MOLECULE: &str = r#"
output_dir = "runs/paper-molecule-defaults"
budget = 1600
seeds = { master = 0, count = 1 }
sampler = { rule = "ddim", steps = 200 }
objective = { kind = "quantized_rating", target = [2.0, -2.0] }

[method]
kind = "fast_direct"
batch_queries = 50
batch_size = 32
step_size = 0.01
pseudo_target = "historical_optimal"
"#;

const DESK_FAST_DIRECT: &str = r#"
output_dir = "runs/desk-fast-direct"
budget = 240
seeds = { master = 0, count = 10 }
sampler = { rule = "ddim", steps = 50 }
objective = { kind = "quantized_rating", target = [2.0, -2.0] }

[method]
kind = "fast_direct"
batch_queries = 30
batch_size = 8
step_size = 0.3
pseudo_target = "gp"
lengthscale = 4.0
regularizer = 0.1
"#;

const DESK_DNO: &str = r#"
output_dir = "runs/desk-dno"
budget = 240
seeds = { master = 0, count = 10 }
sampler = { rule = "ddim", steps = 50 }
objective = { kind = "quantized_rating", target = [2.0, -2.0] }

[method]
kind = "dno"
q = 4
mu = 0.5
iterations = 6
repetitions = 8
"#;

const DESK_RANDOM_SEARCH: &str = r#"
output_dir = "runs/desk-random-search"
budget = 240
seeds = { master = 0, count = 10 }
sampler = { rule = "ddim", steps = 50 }
objective = { kind = "quantized_rating", target = [2.0, -2.0] }

[method]
kind = "random_search"
batch_size = 8
"#;

const DESK_GNSO: &str = r#"
output_dir = "runs/desk-gnso"
budget = 0
seeds = { master = 0, count = 20 }
sampler = { rule = "ddim", steps = 8 }
objective = { kind = "mode_density" }

[method]
kind = "gnso"
target = [2.0, 0.5]
iterations = 50
step_size = 0.5
"#;
