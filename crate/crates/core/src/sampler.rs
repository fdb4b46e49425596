//! The stochastic reverse-diffusion sampler, deterministic given its noise.

use alloc::vec::Vec;

use crate::error::{check_dim, Error, Result};
use crate::mixture::{MixtureModel, NoisyMarginal};
use crate::noise::NoiseSequence;
use crate::schedule::{NoiseSchedule, StepRule};
use crate::seed::Rng;

/// States `x_0..x_K` of one chain, plus the predicted clean points emitted by
/// each step when the sampler provides them.
#[derive(Debug, Clone, PartialEq)]
pub struct Trajectory {
    states: Vec<Vec<f64>>,
    predicted: Option<Vec<Vec<f64>>>,
}

impl Trajectory {
    /// `predicted`, when present, holds `x̂_1..x̂_K`.
    pub fn new(states: Vec<Vec<f64>>, predicted: Option<Vec<Vec<f64>>>) -> Result<Self> {
        if states.is_empty() {
            return Err(Error::InvalidConfig("trajectory needs at least x_0".into()));
        }
        if let Some(p) = &predicted {
            check_dim(states.len() - 1, p.len())?;
        }
        Ok(Self { states, predicted })
    }

    pub fn steps(&self) -> usize {
        self.states.len() - 1
    }

    pub fn state(&self, k: usize) -> &[f64] {
        &self.states[k]
    }

    pub fn states(&self) -> &[Vec<f64>] {
        &self.states
    }

    /// `x_K`.
    pub fn output(&self) -> &[f64] {
        self.states.last().expect("non-empty trajectory")
    }

    /// `x̂_k` for `k ∈ 0..=K`, with `x̂_0 := x̂_1`.
    pub fn predicted_clean(&self, k: usize) -> Option<&[f64]> {
        let p = self.predicted.as_ref()?;
        p.get(k.max(1) - 1).map(Vec::as_slice)
    }

    pub fn into_output(mut self) -> Vec<f64> {
        self.states.pop().expect("non-empty trajectory")
    }
}

/// A sampler that maps a noise sequence to a trajectory. Implementations must
/// be pure functions of the noise.
pub trait ChainSampler: Sync {
    fn dim(&self) -> usize;

    /// Number of reverse steps `K`.
    fn steps(&self) -> usize;

    fn run_chain(&self, noise: &NoiseSequence) -> Result<Trajectory>;

    /// Whether intermediate noises influence the output at all.
    fn is_stochastic(&self) -> bool {
        true
    }

    fn sample_noise(&self, rng: &mut Rng) -> NoiseSequence {
        NoiseSequence::sample(self.steps(), self.dim(), rng)
    }

    /// Rejects samplers on which noise guidance cannot act.
    fn ensure_guidable(&self) -> Result<()> {
        if self.is_stochastic() {
            Ok(())
        } else {
            Err(Error::DeterministicSampler)
        }
    }

    fn check_noise(&self, noise: &NoiseSequence) -> Result<()> {
        check_dim(self.dim(), noise.dim())?;
        check_dim(self.steps(), noise.steps())
    }
}

/// Reverse diffusion over a Gaussian mixture with the exact denoiser.
#[derive(Debug, Clone)]
pub struct MixtureSampler {
    model: MixtureModel,
    schedule: NoiseSchedule,
    /// Marginals at levels `0..K`; level `K` is never denoised.
    marginals: Vec<NoisyMarginal>,
}

impl MixtureSampler {
    pub fn new(model: MixtureModel, schedule: NoiseSchedule) -> Result<Self> {
        let marginals = (0..schedule.steps())
            .map(|k| model.marginal(schedule.signal(k), schedule.noise(k)))
            .collect::<Result<Vec<_>>>()?;
        Ok(Self { model, schedule, marginals })
    }

    pub fn model(&self) -> &MixtureModel {
        &self.model
    }

    pub fn schedule(&self) -> &NoiseSchedule {
        &self.schedule
    }

    /// One reverse step `x_{k-1} → x_k`. Returns `x_k` and the predicted clean
    /// point `x̂_k` computed from `x_{k-1}`.
    pub fn step(&self, k: usize, x_prev: &[f64], eps_k: &[f64]) -> Result<(Vec<f64>, Vec<f64>)> {
        let steps = self.schedule.steps();
        if k == 0 || k > steps {
            return Err(Error::StepOutOfRange { step: k, steps });
        }
        check_dim(self.model.dim(), x_prev.len())?;
        check_dim(self.model.dim(), eps_k.len())?;
        let eval = self.marginals[k - 1].evaluate(x_prev)?;
        let c = self.schedule.injection(k);
        let x_next = match self.schedule.rule() {
            StepRule::Ddim => {
                let (a_t, s_t) = (self.schedule.signal(k - 1), self.schedule.noise(k - 1));
                let (a_s, s_s) = (self.schedule.signal(k), self.schedule.noise(k));
                let carry = libm::sqrt((s_s * s_s - c * c).max(0.0));
                x_prev
                    .iter()
                    .zip(&eval.posterior_mean)
                    .zip(eps_k)
                    .map(|((x, x0), e)| {
                        let eps_hat = (x - a_t * x0) / s_t;
                        a_s * x0 + carry * eps_hat + c * e
                    })
                    .collect()
            }
            StepRule::EulerMaruyama => {
                let bh = self.schedule.beta_step(k);
                let eta = self.schedule.eta();
                let score_weight = 0.5 * (1.0 + eta * eta);
                x_prev
                    .iter()
                    .zip(&eval.score)
                    .zip(eps_k)
                    .map(|((x, s), e)| x + bh * (0.5 * x + score_weight * s) + c * e)
                    .collect()
            }
        };
        Ok((x_next, eval.posterior_mean))
    }
}

impl ChainSampler for MixtureSampler {
    fn dim(&self) -> usize {
        self.model.dim()
    }

    fn steps(&self) -> usize {
        self.schedule.steps()
    }

    fn is_stochastic(&self) -> bool {
        self.schedule.is_stochastic()
    }

    fn run_chain(&self, noise: &NoiseSequence) -> Result<Trajectory> {
        self.check_noise(noise)?;
        let steps = self.steps();
        let mut states = Vec::with_capacity(steps + 1);
        let mut predicted = Vec::with_capacity(steps);
        states.push(noise.eps(0).to_vec());
        for k in 1..=steps {
            let (next, x_hat) = self.step(k, &states[k - 1], noise.eps(k))?;
            states.push(next);
            predicted.push(x_hat);
        }
        Trajectory::new(states, Some(predicted))
    }
}
