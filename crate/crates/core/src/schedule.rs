//! Reverse-diffusion noise schedules.
//!
//! Index `k` runs along the reverse chain: `k = 0` is pure noise and `k = K`
//! is a clean sample. `signal[k]` and `noise[k]` are the coefficients of the
//! marginal `x_k = a_k·z + σ_k·n` the chain targets at step `k`.

use alloc::vec::Vec;

use crate::error::{Error, Result};

/// How one reverse step is integrated.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum StepRule {
    /// DDIM update around the predicted clean point, with stochasticity η.
    Ddim,
    /// Euler–Maruyama on the reverse variance-preserving SDE.
    EulerMaruyama,
}

#[derive(Debug, Clone, PartialEq)]
pub struct NoiseSchedule {
    rule: StepRule,
    signal: Vec<f64>,
    noise: Vec<f64>,
    /// Coefficient multiplying `ε_k` in step `k`, stored at `k - 1`.
    injection: Vec<f64>,
    /// Euler only: `β(τ_{k-1})·h` for step `k`.
    beta_step: Vec<f64>,
    eta: f64,
}

pub const BETA_MIN: f64 = 0.1;
pub const BETA_MAX: f64 = 20.0;

impl NoiseSchedule {
    /// DDIM on the linear-β variance-preserving grid shared with
    /// [`NoiseSchedule::euler_sde`]. `eta = 1` injects the full ancestral
    /// variance, `eta = 0` is the deterministic DDIM update.
    pub fn ddim_eta(steps: usize, eta: f64) -> Result<Self> {
        check_steps_and_eta(steps, eta)?;
        let (signal, noise, _) = linear_vp_grid(steps);
        let injection = (1..=steps)
            .map(|i| {
                let (at, st, a_s, s_s) = (signal[i - 1], noise[i - 1], signal[i], noise[i]);
                let ratio = (at * at) / (a_s * a_s);
                eta * (s_s / st) * libm::sqrt((1.0 - ratio).max(0.0))
            })
            .collect();
        Self::validated(StepRule::Ddim, signal, noise, injection, Vec::new(), eta)
    }

    /// Euler–Maruyama on the VP SDE with linear `β(τ)` from
    /// [`BETA_MIN`] to [`BETA_MAX`], uniform grid `τ_k = 1 - k/K`.
    /// `eta` interpolates between the probability-flow ODE (0) and the
    /// reverse SDE (1).
    pub fn euler_sde(steps: usize, eta: f64) -> Result<Self> {
        check_steps_and_eta(steps, eta)?;
        let (signal, noise, beta_step) = linear_vp_grid(steps);
        let injection = beta_step.iter().map(|bh| eta * libm::sqrt(*bh)).collect();
        Self::validated(StepRule::EulerMaruyama, signal, noise, injection, beta_step, eta)
    }

    /// A DDIM-rule schedule with explicit coefficients, for hand-built chains.
    pub fn custom_ddim(signal: Vec<f64>, noise: Vec<f64>, injection: Vec<f64>) -> Result<Self> {
        let eta = if injection.iter().any(|c| *c > 0.0) { 1.0 } else { 0.0 };
        Self::validated(StepRule::Ddim, signal, noise, injection, Vec::new(), eta)
    }

    fn validated(
        rule: StepRule,
        signal: Vec<f64>,
        noise: Vec<f64>,
        injection: Vec<f64>,
        beta_step: Vec<f64>,
        eta: f64,
    ) -> Result<Self> {
        let steps = injection.len();
        let bad = |msg: &str| Err(Error::InvalidConfig(msg.into()));
        if steps == 0 || signal.len() != steps + 1 || noise.len() != steps + 1 {
            return bad("schedule needs K >= 1 steps and K + 1 signal/noise coefficients");
        }
        if signal.windows(2).any(|w| w[1] < w[0]) {
            return bad("signal coefficients must be nondecreasing along the reverse chain");
        }
        if signal[steps] != 1.0 || noise[steps] != 0.0 {
            return bad("final step must be clean: a_K = 1 and σ_K = 0");
        }
        if noise.iter().chain(&injection).any(|v| !(*v >= 0.0)) || signal[0] < 0.0 {
            return bad("schedule coefficients must be nonnegative");
        }
        if noise[..steps].iter().any(|s| *s <= 0.0) {
            return bad("intermediate noise coefficients must be positive");
        }
        Ok(Self { rule, signal, noise, injection, beta_step, eta })
    }

    pub fn rule(&self) -> StepRule {
        self.rule
    }

    pub fn steps(&self) -> usize {
        self.injection.len()
    }

    pub fn eta(&self) -> f64 {
        self.eta
    }

    pub fn signal(&self, k: usize) -> f64 {
        self.signal[k]
    }

    pub fn noise(&self, k: usize) -> f64 {
        self.noise[k]
    }

    /// Coefficient of `ε_k` in step `k` (`1 ≤ k ≤ K`).
    pub fn injection(&self, k: usize) -> f64 {
        self.injection[k - 1]
    }

    pub(crate) fn beta_step(&self, k: usize) -> f64 {
        self.beta_step[k - 1]
    }

    /// Whether any intermediate noise reaches the chain.
    pub fn is_stochastic(&self) -> bool {
        self.injection.iter().any(|c| *c > 0.0)
    }
}

/// Signal, noise and `β·h` per step for `β(τ) = β_min + τ(β_max − β_min)` on
/// the uniform grid `τ_k = 1 − k/K`. The last level is pinned to exactly clean.
fn linear_vp_grid(steps: usize) -> (Vec<f64>, Vec<f64>, Vec<f64>) {
    let h = 1.0 / steps as f64;
    let tau = |i: usize| 1.0 - i as f64 * h;
    let signal_at =
        |t: f64| libm::exp(-0.5 * (BETA_MIN * t + 0.5 * (BETA_MAX - BETA_MIN) * t * t));
    let signal: Vec<f64> =
        (0..=steps).map(|i| if i == steps { 1.0 } else { signal_at(tau(i)) }).collect();
    let noise = signal.iter().map(|a| libm::sqrt((1.0 - a * a).max(0.0))).collect();
    let beta_step = (1..=steps)
        .map(|i| (BETA_MIN + tau(i - 1) * (BETA_MAX - BETA_MIN)) * h)
        .collect();
    (signal, noise, beta_step)
}

fn check_steps_and_eta(steps: usize, eta: f64) -> Result<()> {
    if steps == 0 {
        return Err(Error::InvalidConfig("schedule needs at least one step".into()));
    }
    if !(0.0..=1.0).contains(&eta) {
        return Err(Error::InvalidConfig("eta must lie in [0, 1]".into()));
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use alloc::vec;

    #[test]
    fn presets_satisfy_endpoint_invariants() {
        for s in [
            NoiseSchedule::ddim_eta(8, 1.0).unwrap(),
            NoiseSchedule::euler_sde(8, 1.0).unwrap(),
            NoiseSchedule::ddim_eta(1, 0.5).unwrap(),
        ] {
            // A single DDIM step lands on σ_K = 0 and cannot inject noise.
            assert_eq!(s.is_stochastic(), s.steps() > 1 || s.rule() == StepRule::EulerMaruyama);
            let k = s.steps();
            assert_eq!(s.signal(k), 1.0);
            assert_eq!(s.noise(k), 0.0);
            assert!((0..k).all(|i| s.signal(i) <= s.signal(i + 1)));
        }
    }

    #[test]
    fn ddim_injection_never_exceeds_target_noise() {
        let s = NoiseSchedule::ddim_eta(20, 1.0).unwrap();
        for k in 1..=20 {
            assert!(s.injection(k) <= s.noise(k) + 1e-15);
        }
        assert_eq!(s.injection(20), 0.0);
    }

    #[test]
    fn zero_eta_is_deterministic() {
        assert!(!NoiseSchedule::ddim_eta(10, 0.0).unwrap().is_stochastic());
        assert!(!NoiseSchedule::euler_sde(10, 0.0).unwrap().is_stochastic());
    }

    #[test]
    fn rejects_invalid_schedules() {
        assert!(NoiseSchedule::ddim_eta(0, 1.0).is_err());
        assert!(NoiseSchedule::ddim_eta(4, 1.5).is_err());
        assert!(NoiseSchedule::custom_ddim(vec![0.0, 0.9], vec![1.0, 0.0], vec![0.1]).is_err());
        assert!(NoiseSchedule::custom_ddim(vec![0.5, 0.2, 1.0], vec![1.0, 0.5, 0.0], vec![0.1, 0.1]).is_err());
        assert!(NoiseSchedule::custom_ddim(vec![0.0, 1.0], vec![1.0, 0.0], vec![0.3]).is_ok());
    }
}
