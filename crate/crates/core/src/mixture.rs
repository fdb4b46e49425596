//! Gaussian-mixture data distributions and their closed-form noisy marginals.
//!
//! A state `x = a·z + σ·n` with `z ~ Σ_i w_i N(μ_i, Σ_i)` and `n ~ N(0, I)` is
//! again a mixture, with means `a·μ_i` and covariances `a²Σ_i + σ²I`. Scores
//! and posterior means of `z` given `x` therefore have exact expressions, which
//! is what stands in for a trained denoiser here.

use alloc::vec;
use alloc::vec::Vec;
use core::f64::consts::PI;

use nalgebra::DMatrix;

use crate::error::{check_dim, Error, Result};

const WEIGHT_TOLERANCE: f64 = 1e-12;
const SYMMETRY_TOLERANCE: f64 = 1e-12;

#[derive(Debug, Clone, PartialEq)]
pub struct Component {
    pub weight: f64,
    pub mean: Vec<f64>,
    /// Row-major `d × d` covariance.
    pub covariance: Vec<f64>,
}

impl Component {
    pub fn isotropic(weight: f64, mean: Vec<f64>, variance: f64) -> Self {
        let d = mean.len();
        let mut covariance = vec![0.0; d * d];
        for i in 0..d {
            covariance[i * d + i] = variance;
        }
        Self { weight, mean, covariance }
    }

    pub fn full(weight: f64, mean: Vec<f64>, covariance: Vec<Vec<f64>>) -> Self {
        Self { weight, mean, covariance: covariance.concat() }
    }

    fn dim(&self) -> usize {
        self.mean.len()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct MixtureModel {
    components: Vec<Component>,
    dim: usize,
}

impl MixtureModel {
    pub fn new(components: Vec<Component>) -> Result<Self> {
        let first = components
            .first()
            .ok_or_else(|| Error::InvalidConfig("mixture needs at least one component".into()))?;
        let dim = first.dim();
        if dim == 0 {
            return Err(Error::InvalidConfig("mixture dimension must be positive".into()));
        }
        let mut total = 0.0;
        for (i, c) in components.iter().enumerate() {
            check_dim(dim, c.dim())?;
            check_dim(dim * dim, c.covariance.len())?;
            if !(c.weight > 0.0) || !c.weight.is_finite() {
                return Err(Error::InvalidConfig(alloc::format!(
                    "component {i} weight must be positive, got {}",
                    c.weight
                )));
            }
            if !c.mean.iter().chain(&c.covariance).all(|v| v.is_finite()) {
                return Err(Error::InvalidConfig(alloc::format!(
                    "component {i} has non-finite parameters"
                )));
            }
            total += c.weight;
            let cov = DMatrix::from_row_slice(dim, dim, &c.covariance);
            let scale = cov.amax().max(f64::MIN_POSITIVE);
            if (&cov - cov.transpose()).amax() > SYMMETRY_TOLERANCE * scale {
                return Err(Error::NotPositiveDefinite { component: i });
            }
            if cov.cholesky().is_none() {
                return Err(Error::NotPositiveDefinite { component: i });
            }
        }
        if (total - 1.0).abs() > WEIGHT_TOLERANCE {
            return Err(Error::InvalidConfig(alloc::format!(
                "mixture weights sum to {total}, expected 1"
            )));
        }
        Ok(Self { components, dim })
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn components(&self) -> &[Component] {
        &self.components
    }

    /// Mixture mean `Σ w_i μ_i`.
    pub fn mean(&self) -> Vec<f64> {
        let mut m = vec![0.0; self.dim];
        for c in &self.components {
            crate::vector::axpy(c.weight, &c.mean, &mut m);
        }
        m
    }

    /// Row-major mixture covariance `Σ w_i (Σ_i + μ_i μ_iᵀ) − m mᵀ`.
    pub fn covariance(&self) -> Vec<f64> {
        let d = self.dim;
        let m = self.mean();
        let mut cov = vec![0.0; d * d];
        for c in &self.components {
            for i in 0..d {
                for j in 0..d {
                    cov[i * d + j] += c.weight * (c.covariance[i * d + j] + c.mean[i] * c.mean[j]);
                }
            }
        }
        for i in 0..d {
            for j in 0..d {
                cov[i * d + j] -= m[i] * m[j];
            }
        }
        cov
    }

    /// The marginal of `a·z + σ·n`.
    pub fn marginal(&self, signal: f64, noise: f64) -> Result<NoisyMarginal> {
        NoisyMarginal::new(self, signal, noise)
    }

    pub fn log_density(&self, x: &[f64]) -> Result<f64> {
        Ok(self.marginal(1.0, 0.0)?.evaluate(x)?.log_density)
    }
}

/// `∇_x log p(x)` for the mixture pushed through `x = a·z + σ·n`.
pub fn exact_score(x: &[f64], signal: f64, noise: f64, model: &MixtureModel) -> Result<Vec<f64>> {
    if !(signal > 0.0 || noise > 0.0) {
        return Err(Error::InvalidConfig("noise level needs a > 0 or σ > 0".into()));
    }
    Ok(model.marginal(signal, noise)?.evaluate(x)?.score)
}

#[derive(Debug, Clone)]
struct MarginalComponent {
    log_normalizer: f64,
    shifted_mean: Vec<f64>,
    mean: Vec<f64>,
    /// Row-major lower Cholesky factor of `a²Σ + σ²I`.
    chol: Vec<f64>,
    /// Row-major `a·Σ`, maps whitened residuals to posterior corrections.
    signal_cov: Vec<f64>,
}

/// Precomputed factorization of a mixture at one noise level.
#[derive(Debug, Clone)]
pub struct NoisyMarginal {
    dim: usize,
    signal: f64,
    noise: f64,
    components: Vec<MarginalComponent>,
}

/// Everything one denoiser call produces.
#[derive(Debug, Clone, PartialEq)]
pub struct MarginalEval {
    pub log_density: f64,
    pub score: Vec<f64>,
    /// Posterior mean `E[z | x]` (the Tweedie denoiser).
    pub posterior_mean: Vec<f64>,
}

impl NoisyMarginal {
    pub fn new(model: &MixtureModel, signal: f64, noise: f64) -> Result<Self> {
        let d = model.dim;
        let mut components = Vec::with_capacity(model.components.len());
        for (i, c) in model.components.iter().enumerate() {
            let mut eff = DMatrix::from_row_slice(d, d, &c.covariance) * (signal * signal);
            for k in 0..d {
                eff[(k, k)] += noise * noise;
            }
            let chol = eff.cholesky().ok_or(Error::NotPositiveDefinite { component: i })?;
            let l = chol.l();
            let mut log_det = 0.0;
            for k in 0..d {
                log_det += 2.0 * libm::log(l[(k, k)]);
            }
            let mut chol_rows = vec![0.0; d * d];
            for r in 0..d {
                for s in 0..=r {
                    chol_rows[r * d + s] = l[(r, s)];
                }
            }
            components.push(MarginalComponent {
                log_normalizer: libm::log(c.weight)
                    - 0.5 * (d as f64) * libm::log(2.0 * PI)
                    - 0.5 * log_det,
                shifted_mean: c.mean.iter().map(|m| signal * m).collect(),
                mean: c.mean.clone(),
                chol: chol_rows,
                signal_cov: c.covariance.iter().map(|v| signal * v).collect(),
            });
        }
        Ok(Self { dim: d, signal, noise, components })
    }

    pub fn signal(&self) -> f64 {
        self.signal
    }

    pub fn noise(&self) -> f64 {
        self.noise
    }

    #[allow(clippy::needless_range_loop)]
    pub fn evaluate(&self, x: &[f64]) -> Result<MarginalEval> {
        check_dim(self.dim, x.len())?;
        let d = self.dim;
        let n = self.components.len();
        let mut log_terms = Vec::with_capacity(n);
        let mut precision_residuals = Vec::with_capacity(n);
        let mut work = vec![0.0; d];
        for c in &self.components {
            for k in 0..d {
                work[k] = x[k] - c.shifted_mean[k];
            }
            // L u = r, forward substitution in place
            for r in 0..d {
                let mut acc = work[r];
                for s in 0..r {
                    acc -= c.chol[r * d + s] * work[s];
                }
                work[r] = acc / c.chol[r * d + r];
            }
            let quad: f64 = work.iter().map(|u| u * u).sum();
            log_terms.push(c.log_normalizer - 0.5 * quad);
            // Lᵀ v = u, back substitution
            let mut v = work.clone();
            for r in (0..d).rev() {
                let mut acc = v[r];
                for s in r + 1..d {
                    acc -= c.chol[s * d + r] * v[s];
                }
                v[r] = acc / c.chol[r * d + r];
            }
            precision_residuals.push(v);
        }
        let max = log_terms.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        let total: f64 = log_terms.iter().map(|t| libm::exp(t - max)).sum();
        let log_density = max + libm::log(total);

        let mut score = vec![0.0; d];
        let mut posterior_mean = vec![0.0; d];
        for ((c, t), v) in self.components.iter().zip(&log_terms).zip(&precision_residuals) {
            let resp = libm::exp(t - log_density);
            for k in 0..d {
                score[k] -= resp * v[k];
                let corr: f64 = (0..d).map(|s| c.signal_cov[k * d + s] * v[s]).sum();
                posterior_mean[k] += resp * (c.mean[k] + corr);
            }
        }
        Ok(MarginalEval { log_density, score, posterior_mean })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use alloc::vec;

    fn two_component() -> MixtureModel {
        MixtureModel::new(vec![
            Component::full(0.3, vec![-1.0, 0.5], vec![vec![0.4, 0.1], vec![0.1, 0.3]]),
            Component::full(0.7, vec![1.5, -0.2], vec![vec![0.2, -0.05], vec![-0.05, 0.5]]),
        ])
        .unwrap()
    }

    // Independent log-density: explicit 2×2 inverse and determinant.
    fn direct_log_density(model: &MixtureModel, a: f64, s: f64, x: &[f64]) -> f64 {
        let mut p = 0.0;
        for c in model.components() {
            let (c00, c01, c11) = (
                a * a * c.covariance[0] + s * s,
                a * a * c.covariance[1],
                a * a * c.covariance[3] + s * s,
            );
            let det = c00 * c11 - c01 * c01;
            let (r0, r1) = (x[0] - a * c.mean[0], x[1] - a * c.mean[1]);
            let q = (c11 * r0 * r0 - 2.0 * c01 * r0 * r1 + c00 * r1 * r1) / det;
            p += c.weight * libm::exp(-0.5 * q) / (2.0 * PI * libm::sqrt(det));
        }
        libm::log(p)
    }

    #[test]
    fn score_vanishes_at_single_component_mode() {
        let m = MixtureModel::new(vec![Component::isotropic(1.0, vec![0.7, -2.0], 1.0)]).unwrap();
        let s = exact_score(&[0.7, -2.0], 1.0, 0.0, &m).unwrap();
        assert!(s.iter().all(|v| v.abs() < 1e-15));
    }

    #[test]
    fn score_vanishes_between_symmetric_components() {
        let m = MixtureModel::new(vec![
            Component::isotropic(0.5, vec![2.0, 1.0], 0.5),
            Component::isotropic(0.5, vec![-2.0, -1.0], 0.5),
        ])
        .unwrap();
        let s = exact_score(&[0.0, 0.0], 0.8, 0.6, &m).unwrap();
        assert!(s.iter().all(|v| v.abs() < 1e-14), "{s:?}");
    }

    #[test]
    fn score_matches_central_differences_of_log_density() {
        let m = two_component();
        let h = 1e-5;
        for &(a, s) in &[(1.0, 0.0), (0.6, 0.8), (0.1, 0.99), (0.9, 0.2)] {
            for x in [[0.3, -0.4], [-1.2, 1.1], [2.0, 0.0]] {
                let score = exact_score(&x, a, s, &m).unwrap();
                for k in 0..2 {
                    let mut xp = x;
                    let mut xm = x;
                    xp[k] += h;
                    xm[k] -= h;
                    let fd = (direct_log_density(&m, a, s, &xp) - direct_log_density(&m, a, s, &xm))
                        / (2.0 * h);
                    let rel = (fd - score[k]).abs() / score[k].abs().max(1e-3);
                    assert!(rel <= 1e-6, "a={a} s={s} x={x:?} k={k}: {fd} vs {}", score[k]);
                }
            }
        }
    }

    #[test]
    fn log_density_matches_direct_evaluation() {
        let m = two_component();
        for x in [[0.3, -0.4], [-1.2, 1.1]] {
            let got = m.marginal(0.7, 0.5).unwrap().evaluate(&x).unwrap().log_density;
            assert!((got - direct_log_density(&m, 0.7, 0.5, &x)).abs() < 1e-12);
        }
    }

    #[test]
    #[allow(clippy::needless_range_loop)]
    fn posterior_mean_is_tweedie_estimate() {
        let m = two_component();
        let (a, s) = (0.6, 0.8);
        let x = [0.4, -0.9];
        let eval = m.marginal(a, s).unwrap().evaluate(&x).unwrap();
        for k in 0..2 {
            let tweedie = (x[k] + s * s * eval.score[k]) / a;
            assert!((tweedie - eval.posterior_mean[k]).abs() < 1e-12);
        }
    }

    #[test]
    fn pure_noise_level_denoises_to_mixture_mean() {
        let m = two_component();
        let eval = m.marginal(0.0, 1.0).unwrap().evaluate(&[3.0, -7.0]).unwrap();
        let mean = m.mean();
        assert!((eval.posterior_mean[0] - mean[0]).abs() < 1e-12);
        assert!((eval.posterior_mean[1] - mean[1]).abs() < 1e-12);
    }

    #[test]
    fn rejects_bad_components() {
        let err = MixtureModel::new(vec![
            Component::isotropic(0.5, vec![0.0], 1.0),
            Component::isotropic(0.4, vec![1.0], 1.0),
        ]);
        assert!(matches!(err, Err(Error::InvalidConfig(_))));
        let err = MixtureModel::new(vec![Component::full(
            1.0,
            vec![0.0, 0.0],
            vec![vec![1.0, 2.0], vec![2.0, 1.0]],
        )]);
        assert_eq!(err, Err(Error::NotPositiveDefinite { component: 0 }));
        let err = MixtureModel::new(vec![Component::full(
            1.0,
            vec![0.0, 0.0],
            vec![vec![1.0, 0.1], vec![0.0, 1.0]],
        )]);
        assert_eq!(err, Err(Error::NotPositiveDefinite { component: 0 }));
        assert!(exact_score(&[0.0, 0.0], 0.0, 0.0, &two_component()).is_err());
    }

    #[test]
    fn mixture_moments() {
        let m = MixtureModel::new(vec![
            Component::isotropic(0.5, vec![1.0], 1.0),
            Component::isotropic(0.5, vec![-1.0], 1.0),
        ])
        .unwrap();
        assert_eq!(m.mean(), vec![0.0]);
        assert_eq!(m.covariance(), vec![2.0]);
    }
}
