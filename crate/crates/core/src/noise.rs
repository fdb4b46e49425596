//! Noise sequences and the norm-preserving noise update.

use alloc::vec::Vec;

use crate::error::{check_dim, Error, Result};
use crate::seed::{standard_normal_vec, Rng};
use crate::vector::norm;

/// The `K + 1` Gaussian draws `ε_0..ε_K` driving one sampler chain, together
/// with the norms they had when drawn. The norms never change afterwards:
/// every update is projected back onto them.
#[derive(Debug, Clone, PartialEq)]
pub struct NoiseSequence {
    eps: Vec<Vec<f64>>,
    frozen_norms: Vec<f64>,
}

impl NoiseSequence {
    pub fn new(eps: Vec<Vec<f64>>) -> Result<Self> {
        let dim = eps
            .first()
            .map(Vec::len)
            .ok_or_else(|| Error::InvalidConfig("noise sequence needs at least one vector".into()))?;
        for e in &eps {
            check_dim(dim, e.len())?;
        }
        let frozen_norms = eps.iter().map(|e| norm(e)).collect();
        Ok(Self { eps, frozen_norms })
    }

    /// Draws `steps + 1` i.i.d. standard normal vectors.
    pub fn sample(steps: usize, dim: usize, rng: &mut Rng) -> Self {
        let eps: Vec<Vec<f64>> = (0..=steps).map(|_| standard_normal_vec(rng, dim)).collect();
        let frozen_norms = eps.iter().map(|e| norm(e)).collect();
        Self { eps, frozen_norms }
    }

    /// Rebuilds a sequence from the concatenation `[ε_0ᵀ, …, ε_Kᵀ]`. Norms are
    /// taken from the new vectors.
    pub fn from_flat(flat: &[f64], dim: usize) -> Result<Self> {
        if dim == 0 || !flat.len().is_multiple_of(dim) || flat.is_empty() {
            return Err(Error::InvalidConfig("flat noise length must be a positive multiple of dim".into()));
        }
        Self::new(flat.chunks(dim).map(<[f64]>::to_vec).collect())
    }

    pub fn flatten(&self) -> Vec<f64> {
        self.eps.concat()
    }

    /// Number of sampler steps `K`.
    pub fn steps(&self) -> usize {
        self.eps.len() - 1
    }

    pub fn dim(&self) -> usize {
        self.eps[0].len()
    }

    pub fn eps(&self, k: usize) -> &[f64] {
        &self.eps[k]
    }

    pub fn frozen_norm(&self, k: usize) -> f64 {
        self.frozen_norms[k]
    }

    pub fn iter(&self) -> impl Iterator<Item = &[f64]> {
        self.eps.iter().map(Vec::as_slice)
    }

    /// Moves `ε_k` along `direction` and projects it back to its frozen norm.
    /// `iteration` only labels the error.
    pub fn update(&mut self, k: usize, direction: &[f64], step_size: f64, iteration: usize) -> Result<()> {
        check_dim(self.dim(), direction.len())?;
        let updated = update_noise(&self.eps[k], direction, step_size, self.frozen_norms[k])
            .map_err(|_| Error::DegenerateUpdate { iteration, step: k })?;
        self.eps[k] = updated;
        Ok(())
    }
}

/// `ε′ = (ε + α·d) · n / ‖ε + α·d‖`, so that `‖ε′‖ = n`.
pub fn update_noise(eps: &[f64], direction: &[f64], step_size: f64, frozen_norm: f64) -> Result<Vec<f64>> {
    check_dim(eps.len(), direction.len())?;
    if !(frozen_norm > 0.0) {
        return Err(Error::InvalidConfig("frozen noise norm must be positive".into()));
    }
    let moved: Vec<f64> = eps.iter().zip(direction).map(|(e, d)| e + step_size * d).collect();
    let moved_norm = norm(&moved);
    if moved_norm == 0.0 || !moved_norm.is_finite() {
        return Err(Error::DegenerateUpdate { iteration: 0, step: 0 });
    }
    let factor = frozen_norm / moved_norm;
    Ok(moved.into_iter().map(|v| v * factor).collect())
}

#[cfg(test)]
mod tests {
    use super::*;
    use alloc::vec;
    use proptest::prelude::*;

    #[test]
    fn zero_step_and_zero_direction_are_identities() {
        let eps = vec![0.3, -1.7, 2.2];
        let n = norm(&eps);
        assert_eq!(update_noise(&eps, &[5.0, 1.0, -3.0], 0.0, n).unwrap(), eps);
        assert_eq!(update_noise(&eps, &[0.0, 0.0, 0.0], 4.0, n).unwrap(), eps);
    }

    #[test]
    fn worked_example() {
        // (3,4) + 2·(1,0) = (5,4); rescaled to norm 5.
        let out = update_noise(&[3.0, 4.0], &[1.0, 0.0], 2.0, 5.0).unwrap();
        let s = 5.0 / libm::sqrt(41.0);
        assert!((out[0] - 5.0 * s).abs() < 1e-15);
        assert!((out[1] - 4.0 * s).abs() < 1e-15);
        assert!((out[0] - 3.9043).abs() < 1e-4 && (out[1] - 3.1235).abs() < 1e-4);
    }

    #[test]
    fn cancelling_update_is_an_error() {
        let r = update_noise(&[1.0, -2.0], &[-1.0, 2.0], 1.0, 3.0);
        assert!(matches!(r, Err(Error::DegenerateUpdate { .. })));
        let mut seq = NoiseSequence::new(vec![vec![1.0, 0.0], vec![1.0, -2.0]]).unwrap();
        assert_eq!(
            seq.update(1, &[-1.0, 2.0], 1.0, 7),
            Err(Error::DegenerateUpdate { iteration: 7, step: 1 })
        );
        assert!(update_noise(&[1.0], &[1.0], 1.0, 0.0).is_err());
    }

    #[test]
    fn flat_round_trip() {
        let seq = NoiseSequence::new(vec![vec![1.0, 2.0], vec![3.0, 4.0], vec![5.0, 6.0]]).unwrap();
        let back = NoiseSequence::from_flat(&seq.flatten(), 2).unwrap();
        assert_eq!(seq, back);
        assert_eq!(back.steps(), 2);
        assert!(NoiseSequence::from_flat(&[1.0, 2.0, 3.0], 2).is_err());
        assert!(NoiseSequence::new(vec![vec![1.0], vec![1.0, 2.0]]).is_err());
    }

    proptest! {
        #[test]
        fn updates_preserve_frozen_norm(
            eps in proptest::collection::vec(-5.0f64..5.0, 1..64),
            dir_seed in proptest::collection::vec(-5.0f64..5.0, 64),
            step in 0.0f64..100.0,
        ) {
            let n = norm(&eps);
            prop_assume!(n > 1e-6);
            let dir = &dir_seed[..eps.len()];
            if let Ok(out) = update_noise(&eps, dir, step, n) {
                prop_assert!((norm(&out) - n).abs() <= 1e-9 * n);
            }
        }
    }
}
