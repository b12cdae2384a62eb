use rand::RngCore;

use super::{check_len, standard_normal};
use crate::error::{Error, Result};
use crate::scalar::Scalar;

/// `θ ~ N(ρ, σ² I)` over the parameters of an inner policy.
#[derive(Clone, Debug, PartialEq)]
pub struct GaussianHyperpolicy<T> {
    rho: Vec<T>,
    sigma2: T,
}

impl<T: Scalar> GaussianHyperpolicy<T> {
    /// `sigma2 = 0` is accepted and degenerates to `θ = ρ`; its score is undefined.
    pub fn new(rho: Vec<T>, sigma2: T) -> Result<Self> {
        if !(sigma2 >= T::zero()) {
            return Err(Error::config("hyperpolicy variance must be nonnegative"));
        }
        Ok(Self { rho, sigma2 })
    }

    pub fn dim(&self) -> usize {
        self.rho.len()
    }

    pub fn rho(&self) -> &[T] {
        &self.rho
    }

    pub fn set_rho(&mut self, rho: &[T]) -> Result<()> {
        check_len("hyperpolicy mean", self.rho.len(), rho.len())?;
        self.rho.copy_from_slice(rho);
        Ok(())
    }

    pub fn sigma2(&self) -> T {
        self.sigma2
    }

    pub fn sample_theta(&self, rng: &mut dyn RngCore) -> Vec<T> {
        let sd = self.sigma2.sqrt();
        self.rho
            .iter()
            .map(|&r| r + sd * T::lit(standard_normal(rng)))
            .collect()
    }

    pub fn log_density(&self, theta: &[T]) -> Result<T> {
        check_len("hyperpolicy sample", self.rho.len(), theta.len())?;
        let two = T::lit(2.0);
        let sq: T = theta
            .iter()
            .zip(&self.rho)
            .map(|(&t, &r)| (t - r) * (t - r))
            .sum();
        let d = T::from_count(self.rho.len());
        Ok(-sq / (two * self.sigma2) - d / two * (two * T::PI() * self.sigma2).ln())
    }

    /// `∇_ρ log ν_ρ(θ) = (θ − ρ)/σ²`.
    pub fn score(&self, theta: &[T]) -> Result<Vec<T>> {
        check_len("hyperpolicy sample", self.rho.len(), theta.len())?;
        if !(self.sigma2 > T::zero()) {
            return Err(Error::unsupported("score of a zero-variance hyperpolicy"));
        }
        Ok(theta
            .iter()
            .zip(&self.rho)
            .map(|(&t, &r)| (t - r) / self.sigma2)
            .collect())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn score_examples() {
        let h = GaussianHyperpolicy::new(vec![0.5f64, -1.0], 0.25).unwrap();
        assert_eq!(h.score(&[0.5, -1.0]).unwrap(), vec![0.0, 0.0]);
        let g = h.score(&[0.75, -1.0]).unwrap();
        assert!((g[0] - 1.0).abs() < 1e-15 && g[1] == 0.0);
    }

    #[test]
    fn zero_variance_returns_mean() {
        let h = GaussianHyperpolicy::new(vec![0.3f64, 2.0], 0.0).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        assert_eq!(h.sample_theta(&mut rng), vec![0.3, 2.0]);
        assert!(h.score(&[0.3, 2.0]).is_err());
    }

    #[test]
    fn sample_moments() {
        let rho = vec![1.0f64, -2.0, 0.5];
        let sigma2 = 0.3;
        let h = GaussianHyperpolicy::new(rho.clone(), sigma2).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(21);
        let n = 100_000;
        let samples: Vec<Vec<f64>> = (0..n).map(|_| h.sample_theta(&mut rng)).collect();
        for d in 0..3 {
            let mean = samples.iter().map(|s| s[d]).sum::<f64>() / n as f64;
            let var = samples.iter().map(|s| (s[d] - mean).powi(2)).sum::<f64>() / (n - 1) as f64;
            let se_mean = (sigma2 / n as f64).sqrt();
            // Var of the sample variance for a Gaussian is 2σ⁴/(n − 1).
            let se_var = (2.0 * sigma2 * sigma2 / (n - 1) as f64).sqrt();
            assert!((mean - rho[d]).abs() < 3.0 * se_mean);
            assert!((var - sigma2).abs() < 3.0 * se_var);
        }
    }
}
