use rand::RngCore;

use super::{check_len, standard_normal, Policy};
use crate::env::{Action, Actor, State};
use crate::error::{Error, Result};
use crate::scalar::Scalar;

fn linear_mean<T: Scalar>(theta: &[T], action_dim: usize, state: &[T]) -> Vec<T> {
    let sd = state.len();
    (0..action_dim)
        .map(|k| crate::scalar::dot(&theta[k * sd..(k + 1) * sd], state))
        .collect()
}

fn continuous<T: Scalar>(action: &Action<T>, dim: usize) -> Result<&[T]> {
    match action {
        Action::Continuous(a) => {
            check_len("action", dim, a.len())?;
            Ok(a)
        }
        Action::Discrete(_) => Err(Error::DimensionMismatch {
            context: "action",
            expected: dim,
            got: 1,
        }),
    }
}

/// `a ~ N(θ s, σ² I)` with `θ` an `action_dim × state_dim` matrix.
#[derive(Clone, Debug, PartialEq)]
pub struct LinearGaussianPolicy<T> {
    state_dim: usize,
    action_dim: usize,
    theta: Vec<T>,
    sigma2: T,
}

impl<T: Scalar> LinearGaussianPolicy<T> {
    pub fn new(state_dim: usize, action_dim: usize, theta: Vec<T>, sigma2: T) -> Result<Self> {
        check_len(
            "linear policy parameters",
            state_dim * action_dim,
            theta.len(),
        )?;
        if !(sigma2 > T::zero()) {
            return Err(Error::config("policy variance must be positive"));
        }
        Ok(Self {
            state_dim,
            action_dim,
            theta,
            sigma2,
        })
    }

    pub fn zeros(state_dim: usize, action_dim: usize, sigma2: T) -> Result<Self> {
        Self::new(
            state_dim,
            action_dim,
            vec![T::zero(); state_dim * action_dim],
            sigma2,
        )
    }

    pub fn sigma2(&self) -> T {
        self.sigma2
    }

    pub fn mean(&self, state: &State<T>) -> Result<Vec<T>> {
        check_len("state", self.state_dim, state.features.len())?;
        Ok(linear_mean(&self.theta, self.action_dim, &state.features))
    }
}

impl<T: Scalar> Actor<T> for LinearGaussianPolicy<T> {
    fn act(&self, state: &State<T>, rng: &mut dyn RngCore) -> Result<Action<T>> {
        let sd = self.sigma2.sqrt();
        let a = self
            .mean(state)?
            .into_iter()
            .map(|m| m + sd * T::lit(standard_normal(rng)))
            .collect();
        Ok(Action::Continuous(a))
    }
}

impl<T: Scalar> Policy<T> for LinearGaussianPolicy<T> {
    fn num_params(&self) -> usize {
        self.theta.len()
    }

    fn params(&self) -> &[T] {
        &self.theta
    }

    fn set_params(&mut self, params: &[T]) -> Result<()> {
        check_len("linear policy parameters", self.theta.len(), params.len())?;
        self.theta.copy_from_slice(params);
        Ok(())
    }

    fn is_stochastic(&self) -> bool {
        true
    }

    fn log_prob(&self, state: &State<T>, action: &Action<T>) -> Result<T> {
        let a = continuous(action, self.action_dim)?;
        let mu = self.mean(state)?;
        let sq: T = a.iter().zip(&mu).map(|(&x, &m)| (x - m) * (x - m)).sum();
        let d = T::from_count(self.action_dim);
        let two = T::lit(2.0);
        Ok(-sq / (two * self.sigma2) - d / two * (two * T::PI() * self.sigma2).ln())
    }

    fn accumulate_score(
        &self,
        state: &State<T>,
        action: &Action<T>,
        weight: T,
        out: &mut [T],
    ) -> Result<()> {
        check_len("score buffer", self.theta.len(), out.len())?;
        let a = continuous(action, self.action_dim)?;
        let mu = self.mean(state)?;
        let s = &state.features;
        for k in 0..self.action_dim {
            let r = weight * (a[k] - mu[k]) / self.sigma2;
            for (g, &sl) in out[k * self.state_dim..(k + 1) * self.state_dim]
                .iter_mut()
                .zip(s)
            {
                *g += r * sl;
            }
        }
        Ok(())
    }

    fn clone_box(&self) -> Box<dyn Policy<T>> {
        Box::new(self.clone())
    }
}

/// `a = θ s` exactly.
#[derive(Clone, Debug, PartialEq)]
pub struct LinearDeterministicPolicy<T> {
    state_dim: usize,
    action_dim: usize,
    theta: Vec<T>,
}

impl<T: Scalar> LinearDeterministicPolicy<T> {
    pub fn new(state_dim: usize, action_dim: usize, theta: Vec<T>) -> Result<Self> {
        check_len(
            "linear policy parameters",
            state_dim * action_dim,
            theta.len(),
        )?;
        Ok(Self {
            state_dim,
            action_dim,
            theta,
        })
    }

    pub fn zeros(state_dim: usize, action_dim: usize) -> Self {
        Self {
            state_dim,
            action_dim,
            theta: vec![T::zero(); state_dim * action_dim],
        }
    }
}

impl<T: Scalar> Actor<T> for LinearDeterministicPolicy<T> {
    fn act(&self, state: &State<T>, _rng: &mut dyn RngCore) -> Result<Action<T>> {
        check_len("state", self.state_dim, state.features.len())?;
        Ok(Action::Continuous(linear_mean(
            &self.theta,
            self.action_dim,
            &state.features,
        )))
    }
}

impl<T: Scalar> Policy<T> for LinearDeterministicPolicy<T> {
    fn num_params(&self) -> usize {
        self.theta.len()
    }

    fn params(&self) -> &[T] {
        &self.theta
    }

    fn set_params(&mut self, params: &[T]) -> Result<()> {
        check_len("linear policy parameters", self.theta.len(), params.len())?;
        self.theta.copy_from_slice(params);
        Ok(())
    }

    fn is_stochastic(&self) -> bool {
        false
    }

    fn log_prob(&self, _: &State<T>, _: &Action<T>) -> Result<T> {
        Err(Error::unsupported("log-density of a deterministic policy"))
    }

    fn accumulate_score(&self, _: &State<T>, _: &Action<T>, _: T, _: &mut [T]) -> Result<()> {
        Err(Error::unsupported("score of a deterministic policy"))
    }

    fn clone_box(&self) -> Box<dyn Policy<T>> {
        Box::new(self.clone())
    }
}
