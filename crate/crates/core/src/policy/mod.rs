//! Parametric policies and the Gaussian hyperpolicy.
//!
//! Parameters are stored flattened. Tabular softmax uses row-major
//! `(state, action)` order; linear maps use row-major `(action_out, state_in)`.

mod hyper;
mod linear;
mod logit;
mod softmax;

pub use hyper::GaussianHyperpolicy;
pub use linear::{LinearDeterministicPolicy, LinearGaussianPolicy};
pub use logit::BinaryLogitPolicy;
pub use softmax::TabularSoftmaxPolicy;

use crate::env::{Action, Actor, State};
use crate::error::Result;
use crate::scalar::Scalar;

/// A differentiable, parameterized policy `π_θ`.
pub trait Policy<T: Scalar>: Actor<T> + Send + Sync {
    fn num_params(&self) -> usize;

    fn params(&self) -> &[T];

    fn set_params(&mut self, params: &[T]) -> Result<()>;

    fn is_stochastic(&self) -> bool;

    /// `log π_θ(a|s)`. Deterministic policies return `Unsupported`.
    fn log_prob(&self, state: &State<T>, action: &Action<T>) -> Result<T>;

    /// Adds `weight · ∇_θ log π_θ(a|s)` into `out`.
    fn accumulate_score(
        &self,
        state: &State<T>,
        action: &Action<T>,
        weight: T,
        out: &mut [T],
    ) -> Result<()>;

    fn score(&self, state: &State<T>, action: &Action<T>) -> Result<Vec<T>> {
        let mut g = vec![T::zero(); self.num_params()];
        self.accumulate_score(state, action, T::one(), &mut g)?;
        Ok(g)
    }

    fn clone_box(&self) -> Box<dyn Policy<T>>;
}

impl<T: Scalar> Clone for Box<dyn Policy<T>> {
    fn clone(&self) -> Self {
        self.clone_box()
    }
}

/// Policies over a finite action set whose probabilities can be enumerated per state.
pub trait TabularPolicy<T: Scalar>: Sync {
    fn num_actions(&self) -> usize;

    fn action_probs(&self, state_index: usize) -> Vec<T>;
}

pub(crate) fn check_len(context: &'static str, expected: usize, got: usize) -> Result<()> {
    if expected == got {
        Ok(())
    } else {
        Err(crate::error::Error::DimensionMismatch {
            context,
            expected,
            got,
        })
    }
}

pub(crate) fn standard_normal(rng: &mut dyn rand::RngCore) -> f64 {
    use rand::Rng;
    rng.sample(rand_distr::StandardNormal)
}
