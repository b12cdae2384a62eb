use rand::{Rng, RngCore};

use super::{check_len, Policy, TabularPolicy};
use crate::env::{Action, Actor, State};
use crate::error::{Error, Result};
use crate::scalar::Scalar;

/// Two actions, one shared parameter: `π(1|s) = σ(θ)` in every state.
#[derive(Clone, Debug, PartialEq)]
pub struct BinaryLogitPolicy<T> {
    theta: [T; 1],
}

impl<T: Scalar> BinaryLogitPolicy<T> {
    pub fn new(theta: T) -> Self {
        Self { theta: [theta] }
    }

    /// `σ(θ)`, the probability of action 1.
    pub fn p_one(&self) -> T {
        let t = self.theta[0];
        if t >= T::zero() {
            T::one() / (T::one() + (-t).exp())
        } else {
            let e = t.exp();
            e / (T::one() + e)
        }
    }

    fn action_index(action: &Action<T>) -> Result<usize> {
        match action {
            Action::Discrete(a) if *a < 2 => Ok(*a),
            Action::Discrete(a) => Err(Error::IndexOutOfRange { index: *a, max: 1 }),
            Action::Continuous(v) => Err(Error::DimensionMismatch {
                context: "binary action",
                expected: 1,
                got: v.len(),
            }),
        }
    }
}

impl<T: Scalar> Actor<T> for BinaryLogitPolicy<T> {
    fn act(&self, _state: &State<T>, rng: &mut dyn RngCore) -> Result<Action<T>> {
        let u = T::lit(rng.random::<f64>());
        Ok(Action::Discrete(usize::from(u < self.p_one())))
    }
}

impl<T: Scalar> Policy<T> for BinaryLogitPolicy<T> {
    fn num_params(&self) -> usize {
        1
    }

    fn params(&self) -> &[T] {
        &self.theta
    }

    fn set_params(&mut self, params: &[T]) -> Result<()> {
        check_len("logit parameters", 1, params.len())?;
        self.theta[0] = params[0];
        Ok(())
    }

    fn is_stochastic(&self) -> bool {
        true
    }

    fn log_prob(&self, _state: &State<T>, action: &Action<T>) -> Result<T> {
        let p = self.p_one();
        Ok(match Self::action_index(action)? {
            1 => p.ln(),
            _ => (T::one() - p).ln(),
        })
    }

    fn accumulate_score(
        &self,
        _state: &State<T>,
        action: &Action<T>,
        weight: T,
        out: &mut [T],
    ) -> Result<()> {
        check_len("score buffer", 1, out.len())?;
        let indicator = T::from_count(Self::action_index(action)?);
        out[0] += weight * (indicator - self.p_one());
        Ok(())
    }

    fn clone_box(&self) -> Box<dyn Policy<T>> {
        Box::new(self.clone())
    }
}

impl<T: Scalar> TabularPolicy<T> for BinaryLogitPolicy<T> {
    fn num_actions(&self) -> usize {
        2
    }

    fn action_probs(&self, _state_index: usize) -> Vec<T> {
        let p = self.p_one();
        vec![T::one() - p, p]
    }
}
