use rand::{Rng, RngCore};

use super::{check_len, Policy, TabularPolicy};
use crate::env::{Action, Actor, State};
use crate::error::{Error, Result};
use crate::scalar::Scalar;

/// `π(a_j|s_i) ∝ exp(θ_{i,j}/τ)`.
#[derive(Clone, Debug, PartialEq)]
pub struct TabularSoftmaxPolicy<T> {
    n_states: usize,
    n_actions: usize,
    theta: Vec<T>,
    temperature: T,
}

impl<T: Scalar> TabularSoftmaxPolicy<T> {
    /// Zero logits (uniform policy) with temperature 1.
    pub fn uniform(n_states: usize, n_actions: usize) -> Self {
        Self {
            n_states,
            n_actions,
            theta: vec![T::zero(); n_states * n_actions],
            temperature: T::one(),
        }
    }

    pub fn new(n_states: usize, n_actions: usize, theta: Vec<T>, temperature: T) -> Result<Self> {
        check_len("softmax parameters", n_states * n_actions, theta.len())?;
        if n_actions == 0 {
            return Err(Error::config("softmax policy needs at least one action"));
        }
        if !(temperature > T::zero()) {
            return Err(Error::config("softmax temperature must be positive"));
        }
        Ok(Self {
            n_states,
            n_actions,
            theta,
            temperature,
        })
    }

    pub fn temperature(&self) -> T {
        self.temperature
    }

    pub fn probs(&self, state_index: usize) -> Vec<T> {
        let row = &self.theta[state_index * self.n_actions..(state_index + 1) * self.n_actions];
        let max = row.iter().copied().fold(T::neg_infinity(), T::max);
        let mut p: Vec<T> = row
            .iter()
            .map(|&x| ((x - max) / self.temperature).exp())
            .collect();
        let z: T = p.iter().copied().sum();
        p.iter_mut().for_each(|x| *x /= z);
        p
    }

    fn state_index(&self, state: &State<T>) -> Result<usize> {
        match state.index {
            Some(i) if i < self.n_states => Ok(i),
            Some(i) => Err(Error::IndexOutOfRange {
                index: i,
                max: self.n_states.saturating_sub(1),
            }),
            None => Err(Error::validation("tabular policy needs an indexed state")),
        }
    }

    fn action_index(&self, action: &Action<T>) -> Result<usize> {
        match action {
            Action::Discrete(a) if *a < self.n_actions => Ok(*a),
            Action::Discrete(a) => Err(Error::IndexOutOfRange {
                index: *a,
                max: self.n_actions - 1,
            }),
            Action::Continuous(v) => Err(Error::DimensionMismatch {
                context: "softmax action",
                expected: 1,
                got: v.len(),
            }),
        }
    }
}

impl<T: Scalar> Actor<T> for TabularSoftmaxPolicy<T> {
    fn act(&self, state: &State<T>, rng: &mut dyn RngCore) -> Result<Action<T>> {
        let p = self.probs(self.state_index(state)?);
        let u = T::lit(rng.random::<f64>());
        let mut acc = T::zero();
        for (a, &pa) in p.iter().enumerate() {
            acc += pa;
            if u < acc {
                return Ok(Action::Discrete(a));
            }
        }
        Ok(Action::Discrete(self.n_actions - 1))
    }
}

impl<T: Scalar> Policy<T> for TabularSoftmaxPolicy<T> {
    fn num_params(&self) -> usize {
        self.theta.len()
    }

    fn params(&self) -> &[T] {
        &self.theta
    }

    fn set_params(&mut self, params: &[T]) -> Result<()> {
        check_len("softmax parameters", self.theta.len(), params.len())?;
        self.theta.copy_from_slice(params);
        Ok(())
    }

    fn is_stochastic(&self) -> bool {
        true
    }

    fn log_prob(&self, state: &State<T>, action: &Action<T>) -> Result<T> {
        let p = self.probs(self.state_index(state)?);
        Ok(p[self.action_index(action)?].ln())
    }

    fn accumulate_score(
        &self,
        state: &State<T>,
        action: &Action<T>,
        weight: T,
        out: &mut [T],
    ) -> Result<()> {
        check_len("score buffer", self.theta.len(), out.len())?;
        let s = self.state_index(state)?;
        let a = self.action_index(action)?;
        let p = self.probs(s);
        let k = weight / self.temperature;
        let row = &mut out[s * self.n_actions..(s + 1) * self.n_actions];
        for (j, (g, &pj)) in row.iter_mut().zip(&p).enumerate() {
            let indicator = if j == a { T::one() } else { T::zero() };
            *g += k * (indicator - pj);
        }
        Ok(())
    }

    fn clone_box(&self) -> Box<dyn Policy<T>> {
        Box::new(self.clone())
    }
}

impl<T: Scalar> TabularPolicy<T> for TabularSoftmaxPolicy<T> {
    fn num_actions(&self) -> usize {
        self.n_actions
    }

    fn action_probs(&self, state_index: usize) -> Vec<T> {
        self.probs(state_index)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn zero_logits_are_uniform() {
        let p = TabularSoftmaxPolicy::<f64>::uniform(3, 4);
        for s in 0..3 {
            for x in p.probs(s) {
                assert!((x - 0.25).abs() < 1e-15);
            }
        }
    }

    #[test]
    fn score_at_uniform() {
        let p = TabularSoftmaxPolicy::<f64>::uniform(3, 4);
        let g = p
            .score(&State::tabular(1, vec![1.0]), &Action::Discrete(2))
            .unwrap();
        for (k, &x) in g.iter().enumerate() {
            let expect = match k {
                6 => 0.75,
                4 | 5 | 7 => -0.25,
                _ => 0.0,
            };
            assert!((x - expect).abs() < 1e-15, "component {k}: {x}");
        }
    }

    #[test]
    fn large_logits_stay_finite() {
        let p = TabularSoftmaxPolicy::new(1, 2, vec![1000.0f64, 0.0], 1.0).unwrap();
        let probs = p.probs(0);
        assert!((probs[0] - 1.0).abs() < 1e-12);
        assert!(probs[1] >= 0.0 && probs[1].is_finite());
    }

    #[test]
    fn temperature_scales_logits() {
        let p = TabularSoftmaxPolicy::new(1, 2, vec![2.0f64, 0.0], 2.0).unwrap();
        let e = 1f64.exp();
        assert!((p.probs(0)[0] - e / (e + 1.0)).abs() < 1e-14);
        assert!(TabularSoftmaxPolicy::new(1, 2, vec![0.0f64; 2], 0.0).is_err());
    }

    #[test]
    fn sampling_matches_probabilities() {
        let p = TabularSoftmaxPolicy::new(1, 3, vec![0.5f64, -0.3, 1.1], 1.0).unwrap();
        let probs = p.probs(0);
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let n = 100_000;
        let mut counts = [0usize; 3];
        let s = State::tabular(0, vec![0.0]);
        for _ in 0..n {
            if let Action::Discrete(a) = p.act(&s, &mut rng).unwrap() {
                counts[a] += 1;
            }
        }
        for (c, &pa) in counts.iter().zip(&probs) {
            let freq = *c as f64 / n as f64;
            let se = (pa * (1.0 - pa) / n as f64).sqrt();
            assert!((freq - pa).abs() < 3.0 * se, "freq {freq} vs {pa}");
        }
    }

    #[test]
    fn rejects_unindexed_state() {
        let p = TabularSoftmaxPolicy::<f64>::uniform(2, 2);
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        assert!(p.act(&State::continuous(vec![0.0]), &mut rng).is_err());
        assert!(p.act(&State::tabular(5, vec![0.0]), &mut rng).is_err());
    }
}
