use rand::RngCore;

use super::{Action, ActionSpace, EnvDescriptor, Environment, State, StepOutcome};
use crate::error::{Error, Result};
use crate::scalar::Scalar;

/// Adds the cost `‖a − clip(a, a_min, a_max)‖₂` as an extra constraint channel
/// and forwards the clipped action to the wrapped environment.
pub struct ClippedActionCost<T: Scalar> {
    inner: Box<dyn Environment<T>>,
    low: Vec<T>,
    high: Vec<T>,
}

pub fn wrap_clipped_action_cost<T: Scalar>(
    env: Box<dyn Environment<T>>,
    a_min: Vec<T>,
    a_max: Vec<T>,
) -> Result<ClippedActionCost<T>> {
    let dim = match env.descriptor().action_space {
        ActionSpace::Continuous(d) => d,
        ActionSpace::Discrete(_) => {
            return Err(Error::config(
                "clipped-action cost needs a continuous action space",
            ))
        }
    };
    for bound in [&a_min, &a_max] {
        if bound.len() != dim {
            return Err(Error::DimensionMismatch {
                context: "action bounds",
                expected: dim,
                got: bound.len(),
            });
        }
    }
    if a_min.iter().zip(&a_max).any(|(lo, hi)| !(lo < hi)) {
        return Err(Error::config(
            "action bounds need a_min < a_max componentwise",
        ));
    }
    Ok(ClippedActionCost {
        inner: env,
        low: a_min,
        high: a_max,
    })
}

impl<T: Scalar> ClippedActionCost<T> {
    /// Returns the clipped action and the Euclidean clipping excess.
    pub fn clip(&self, a: &[T]) -> (Vec<T>, T) {
        let clipped: Vec<T> = a
            .iter()
            .zip(self.low.iter().zip(&self.high))
            .map(|(&x, (&lo, &hi))| x.max(lo).min(hi))
            .collect();
        let excess = a
            .iter()
            .zip(&clipped)
            .map(|(&x, &c)| (x - c) * (x - c))
            .sum::<T>()
            .sqrt();
        (clipped, excess)
    }
}

impl<T: Scalar> Environment<T> for ClippedActionCost<T> {
    fn descriptor(&self) -> EnvDescriptor<T> {
        let mut d = self.inner.descriptor();
        d.num_constraints += 1;
        d.thresholds.clear();
        d
    }

    fn initial_state(&self, rng: &mut dyn RngCore) -> State<T> {
        self.inner.initial_state(rng)
    }

    fn step(
        &self,
        state: &State<T>,
        action: &Action<T>,
        rng: &mut dyn RngCore,
    ) -> Result<StepOutcome<T>> {
        let a = match action {
            Action::Continuous(a) if a.len() == self.low.len() => a,
            other => {
                let got = match other {
                    Action::Continuous(a) => a.len(),
                    Action::Discrete(_) => 1,
                };
                return Err(Error::DimensionMismatch {
                    context: "clipped action",
                    expected: self.low.len(),
                    got,
                });
            }
        };
        let (clipped, excess) = self.clip(a);
        let mut out = self.inner.step(state, &Action::Continuous(clipped), rng)?;
        out.costs.push(excess);
        Ok(out)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::env::{make_dgww, CostLqr};
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn wrapped() -> ClippedActionCost<f64> {
        wrap_clipped_action_cost(
            Box::new(CostLqr::standard()),
            vec![-1.0, -1.0],
            vec![1.0, 1.0],
        )
        .unwrap()
    }

    #[test]
    fn clip_examples() {
        let env = wrapped();
        let (c, e) = env.clip(&[1.5, -0.5]);
        assert_eq!(c, vec![1.0, -0.5]);
        assert!((e - 0.5).abs() < 1e-15);
        assert_eq!(env.clip(&[0.3, -0.9]).1, 0.0);
        assert!((env.clip(&[2.0, 2.0]).1 - 2f64.sqrt()).abs() < 1e-15);
    }

    #[test]
    fn forwards_clipped_action() {
        let env = wrapped();
        assert_eq!(env.descriptor().num_constraints, 2);
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        let s = State::continuous(vec![0.0, 0.0]);
        let out = env
            .step(&s, &Action::Continuous(vec![1.5, -0.5]), &mut rng)
            .unwrap();
        // inner env saw (1, −0.5): next = 0.9·a
        assert!((out.next_state.features[0] - 0.9).abs() < 1e-12);
        assert!((out.next_state.features[1] + 0.45).abs() < 1e-12);
        assert_eq!(out.costs.len(), 2);
        assert!((out.costs[1] - 0.5).abs() < 1e-12);
    }

    #[test]
    fn rejects_discrete_env_and_bad_bounds() {
        let grid = Box::new(make_dgww::<f64>(7).unwrap());
        assert!(wrap_clipped_action_cost(grid, vec![-1.0], vec![1.0]).is_err());
        let lqr = Box::new(CostLqr::<f64>::standard());
        assert!(wrap_clipped_action_cost(lqr, vec![1.0, -1.0], vec![1.0, 1.0]).is_err());
    }
}
