use rand::{Rng, RngCore};

use crate::env::{Action, ActionSpace, EnvDescriptor, Environment, State, StepOutcome};
use crate::error::{Error, Result};
use crate::scalar::Scalar;

/// Default upper bound on the number of enumerated trajectories.
pub const DEFAULT_ENUMERATION_CAP: f64 = 1e6;

/// A finite CMDP with an explicit model and a fixed horizon.
#[derive(Clone, Debug, PartialEq)]
pub struct TabularCmdp<T> {
    n_states: usize,
    n_actions: usize,
    /// `p(s'|s,a)` at `(s * A + a) * S + s'`.
    transition: Vec<T>,
    /// `r(s,a)` at `s * A + a`.
    reward: Vec<T>,
    /// `c_i(s,a)` at `costs[i][s * A + a]`.
    costs: Vec<Vec<T>>,
    mu0: Vec<T>,
    gamma: T,
    horizon: usize,
    cap: f64,
}

fn check_distribution<T: Scalar>(what: &str, p: &[T]) -> Result<()> {
    if p.iter().any(|&x| !(x >= T::zero())) {
        return Err(Error::validation(format!(
            "{what} has negative or NaN entries"
        )));
    }
    let sum: T = p.iter().copied().sum();
    if (sum - T::one()).abs() > T::lit(1e-12).max(T::epsilon() * T::lit(16.0)) {
        return Err(Error::validation(format!("{what} sums to {sum}, not 1")));
    }
    Ok(())
}

impl<T: Scalar> TabularCmdp<T> {
    #[allow(clippy::too_many_arguments)]
    pub fn new(
        n_states: usize,
        n_actions: usize,
        transition: Vec<T>,
        reward: Vec<T>,
        costs: Vec<Vec<T>>,
        mu0: Vec<T>,
        gamma: T,
        horizon: usize,
    ) -> Result<Self> {
        if n_states == 0 || n_actions == 0 || horizon == 0 {
            return Err(Error::config(
                "states, actions and horizon must be positive",
            ));
        }
        let sa = n_states * n_actions;
        let len = |context, expected, got: usize| {
            if expected == got {
                Ok(())
            } else {
                Err(Error::DimensionMismatch {
                    context,
                    expected,
                    got,
                })
            }
        };
        len("transition", sa * n_states, transition.len())?;
        len("reward", sa, reward.len())?;
        len("initial distribution", n_states, mu0.len())?;
        for c in &costs {
            len("cost table", sa, c.len())?;
        }
        for row in transition.chunks(n_states) {
            check_distribution("transition row", row)?;
        }
        check_distribution("initial distribution", &mu0)?;
        if reward.iter().any(|&r| !(r >= -T::one() && r <= T::zero())) {
            return Err(Error::validation("rewards must lie in [-1, 0]"));
        }
        if costs
            .iter()
            .flatten()
            .any(|&c| !(c >= T::zero() && c <= T::one()))
        {
            return Err(Error::validation("costs must lie in [0, 1]"));
        }
        if !(gamma >= T::zero() && gamma <= T::one()) {
            return Err(Error::config("gamma must lie in [0, 1]"));
        }
        Ok(Self {
            n_states,
            n_actions,
            transition,
            reward,
            costs,
            mu0,
            gamma,
            horizon,
            cap: DEFAULT_ENUMERATION_CAP,
        })
    }

    /// Random model: uniform rewards and costs, normalized uniform transition rows and start distribution.
    pub fn random(
        n_states: usize,
        n_actions: usize,
        num_constraints: usize,
        horizon: usize,
        gamma: T,
        rng: &mut dyn RngCore,
    ) -> Result<Self> {
        let mut simplex = |n: usize| {
            let raw: Vec<f64> = (0..n).map(|_| rng.random::<f64>() + 0.05).collect();
            let z: f64 = raw.iter().sum();
            raw.into_iter().map(|x| T::lit(x / z)).collect::<Vec<_>>()
        };
        let sa = n_states * n_actions;
        let transition = (0..sa).flat_map(|_| simplex(n_states)).collect();
        let mu0 = simplex(n_states);
        let reward = (0..sa).map(|_| -T::lit(rng.random::<f64>())).collect();
        let costs = (0..num_constraints)
            .map(|_| (0..sa).map(|_| T::lit(rng.random::<f64>())).collect())
            .collect();
        Self::new(
            n_states, n_actions, transition, reward, costs, mu0, gamma, horizon,
        )
    }

    pub fn with_cap(mut self, cap: f64) -> Self {
        self.cap = cap;
        self
    }

    pub fn n_states(&self) -> usize {
        self.n_states
    }

    pub fn n_actions(&self) -> usize {
        self.n_actions
    }

    pub fn num_constraints(&self) -> usize {
        self.costs.len()
    }

    pub fn gamma(&self) -> T {
        self.gamma
    }

    pub fn horizon(&self) -> usize {
        self.horizon
    }

    pub fn cap(&self) -> f64 {
        self.cap
    }

    pub fn mu0(&self) -> &[T] {
        &self.mu0
    }

    pub fn p(&self, s: usize, a: usize, next: usize) -> T {
        self.transition[(s * self.n_actions + a) * self.n_states + next]
    }

    pub fn r(&self, s: usize, a: usize) -> T {
        self.reward[s * self.n_actions + a]
    }

    /// Cost of constraint `i` (0-based) for `(s, a)`.
    pub fn c(&self, i: usize, s: usize, a: usize) -> T {
        self.costs[i][s * self.n_actions + a]
    }

    /// `|supp μ₀| · (A·S)^T`, the bound checked against the cap.
    pub fn enumeration_size(&self) -> f64 {
        let support = self.mu0.iter().filter(|&&p| p > T::zero()).count() as f64;
        support * ((self.n_actions * self.n_states) as f64).powi(self.horizon as i32)
    }

    pub fn state(&self, s: usize) -> State<T> {
        State::tabular(s, vec![T::from_count(s)])
    }
}

fn sample_index<T: Scalar>(p: impl Iterator<Item = T>, rng: &mut dyn RngCore) -> usize {
    let u = T::lit(rng.random::<f64>());
    let mut acc = T::zero();
    let mut last = 0;
    for (i, pi) in p.enumerate() {
        acc += pi;
        last = i;
        if u < acc {
            return i;
        }
    }
    last
}

impl<T: Scalar> Environment<T> for TabularCmdp<T> {
    fn descriptor(&self) -> EnvDescriptor<T> {
        EnvDescriptor::new(
            1,
            ActionSpace::Discrete(self.n_actions),
            self.costs.len(),
            self.gamma,
            Some(self.horizon),
        )
        .expect("tabular descriptor is valid by construction")
    }

    fn initial_state(&self, rng: &mut dyn RngCore) -> State<T> {
        self.state(sample_index(self.mu0.iter().copied(), rng))
    }

    fn step(
        &self,
        state: &State<T>,
        action: &Action<T>,
        rng: &mut dyn RngCore,
    ) -> Result<StepOutcome<T>> {
        let s = match state.index {
            Some(s) if s < self.n_states => s,
            Some(s) => {
                return Err(Error::IndexOutOfRange {
                    index: s,
                    max: self.n_states - 1,
                })
            }
            None => return Err(Error::validation("tabular state without index")),
        };
        let a = match action {
            Action::Discrete(a) if *a < self.n_actions => *a,
            Action::Discrete(a) => {
                return Err(Error::IndexOutOfRange {
                    index: *a,
                    max: self.n_actions - 1,
                })
            }
            Action::Continuous(_) => {
                return Err(Error::validation("tabular CMDP needs a discrete action"))
            }
        };
        let next = sample_index((0..self.n_states).map(|n| self.p(s, a, n)), rng);
        Ok(StepOutcome {
            next_state: self.state(next),
            reward: self.r(s, a),
            costs: (0..self.costs.len()).map(|i| self.c(i, s, a)).collect(),
            terminal: false,
        })
    }
}
