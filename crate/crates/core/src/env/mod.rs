//! Interaction contract between environments and actors, plus trajectory bookkeeping.
//!
//! Environments are stateless transition functions: the rollout loop owns the
//! current [`State`], so a single environment value can serve any number of
//! concurrent rollouts.

mod clipped;
mod dgww;
mod lqr;

pub use clipped::{wrap_clipped_action_cost, ClippedActionCost};
pub use dgww::{make_dgww, Dgww, DgwwAction};
pub use lqr::{make_cost_lqr, CostLqr};

use rand::RngCore;

use crate::error::{Error, Result};
use crate::scalar::Scalar;

/// Observation handed to actors. Tabular environments also expose a state index.
#[derive(Clone, Debug, PartialEq)]
pub struct State<T> {
    pub features: Vec<T>,
    pub index: Option<usize>,
}

impl<T: Scalar> State<T> {
    pub fn continuous(features: Vec<T>) -> Self {
        Self {
            features,
            index: None,
        }
    }

    pub fn tabular(index: usize, features: Vec<T>) -> Self {
        Self {
            features,
            index: Some(index),
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub enum Action<T> {
    Discrete(usize),
    Continuous(Vec<T>),
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum ActionSpace {
    Discrete(usize),
    Continuous(usize),
}

#[derive(Clone, Debug, PartialEq)]
pub struct StepOutcome<T> {
    pub next_state: State<T>,
    pub reward: T,
    pub costs: Vec<T>,
    pub terminal: bool,
}

/// Static description of a constrained environment.
#[derive(Clone, Debug, PartialEq)]
pub struct EnvDescriptor<T> {
    pub state_dim: usize,
    pub action_space: ActionSpace,
    pub num_constraints: usize,
    pub thresholds: Vec<T>,
    pub gamma: T,
    /// `None` is an infinite horizon, allowed only with `gamma < 1`.
    pub horizon: Option<usize>,
}

impl<T: Scalar> EnvDescriptor<T> {
    pub fn new(
        state_dim: usize,
        action_space: ActionSpace,
        num_constraints: usize,
        gamma: T,
        horizon: Option<usize>,
    ) -> Result<Self> {
        if state_dim == 0 {
            return Err(Error::config("state_dim must be positive"));
        }
        if !(gamma >= T::zero() && gamma <= T::one()) {
            return Err(Error::config(format!("gamma {gamma} outside [0, 1]")));
        }
        match horizon {
            Some(0) => return Err(Error::config("horizon must be positive")),
            None if gamma >= T::one() => {
                return Err(Error::config("infinite horizon requires gamma < 1"))
            }
            _ => {}
        }
        Ok(Self {
            state_dim,
            action_space,
            num_constraints,
            thresholds: Vec::new(),
            gamma,
            horizon,
        })
    }

    /// Largest attainable discounted cumulative cost, `(1 − γ^T)/(1 − γ)`.
    pub fn j_max(&self) -> T {
        j_max(self.gamma, self.horizon)
    }

    pub fn with_thresholds(mut self, b: Vec<T>) -> Result<Self> {
        if b.len() != self.num_constraints {
            return Err(Error::DimensionMismatch {
                context: "thresholds",
                expected: self.num_constraints,
                got: b.len(),
            });
        }
        let jm = self.j_max();
        if let Some(bad) = b.iter().find(|&&x| !(x >= T::zero() && x <= jm)) {
            return Err(Error::config(format!("threshold {bad} outside [0, {jm}]")));
        }
        self.thresholds = b;
        Ok(self)
    }
}

pub fn j_max<T: Scalar>(gamma: T, horizon: Option<usize>) -> T {
    match horizon {
        Some(t) if gamma >= T::one() => T::from_count(t),
        Some(t) => (T::one() - gamma.powi(t as i32)) / (T::one() - gamma),
        None => T::one() / (T::one() - gamma),
    }
}

/// A constrained MDP exposed as a stateless transition function.
pub trait Environment<T: Scalar>: Send + Sync {
    fn descriptor(&self) -> EnvDescriptor<T>;

    fn initial_state(&self, rng: &mut dyn RngCore) -> State<T>;

    /// One transition from `state` under `action`. Costs have length `num_constraints`.
    fn step(
        &self,
        state: &State<T>,
        action: &Action<T>,
        rng: &mut dyn RngCore,
    ) -> Result<StepOutcome<T>>;
}

/// Anything that maps a state to an action.
pub trait Actor<T: Scalar> {
    fn act(&self, state: &State<T>, rng: &mut dyn RngCore) -> Result<Action<T>>;
}

impl<T: Scalar, F> Actor<T> for F
where
    F: Fn(&State<T>) -> Action<T>,
{
    fn act(&self, state: &State<T>, _rng: &mut dyn RngCore) -> Result<Action<T>> {
        Ok(self(state))
    }
}

/// One rollout. `states[t]`, `actions[t]`, `rewards[t]` and `costs[t]` describe step `t`.
#[derive(Clone, Debug, PartialEq)]
pub struct Trajectory<T> {
    pub states: Vec<State<T>>,
    pub actions: Vec<Action<T>>,
    pub rewards: Vec<T>,
    /// `len × U` per-step costs.
    pub costs: Vec<Vec<T>>,
    /// Policy parameters the trajectory was generated with (parameter-based rollouts only).
    pub sampled_theta: Option<Vec<T>>,
}

impl<T: Scalar> Trajectory<T> {
    pub fn len(&self) -> usize {
        self.rewards.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rewards.is_empty()
    }

    pub fn num_constraints(&self) -> usize {
        self.costs.first().map_or(0, Vec::len)
    }

    /// `R(τ) = Σ γ^t r_t`.
    pub fn discounted_return(&self, gamma: T) -> T {
        discounted_sum(self.rewards.iter().copied(), gamma)
    }

    /// `C_i(τ) = Σ γ^t c_{t,i}`; index 0 is `−R(τ)`.
    pub fn discounted_cost(&self, i: usize, gamma: T) -> Result<T> {
        if i == 0 {
            return Ok(-self.discounted_return(gamma));
        }
        let u = self.num_constraints();
        if i > u {
            return Err(Error::IndexOutOfRange { index: i, max: u });
        }
        Ok(discounted_sum(self.costs.iter().map(|c| c[i - 1]), gamma))
    }

    /// Per-step signal of channel `i` (`c_0 := −r`). Caller guarantees `i ≤ U`.
    pub fn step_cost(&self, t: usize, i: usize) -> T {
        if i == 0 {
            -self.rewards[t]
        } else {
            self.costs[t][i - 1]
        }
    }
}

fn discounted_sum<T: Scalar>(values: impl Iterator<Item = T>, gamma: T) -> T {
    let mut acc = T::zero();
    let mut disc = T::one();
    for v in values {
        acc += disc * v;
        disc *= gamma;
    }
    acc
}

/// Plays `actor` in `env` for at most `horizon` steps, stopping early on a terminal transition.
pub fn rollout<T: Scalar>(
    env: &dyn Environment<T>,
    actor: &dyn Actor<T>,
    horizon: usize,
    rng: &mut dyn RngCore,
) -> Result<Trajectory<T>> {
    let desc = env.descriptor();
    if let Some(h) = desc.horizon {
        if horizon > h {
            return Err(Error::config(format!(
                "rollout horizon {horizon} exceeds environment horizon {h}"
            )));
        }
    }
    let mut traj = Trajectory {
        states: Vec::with_capacity(horizon),
        actions: Vec::with_capacity(horizon),
        rewards: Vec::with_capacity(horizon),
        costs: Vec::with_capacity(horizon),
        sampled_theta: None,
    };
    let mut state = env.initial_state(rng);
    for _ in 0..horizon {
        let action = actor.act(&state, rng)?;
        let out = env.step(&state, &action, rng)?;
        debug_assert_eq!(out.costs.len(), desc.num_constraints);
        traj.states.push(state);
        traj.actions.push(action);
        traj.rewards.push(out.reward);
        traj.costs.push(out.costs);
        if out.terminal {
            break;
        }
        state = out.next_state;
    }
    Ok(traj)
}
