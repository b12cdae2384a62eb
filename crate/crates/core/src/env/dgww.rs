//! Discrete grid world with a U-shaped wall around the goal.
//!
//! Coordinates are `(x, y)` with `y = 0` the top row. The goal is the center
//! cell. The wall is the 8-neighbourhood ring around the center without the
//! cell directly above it, so the enclosure opens on the top side. Walls can
//! be entered; landing on one costs 1. The reward for landing on a cell is its
//! negated Manhattan distance to the center divided by the corner distance.

use rand::{Rng, RngCore};

use super::{Action, ActionSpace, EnvDescriptor, Environment, State, StepOutcome};
use crate::error::{Error, Result};
use crate::scalar::Scalar;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum DgwwAction {
    Up = 0,
    Right = 1,
    Left = 2,
    Down = 3,
}

impl DgwwAction {
    pub const ALL: [DgwwAction; 4] = [Self::Up, Self::Right, Self::Left, Self::Down];

    fn delta(self) -> (i64, i64) {
        match self {
            Self::Up => (0, -1),
            Self::Right => (1, 0),
            Self::Left => (-1, 0),
            Self::Down => (0, 1),
        }
    }
}

#[derive(Clone, Debug)]
pub struct Dgww<T> {
    side: usize,
    horizon: usize,
    gamma: T,
}

/// Grid of odd `side_length ≥ 5`, horizon 100 and no discounting.
pub fn make_dgww<T: Scalar>(side_length: usize) -> Result<Dgww<T>> {
    if side_length < 5 || side_length.is_multiple_of(2) {
        return Err(Error::config(format!(
            "grid side length must be odd and at least 5, got {side_length}"
        )));
    }
    Ok(Dgww {
        side: side_length,
        horizon: 100,
        gamma: T::one(),
    })
}

impl<T: Scalar> Dgww<T> {
    pub fn with_horizon(mut self, horizon: usize) -> Result<Self> {
        if horizon == 0 {
            return Err(Error::config("horizon must be positive"));
        }
        self.horizon = horizon;
        Ok(self)
    }

    pub fn with_gamma(mut self, gamma: T) -> Result<Self> {
        if !(gamma >= T::zero() && gamma <= T::one()) {
            return Err(Error::config(format!("gamma {gamma} outside [0, 1]")));
        }
        self.gamma = gamma;
        Ok(self)
    }

    pub fn side(&self) -> usize {
        self.side
    }

    pub fn num_states(&self) -> usize {
        self.side * self.side
    }

    pub fn center(&self) -> (usize, usize) {
        let c = self.side / 2;
        (c, c)
    }

    pub fn corners(&self) -> [(usize, usize); 4] {
        let m = self.side - 1;
        [(0, 0), (m, 0), (0, m), (m, m)]
    }

    pub fn is_wall(&self, x: usize, y: usize) -> bool {
        let (cx, cy) = self.center();
        let ring = x.abs_diff(cx) <= 1 && y.abs_diff(cy) <= 1 && (x, y) != (cx, cy);
        ring && (x, y) != (cx, cy - 1)
    }

    pub fn reward_at(&self, x: usize, y: usize) -> T {
        let (cx, cy) = self.center();
        let dist = x.abs_diff(cx) + y.abs_diff(cy);
        let max_dist = 2 * cx;
        -T::from_count(dist) / T::from_count(max_dist)
    }

    pub fn index_of(&self, x: usize, y: usize) -> usize {
        y * self.side + x
    }

    pub fn coords_of(&self, index: usize) -> (usize, usize) {
        (index % self.side, index / self.side)
    }

    pub fn state_at(&self, x: usize, y: usize) -> State<T> {
        State::tabular(
            self.index_of(x, y),
            vec![T::from_count(x), T::from_count(y)],
        )
    }

    fn coords(&self, state: &State<T>) -> Result<(usize, usize)> {
        match state.index {
            Some(i) if i < self.num_states() => Ok(self.coords_of(i)),
            Some(i) => Err(Error::IndexOutOfRange {
                index: i,
                max: self.num_states() - 1,
            }),
            None => Err(Error::validation("grid state without index")),
        }
    }
}

impl<T: Scalar> Environment<T> for Dgww<T> {
    fn descriptor(&self) -> EnvDescriptor<T> {
        EnvDescriptor::new(
            2,
            ActionSpace::Discrete(4),
            1,
            self.gamma,
            Some(self.horizon),
        )
        .expect("grid descriptor is valid by construction")
    }

    fn initial_state(&self, rng: &mut dyn RngCore) -> State<T> {
        let (x, y) = self.corners()[rng.random_range(0..4)];
        self.state_at(x, y)
    }

    fn step(
        &self,
        state: &State<T>,
        action: &Action<T>,
        _rng: &mut dyn RngCore,
    ) -> Result<StepOutcome<T>> {
        let a = match action {
            Action::Discrete(a) if *a < 4 => DgwwAction::ALL[*a],
            Action::Discrete(a) => return Err(Error::IndexOutOfRange { index: *a, max: 3 }),
            Action::Continuous(v) => {
                return Err(Error::DimensionMismatch {
                    context: "grid action",
                    expected: 1,
                    got: v.len(),
                })
            }
        };
        let (x, y) = self.coords(state)?;
        let (dx, dy) = a.delta();
        let last = self.side as i64 - 1;
        let nx = (x as i64 + dx).clamp(0, last) as usize;
        let ny = (y as i64 + dy).clamp(0, last) as usize;
        let cost = if self.is_wall(nx, ny) {
            T::one()
        } else {
            T::zero()
        };
        Ok(StepOutcome {
            next_state: self.state_at(nx, ny),
            reward: self.reward_at(nx, ny),
            costs: vec![cost],
            terminal: (nx, ny) == self.center(),
        })
    }
}
