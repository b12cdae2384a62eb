//! Linear-quadratic regulator with a quadratic action cost.
//!
//! `s' = A s + B a`, reward `−sᵀ R s`, single cost `aᵀ Q a`. Raw signals are
//! unbounded; an optional normalizer divides them by a fixed scale and clips
//! into `[−1, 0]` / `[0, 1]`.

use rand::{Rng, RngCore};

use super::{Action, ActionSpace, EnvDescriptor, Environment, State, StepOutcome};
use crate::error::{Error, Result};
use crate::linalg::Matrix;
use crate::scalar::Scalar;

#[derive(Clone, Debug)]
pub struct CostLqr<T> {
    a: Matrix<T>,
    b: Matrix<T>,
    q: Matrix<T>,
    r: Matrix<T>,
    init_low: T,
    init_high: T,
    horizon: usize,
    gamma: T,
    reward_scale: Option<T>,
    cost_scale: Option<T>,
}

pub fn make_cost_lqr<T: Scalar>(
    a: Matrix<T>,
    b: Matrix<T>,
    q: Matrix<T>,
    r: Matrix<T>,
    init_low: T,
    init_high: T,
) -> Result<CostLqr<T>> {
    let n = a.rows();
    let check = |what: &str, ok: bool| {
        if ok {
            Ok(())
        } else {
            Err(Error::config(format!(
                "LQR matrix {what} has incompatible shape"
            )))
        }
    };
    check("A", a.cols() == n && n > 0)?;
    check("B", b.rows() == n && b.cols() > 0)?;
    check("R", r.rows() == n && r.cols() == n)?;
    check("Q", q.rows() == b.cols() && q.cols() == b.cols())?;
    let tol = T::lit(1e-9);
    if !q.is_psd(tol) || !r.is_psd(tol) {
        return Err(Error::config(
            "LQR Q and R must be symmetric positive semidefinite",
        ));
    }
    if !(init_low <= init_high) {
        return Err(Error::config("LQR initial range must satisfy low <= high"));
    }
    Ok(CostLqr {
        a,
        b,
        q,
        r,
        init_low,
        init_high,
        horizon: 50,
        gamma: T::one(),
        reward_scale: None,
        cost_scale: None,
    })
}

impl<T: Scalar> CostLqr<T> {
    /// Two-dimensional system with `A = B = 0.9·I`, `Q = diag(0.9, 0.1)`,
    /// `R = diag(0.1, 0.9)` and initial states uniform on `[−3, 3]²`.
    pub fn standard() -> Self {
        let a = Matrix::identity(2).scaled(T::lit(0.9));
        make_cost_lqr(
            a.clone(),
            a,
            Matrix::diag(&[T::lit(0.9), T::lit(0.1)]),
            Matrix::diag(&[T::lit(0.1), T::lit(0.9)]),
            T::lit(-3.0),
            T::lit(3.0),
        )
        .expect("standard LQR is well formed")
    }

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

    /// Divides raw reward and cost by the given scales and clips them into the unit ranges.
    pub fn with_normalizer(
        mut self,
        reward_scale: Option<T>,
        cost_scale: Option<T>,
    ) -> Result<Self> {
        for s in [reward_scale, cost_scale].into_iter().flatten() {
            if !(s > T::zero()) {
                return Err(Error::config("normalizer scales must be positive"));
            }
        }
        self.reward_scale = reward_scale;
        self.cost_scale = cost_scale;
        Ok(self)
    }

    /// Largest `sᵀ R s` over the initial box, the natural reward scale.
    pub fn init_box_reward_bound(&self) -> T {
        let m = self.init_low.abs().max(self.init_high.abs());
        let n = self.state_dim();
        // R is PSD, so the maximum over the box sits on a vertex.
        let mut best = T::zero();
        for mask in 0..(1usize << n) {
            let v: Vec<T> = (0..n)
                .map(|i| if mask >> i & 1 == 1 { m } else { -m })
                .collect();
            best = best.max(self.r.quad_form(&v));
        }
        best
    }

    pub fn state_dim(&self) -> usize {
        self.a.rows()
    }

    pub fn action_dim(&self) -> usize {
        self.b.cols()
    }

    pub fn raw_reward(&self, s: &[T]) -> T {
        -self.r.quad_form(s)
    }

    pub fn raw_cost(&self, a: &[T]) -> T {
        self.q.quad_form(a)
    }

    pub fn next_state(&self, s: &[T], a: &[T]) -> Vec<T> {
        let mut next = self.a.mul_vec(s);
        for (x, y) in next.iter_mut().zip(self.b.mul_vec(a)) {
            *x += y;
        }
        next
    }
}

impl<T: Scalar> Environment<T> for CostLqr<T> {
    fn descriptor(&self) -> EnvDescriptor<T> {
        EnvDescriptor::new(
            self.state_dim(),
            ActionSpace::Continuous(self.action_dim()),
            1,
            self.gamma,
            Some(self.horizon),
        )
        .expect("LQR descriptor is valid by construction")
    }

    fn initial_state(&self, rng: &mut dyn RngCore) -> State<T> {
        let (lo, hi) = (self.init_low.as_f64(), self.init_high.as_f64());
        let features = (0..self.state_dim())
            .map(|_| {
                if hi > lo {
                    T::lit(rng.random_range(lo..hi))
                } else {
                    self.init_low
                }
            })
            .collect();
        State::continuous(features)
    }

    fn step(
        &self,
        state: &State<T>,
        action: &Action<T>,
        _rng: &mut dyn RngCore,
    ) -> Result<StepOutcome<T>> {
        let a = match action {
            Action::Continuous(a) if a.len() == self.action_dim() => a,
            Action::Continuous(a) => {
                return Err(Error::DimensionMismatch {
                    context: "LQR action",
                    expected: self.action_dim(),
                    got: a.len(),
                })
            }
            Action::Discrete(_) => {
                return Err(Error::DimensionMismatch {
                    context: "LQR action",
                    expected: self.action_dim(),
                    got: 1,
                })
            }
        };
        let s = &state.features;
        if s.len() != self.state_dim() {
            return Err(Error::DimensionMismatch {
                context: "LQR state",
                expected: self.state_dim(),
                got: s.len(),
            });
        }
        let mut reward = self.raw_reward(s);
        if let Some(k) = self.reward_scale {
            reward = (reward / k).max(-T::one());
        }
        let mut cost = self.raw_cost(a);
        if let Some(k) = self.cost_scale {
            cost = (cost / k).min(T::one());
        }
        Ok(StepOutcome {
            next_state: State::continuous(self.next_state(s, a)),
            reward,
            costs: vec![cost],
            terminal: false,
        })
    }
}
