//! Step-size schedules: constant or Adam.

use crate::error::{Error, Result};
use crate::scalar::Scalar;

#[derive(Clone, Copy, Debug, PartialEq)]
pub enum StepSchedule<T> {
    Constant(T),
    Adam { rate: T, beta1: T, beta2: T, eps: T },
}

impl<T: Scalar> StepSchedule<T> {
    /// Adam with `β₁ = 0.9`, `β₂ = 0.999`, `ε = 1e-8`.
    pub fn adam(rate: T) -> Self {
        StepSchedule::Adam {
            rate,
            beta1: T::lit(0.9),
            beta2: T::lit(0.999),
            eps: T::lit(1e-8),
        }
    }

    /// Nominal step size.
    pub fn rate(&self) -> T {
        match *self {
            StepSchedule::Constant(r) | StepSchedule::Adam { rate: r, .. } => r,
        }
    }

    pub fn validate(&self) -> Result<()> {
        let rate = self.rate();
        if !(rate.is_finite() && rate >= T::zero()) {
            return Err(Error::config(format!(
                "step size must be finite and >= 0, got {rate}"
            )));
        }
        if let StepSchedule::Adam {
            beta1, beta2, eps, ..
        } = *self
        {
            let unit = |b: T| b >= T::zero() && b < T::one();
            if !(unit(beta1) && unit(beta2) && eps > T::zero()) {
                return Err(Error::config(
                    "Adam needs beta1, beta2 in [0, 1) and eps > 0",
                ));
            }
        }
        Ok(())
    }
}

/// Optimizer state for one parameter block.
#[derive(Clone, Debug, PartialEq)]
pub struct ScheduleState<T> {
    pub schedule: StepSchedule<T>,
    pub m: Vec<T>,
    pub v: Vec<T>,
    pub t: usize,
}

impl<T: Scalar> ScheduleState<T> {
    pub fn new(schedule: StepSchedule<T>, dim: usize) -> Self {
        Self {
            schedule,
            m: vec![T::zero(); dim],
            v: vec![T::zero(); dim],
            t: 0,
        }
    }

    /// Step to apply along `grad`; the caller adds it (ascent) or subtracts it (descent).
    pub fn step(&mut self, grad: &[T]) -> Result<Vec<T>> {
        if grad.len() != self.m.len() {
            return Err(Error::DimensionMismatch {
                context: "schedule gradient",
                expected: self.m.len(),
                got: grad.len(),
            });
        }
        self.t += 1;
        Ok(match self.schedule {
            StepSchedule::Constant(rate) => grad.iter().map(|&g| rate * g).collect(),
            StepSchedule::Adam {
                rate,
                beta1,
                beta2,
                eps,
            } => {
                let t = self.t as i32;
                let c1 = T::one() - beta1.powi(t);
                let c2 = T::one() - beta2.powi(t);
                grad.iter()
                    .zip(self.m.iter_mut().zip(self.v.iter_mut()))
                    .map(|(&g, (m, v))| {
                        *m = beta1 * *m + (T::one() - beta1) * g;
                        *v = beta2 * *v + (T::one() - beta2) * g * g;
                        rate * (*m / c1) / ((*v / c2).sqrt() + eps)
                    })
                    .collect()
            }
        })
    }
}

/// Functional form of [`ScheduleState::step`].
pub fn step_schedule<T: Scalar>(
    state: &ScheduleState<T>,
    grad: &[T],
) -> Result<(Vec<T>, ScheduleState<T>)> {
    let mut next = state.clone();
    let step = next.step(grad)?;
    Ok((step, next))
}
