//! Exact expectations by exhaustive trajectory enumeration.

use super::cmdp::TabularCmdp;
use crate::env::{Action, Trajectory};
use crate::error::{Error, Result};
use crate::estimators::{RiskSpec, RiskTerm};
use crate::policy::TabularPolicy;
use crate::risk::DiscreteDist;
use crate::scalar::Scalar;

/// Every trajectory of length `T` with positive probability, paired with that probability.
pub fn enumerate_trajectories<T: Scalar>(
    cmdp: &TabularCmdp<T>,
    policy: &dyn TabularPolicy<T>,
) -> Result<Vec<(Trajectory<T>, T)>> {
    let size = cmdp.enumeration_size();
    if size > cmdp.cap() {
        return Err(Error::EnumerationTooLarge {
            size,
            cap: cmdp.cap(),
        });
    }
    if policy.num_actions() != cmdp.n_actions() {
        return Err(Error::DimensionMismatch {
            context: "policy actions",
            expected: cmdp.n_actions(),
            got: policy.num_actions(),
        });
    }
    let probs: Vec<Vec<T>> = (0..cmdp.n_states())
        .map(|s| policy.action_probs(s))
        .collect();
    let mut out = Vec::new();
    let mut prefix = Trajectory {
        states: Vec::with_capacity(cmdp.horizon()),
        actions: Vec::with_capacity(cmdp.horizon()),
        rewards: Vec::with_capacity(cmdp.horizon()),
        costs: Vec::with_capacity(cmdp.horizon()),
        sampled_theta: None,
    };
    for (s, &p0) in cmdp.mu0().iter().enumerate() {
        if p0 > T::zero() {
            extend(cmdp, &probs, s, p0, &mut prefix, &mut out);
        }
    }
    Ok(out)
}

fn extend<T: Scalar>(
    cmdp: &TabularCmdp<T>,
    probs: &[Vec<T>],
    s: usize,
    prob: T,
    prefix: &mut Trajectory<T>,
    out: &mut Vec<(Trajectory<T>, T)>,
) {
    for (a, &pa) in probs[s].iter().enumerate() {
        if pa <= T::zero() {
            continue;
        }
        prefix.states.push(cmdp.state(s));
        prefix.actions.push(Action::Discrete(a));
        prefix.rewards.push(cmdp.r(s, a));
        prefix.costs.push(
            (0..cmdp.num_constraints())
                .map(|i| cmdp.c(i, s, a))
                .collect(),
        );
        let p = prob * pa;
        if prefix.len() == cmdp.horizon() {
            out.push((prefix.clone(), p));
        } else {
            for next in 0..cmdp.n_states() {
                let pn = cmdp.p(s, a, next);
                if pn > T::zero() {
                    extend(cmdp, probs, next, p * pn, prefix, out);
                }
            }
        }
        prefix.states.pop();
        prefix.actions.pop();
        prefix.rewards.pop();
        prefix.costs.pop();
    }
}

/// `E[C_i(τ)]`; `i = 0` is the negated return.
pub fn exact_performance<T: Scalar>(
    cmdp: &TabularCmdp<T>,
    policy: &dyn TabularPolicy<T>,
    i: usize,
) -> Result<T> {
    let mut acc = T::zero();
    for (traj, p) in enumerate_trajectories(cmdp, policy)? {
        acc += p * traj.discounted_cost(i, cmdp.gamma())?;
    }
    Ok(acc)
}

/// Distribution of the term's aggregated cost under the policy.
pub fn exact_cost_distribution<T: Scalar>(
    cmdp: &TabularCmdp<T>,
    policy: &dyn TabularPolicy<T>,
    term: &RiskTerm<T>,
) -> Result<DiscreteDist<T>> {
    let (support, probs) = enumerate_trajectories(cmdp, policy)?
        .iter()
        .map(|(t, p)| Ok((term.value(t, cmdp.gamma())?, *p)))
        .collect::<Result<(Vec<_>, Vec<_>)>>()?;
    DiscreteDist::new(support, probs)
}

/// `E[f(C, η)] + g(η)` for one term.
pub fn exact_risk_j<T: Scalar>(
    cmdp: &TabularCmdp<T>,
    policy: &dyn TabularPolicy<T>,
    term: &RiskTerm<T>,
    eta: T,
) -> Result<T> {
    let mut acc = T::zero();
    for (traj, p) in enumerate_trajectories(cmdp, policy)? {
        acc += p * term.measure.f(term.value(&traj, cmdp.gamma())?, eta);
    }
    Ok(acc + term.measure.g(eta))
}

/// `J_0 + Σ λ_u (J_u − b_u) − (ω/2)‖λ‖²`, all expectations exact.
pub fn exact_lagrangian<T: Scalar>(
    cmdp: &TabularCmdp<T>,
    policy: &dyn TabularPolicy<T>,
    spec: &RiskSpec<T>,
    lambda: &[T],
    eta: &[T],
    b: &[T],
    omega: T,
) -> Result<T> {
    let u = spec.num_constraints();
    for (context, got, expected) in [
        ("lambda", lambda.len(), u),
        ("eta", eta.len(), u + 1),
        ("thresholds", b.len(), u),
    ] {
        if got != expected {
            return Err(Error::DimensionMismatch {
                context,
                expected,
                got,
            });
        }
    }
    let trajs = enumerate_trajectories(cmdp, policy)?;
    let mut j = vec![T::zero(); u + 1];
    for (traj, p) in &trajs {
        for (k, term) in spec.terms().enumerate() {
            j[k] += *p * term.measure.f(term.value(traj, cmdp.gamma())?, eta[k]);
        }
    }
    for (k, term) in spec.terms().enumerate() {
        j[k] += term.measure.g(eta[k]);
    }
    let mut value = j[0];
    for k in 0..u {
        value += lambda[k] * (j[k + 1] - b[k]);
    }
    let sq: T = lambda.iter().map(|&l| l * l).sum();
    Ok(value - omega / T::lit(2.0) * sq)
}

/// `Σ_τ p(τ) · estimator(τ)`: the exact mean of a single-trajectory estimator.
pub fn estimator_expectation<T: Scalar>(
    cmdp: &TabularCmdp<T>,
    policy: &dyn TabularPolicy<T>,
    estimator: impl Fn(&Trajectory<T>) -> Result<Vec<T>>,
) -> Result<Vec<T>> {
    let mut acc: Option<Vec<T>> = None;
    for (traj, p) in enumerate_trajectories(cmdp, policy)? {
        let v = estimator(&traj)?;
        match &mut acc {
            None => acc = Some(v.into_iter().map(|x| p * x).collect()),
            Some(a) => {
                if a.len() != v.len() {
                    return Err(Error::DimensionMismatch {
                        context: "estimator output",
                        expected: a.len(),
                        got: v.len(),
                    });
                }
                a.iter_mut().zip(v).for_each(|(a, x)| *a += p * x);
            }
        }
    }
    acc.ok_or(Error::EmptyBatch)
}
