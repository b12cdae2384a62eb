//! Sample-based gradient estimators of the risk-constrained regularized Lagrangian
//!
//! ```text
//! L(v, λ, η) = J_0(v, η_0) + Σ_u λ_u (J_u(v, η_u) − b_u) − (ω/2)‖λ‖²
//! J_u(v, η)  = E[f_u(C_u(τ), η)] + g_u(η)
//! ```
//!
//! Index 0 is always the objective (`C_0 = −R`), indices `1..=U` the constraints.
//! All estimators are deterministic functions of the batch.

use crate::env::Trajectory;
use crate::error::{Error, Result};
use crate::policy::{GaussianHyperpolicy, Policy};
use crate::risk::RiskMeasure;
use crate::scalar::{all_finite, Scalar};

/// How a trajectory's per-step signal is folded into the scalar `C_u(τ)`.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Aggregation {
    /// `Σ_t γ^t c_t`.
    DiscountedSum,
    /// `Σ_t γ^t c_t / len(τ)`.
    PerStepMean,
}

/// One entry of the risk-constrained problem: a measure applied to a signal channel.
///
/// Channel 0 is `−r`, channel `i ≥ 1` the environment's `i`-th cost.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct RiskTerm<T> {
    pub measure: RiskMeasure<T>,
    pub aggregation: Aggregation,
    pub channel: usize,
}

impl<T: Scalar> RiskTerm<T> {
    pub fn new(measure: RiskMeasure<T>, aggregation: Aggregation, channel: usize) -> Self {
        Self {
            measure,
            aggregation,
            channel,
        }
    }

    pub fn value(&self, traj: &Trajectory<T>, gamma: T) -> Result<T> {
        let c = traj.discounted_cost(self.channel, gamma)?;
        Ok(match self.aggregation {
            Aggregation::DiscountedSum => c,
            Aggregation::PerStepMean => c / T::from_count(traj.len().max(1)),
        })
    }

    /// Whether the action-based primal gradient of this term admits the GPOMDP form.
    pub fn gpomdp_eligible(&self) -> bool {
        self.aggregation == Aggregation::DiscountedSum
            && matches!(
                self.measure,
                RiskMeasure::ExpectedCost | RiskMeasure::MeanVariance { .. }
            )
    }
}

/// Objective plus constraints.
#[derive(Clone, Debug, PartialEq)]
pub struct RiskSpec<T> {
    pub objective: RiskTerm<T>,
    pub constraints: Vec<RiskTerm<T>>,
}

impl<T: Scalar> RiskSpec<T> {
    pub fn new(objective: RiskTerm<T>, constraints: Vec<RiskTerm<T>>) -> Result<Self> {
        objective.measure.validate()?;
        if objective.channel != 0 {
            return Err(Error::config(
                "the objective must read channel 0 (negated reward)",
            ));
        }
        for c in &constraints {
            c.measure.validate()?;
        }
        Ok(Self {
            objective,
            constraints,
        })
    }

    /// Risk-neutral problem: expected return objective and expected discounted costs on channels `1..=U`.
    pub fn risk_neutral(num_constraints: usize) -> Self {
        let term = |c| RiskTerm::new(RiskMeasure::ExpectedCost, Aggregation::DiscountedSum, c);
        Self {
            objective: term(0),
            constraints: (1..=num_constraints).map(term).collect(),
        }
    }

    pub fn num_constraints(&self) -> usize {
        self.constraints.len()
    }

    /// Term `u`: 0 is the objective.
    pub fn term(&self, u: usize) -> &RiskTerm<T> {
        if u == 0 {
            &self.objective
        } else {
            &self.constraints[u - 1]
        }
    }

    pub fn terms(&self) -> impl Iterator<Item = &RiskTerm<T>> {
        std::iter::once(&self.objective).chain(&self.constraints)
    }

    pub fn needs_eta(&self) -> bool {
        self.terms().any(|t| t.measure.needs_eta())
    }

    /// `C_u(τ)` for every term.
    pub fn values(&self, traj: &Trajectory<T>, gamma: T) -> Result<Vec<T>> {
        self.terms().map(|t| t.value(traj, gamma)).collect()
    }

    fn check_dims(&self, lambda: &[T], eta: &[T]) -> Result<()> {
        let u = self.num_constraints();
        if lambda.len() != u {
            return Err(Error::DimensionMismatch {
                context: "lambda",
                expected: u,
                got: lambda.len(),
            });
        }
        if eta.len() != u + 1 {
            return Err(Error::DimensionMismatch {
                context: "eta",
                expected: u + 1,
                got: eta.len(),
            });
        }
        Ok(())
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum ExplorationMode {
    ActionBased,
    ParameterBased,
}

/// Trajectories collected in one iteration.
#[derive(Clone, Debug, PartialEq)]
pub struct Batch<T> {
    trajectories: Vec<Trajectory<T>>,
    mode: ExplorationMode,
    gamma: T,
}

impl<T: Scalar> Batch<T> {
    pub fn new(trajectories: Vec<Trajectory<T>>, mode: ExplorationMode, gamma: T) -> Result<Self> {
        if trajectories.is_empty() {
            return Err(Error::EmptyBatch);
        }
        let want_theta = mode == ExplorationMode::ParameterBased;
        if trajectories
            .iter()
            .any(|t| t.sampled_theta.is_some() != want_theta)
        {
            return Err(Error::validation(if want_theta {
                "parameter-based batch requires sampled_theta on every trajectory"
            } else {
                "action-based batch must not carry sampled_theta"
            }));
        }
        Ok(Self {
            trajectories,
            mode,
            gamma,
        })
    }

    pub fn trajectories(&self) -> &[Trajectory<T>] {
        &self.trajectories
    }

    pub fn mode(&self) -> ExplorationMode {
        self.mode
    }

    pub fn gamma(&self) -> T {
        self.gamma
    }

    pub fn len(&self) -> usize {
        self.trajectories.len()
    }

    pub fn is_empty(&self) -> bool {
        self.trajectories.is_empty()
    }

    fn n(&self) -> T {
        T::from_count(self.trajectories.len())
    }

    pub fn mean_return(&self) -> T {
        self.trajectories
            .iter()
            .map(|t| t.discounted_return(self.gamma))
            .sum::<T>()
            / self.n()
    }

    fn values(&self, spec: &RiskSpec<T>) -> Result<Vec<Vec<T>>> {
        self.trajectories
            .iter()
            .map(|t| spec.values(t, self.gamma))
            .collect()
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum PrimalEstimator {
    /// Whole-trajectory score times `f(C, η)` for every term.
    Reinforce,
    /// GPOMDP form wherever the term allows it, REINFORCE elsewhere.
    Gpomdp,
}

/// Weighting of the η-gradient for constraint terms.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum EtaWeighting {
    /// Chain rule through the Lagrangian: constraint `u` scaled by `λ_u`.
    LambdaWeighted,
    /// Each `η_u` follows the gradient of its own `J_u`.
    Unweighted,
}

#[derive(Clone, Debug, PartialEq)]
pub struct LagrangianGradients<T> {
    pub grad_primal: Vec<T>,
    pub grad_dual: Vec<T>,
    pub grad_eta: Vec<T>,
}

impl<T: Scalar> LagrangianGradients<T> {
    pub fn is_finite(&self) -> bool {
        all_finite(&self.grad_primal) && all_finite(&self.grad_dual) && all_finite(&self.grad_eta)
    }
}

fn term_weight<T: Scalar>(lambda: &[T], u: usize) -> T {
    if u == 0 {
        T::one()
    } else {
        lambda[u - 1]
    }
}

/// `Σ_u w_u f_u(C_u, η_u)` with `w_0 = 1`, `w_u = λ_u`.
fn weighted_f<T: Scalar>(spec: &RiskSpec<T>, values: &[T], lambda: &[T], eta: &[T]) -> T {
    spec.terms()
        .enumerate()
        .map(|(u, t)| term_weight(lambda, u) * t.measure.f(values[u], eta[u]))
        .sum()
}

/// REINFORCE primal estimator: `(1/N) Σ_j [Σ_t ∇log π(a_t|s_t)] · Σ_u w_u f_u(C_u(τ_j), η_u)`.
pub fn est_primal_ab_reinforce<T: Scalar>(
    batch: &Batch<T>,
    policy: &dyn Policy<T>,
    spec: &RiskSpec<T>,
    lambda: &[T],
    eta: &[T],
) -> Result<Vec<T>> {
    est_primal_ab(batch, policy, spec, lambda, eta, PrimalEstimator::Reinforce)
}

/// GPOMDP primal estimator.
///
/// Expected-cost terms weight each per-step score by the discounted cost still to
/// come; mean-variance terms do so for their linear part and keep the REINFORCE
/// form for `κC²`. CVaR, chance and per-step-mean terms use REINFORCE.
pub fn est_primal_ab_gpomdp<T: Scalar>(
    batch: &Batch<T>,
    policy: &dyn Policy<T>,
    spec: &RiskSpec<T>,
    lambda: &[T],
    eta: &[T],
) -> Result<Vec<T>> {
    est_primal_ab(batch, policy, spec, lambda, eta, PrimalEstimator::Gpomdp)
}

pub fn est_primal_ab<T: Scalar>(
    batch: &Batch<T>,
    policy: &dyn Policy<T>,
    spec: &RiskSpec<T>,
    lambda: &[T],
    eta: &[T],
    estimator: PrimalEstimator,
) -> Result<Vec<T>> {
    spec.check_dims(lambda, eta)?;
    if batch.mode != ExplorationMode::ActionBased {
        return Err(Error::validation(
            "action-based estimator needs an action-based batch",
        ));
    }
    if !policy.is_stochastic() {
        return Err(Error::unsupported(
            "action-based gradient of a deterministic policy",
        ));
    }
    let gamma = batch.gamma;
    let mut grad = vec![T::zero(); policy.num_params()];
    let mut step_weights = Vec::new();
    for traj in &batch.trajectories {
        let values = spec.values(traj, gamma)?;
        let len = traj.len();
        // Trajectory-level weight shared by every step (REINFORCE parts).
        let mut whole = T::zero();
        step_weights.clear();
        step_weights.resize(len, T::zero());
        for (u, term) in spec.terms().enumerate() {
            let w = term_weight(lambda, u);
            let gp = estimator == PrimalEstimator::Gpomdp && term.gpomdp_eligible();
            if !gp {
                whole += w * term.measure.f(values[u], eta[u]);
                continue;
            }
            let (linear, quad) = match term.measure {
                RiskMeasure::MeanVariance { kappa } => (
                    T::one() - T::lit(2.0) * kappa * eta[u],
                    kappa * values[u] * values[u],
                ),
                _ => (T::one(), T::zero()),
            };
            whole += w * quad;
            // Discounted cost to go: Σ_{t ≥ h} γ^t c_t.
            let mut disc = gamma.powi(len as i32 - 1);
            let mut togo = T::zero();
            for h in (0..len).rev() {
                togo += disc * traj.step_cost(h, term.channel);
                step_weights[h] += w * linear * togo;
                if h > 0 {
                    disc = if gamma > T::zero() {
                        disc / gamma
                    } else {
                        T::zero()
                    };
                }
            }
        }
        for ((state, action), &w) in traj.states.iter().zip(&traj.actions).zip(&step_weights) {
            policy.accumulate_score(state, action, whole + w, &mut grad)?;
        }
    }
    let n = batch.n();
    grad.iter_mut().for_each(|g| *g /= n);
    Ok(grad)
}

/// PGPE-style estimator: `(1/N) Σ_j ∇_ρ log ν_ρ(θ_j) · Σ_u w_u f_u(C_u(τ_j), η_u)`.
pub fn est_primal_pb<T: Scalar>(
    batch: &Batch<T>,
    hyper: &GaussianHyperpolicy<T>,
    spec: &RiskSpec<T>,
    lambda: &[T],
    eta: &[T],
) -> Result<Vec<T>> {
    spec.check_dims(lambda, eta)?;
    if batch.mode != ExplorationMode::ParameterBased {
        return Err(Error::validation(
            "parameter-based estimator needs sampled parameters",
        ));
    }
    let mut grad = vec![T::zero(); hyper.dim()];
    for traj in &batch.trajectories {
        let theta = traj
            .sampled_theta
            .as_ref()
            .ok_or_else(|| Error::validation("trajectory lacks sampled_theta"))?;
        let values = spec.values(traj, batch.gamma)?;
        let weight = weighted_f(spec, &values, lambda, eta);
        for (g, s) in grad.iter_mut().zip(hyper.score(theta)?) {
            *g += s * weight;
        }
    }
    let n = batch.n();
    grad.iter_mut().for_each(|g| *g /= n);
    Ok(grad)
}

/// Sample estimate of `J_u(v, η_u) = mean f_u + g_u` for every term `u = 0..=U`.
pub fn risk_values<T: Scalar>(batch: &Batch<T>, spec: &RiskSpec<T>, eta: &[T]) -> Result<Vec<T>> {
    if eta.len() != spec.num_constraints() + 1 {
        return Err(Error::DimensionMismatch {
            context: "eta",
            expected: spec.num_constraints() + 1,
            got: eta.len(),
        });
    }
    let values = batch.values(spec)?;
    let n = batch.n();
    Ok(spec
        .terms()
        .enumerate()
        .map(|(u, t)| {
            values.iter().map(|v| t.measure.f(v[u], eta[u])).sum::<T>() / n + t.measure.g(eta[u])
        })
        .collect())
}

fn check_thresholds<T: Scalar>(spec: &RiskSpec<T>, b: &[T]) -> Result<()> {
    if b.len() != spec.num_constraints() {
        return Err(Error::DimensionMismatch {
            context: "thresholds",
            expected: spec.num_constraints(),
            got: b.len(),
        });
    }
    Ok(())
}

/// `∇_λ L`, component `u`: `mean_j f_u(C_u(τ_j), η_u) + g_u(η_u) − b_u − ω λ_u`.
pub fn est_dual<T: Scalar>(
    batch: &Batch<T>,
    spec: &RiskSpec<T>,
    lambda: &[T],
    eta: &[T],
    b: &[T],
    omega: T,
) -> Result<Vec<T>> {
    spec.check_dims(lambda, eta)?;
    check_thresholds(spec, b)?;
    let j = risk_values(batch, spec, eta)?;
    Ok((0..spec.num_constraints())
        .map(|u| j[u + 1] - b[u] - omega * lambda[u])
        .collect())
}

/// `∇_η L` (sub)gradient of length `U + 1`; components of η-free measures are zero.
pub fn est_eta<T: Scalar>(
    batch: &Batch<T>,
    spec: &RiskSpec<T>,
    lambda: &[T],
    eta: &[T],
    weighting: EtaWeighting,
) -> Result<Vec<T>> {
    spec.check_dims(lambda, eta)?;
    let values = batch.values(spec)?;
    let n = batch.n();
    spec.terms()
        .enumerate()
        .map(|(u, t)| {
            if !t.measure.needs_eta() {
                return Ok(T::zero());
            }
            let mut sub = T::zero();
            for v in &values {
                sub += t.measure.f_eta_subgrad(v[u], eta[u])?;
            }
            let d = sub / n + t.measure.g_eta_grad(eta[u])?;
            Ok(match weighting {
                EtaWeighting::LambdaWeighted => term_weight(lambda, u) * d,
                EtaWeighting::Unweighted => d,
            })
        })
        .collect()
}

/// Sample estimate of the regularized Lagrangian value.
pub fn est_lagrangian_value<T: Scalar>(
    batch: &Batch<T>,
    spec: &RiskSpec<T>,
    lambda: &[T],
    eta: &[T],
    b: &[T],
    omega: T,
) -> Result<T> {
    spec.check_dims(lambda, eta)?;
    check_thresholds(spec, b)?;
    let j = risk_values(batch, spec, eta)?;
    let penalty: T = lambda.iter().map(|&l| l * l).sum::<T>() * omega / T::lit(2.0);
    let constraint: T = (0..spec.num_constraints())
        .map(|u| lambda[u] * (j[u + 1] - b[u]))
        .sum();
    Ok(j[0] + constraint - penalty)
}

/// Convenience bundle of the action-based primal, dual and η estimates on one batch.
#[allow(clippy::too_many_arguments)]
pub fn estimate_ab<T: Scalar>(
    batch: &Batch<T>,
    policy: &dyn Policy<T>,
    spec: &RiskSpec<T>,
    lambda: &[T],
    eta: &[T],
    b: &[T],
    omega: T,
    estimator: PrimalEstimator,
    weighting: EtaWeighting,
) -> Result<LagrangianGradients<T>> {
    Ok(LagrangianGradients {
        grad_primal: est_primal_ab(batch, policy, spec, lambda, eta, estimator)?,
        grad_dual: est_dual(batch, spec, lambda, eta, b, omega)?,
        grad_eta: est_eta(batch, spec, lambda, eta, weighting)?,
    })
}
