//! Oracle cross-checks of the estimators, closed forms and risk measures.
//!
//! Each check returns what it measured; callers compare against their own
//! tolerances. [`TOLERANCES`] holds the ones the `verify` subcommand uses.

use anyhow::{ensure, Result};
use cpg_core::env::{rollout, Trajectory};
use cpg_core::estimators::{
    est_dual, est_eta, est_primal_ab_gpomdp, est_primal_ab_reinforce, est_primal_pb, Aggregation,
    Batch, EtaWeighting, ExplorationMode, RiskSpec, RiskTerm,
};
use cpg_core::oracle::{
    enumerate_trajectories, estimator_expectation, exact_lagrangian, exact_performance,
    fd_gradient, gaussian_expectation, grid_search, Goal, TabularCmdp,
};
use cpg_core::policy::{BinaryLogitPolicy, GaussianHyperpolicy, TabularSoftmaxPolicy};
use cpg_core::risk::{exact_measure, DiscreteDist, RiskMeasure};
use cpg_core::solver::{
    h_omega_closed_form, lagrangian_value, lambda_radius, lambda_star_closed_form, potential_diag,
    project_lambda, trajectory_rng, DEFAULT_CHI,
};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

/// Relative error with exact agreement counted as zero, including `0` vs `0`.
pub fn rel_err(estimate: f64, reference: f64) -> f64 {
    if estimate == reference {
        0.0
    } else {
        (estimate - reference).abs() / reference.abs().max(estimate.abs())
    }
}

fn max_rel_err(est: &[f64], reference: &[f64]) -> f64 {
    est.iter()
        .zip(reference)
        .map(|(&e, &r)| rel_err(e, r))
        .fold(0.0, f64::max)
}

fn single(
    traj: &Trajectory<f64>,
    mode: ExplorationMode,
    gamma: f64,
) -> cpg_core::Result<Batch<f64>> {
    Batch::new(vec![traj.clone()], mode, gamma)
}

#[derive(Clone, Debug)]
pub struct GradientCheck {
    pub reinforce: f64,
    pub gpomdp: f64,
    pub dual: f64,
    pub eta: f64,
}

impl GradientCheck {
    pub fn worst(&self) -> f64 {
        self.reinforce.max(self.gpomdp).max(self.dual).max(self.eta)
    }
}

/// Exact expectations of the action-based estimators against finite differences
/// of the exact Lagrangian on a random 3-state, 2-action, horizon-3 model with a
/// mean-variance and a CVaR constraint.
pub fn check_ab_unbiasedness(seed: u64) -> Result<GradientCheck> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let gamma = 0.9;
    let cmdp = TabularCmdp::random(3, 2, 2, 3, gamma, &mut rng)?;
    let theta: Vec<f64> = (0..6).map(|_| rng.random_range(-1.0..1.0)).collect();
    let policy = TabularSoftmaxPolicy::new(3, 2, theta.clone(), 1.0)?;
    let cvar = RiskTerm::new(RiskMeasure::cvar(0.8)?, Aggregation::DiscountedSum, 2);
    let spec = RiskSpec::new(
        RiskTerm::new(RiskMeasure::ExpectedCost, Aggregation::DiscountedSum, 0),
        vec![
            RiskTerm::new(
                RiskMeasure::mean_variance(0.5)?,
                Aggregation::DiscountedSum,
                1,
            ),
            cvar,
        ],
    )?;
    let lambda = vec![rng.random_range(0.2..1.5), rng.random_range(0.2..1.5)];
    let b = vec![rng.random_range(0.2..1.5), rng.random_range(0.2..1.5)];
    let omega = 0.1;

    // CVaR's η sits in the middle of the widest gap of the cost support, away from the kink.
    let mut support: Vec<f64> = enumerate_trajectories(&cmdp, &policy)?
        .iter()
        .map(|(t, _)| cvar.value(t, gamma))
        .collect::<cpg_core::Result<_>>()?;
    support.sort_by(f64::total_cmp);
    let (gap, mid) = support
        .windows(2)
        .map(|w| (w[1] - w[0], 0.5 * (w[0] + w[1])))
        .fold(
            (0.0, support[0]),
            |acc, x| if x.0 > acc.0 { x } else { acc },
        );
    ensure!(gap > 1e-3, "degenerate CVaR support");
    let eta = vec![0.0, rng.random_range(0.5..1.5), mid];

    let lagr = |theta: &[f64], lambda: &[f64], eta: &[f64]| -> f64 {
        let p = TabularSoftmaxPolicy::new(3, 2, theta.to_vec(), 1.0).expect("valid policy");
        exact_lagrangian(&cmdp, &p, &spec, lambda, eta, &b, omega).expect("exact lagrangian")
    };
    let fd_theta = fd_gradient(|x| lagr(x, &lambda, &eta), &theta, 1e-4)?;
    let fd_lambda = fd_gradient(|x| lagr(&theta, x, &eta), &lambda, 1e-4)?;
    let fd_eta = fd_gradient(|x| lagr(&theta, &lambda, x), &eta, 1e-5)?;

    let ab = ExplorationMode::ActionBased;
    let reinforce = estimator_expectation(&cmdp, &policy, |t| {
        est_primal_ab_reinforce(&single(t, ab, gamma)?, &policy, &spec, &lambda, &eta)
    })?;
    let gpomdp = estimator_expectation(&cmdp, &policy, |t| {
        est_primal_ab_gpomdp(&single(t, ab, gamma)?, &policy, &spec, &lambda, &eta)
    })?;
    let dual = estimator_expectation(&cmdp, &policy, |t| {
        est_dual(&single(t, ab, gamma)?, &spec, &lambda, &eta, &b, omega)
    })?;
    let eta_grad = estimator_expectation(&cmdp, &policy, |t| {
        est_eta(
            &single(t, ab, gamma)?,
            &spec,
            &lambda,
            &eta,
            EtaWeighting::LambdaWeighted,
        )
    })?;
    Ok(GradientCheck {
        reinforce: max_rel_err(&reinforce, &fd_theta),
        gpomdp: max_rel_err(&gpomdp, &fd_theta),
        dual: max_rel_err(&dual, &fd_lambda),
        eta: max_rel_err(&eta_grad, &fd_eta),
    })
}

/// Parameter-based estimator on a one-parameter policy under a 1-D Gaussian
/// hyperpolicy: quadrature over θ times enumeration over trajectories, against
/// finite differences of the smoothed Lagrangian in ρ. Returns the relative error.
pub fn check_pb_unbiasedness(seed: u64) -> Result<f64> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let gamma = 0.95;
    let cmdp = TabularCmdp::random(2, 2, 1, 3, gamma, &mut rng)?;
    let spec = RiskSpec::new(
        RiskTerm::new(RiskMeasure::ExpectedCost, Aggregation::DiscountedSum, 0),
        vec![RiskTerm::new(
            RiskMeasure::mean_variance(0.5)?,
            Aggregation::DiscountedSum,
            1,
        )],
    )?;
    let (lambda, eta, b, omega) = (vec![0.7], vec![0.0, 0.8], vec![0.5], 0.1);
    let (rho, sigma2, nodes) = (0.3, 0.5, 40);

    let smoothed = |rho: f64| -> f64 {
        gaussian_expectation(rho, sigma2, nodes, |th| {
            let p = BinaryLogitPolicy::new(th);
            Ok(vec![exact_lagrangian(
                &cmdp, &p, &spec, &lambda, &eta, &b, omega,
            )?])
        })
        .expect("quadrature")[0]
    };
    let fd = fd_gradient(|x| smoothed(x[0]), &[rho], 1e-4)?;

    let hyper = GaussianHyperpolicy::new(vec![rho], sigma2)?;
    let est = gaussian_expectation(rho, sigma2, nodes, |th| {
        let p = BinaryLogitPolicy::new(th);
        estimator_expectation(&cmdp, &p, |t| {
            let mut t = t.clone();
            t.sampled_theta = Some(vec![th]);
            let batch = Batch::new(vec![t], ExplorationMode::ParameterBased, gamma)?;
            est_primal_pb(&batch, &hyper, &spec, &lambda, &eta)
        })
    })?;
    Ok(rel_err(est[0], fd[0]))
}

#[derive(Clone, Debug, Default)]
pub struct ClosedFormCheck {
    /// Largest ‖λ*_closed − λ*_grid‖∞.
    pub lambda_inf: f64,
    /// Largest |H_closed − max_grid L|.
    pub h_abs: f64,
    /// Largest excess of the closed-form projection distance over the grid's.
    pub proj_excess: f64,
    /// Largest shortfall, i.e. grid points strictly closer than the projection.
    pub proj_shortfall: f64,
}

/// Closed-form λ*, H_ω and Λ projection against exhaustive grids over Λ.
pub fn check_closed_forms(instances: usize, resolution: f64, seed: u64) -> Result<ClosedFormCheck> {
    let results: Vec<ClosedFormCheck> = (0..instances)
        .into_par_iter()
        .map(|k| -> Result<ClosedFormCheck> {
            let mut rng = trajectory_rng(seed, 0, k);
            let j0: f64 = rng.random_range(-1.0..1.0);
            let slack: Vec<f64> = (0..2).map(|_| rng.random_range(-0.5..0.5)).collect();
            let omega: f64 = rng.random_range(0.25..2.0);
            let j_max = 1.0;
            let radius = lambda_radius(omega, 2, j_max).expect("omega > 0");
            let in_lambda =
                |l: &[f64]| l.iter().map(|x| x * x).sum::<f64>() <= radius * radius * (1.0 + 1e-12);

            let side = 0.5 / omega + 0.25;
            let (arg, best) = grid_search(
                |l| {
                    if in_lambda(l) {
                        lagrangian_value(j0, &slack, l, omega)
                    } else {
                        f64::NAN
                    }
                },
                &[(0.0, side), (0.0, side)],
                resolution,
                Goal::Maximize,
            )?;
            let closed = lambda_star_closed_form(&slack, omega)?;
            let lambda_inf = closed
                .iter()
                .zip(&arg)
                .map(|(a, b)| (a - b).abs())
                .fold(0.0, f64::max);
            let h_abs = (h_omega_closed_form(j0, &slack, omega)? - best).abs();

            // The projection of a point in [-1.5, 1.5]² has coordinates in [0, 1.5].
            let raw: Vec<f64> = (0..2).map(|_| rng.random_range(-1.5..1.5)).collect();
            let dist = |l: &[f64]| ((l[0] - raw[0]).powi(2) + (l[1] - raw[1]).powi(2)).sqrt();
            let box_side = radius.min(1.5);
            let (_, grid_dist) = grid_search(
                |l| if in_lambda(l) { dist(l) } else { f64::NAN },
                &[(0.0, box_side), (0.0, box_side)],
                resolution,
                Goal::Minimize,
            )?;
            let p = project_lambda(&raw, omega, j_max);
            ensure!(
                p.iter().all(|&x| x >= 0.0) && in_lambda(&p),
                "projection left Λ"
            );
            let d = dist(&p);
            Ok(ClosedFormCheck {
                lambda_inf,
                h_abs,
                proj_excess: (grid_dist - d).max(0.0),
                proj_shortfall: (d - grid_dist).max(0.0),
            })
        })
        .collect::<Result<_>>()?;
    Ok(results
        .iter()
        .fold(ClosedFormCheck::default(), |a, r| ClosedFormCheck {
            lambda_inf: a.lambda_inf.max(r.lambda_inf),
            h_abs: a.h_abs.max(r.h_abs),
            proj_excess: a.proj_excess.max(r.proj_excess),
            proj_shortfall: a.proj_shortfall.max(r.proj_shortfall),
        }))
}

#[derive(Clone, Debug, Default)]
pub struct RiskCheck {
    pub cvar_abs: f64,
    pub mv_abs: f64,
}

/// Minimizing `E[f(C, η)] + g(η)` over an η grid against the closed-form risk.
pub fn check_risk_measures(distributions: usize, eta_step: f64, seed: u64) -> Result<RiskCheck> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut out = RiskCheck::default();
    for _ in 0..distributions {
        let atoms = rng.random_range(2..=8);
        let support: Vec<f64> = (0..atoms)
            .map(|_| rng.random_range(0..=300) as f64 * 0.01)
            .collect();
        let raw: Vec<f64> = (0..atoms).map(|_| rng.random::<f64>() + 0.05).collect();
        let z: f64 = raw.iter().sum();
        let dist = DiscreteDist::new(support.clone(), raw.iter().map(|p| p / z).collect())?;
        let hi = support.iter().copied().fold(0.0, f64::max);
        let by_grid = |m: &RiskMeasure<f64>| -> Result<f64> {
            let (_, v) = grid_search(
                |e| dist.risk_objective(m, e[0]),
                &[(0.0, hi)],
                eta_step,
                Goal::Minimize,
            )?;
            Ok(v)
        };
        let cvar = RiskMeasure::cvar(rng.random_range(0.5..0.95))?;
        out.cvar_abs = out
            .cvar_abs
            .max((by_grid(&cvar)? - exact_measure(&dist, &cvar)).abs());
        let mv = RiskMeasure::mean_variance(rng.random_range(0.05..2.0))?;
        out.mv_abs = out
            .mv_abs
            .max((by_grid(&mv)? - exact_measure(&dist, &mv)).abs());
    }
    Ok(out)
}

#[derive(Clone, Debug, Default)]
pub struct GapCheck {
    pub points: usize,
    pub objective_violations: usize,
    pub constraint_violations: usize,
    /// Points whose constraint is violated, i.e. where the second bound is not vacuous.
    pub active: usize,
    pub lambda0_star: f64,
}

/// Two-state model whose transitions ignore the action, so both performance
/// indices are affine in the per-state action probabilities and the problem has
/// no duality gap. Action 1 pays less but costs more.
pub fn gap_cmdp() -> Result<TabularCmdp<f64>> {
    let transition = vec![0.6, 0.4, 0.6, 0.4, 0.6, 0.4, 0.6, 0.4];
    let reward = vec![-0.9, -0.2, -0.7, -0.1];
    let cost = vec![0.1, 0.9, 0.0, 0.6];
    Ok(TabularCmdp::new(
        2,
        2,
        transition,
        reward,
        vec![cost],
        vec![0.5, 0.5],
        1.0,
        3,
    )?)
}

/// Samples (v, λ) pairs with potential ≤ ε and checks the objective-gap and
/// constraint-violation bounds, with the reference optima taken from grids.
pub fn check_gap_bounds(
    epsilon: f64,
    omega: f64,
    samples: usize,
    chi: f64,
    seed: u64,
) -> Result<GapCheck> {
    let table = gap_table()?;
    let b = GAP_THRESHOLD;
    let lookup = |v: &[f64]| table.at(v);
    let (_, j0_star) = grid_search(
        |v| {
            let (j0, j1) = lookup(v);
            if j1 <= b {
                j0
            } else {
                f64::NAN
            }
        },
        &table.bounds(),
        GAP_GRID_STEP,
        Goal::Minimize,
    )?;
    let (lambda0, _) = grid_search(
        |l| {
            table
                .values
                .iter()
                .map(|&(j0, j1)| j0 + l[0] * (j1 - b))
                .fold(f64::INFINITY, f64::min)
        },
        &[(0.0, 5.0)],
        1e-3,
        Goal::Maximize,
    )?;
    let lambda0 = lambda0[0];
    let h = |j0: f64, j1: f64| h_omega_closed_form(j0, &[j1 - b], omega).expect("omega > 0");
    let (_, h_star) = grid_search(
        |v| {
            let (j0, j1) = lookup(v);
            h(j0, j1)
        },
        &table.bounds(),
        GAP_GRID_STEP,
        Goal::Minimize,
    )?;

    let candidates: Vec<(f64, f64)> = table
        .values
        .iter()
        .copied()
        .filter(|&(j0, j1)| h(j0, j1) - h_star <= epsilon)
        .collect();
    ensure!(!candidates.is_empty(), "no grid point within ε of H*");

    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut out = GapCheck {
        lambda0_star: lambda0,
        ..GapCheck::default()
    };
    let objective_bound = epsilon + 0.5 * omega * lambda0 * lambda0;
    let constraint_bound = 4.0 * epsilon + omega * lambda0;
    let mut attempts = 0usize;
    while out.points < samples {
        attempts += 1;
        ensure!(attempts < 100 * samples, "rejection sampling stalled");
        let (j0, j1) = candidates[rng.random_range(0..candidates.len())];
        let slack = [j1 - b];
        let a = h(j0, j1) - h_star;
        let star = lambda_star_closed_form(&slack, omega)?[0];
        let spread = (2.0 * (epsilon - a).max(0.0) / (chi * omega)).sqrt();
        let lambda = rng.random_range((star - spread).max(0.0)..=star + spread);
        if potential_diag(j0, &slack, &[lambda], omega, Some(h_star), chi)? > epsilon {
            continue;
        }
        out.points += 1;
        if j0 - j0_star > objective_bound {
            out.objective_violations += 1;
        }
        if slack[0] > 0.0 {
            out.active += 1;
        }
        if slack[0].max(0.0) > constraint_bound {
            out.constraint_violations += 1;
        }
    }
    Ok(out)
}

const GAP_THRESHOLD: f64 = 1.0;
const GAP_GRID_STEP: f64 = 0.05;
const GAP_GRID_HALF_WIDTH: f64 = 5.0;

/// `(J₀, J₁)` on the square grid of logit offsets `v = (v₀, v₁)`.
struct GapTable {
    n: usize,
    values: Vec<(f64, f64)>,
}

impl GapTable {
    fn bounds(&self) -> [(f64, f64); 2] {
        [(-GAP_GRID_HALF_WIDTH, GAP_GRID_HALF_WIDTH); 2]
    }

    fn index(&self, x: f64) -> usize {
        (((x + GAP_GRID_HALF_WIDTH) / GAP_GRID_STEP).round() as usize).min(self.n - 1)
    }

    fn at(&self, v: &[f64]) -> (f64, f64) {
        self.values[self.index(v[0]) * self.n + self.index(v[1])]
    }
}

fn gap_table() -> Result<GapTable> {
    let cmdp = gap_cmdp()?;
    let n = (2.0 * GAP_GRID_HALF_WIDTH / GAP_GRID_STEP).round() as usize + 1;
    let axis = |k: usize| -GAP_GRID_HALF_WIDTH + k as f64 * GAP_GRID_STEP;
    let values = (0..n * n)
        .into_par_iter()
        .map(|k| -> Result<(f64, f64)> {
            let p = TabularSoftmaxPolicy::new(2, 2, vec![0.0, axis(k / n), 0.0, axis(k % n)], 1.0)?;
            Ok((
                exact_performance(&cmdp, &p, 0)?,
                exact_performance(&cmdp, &p, 1)?,
            ))
        })
        .collect::<Result<_>>()?;
    Ok(GapTable { n, values })
}

#[derive(Clone, Debug)]
pub struct VarianceCheck {
    pub trace_reinforce: f64,
    pub trace_gpomdp: f64,
}

fn covariance_trace(samples: &[Vec<f64>]) -> f64 {
    let n = samples.len() as f64;
    (0..samples[0].len())
        .map(|i| {
            let mean = samples.iter().map(|s| s[i]).sum::<f64>() / n;
            samples.iter().map(|s| (s[i] - mean).powi(2)).sum::<f64>() / (n - 1.0)
        })
        .sum()
}

/// Trace of the covariance of single-trajectory REINFORCE and GPOMDP estimates
/// computed on the same rollouts of a random horizon-5 model.
pub fn check_variance_reduction(rollouts: usize, seed: u64) -> Result<VarianceCheck> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let gamma = 0.95;
    let cmdp = TabularCmdp::random(3, 2, 1, 5, gamma, &mut rng)?;
    let theta: Vec<f64> = (0..6).map(|_| rng.random_range(-1.0..1.0)).collect();
    let policy = TabularSoftmaxPolicy::new(3, 2, theta, 1.0)?;
    let spec = RiskSpec::<f64>::risk_neutral(1);
    let (lambda, eta) = (vec![0.5], vec![0.0, 0.0]);
    let pairs = (0..rollouts)
        .into_par_iter()
        .map(|j| -> Result<(Vec<f64>, Vec<f64>)> {
            let mut r = trajectory_rng(seed, 1, j);
            let t = rollout(&cmdp, &policy, 5, &mut r)?;
            let batch = single(&t, ExplorationMode::ActionBased, gamma)?;
            Ok((
                est_primal_ab_reinforce(&batch, &policy, &spec, &lambda, &eta)?,
                est_primal_ab_gpomdp(&batch, &policy, &spec, &lambda, &eta)?,
            ))
        })
        .collect::<Result<Vec<_>>>()?;
    let (rf, gp): (Vec<_>, Vec<_>) = pairs.into_iter().unzip();
    Ok(VarianceCheck {
        trace_reinforce: covariance_trace(&rf),
        trace_gpomdp: covariance_trace(&gp),
    })
}

/// Tolerances used by the `verify` subcommand.
pub struct Tolerances {
    pub ab_rel: f64,
    pub pb_rel: f64,
    pub lambda_inf: f64,
    pub h_abs: f64,
    pub cvar_abs: f64,
    pub mv_abs: f64,
}

pub const TOLERANCES: Tolerances = Tolerances {
    ab_rel: 1e-5,
    pb_rel: 1e-4,
    lambda_inf: 1e-3,
    h_abs: 1e-4,
    cvar_abs: 1e-3,
    mv_abs: 1e-6,
};

pub struct Outcome {
    pub name: &'static str,
    pub pass: bool,
    pub detail: String,
}

/// Runs the oracle suite with the default tolerances.
pub fn run_suite() -> Result<Vec<Outcome>> {
    let t = &TOLERANCES;
    let mut out = Vec::new();
    let ab = check_ab_unbiasedness(7)?;
    out.push(Outcome {
        name: "action-based estimators unbiased",
        pass: ab.worst() <= t.ab_rel,
        detail: format!("{ab:?}"),
    });
    let pb = check_pb_unbiasedness(11)?;
    out.push(Outcome {
        name: "parameter-based estimator unbiased",
        pass: pb <= t.pb_rel,
        detail: format!("rel err {pb:.3e}"),
    });
    let cf = check_closed_forms(100, 1e-3, 3)?;
    out.push(Outcome {
        name: "closed forms match grid search",
        pass: cf.lambda_inf <= t.lambda_inf
            && cf.h_abs <= t.h_abs
            && cf.proj_shortfall <= 1e-12
            && cf.proj_excess <= 1e-3 * 2f64.sqrt(),
        detail: format!("{cf:?}"),
    });
    let rk = check_risk_measures(50, 1e-3, 5)?;
    out.push(Outcome {
        name: "risk measures match their variational form",
        pass: rk.cvar_abs <= t.cvar_abs && rk.mv_abs <= t.mv_abs,
        detail: format!("{rk:?}"),
    });
    for (eps, omega) in [(0.05, 1e-3), (0.05, 1e-2), (0.1, 1e-3), (0.1, 1e-2)] {
        let g = check_gap_bounds(eps, omega, 2000, DEFAULT_CHI, 13)?;
        out.push(Outcome {
            name: "gap and violation bounds under small potential",
            pass: g.objective_violations == 0 && g.constraint_violations == 0,
            detail: format!("eps {eps} omega {omega}: {g:?}"),
        });
    }
    let var = check_variance_reduction(10_000, 17)?;
    out.push(Outcome {
        name: "GPOMDP variance below REINFORCE",
        pass: var.trace_gpomdp <= var.trace_reinforce,
        detail: format!("{var:?}"),
    });
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rel_err_cases() {
        assert_eq!(rel_err(0.0, 0.0), 0.0);
        assert_eq!(rel_err(1.0, 0.0), 1.0);
        assert!((rel_err(1.0, 2.0) - 0.5).abs() < 1e-15);
    }

    #[test]
    fn gap_model_has_an_active_constraint() {
        let t = gap_table().unwrap();
        let j1_min = t.values.iter().map(|v| v.1).fold(f64::INFINITY, f64::min);
        let j1_max = t.values.iter().map(|v| v.1).fold(0.0, f64::max);
        assert!(j1_min < GAP_THRESHOLD && j1_max > GAP_THRESHOLD);
    }

    #[test]
    fn covariance_of_constant_is_zero() {
        assert_eq!(covariance_trace(&[vec![1.0, 2.0], vec![1.0, 2.0]]), 0.0);
    }
}
