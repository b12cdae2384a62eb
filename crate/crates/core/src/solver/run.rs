//! The alternating primal-dual loop (action-based and parameter-based).

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use super::projection::project_lambda;
use super::schedule::{ScheduleState, StepSchedule};
use crate::env::{j_max, rollout, Environment, Trajectory};
use crate::error::{Error, Result};
use crate::estimators::{
    est_dual, est_eta, est_lagrangian_value, est_primal_ab, est_primal_pb, risk_values, Batch,
    EtaWeighting, ExplorationMode, PrimalEstimator, RiskSpec,
};
use crate::policy::{GaussianHyperpolicy, Policy};
use crate::scalar::{all_finite, Scalar};

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum BatchingMode {
    /// `N` trajectories per iteration; odd iterations move `v` and `η`, even ones move `λ`.
    FullBatchAlternate,
    /// `N/2` trajectories for the primal and `η` step, then `N/2` under the new policy for the dual step.
    HalfBatchSequential,
}

#[derive(Clone, Debug, PartialEq)]
pub struct SolverConfig<T> {
    pub omega: T,
    pub iterations: usize,
    pub batch_size: usize,
    pub primal_schedule: StepSchedule<T>,
    pub dual_schedule: StepSchedule<T>,
    pub eta_schedule: StepSchedule<T>,
    pub batching: BatchingMode,
    /// Subtracted from every threshold before optimizing.
    pub conservative_offset: T,
    pub seed: u64,
    pub estimator: PrimalEstimator,
    pub eta_weighting: EtaWeighting,
    /// Rollout length; defaults to the environment's horizon.
    pub horizon: Option<usize>,
    pub initial_eta: Option<Vec<T>>,
    /// Store the primal parameters in every record.
    pub track_params: bool,
}

impl<T: Scalar> SolverConfig<T> {
    pub fn new(omega: T, iterations: usize, batch_size: usize) -> Self {
        Self {
            omega,
            iterations,
            batch_size,
            primal_schedule: StepSchedule::Constant(T::lit(0.01)),
            dual_schedule: StepSchedule::Constant(T::lit(0.1)),
            eta_schedule: StepSchedule::Constant(T::lit(0.01)),
            batching: BatchingMode::FullBatchAlternate,
            conservative_offset: T::zero(),
            seed: 0,
            estimator: PrimalEstimator::Gpomdp,
            eta_weighting: EtaWeighting::LambdaWeighted,
            horizon: None,
            initial_eta: None,
            track_params: false,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.omega.is_finite() && self.omega >= T::zero()) {
            return Err(Error::config("omega must be finite and >= 0"));
        }
        if self.iterations == 0 {
            return Err(Error::config("iterations must be >= 1"));
        }
        if self.batch_size == 0 {
            return Err(Error::config("batch size must be >= 1"));
        }
        if self.batching == BatchingMode::HalfBatchSequential && !self.batch_size.is_multiple_of(2)
        {
            return Err(Error::config("half-batch mode needs an even batch size"));
        }
        if !(self.conservative_offset.is_finite() && self.conservative_offset >= T::zero()) {
            return Err(Error::config("conservative offset must be finite and >= 0"));
        }
        self.primal_schedule.validate()?;
        self.dual_schedule.validate()?;
        self.eta_schedule.validate()
    }
}

/// What is being optimized: policy parameters directly, or the mean of a hyperpolicy.
#[derive(Clone)]
pub enum Learner<T: Scalar> {
    ActionBased(Box<dyn Policy<T>>),
    ParameterBased {
        hyper: GaussianHyperpolicy<T>,
        inner: Box<dyn Policy<T>>,
    },
}

impl<T: Scalar> Learner<T> {
    pub fn mode(&self) -> ExplorationMode {
        match self {
            Learner::ActionBased(_) => ExplorationMode::ActionBased,
            Learner::ParameterBased { .. } => ExplorationMode::ParameterBased,
        }
    }

    /// `θ` for action-based, `ρ` for parameter-based.
    pub fn params(&self) -> Vec<T> {
        match self {
            Learner::ActionBased(p) => p.params().to_vec(),
            Learner::ParameterBased { hyper, .. } => hyper.rho().to_vec(),
        }
    }

    pub fn set_params(&mut self, v: &[T]) -> Result<()> {
        match self {
            Learner::ActionBased(p) => p.set_params(v),
            Learner::ParameterBased { hyper, .. } => hyper.set_rho(v),
        }
    }

    fn validate(&self) -> Result<()> {
        match self {
            Learner::ActionBased(p) if !p.is_stochastic() => Err(Error::config(
                "action-based exploration needs a stochastic policy",
            )),
            Learner::ParameterBased { hyper, inner } if hyper.dim() != inner.num_params() => {
                Err(Error::DimensionMismatch {
                    context: "hyperpolicy dimension",
                    expected: inner.num_params(),
                    got: hyper.dim(),
                })
            }
            _ => Ok(()),
        }
    }
}

/// RNG of trajectory `index` in collection round `round`.
pub fn trajectory_rng(seed: u64, round: u64, index: usize) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream((round << 32) | index as u64);
    rng
}

/// Collects `n` trajectories in parallel. Output depends only on `(seed, round)`, not on scheduling.
pub fn collect_batch<T: Scalar>(
    env: &dyn Environment<T>,
    learner: &Learner<T>,
    horizon: usize,
    n: usize,
    seed: u64,
    round: u64,
) -> Result<Batch<T>> {
    let trajectories = (0..n)
        .into_par_iter()
        .map(|j| -> Result<Trajectory<T>> {
            let mut rng = trajectory_rng(seed, round, j);
            match learner {
                Learner::ActionBased(p) => rollout(env, p.as_ref(), horizon, &mut rng),
                Learner::ParameterBased { hyper, inner } => {
                    let theta = hyper.sample_theta(&mut rng);
                    let mut policy = inner.clone_box();
                    policy.set_params(&theta)?;
                    let mut traj = rollout(env, policy.as_ref(), horizon, &mut rng)?;
                    traj.sampled_theta = Some(theta);
                    Ok(traj)
                }
            }
        })
        .collect::<Result<Vec<_>>>()?;
    Batch::new(trajectories, learner.mode(), env.descriptor().gamma)
}

#[derive(Clone, Debug, PartialEq)]
pub struct PrimalDualState<T> {
    pub v: Vec<T>,
    pub lambda: Vec<T>,
    /// Length `U + 1`; entry 0 belongs to the objective.
    pub eta: Vec<T>,
    pub k: usize,
    pub primal_opt: ScheduleState<T>,
    pub dual_opt: ScheduleState<T>,
    pub eta_opt: ScheduleState<T>,
}

/// Per-iteration record. Batch statistics use the primal batch of the iteration;
/// `lambda`, `eta` and `params` are the values after the iteration's updates.
#[derive(Clone, Debug, PartialEq)]
pub struct RunRecord<T> {
    pub iteration: usize,
    pub trajectories_consumed: usize,
    pub mean_return: T,
    /// Sample `E[f] + g` per constraint.
    pub risk_values: Vec<T>,
    pub lambda: Vec<T>,
    /// Constraint entries of `η`.
    pub eta: Vec<T>,
    pub lagrangian: T,
    pub step_primal: T,
    pub step_dual: T,
    pub step_eta: T,
    pub params: Option<Vec<T>>,
}

#[derive(Clone, Debug, Default, PartialEq)]
pub struct RunLog<T> {
    pub records: Vec<RunRecord<T>>,
}

fn finite_or<T: Scalar>(v: &[T], iteration: usize, what: &str) -> Result<()> {
    if all_finite(v) {
        Ok(())
    } else {
        Err(Error::NonFinite {
            iteration,
            what: what.to_string(),
        })
    }
}

fn check_problem<T: Scalar>(
    env: &dyn Environment<T>,
    spec: &RiskSpec<T>,
    thresholds: &[T],
) -> Result<()> {
    let u = env.descriptor().num_constraints;
    if thresholds.len() != spec.num_constraints() {
        return Err(Error::DimensionMismatch {
            context: "thresholds",
            expected: spec.num_constraints(),
            got: thresholds.len(),
        });
    }
    if let Some(t) = spec.terms().find(|t| t.channel > u) {
        return Err(Error::IndexOutOfRange {
            index: t.channel,
            max: u,
        });
    }
    Ok(())
}

/// Runs `config.iterations` iterations of the alternating primal-dual scheme.
pub fn run_cpg<T: Scalar>(
    env: &dyn Environment<T>,
    learner: &Learner<T>,
    spec: &RiskSpec<T>,
    thresholds: &[T],
    config: &SolverConfig<T>,
) -> Result<(PrimalDualState<T>, RunLog<T>)> {
    config.validate()?;
    learner.validate()?;
    check_problem(env, spec, thresholds)?;
    let desc = env.descriptor();
    let horizon = config
        .horizon
        .or(desc.horizon)
        .ok_or_else(|| Error::config("no rollout horizon for an infinite-horizon environment"))?;
    let jmax = j_max(desc.gamma, Some(horizon));
    let b: Vec<T> = thresholds
        .iter()
        .map(|&x| x - config.conservative_offset)
        .collect();
    if b.iter().any(|x| !(x.is_finite() && *x >= T::zero())) {
        return Err(Error::config(
            "thresholds minus the conservative offset must be >= 0",
        ));
    }
    let u = spec.num_constraints();
    let mut eta = match &config.initial_eta {
        Some(e) if e.len() != u + 1 => {
            return Err(Error::DimensionMismatch {
                context: "initial eta",
                expected: u + 1,
                got: e.len(),
            })
        }
        Some(e) => e.clone(),
        None => std::iter::once(T::zero())
            .chain(b.iter().copied())
            .collect(),
    };
    clamp_eta(&mut eta, jmax);

    let mut learner = learner.clone();
    let v = learner.params();
    let mut state = PrimalDualState {
        primal_opt: ScheduleState::new(config.primal_schedule, v.len()),
        dual_opt: ScheduleState::new(config.dual_schedule, u),
        eta_opt: ScheduleState::new(config.eta_schedule, u + 1),
        v,
        lambda: vec![T::zero(); u],
        eta,
        k: 0,
    };
    let mut log = RunLog {
        records: Vec::with_capacity(config.iterations),
    };
    let mut consumed = 0usize;
    let omega = config.omega;

    for k in 1..=config.iterations {
        let (primal_batch, dual_batch) = match config.batching {
            BatchingMode::FullBatchAlternate => {
                let batch = collect_batch(
                    env,
                    &learner,
                    horizon,
                    config.batch_size,
                    config.seed,
                    k as u64,
                )?;
                consumed += config.batch_size;
                if k % 2 == 1 {
                    (Some(batch), None)
                } else {
                    (None, Some(batch))
                }
            }
            BatchingMode::HalfBatchSequential => {
                let half = config.batch_size / 2;
                let batch =
                    collect_batch(env, &learner, horizon, half, config.seed, 2 * k as u64 - 1)?;
                consumed += half;
                (Some(batch), None)
            }
        };
        let stats_batch = primal_batch.clone().or_else(|| dual_batch.clone()).unwrap();
        let risk = risk_values(&stats_batch, spec, &state.eta)?;
        let lagrangian =
            est_lagrangian_value(&stats_batch, spec, &state.lambda, &state.eta, &b, omega)?;

        if let Some(batch) = &primal_batch {
            let grad_v = match &learner {
                Learner::ActionBased(p) => est_primal_ab(
                    batch,
                    p.as_ref(),
                    spec,
                    &state.lambda,
                    &state.eta,
                    config.estimator,
                )?,
                Learner::ParameterBased { hyper, .. } => {
                    est_primal_pb(batch, hyper, spec, &state.lambda, &state.eta)?
                }
            };
            finite_or(&grad_v, k, "primal gradient")?;
            let grad_eta = est_eta(batch, spec, &state.lambda, &state.eta, config.eta_weighting)?;
            finite_or(&grad_eta, k, "eta gradient")?;
            let dv = state.primal_opt.step(&grad_v)?;
            let de = state.eta_opt.step(&grad_eta)?;
            state.v.iter_mut().zip(&dv).for_each(|(x, d)| *x -= *d);
            state.eta.iter_mut().zip(&de).for_each(|(x, d)| *x -= *d);
            clamp_eta(&mut state.eta, jmax);
            finite_or(&state.v, k, "primal parameters")?;
            learner.set_params(&state.v)?;
        }

        let dual_batch = match (config.batching, dual_batch) {
            (BatchingMode::HalfBatchSequential, _) => {
                let half = config.batch_size / 2;
                consumed += half;
                Some(collect_batch(
                    env,
                    &learner,
                    horizon,
                    half,
                    config.seed,
                    2 * k as u64,
                )?)
            }
            (_, b) => b,
        };
        if let Some(batch) = &dual_batch {
            let grad_l = est_dual(batch, spec, &state.lambda, &state.eta, &b, omega)?;
            finite_or(&grad_l, k, "dual gradient")?;
            let dl = state.dual_opt.step(&grad_l)?;
            let raw: Vec<T> = state.lambda.iter().zip(&dl).map(|(x, d)| *x + *d).collect();
            state.lambda = project_lambda(&raw, omega, jmax);
        }
        state.k = k;

        log.records.push(RunRecord {
            iteration: k,
            trajectories_consumed: consumed,
            mean_return: stats_batch.mean_return(),
            risk_values: risk[1..].to_vec(),
            lambda: state.lambda.clone(),
            eta: state.eta[1..].to_vec(),
            lagrangian,
            step_primal: config.primal_schedule.rate(),
            step_dual: config.dual_schedule.rate(),
            step_eta: config.eta_schedule.rate(),
            params: config.track_params.then(|| state.v.clone()),
        });
    }
    Ok((state, log))
}

fn clamp_eta<T: Scalar>(eta: &mut [T], upper: T) {
    eta.iter_mut()
        .for_each(|e| *e = e.max(T::zero()).min(upper));
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::env::{make_dgww, CostLqr};
    use crate::estimators::{Aggregation, RiskTerm};
    use crate::policy::{LinearGaussianPolicy, TabularSoftmaxPolicy};
    use crate::risk::RiskMeasure;
    use crate::solver::projection::lambda_radius;

    fn dgww_setup() -> (crate::env::Dgww<f64>, Learner<f64>, RiskSpec<f64>) {
        let env = make_dgww::<f64>(7).unwrap().with_horizon(20).unwrap();
        let policy = TabularSoftmaxPolicy::uniform(env.num_states(), 4);
        let spec = RiskSpec::new(
            RiskTerm::new(RiskMeasure::ExpectedCost, Aggregation::DiscountedSum, 0),
            vec![RiskTerm::new(
                RiskMeasure::ExpectedCost,
                Aggregation::PerStepMean,
                1,
            )],
        )
        .unwrap();
        (env, Learner::ActionBased(Box::new(policy)), spec)
    }

    #[test]
    fn zero_steps_freeze_state() {
        let (env, learner, spec) = dgww_setup();
        let mut cfg = SolverConfig::new(1e-2, 6, 4);
        cfg.primal_schedule = StepSchedule::Constant(0.0);
        cfg.dual_schedule = StepSchedule::adam(0.0);
        cfg.eta_schedule = StepSchedule::Constant(0.0);
        let (state, log) = run_cpg(&env, &learner, &spec, &[0.2], &cfg).unwrap();
        assert_eq!(state.v, learner.params());
        assert_eq!(state.lambda, vec![0.0]);
        assert_eq!(log.records.len(), 6);
        assert!(log
            .records
            .iter()
            .all(|r| r.lambda == vec![0.0] && r.eta == vec![0.2]));
    }

    #[test]
    fn deterministic_given_seed() {
        let (env, learner, spec) = dgww_setup();
        let mut cfg = SolverConfig::new(1e-4, 8, 6);
        cfg.seed = 17;
        cfg.track_params = true;
        let a = run_cpg(&env, &learner, &spec, &[0.2], &cfg).unwrap();
        let b = run_cpg(&env, &learner, &spec, &[0.2], &cfg).unwrap();
        assert_eq!(a, b);
        cfg.seed = 18;
        let c = run_cpg(&env, &learner, &spec, &[0.2], &cfg).unwrap();
        assert_ne!(a.1, c.1);
    }

    #[test]
    fn lambda_stays_in_feasible_set() {
        let (env, learner, spec) = dgww_setup();
        let mut cfg = SolverConfig::new(0.5, 20, 4);
        cfg.dual_schedule = StepSchedule::Constant(50.0);
        let (_, log) = run_cpg(&env, &learner, &spec, &[0.0], &cfg).unwrap();
        let radius = lambda_radius(0.5, 1, 20.0).unwrap();
        for r in &log.records {
            assert!(r.lambda[0] >= 0.0 && r.lambda[0] <= radius + 1e-9);
        }
    }

    #[test]
    fn unconstrained_has_empty_dual_logs() {
        let env = make_dgww::<f64>(5).unwrap().with_horizon(10).unwrap();
        let learner = Learner::ActionBased(Box::new(TabularSoftmaxPolicy::uniform(25, 4)));
        let spec = RiskSpec::risk_neutral(0);
        let (_, log) = run_cpg(&env, &learner, &spec, &[], &SolverConfig::new(0.0, 3, 2)).unwrap();
        assert!(log
            .records
            .iter()
            .all(|r| r.lambda.is_empty() && r.eta.is_empty()));
    }

    #[test]
    fn half_batch_consumes_n_per_iteration() {
        let (env, learner, spec) = dgww_setup();
        let mut cfg = SolverConfig::new(1e-4, 3, 4);
        cfg.batching = BatchingMode::HalfBatchSequential;
        let (_, log) = run_cpg(&env, &learner, &spec, &[0.2], &cfg).unwrap();
        let consumed: Vec<_> = log
            .records
            .iter()
            .map(|r| r.trajectories_consumed)
            .collect();
        assert_eq!(consumed, vec![4, 8, 12]);
        cfg.batch_size = 3;
        assert!(run_cpg(&env, &learner, &spec, &[0.2], &cfg).is_err());
    }

    #[test]
    fn parameter_based_runs() {
        let env = CostLqr::<f64>::standard().with_horizon(5).unwrap();
        let inner = LinearGaussianPolicy::zeros(2, 2, 1e-3).unwrap();
        let hyper = GaussianHyperpolicy::new(vec![0.0; 4], 1e-3).unwrap();
        let learner = Learner::ParameterBased {
            hyper,
            inner: Box::new(inner),
        };
        let spec = RiskSpec::risk_neutral(1);
        let (state, log) = run_cpg(
            &env,
            &learner,
            &spec,
            &[0.9],
            &SolverConfig::new(1e-4, 4, 4),
        )
        .unwrap();
        assert_eq!(state.v.len(), 4);
        assert_eq!(log.records.len(), 4);
    }

    #[test]
    fn non_finite_aborts() {
        let (env, learner, spec) = dgww_setup();
        let mut cfg = SolverConfig::new(1e-4, 4, 4);
        cfg.primal_schedule = StepSchedule::Constant(f64::MAX);
        let err = run_cpg(&env, &learner, &spec, &[0.2], &cfg).unwrap_err();
        assert!(matches!(err, Error::NonFinite { .. }), "{err:?}");
    }

    #[test]
    fn config_errors() {
        let (env, learner, spec) = dgww_setup();
        assert!(run_cpg(
            &env,
            &learner,
            &spec,
            &[0.2],
            &SolverConfig::new(1e-4, 0, 4)
        )
        .is_err());
        assert!(run_cpg(
            &env,
            &learner,
            &spec,
            &[0.2, 0.1],
            &SolverConfig::new(1e-4, 1, 4)
        )
        .is_err());
        let mut cfg = SolverConfig::new(1e-4, 1, 4);
        cfg.conservative_offset = 0.5;
        assert!(run_cpg(&env, &learner, &spec, &[0.2], &cfg).is_err());
    }
}
