use cpg_core::env::{make_dgww, CostLqr, Environment};
use cpg_core::estimators::{Aggregation, RiskSpec, RiskTerm};
use cpg_core::policy::{
    GaussianHyperpolicy, LinearDeterministicPolicy, LinearGaussianPolicy, TabularSoftmaxPolicy,
};
use cpg_core::risk::RiskMeasure;
use cpg_core::solver::{collect_batch, run_cpg, BatchingMode, Learner, SolverConfig, StepSchedule};
use cpg_core::{DgwwF64, Error, SolverConfigF64};

fn per_step_spec() -> RiskSpec<f64> {
    RiskSpec::new(
        RiskTerm::new(RiskMeasure::ExpectedCost, Aggregation::DiscountedSum, 0),
        vec![RiskTerm::new(
            RiskMeasure::ExpectedCost,
            Aggregation::PerStepMean,
            1,
        )],
    )
    .unwrap()
}

#[test]
fn same_seed_same_trajectories() {
    let env: DgwwF64 = make_dgww(7).unwrap().with_horizon(30).unwrap();
    let learner =
        Learner::ActionBased(Box::new(TabularSoftmaxPolicy::uniform(env.num_states(), 4)));
    let a = collect_batch(&env, &learner, 30, 16, 9, 3).unwrap();
    let b = collect_batch(&env, &learner, 30, 16, 9, 3).unwrap();
    let c = collect_batch(&env, &learner, 30, 16, 9, 4).unwrap();
    assert_eq!(a.trajectories(), b.trajectories());
    assert_ne!(a.trajectories(), c.trajectories());
}

#[test]
fn grid_world_learns_to_respect_the_constraint() {
    let env = make_dgww::<f64>(7).unwrap();
    let learner =
        Learner::ActionBased(Box::new(TabularSoftmaxPolicy::uniform(env.num_states(), 4)));
    let mut cfg: SolverConfigF64 = SolverConfig::new(1e-4, 600, 10);
    cfg.primal_schedule = StepSchedule::Constant(0.01);
    cfg.dual_schedule = StepSchedule::Constant(0.1);
    cfg.seed = 5;
    let (_, log) = run_cpg(&env, &learner, &per_step_spec(), &[0.2], &cfg).unwrap();
    let window = |r: std::ops::Range<usize>| {
        let recs = &log.records[r];
        recs.iter().map(|x| x.mean_return).sum::<f64>() / recs.len() as f64
    };
    assert!(window(500..600) > window(0..100));
    assert!(log.records.iter().all(|r| r.lambda[0] >= 0.0));
}

#[test]
fn both_exploration_modes_run_on_the_lqr() {
    let env = CostLqr::<f64>::standard().with_horizon(10).unwrap();
    let d = env.descriptor();
    let spec = RiskSpec::risk_neutral(1);
    let mut cfg = SolverConfig::new(1e-4, 20, 8);
    cfg.primal_schedule = StepSchedule::adam(1e-3);
    cfg.dual_schedule = StepSchedule::adam(1e-2);
    cfg.batching = BatchingMode::HalfBatchSequential;
    let ab = Learner::ActionBased(Box::new(
        LinearGaussianPolicy::zeros(d.state_dim, 2, 1e-3).unwrap(),
    ));
    let pb = Learner::ParameterBased {
        hyper: GaussianHyperpolicy::new(vec![0.0; 2 * d.state_dim], 1e-3).unwrap(),
        inner: Box::new(LinearDeterministicPolicy::zeros(d.state_dim, 2)),
    };
    for learner in [ab, pb] {
        let (state, log) = run_cpg(&env, &learner, &spec, &[0.2], &cfg).unwrap();
        assert_eq!(log.records.len(), 20);
        assert_eq!(log.records.last().unwrap().trajectories_consumed, 160);
        assert!(state.v.iter().all(|x| x.is_finite()));
    }
}

#[test]
fn deterministic_policy_is_rejected_for_action_exploration() {
    let env = CostLqr::<f64>::standard().with_horizon(5).unwrap();
    let learner = Learner::ActionBased(Box::new(LinearDeterministicPolicy::zeros(2, 2)));
    let err = run_cpg(
        &env,
        &learner,
        &RiskSpec::risk_neutral(1),
        &[0.2],
        &SolverConfig::new(0.1, 2, 2),
    );
    assert!(
        matches!(err, Err(Error::Unsupported(_)) | Err(Error::Config(_))),
        "{err:?}"
    );
}

#[test]
fn f32_instantiation_runs() {
    let env = make_dgww::<f32>(5).unwrap().with_horizon(10).unwrap();
    let learner = Learner::ActionBased(Box::new(TabularSoftmaxPolicy::<f32>::uniform(
        env.num_states(),
        4,
    )));
    let (_, log) = run_cpg(
        &env,
        &learner,
        &RiskSpec::risk_neutral(1),
        &[0.5f32],
        &SolverConfig::new(1e-3f32, 6, 4),
    )
    .unwrap();
    assert_eq!(log.records.len(), 6);
}
