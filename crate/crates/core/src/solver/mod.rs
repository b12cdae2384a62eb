//! Primal-dual optimization of the regularized Lagrangian.

mod projection;
mod run;
mod schedule;

pub use projection::{
    h_omega_closed_form, lagrangian_value, lambda_radius, lambda_star_closed_form, potential_diag,
    project_lambda, project_onto, DEFAULT_CHI,
};
pub use run::{
    collect_batch, run_cpg, trajectory_rng, BatchingMode, Learner, PrimalDualState, RunLog,
    RunRecord, SolverConfig,
};
pub use schedule::{step_schedule, ScheduleState, StepSchedule};
