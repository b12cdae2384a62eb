//! Experiment configuration: a TOML document with a fixed key tree.
//!
//! Unknown keys are rejected. Dotted overrides (`solver.omega=0.01`) are applied
//! to the parsed document before it is validated.

use std::path::{Path, PathBuf};

use cpg_core::env::{make_dgww, wrap_clipped_action_cost, CostLqr, Environment};
use cpg_core::estimators::{Aggregation, EtaWeighting, PrimalEstimator, RiskSpec, RiskTerm};
use cpg_core::policy::{
    GaussianHyperpolicy, LinearDeterministicPolicy, LinearGaussianPolicy, Policy,
    TabularSoftmaxPolicy,
};
use cpg_core::risk::RiskMeasure;
use cpg_core::solver::{BatchingMode, Learner, SolverConfig, StepSchedule};
use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Error)]
pub enum ConfigError {
    #[error("cannot read config `{}`", path.display())]
    Io {
        path: PathBuf,
        source: std::io::Error,
    },
    #[error("parse error: {0}")]
    Parse(String),
    #[error("invalid value for `{field}`: {reason}")]
    Invalid { field: String, reason: String },
    #[error("bad override `{0}`: expected key.path=value")]
    Override(String),
    #[error(transparent)]
    Core(#[from] cpg_core::Error),
}

fn invalid(field: &str, reason: impl Into<String>) -> ConfigError {
    ConfigError::Invalid {
        field: field.to_string(),
        reason: reason.into(),
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Algorithm {
    Cpgae,
    Cpgpe,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum EnvConfig {
    Dgww {
        #[serde(default = "default_side")]
        side: usize,
        #[serde(default = "default_dgww_horizon")]
        horizon: usize,
        #[serde(default = "one")]
        gamma: f64,
    },
    CostLqr {
        #[serde(default = "default_lqr_horizon")]
        horizon: usize,
        #[serde(default = "one")]
        gamma: f64,
        #[serde(default)]
        reward_scale: Option<f64>,
        #[serde(default)]
        cost_scale: Option<f64>,
        /// `[low, high]`; adds the clipped-action excess as an extra cost channel.
        #[serde(default)]
        clip_action: Option<[f64; 2]>,
    },
}

fn default_side() -> usize {
    7
}
fn default_dgww_horizon() -> usize {
    100
}
fn default_lqr_horizon() -> usize {
    50
}
fn one() -> f64 {
    1.0
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum PolicyConfig {
    Softmax {
        #[serde(default = "one")]
        temperature: f64,
    },
    LinearGaussian {
        sigma2: f64,
    },
    LinearDeterministic,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct HyperpolicyConfig {
    pub sigma2: f64,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum MeasureKind {
    ExpectedCost,
    MeanVariance,
    Cvar,
    Chance,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum AggregationConfig {
    DiscountedSum,
    PerStepMean,
}

impl From<AggregationConfig> for Aggregation {
    fn from(a: AggregationConfig) -> Self {
        match a {
            AggregationConfig::DiscountedSum => Aggregation::DiscountedSum,
            AggregationConfig::PerStepMean => Aggregation::PerStepMean,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ConstraintConfig {
    pub measure: MeasureKind,
    /// κ, α or n, depending on the measure.
    #[serde(default)]
    pub param: Option<f64>,
    pub threshold: f64,
    #[serde(default = "default_aggregation")]
    pub aggregation: AggregationConfig,
    /// Environment cost channel, starting at 1.
    #[serde(default = "default_channel")]
    pub channel: usize,
}

fn default_aggregation() -> AggregationConfig {
    AggregationConfig::DiscountedSum
}
fn default_channel() -> usize {
    1
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum ScheduleConfig {
    Constant {
        rate: f64,
    },
    Adam {
        rate: f64,
        #[serde(default = "beta1")]
        beta1: f64,
        #[serde(default = "beta2")]
        beta2: f64,
        #[serde(default = "adam_eps")]
        eps: f64,
    },
}

fn beta1() -> f64 {
    0.9
}
fn beta2() -> f64 {
    0.999
}
fn adam_eps() -> f64 {
    1e-8
}

impl ScheduleConfig {
    fn build(&self) -> StepSchedule<f64> {
        match *self {
            ScheduleConfig::Constant { rate } => StepSchedule::Constant(rate),
            ScheduleConfig::Adam {
                rate,
                beta1,
                beta2,
                eps,
            } => StepSchedule::Adam {
                rate,
                beta1,
                beta2,
                eps,
            },
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum BatchingConfig {
    FullBatchAlternate,
    HalfBatchSequential,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum EstimatorConfig {
    Reinforce,
    Gpomdp,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum EtaWeightingConfig {
    LambdaWeighted,
    Unweighted,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SolverSection {
    pub omega: f64,
    pub iterations: usize,
    pub batch_size: usize,
    pub primal_step: ScheduleConfig,
    pub dual_step: ScheduleConfig,
    #[serde(default = "default_eta_step")]
    pub eta_step: ScheduleConfig,
    #[serde(default = "default_batching")]
    pub batching: BatchingConfig,
    #[serde(default)]
    pub conservative_offset: f64,
    #[serde(default = "default_estimator")]
    pub estimator: EstimatorConfig,
    #[serde(default = "default_eta_weighting")]
    pub eta_weighting: EtaWeightingConfig,
}

fn default_eta_step() -> ScheduleConfig {
    ScheduleConfig::Constant { rate: 0.0 }
}
fn default_batching() -> BatchingConfig {
    BatchingConfig::FullBatchAlternate
}
fn default_estimator() -> EstimatorConfig {
    EstimatorConfig::Gpomdp
}
fn default_eta_weighting() -> EtaWeightingConfig {
    EtaWeightingConfig::LambdaWeighted
}

/// Values of ω to run side by side; replaces `solver.omega`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SweepConfig {
    pub omega: Vec<f64>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub name: String,
    #[serde(default)]
    pub description: String,
    pub algorithm: Algorithm,
    pub seeds: Vec<u64>,
    #[serde(default)]
    pub output_dir: Option<PathBuf>,
    pub env: EnvConfig,
    pub policy: PolicyConfig,
    #[serde(default)]
    pub hyperpolicy: Option<HyperpolicyConfig>,
    #[serde(default)]
    pub constraints: Vec<ConstraintConfig>,
    pub solver: SolverSection,
    #[serde(default)]
    pub sweep: Option<SweepConfig>,
}

/// Configs shipped with the binary: `(name, TOML source)`.
pub const BUNDLED: &[(&str, &str)] = &[
    ("dgww_table6", include_str!("../configs/dgww_table6.toml")),
    (
        "dgww_table6_desk",
        include_str!("../configs/dgww_table6_desk.toml"),
    ),
    (
        "costlqr_table7_cpgae",
        include_str!("../configs/costlqr_table7_cpgae.toml"),
    ),
    (
        "costlqr_table7_cpgpe",
        include_str!("../configs/costlqr_table7_cpgpe.toml"),
    ),
    (
        "costlqr_table12_cpgae",
        include_str!("../configs/costlqr_table12_cpgae.toml"),
    ),
    (
        "costlqr_table12_cpgpe",
        include_str!("../configs/costlqr_table12_cpgpe.toml"),
    ),
    (
        "costlqr_table12_cpgae_desk",
        include_str!("../configs/costlqr_table12_cpgae_desk.toml"),
    ),
    (
        "costlqr_table12_cpgpe_desk",
        include_str!("../configs/costlqr_table12_cpgpe_desk.toml"),
    ),
    (
        "risk_cpgae_cost",
        include_str!("../configs/risk_cpgae_cost.toml"),
    ),
    (
        "risk_cpgae_cvar",
        include_str!("../configs/risk_cpgae_cvar.toml"),
    ),
    (
        "risk_cpgae_mv",
        include_str!("../configs/risk_cpgae_mv.toml"),
    ),
    (
        "risk_cpgae_chance",
        include_str!("../configs/risk_cpgae_chance.toml"),
    ),
    (
        "risk_cpgpe_cost",
        include_str!("../configs/risk_cpgpe_cost.toml"),
    ),
    (
        "risk_cpgpe_cvar",
        include_str!("../configs/risk_cpgpe_cvar.toml"),
    ),
    (
        "risk_cpgpe_mv",
        include_str!("../configs/risk_cpgpe_mv.toml"),
    ),
    (
        "risk_cpgpe_chance",
        include_str!("../configs/risk_cpgpe_chance.toml"),
    ),
];

pub fn bundled(name: &str) -> Option<&'static str> {
    BUNDLED.iter().find(|(n, _)| *n == name).map(|(_, s)| *s)
}

/// Reads a bundled config by name, or a file by path.
pub fn load_source(spec: &str) -> Result<String, ConfigError> {
    if let Some(src) = bundled(spec) {
        return Ok(src.to_string());
    }
    let path = Path::new(spec);
    std::fs::read_to_string(path).map_err(|source| ConfigError::Io {
        path: path.to_path_buf(),
        source,
    })
}

pub fn load_config(spec: &str) -> Result<ExperimentConfig, ConfigError> {
    parse_config(&load_source(spec)?, &[])
}

/// Parses TOML, applies `key.path=value` overrides, then validates.
pub fn parse_config(source: &str, overrides: &[String]) -> Result<ExperimentConfig, ConfigError> {
    let mut doc: toml::Table =
        toml::from_str(source).map_err(|e| ConfigError::Parse(e.to_string()))?;
    for o in overrides {
        apply_override(&mut doc, o)?;
    }
    let cfg: ExperimentConfig = toml::Value::Table(doc)
        .try_into()
        .map_err(|e: toml::de::Error| ConfigError::Parse(e.to_string()))?;
    cfg.validate()?;
    Ok(cfg)
}

fn apply_override(doc: &mut toml::Table, assignment: &str) -> Result<(), ConfigError> {
    let (path, raw) = assignment
        .split_once('=')
        .ok_or_else(|| ConfigError::Override(assignment.to_string()))?;
    let keys: Vec<&str> = path.trim().split('.').collect();
    if keys.iter().any(|k| k.is_empty()) {
        return Err(ConfigError::Override(assignment.to_string()));
    }
    let value = parse_value(raw.trim());
    let (last, parents) = keys.split_last().expect("split yields at least one key");
    let mut table = doc;
    for key in parents {
        table = table
            .entry(key.to_string())
            .or_insert_with(|| toml::Value::Table(toml::Table::new()))
            .as_table_mut()
            .ok_or_else(|| invalid(path, format!("`{key}` is not a table")))?;
    }
    table.insert(last.to_string(), value);
    Ok(())
}

/// Interprets the right-hand side of an override as a TOML value, falling back to a string.
fn parse_value(raw: &str) -> toml::Value {
    toml::from_str::<toml::Table>(&format!("v = {raw}"))
        .ok()
        .and_then(|mut t| t.remove("v"))
        .unwrap_or_else(|| toml::Value::String(raw.to_string()))
}

fn finite_nonneg(field: &str, x: f64) -> Result<(), ConfigError> {
    if x.is_finite() && x >= 0.0 {
        Ok(())
    } else {
        Err(invalid(field, format!("must be finite and >= 0, got {x}")))
    }
}

impl ExperimentConfig {
    pub fn validate(&self) -> Result<(), ConfigError> {
        if self.name.trim().is_empty() {
            return Err(invalid("name", "must not be empty"));
        }
        if self.seeds.is_empty() {
            return Err(invalid("seeds", "at least one seed is required"));
        }
        let s = &self.solver;
        finite_nonneg("solver.omega", s.omega)?;
        finite_nonneg("solver.conservative_offset", s.conservative_offset)?;
        if s.iterations == 0 {
            return Err(invalid("solver.iterations", "must be >= 1"));
        }
        if s.batch_size == 0 {
            return Err(invalid("solver.batch_size", "must be >= 1"));
        }
        if s.batching == BatchingConfig::HalfBatchSequential && s.batch_size % 2 == 1 {
            return Err(invalid(
                "solver.batch_size",
                "must be even in half-batch mode",
            ));
        }
        for (field, sched) in [
            ("solver.primal_step", &s.primal_step),
            ("solver.dual_step", &s.dual_step),
            ("solver.eta_step", &s.eta_step),
        ] {
            sched
                .build()
                .validate()
                .map_err(|e| invalid(field, e.to_string()))?;
        }
        if let Some(sweep) = &self.sweep {
            if sweep.omega.is_empty() {
                return Err(invalid("sweep.omega", "must list at least one value"));
            }
            for &w in &sweep.omega {
                finite_nonneg("sweep.omega", w)?;
            }
        }
        match (self.algorithm, &self.policy, &self.hyperpolicy) {
            (Algorithm::Cpgae, PolicyConfig::LinearDeterministic, _) => {
                return Err(invalid("policy.kind", "cpgae needs a stochastic policy"))
            }
            (Algorithm::Cpgae, _, Some(_)) => {
                return Err(invalid("hyperpolicy", "only used by cpgpe"))
            }
            (Algorithm::Cpgpe, _, None) => {
                return Err(invalid("hyperpolicy", "cpgpe needs a hyperpolicy"))
            }
            (Algorithm::Cpgpe, _, Some(h)) if !(h.sigma2.is_finite() && h.sigma2 > 0.0) => {
                return Err(invalid("hyperpolicy.sigma2", "must be positive"))
            }
            _ => {}
        }
        match (&self.env, &self.policy) {
            (EnvConfig::Dgww { .. }, PolicyConfig::Softmax { .. }) => {}
            (EnvConfig::CostLqr { .. }, PolicyConfig::LinearGaussian { .. })
            | (EnvConfig::CostLqr { .. }, PolicyConfig::LinearDeterministic) => {}
            _ => return Err(invalid("policy.kind", "incompatible with the environment")),
        }
        if let PolicyConfig::LinearGaussian { sigma2 } = self.policy {
            if !(sigma2.is_finite() && sigma2 > 0.0) {
                return Err(invalid("policy.sigma2", "must be positive"));
            }
        }
        let env = self.build_env()?;
        let desc = env.descriptor();
        let jmax = desc.j_max();
        for (i, c) in self.constraints.iter().enumerate() {
            let field = |f: &str| format!("constraints[{i}].{f}");
            if c.channel == 0 || c.channel > desc.num_constraints {
                return Err(invalid(
                    &field("channel"),
                    format!("environment has cost channels 1..={}", desc.num_constraints),
                ));
            }
            let upper = match (c.measure, c.aggregation) {
                (MeasureKind::Chance, _) => 1.0,
                (_, AggregationConfig::PerStepMean) => 1.0,
                _ => jmax,
            };
            if !(c.threshold >= 0.0 && c.threshold <= upper) {
                return Err(invalid(
                    &field("threshold"),
                    format!("must lie in [0, {upper}], got {}", c.threshold),
                ));
            }
            self.measure(i)
                .map_err(|e| invalid(&field("param"), e.to_string()))?;
        }
        Ok(())
    }

    fn measure(&self, i: usize) -> Result<RiskMeasure<f64>, ConfigError> {
        let c = &self.constraints[i];
        let param = || {
            c.param
                .ok_or_else(|| invalid("param", "required for this measure"))
        };
        Ok(match c.measure {
            MeasureKind::ExpectedCost => RiskMeasure::ExpectedCost,
            MeasureKind::MeanVariance => RiskMeasure::mean_variance(param()?)?,
            MeasureKind::Cvar => RiskMeasure::cvar(param()?)?,
            MeasureKind::Chance => RiskMeasure::chance(param()?)?,
        })
    }

    pub fn build_env(&self) -> Result<Box<dyn Environment<f64>>, ConfigError> {
        Ok(match &self.env {
            EnvConfig::Dgww {
                side,
                horizon,
                gamma,
            } => Box::new(
                make_dgww(*side)?
                    .with_horizon(*horizon)?
                    .with_gamma(*gamma)?,
            ),
            EnvConfig::CostLqr {
                horizon,
                gamma,
                reward_scale,
                cost_scale,
                clip_action,
            } => {
                let lqr = CostLqr::standard()
                    .with_horizon(*horizon)?
                    .with_gamma(*gamma)?
                    .with_normalizer(*reward_scale, *cost_scale)?;
                match clip_action {
                    Some([lo, hi]) => {
                        let d = lqr.action_dim();
                        Box::new(wrap_clipped_action_cost(
                            Box::new(lqr),
                            vec![*lo; d],
                            vec![*hi; d],
                        )?)
                    }
                    None => Box::new(lqr),
                }
            }
        })
    }

    pub fn risk_spec(&self) -> Result<RiskSpec<f64>, ConfigError> {
        let objective = RiskTerm::new(RiskMeasure::ExpectedCost, Aggregation::DiscountedSum, 0);
        let constraints = (0..self.constraints.len())
            .map(|i| {
                let c = &self.constraints[i];
                Ok(RiskTerm::new(
                    self.measure(i)?,
                    c.aggregation.into(),
                    c.channel,
                ))
            })
            .collect::<Result<_, ConfigError>>()?;
        Ok(RiskSpec::new(objective, constraints)?)
    }

    pub fn thresholds(&self) -> Vec<f64> {
        self.constraints.iter().map(|c| c.threshold).collect()
    }

    /// Zero-initialized learner for the configured environment and algorithm.
    pub fn build_learner(&self) -> Result<Learner<f64>, ConfigError> {
        let env = self.build_env()?;
        let desc = env.descriptor();
        let action_dim = match desc.action_space {
            cpg_core::env::ActionSpace::Discrete(n) => n,
            cpg_core::env::ActionSpace::Continuous(d) => d,
        };
        let policy: Box<dyn Policy<f64>> =
            match (&self.env, &self.policy) {
                (EnvConfig::Dgww { side, .. }, PolicyConfig::Softmax { temperature }) => {
                    let n = make_dgww::<f64>(*side)?.num_states();
                    Box::new(TabularSoftmaxPolicy::new(
                        n,
                        action_dim,
                        vec![0.0; n * action_dim],
                        *temperature,
                    )?)
                }
                (_, PolicyConfig::LinearGaussian { sigma2 }) => Box::new(
                    LinearGaussianPolicy::zeros(desc.state_dim, action_dim, *sigma2)?,
                ),
                (_, PolicyConfig::LinearDeterministic) => {
                    Box::new(LinearDeterministicPolicy::zeros(desc.state_dim, action_dim))
                }
                _ => return Err(invalid("policy.kind", "incompatible with the environment")),
            };
        Ok(match (self.algorithm, &self.hyperpolicy) {
            (Algorithm::Cpgae, _) => Learner::ActionBased(policy),
            (Algorithm::Cpgpe, Some(h)) => Learner::ParameterBased {
                hyper: GaussianHyperpolicy::new(vec![0.0; policy.num_params()], h.sigma2)?,
                inner: policy,
            },
            (Algorithm::Cpgpe, None) => {
                return Err(invalid("hyperpolicy", "cpgpe needs a hyperpolicy"))
            }
        })
    }

    /// ω values to run: the sweep if present, else `solver.omega`.
    pub fn omegas(&self) -> Vec<f64> {
        match &self.sweep {
            Some(s) => s.omega.clone(),
            None => vec![self.solver.omega],
        }
    }

    pub fn solver_config(&self, omega: f64, seed: u64) -> SolverConfig<f64> {
        let s = &self.solver;
        let mut cfg = SolverConfig::new(omega, s.iterations, s.batch_size);
        cfg.primal_schedule = s.primal_step.build();
        cfg.dual_schedule = s.dual_step.build();
        cfg.eta_schedule = s.eta_step.build();
        cfg.batching = match s.batching {
            BatchingConfig::FullBatchAlternate => BatchingMode::FullBatchAlternate,
            BatchingConfig::HalfBatchSequential => BatchingMode::HalfBatchSequential,
        };
        cfg.conservative_offset = s.conservative_offset;
        cfg.estimator = match s.estimator {
            EstimatorConfig::Reinforce => PrimalEstimator::Reinforce,
            EstimatorConfig::Gpomdp => PrimalEstimator::Gpomdp,
        };
        cfg.eta_weighting = match s.eta_weighting {
            EtaWeightingConfig::LambdaWeighted => EtaWeighting::LambdaWeighted,
            EtaWeightingConfig::Unweighted => EtaWeighting::Unweighted,
        };
        cfg.seed = seed;
        cfg
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn every_bundled_config_parses() {
        for (name, src) in BUNDLED {
            let cfg = parse_config(src, &[]).unwrap_or_else(|e| panic!("{name}: {e}"));
            assert_eq!(&cfg.name, name);
            cfg.build_learner().unwrap();
            cfg.risk_spec().unwrap();
        }
    }

    #[test]
    fn table6_values() {
        let cfg = load_config("dgww_table6").unwrap();
        assert_eq!(cfg.algorithm, Algorithm::Cpgae);
        assert!(matches!(cfg.policy, PolicyConfig::Softmax { .. }));
        assert_eq!(cfg.thresholds(), vec![0.2]);
        assert_eq!(cfg.solver.omega, 1e-4);
        assert_eq!(
            cfg.solver.primal_step,
            ScheduleConfig::Constant { rate: 0.01 }
        );
        assert_eq!(cfg.solver.dual_step, ScheduleConfig::Constant { rate: 0.1 });
        assert_eq!((cfg.solver.iterations, cfg.solver.batch_size), (3000, 10));
        assert_eq!(
            load_config("dgww_table6_desk").unwrap().solver.iterations,
            1500
        );
    }

    #[test]
    fn table12_values() {
        let cfg = load_config("costlqr_table12_cpgae").unwrap();
        assert_eq!(cfg.thresholds(), vec![0.2]);
        assert_eq!(cfg.omegas(), vec![0.0, 1e-4, 1e-2]);
        assert!(
            matches!(cfg.solver.primal_step, ScheduleConfig::Adam { rate, .. } if rate == 1e-3)
        );
        assert!(matches!(cfg.solver.dual_step, ScheduleConfig::Adam { rate, .. } if rate == 1e-2));
        assert_eq!(
            (cfg.solver.iterations, cfg.solver.batch_size),
            (10_000, 100)
        );
        let pe = load_config("costlqr_table12_cpgpe").unwrap();
        assert_eq!(pe.hyperpolicy, Some(HyperpolicyConfig { sigma2: 1e-3 }));
        let t7 = load_config("costlqr_table7_cpgae").unwrap();
        assert_eq!(t7.thresholds(), vec![0.9]);
        assert_eq!(t7.solver.iterations, 6000);
    }

    #[test]
    fn rejects_bad_input() {
        let src = bundled("dgww_table6").unwrap();
        assert!(parse_config(src, &["solver.batch_size=-5".into()]).is_err());
        assert!(parse_config(src, &["solver.batch_size=0".into()]).is_err());
        assert!(parse_config(src, &["solver.bogus=1".into()]).is_err());
        assert!(parse_config(src, &["nonsense".into()]).is_err());
        assert!(parse_config(&format!("{src}\nextra = 1\n"), &[]).is_err());
        let err = parse_config(src, &["constraints=[]".into(), "seeds=[]".into()]).unwrap_err();
        assert!(err.to_string().contains("seeds"));
        assert!(parse_config("name = ", &[]).is_err());
    }

    #[test]
    fn overrides_replace_fields() {
        let src = bundled("dgww_table6").unwrap();
        let cfg = parse_config(src, &["solver.omega=0.01".into(), "seeds=[4, 5]".into()]).unwrap();
        assert_eq!(cfg.solver.omega, 0.01);
        assert_eq!(cfg.seeds, vec![4, 5]);
        let cfg = parse_config(src, &["solver.batching=half_batch_sequential".into()]).unwrap();
        assert_eq!(cfg.solver.batching, BatchingConfig::HalfBatchSequential);
    }

    #[test]
    fn thresholds_checked_against_aggregation() {
        let src = bundled("dgww_table6").unwrap();
        let bad = src.replace("threshold = 0.2", "threshold = 1.5");
        assert!(parse_config(&bad, &[]).is_err());
    }
}
