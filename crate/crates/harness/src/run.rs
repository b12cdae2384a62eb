//! Executes a configuration: one solver run per (ω, seed), per-seed CSVs,
//! a cross-seed aggregate and a manifest.

use std::fs;
use std::path::{Path, PathBuf};

use anyhow::{Context, Result};
use cpg_core::solver::{run_cpg, RunLog, RunRecord};
use rayon::prelude::*;
use serde::Serialize;

use crate::config::ExperimentConfig;

/// Environment variable consulted when neither `--out` nor `output_dir` is set.
pub const OUT_DIR_ENV: &str = "CPG_OUT_DIR";

/// Two-sided normal quantile for the 95% band in `aggregate.csv`.
const Z95: f64 = 1.959963984540054;

#[derive(Clone, Debug)]
pub struct VariantRun {
    pub label: String,
    pub omega: f64,
    pub seeds: Vec<u64>,
    pub logs: Vec<RunLog<f64>>,
}

#[derive(Clone, Debug)]
pub struct RunSummary {
    pub out_dir: PathBuf,
    pub num_constraints: usize,
    pub variants: Vec<VariantRun>,
}

#[derive(Serialize)]
struct Manifest<'a> {
    config: &'a ExperimentConfig,
    seeds: &'a [u64],
    omegas: Vec<f64>,
    overrides: &'a [String],
    version: &'static str,
}

/// `omega_<w>` for swept configs, `main` otherwise.
pub fn variant_label(cfg: &ExperimentConfig, omega: f64) -> String {
    if cfg.sweep.is_some() {
        format!("omega_{omega:e}")
    } else {
        "main".to_string()
    }
}

/// Picks the output directory: explicit flag, then config, then environment, then `./out/<name>`.
pub fn resolve_out_dir(cfg: &ExperimentConfig, flag: Option<&Path>) -> PathBuf {
    flag.map(Path::to_path_buf)
        .or_else(|| cfg.output_dir.clone())
        .or_else(|| std::env::var_os(OUT_DIR_ENV).map(|d| PathBuf::from(d).join(&cfg.name)))
        .unwrap_or_else(|| PathBuf::from("out").join(&cfg.name))
}

/// One solver run, no file output.
pub fn run_single(cfg: &ExperimentConfig, omega: f64, seed: u64) -> Result<RunLog<f64>> {
    let env = cfg.build_env()?;
    let learner = cfg.build_learner()?;
    let spec = cfg.risk_spec()?;
    let solver = cfg.solver_config(omega, seed);
    let (_, log) = run_cpg(env.as_ref(), &learner, &spec, &cfg.thresholds(), &solver)
        .with_context(|| format!("{} (omega {omega:e}, seed {seed})", cfg.name))?;
    Ok(log)
}

/// Runs every (ω, seed) pair in parallel and writes the results under `out_dir`.
pub fn run_experiment(
    cfg: &ExperimentConfig,
    seeds: &[u64],
    out_dir: &Path,
    overrides: &[String],
) -> Result<RunSummary> {
    let omegas = cfg.omegas();
    let jobs: Vec<(f64, u64)> = omegas
        .iter()
        .flat_map(|&w| seeds.iter().map(move |&s| (w, s)))
        .collect();
    let logs: Vec<RunLog<f64>> = jobs
        .par_iter()
        .map(|&(w, s)| run_single(cfg, w, s))
        .collect::<Result<_>>()?;
    let u = cfg.constraints.len();

    fs::create_dir_all(out_dir).with_context(|| format!("creating {}", out_dir.display()))?;
    let mut variants = Vec::new();
    for (vi, &omega) in omegas.iter().enumerate() {
        let label = variant_label(cfg, omega);
        let dir = out_dir.join(&label);
        fs::create_dir_all(&dir)?;
        let vlogs = logs[vi * seeds.len()..(vi + 1) * seeds.len()].to_vec();
        for (seed, log) in seeds.iter().zip(&vlogs) {
            write_log_csv(&dir.join(format!("seed_{seed}.csv")), log, u)?;
        }
        write_aggregate_csv(&dir.join("aggregate.csv"), &vlogs, u)?;
        variants.push(VariantRun {
            label,
            omega,
            seeds: seeds.to_vec(),
            logs: vlogs,
        });
    }
    let manifest = Manifest {
        config: cfg,
        seeds,
        omegas,
        overrides,
        version: env!("CARGO_PKG_VERSION"),
    };
    fs::write(
        out_dir.join("manifest.json"),
        serde_json::to_string_pretty(&manifest)? + "\n",
    )?;
    Ok(RunSummary {
        out_dir: out_dir.to_path_buf(),
        num_constraints: u,
        variants,
    })
}

pub fn fmt_num(x: f64) -> String {
    format!("{x:.16e}")
}

/// Column names of a per-seed CSV; they follow the per-iteration record fields.
pub fn log_header(u: usize) -> Vec<String> {
    let mut h = vec![
        "iteration".to_string(),
        "trajectories_consumed".to_string(),
        "mean_return".to_string(),
    ];
    for prefix in ["risk_value", "lambda", "eta"] {
        h.extend((1..=u).map(|i| format!("{prefix}_{i}")));
    }
    h.extend(["lagrangian", "step_primal", "step_dual", "step_eta"].map(String::from));
    h
}

fn record_row(r: &RunRecord<f64>) -> Vec<String> {
    let mut row = vec![
        r.iteration.to_string(),
        r.trajectories_consumed.to_string(),
        fmt_num(r.mean_return),
    ];
    for v in [&r.risk_values, &r.lambda, &r.eta] {
        row.extend(v.iter().map(|&x| fmt_num(x)));
    }
    row.extend([r.lagrangian, r.step_primal, r.step_dual, r.step_eta].map(fmt_num));
    row
}

pub fn write_log_csv(path: &Path, log: &RunLog<f64>, u: usize) -> Result<()> {
    let mut w =
        csv::Writer::from_path(path).with_context(|| format!("writing {}", path.display()))?;
    w.write_record(log_header(u))?;
    for r in &log.records {
        w.write_record(record_row(r))?;
    }
    w.flush()?;
    Ok(())
}

/// Metrics summarized across seeds in `aggregate.csv`.
fn aggregate_metrics(u: usize) -> Vec<String> {
    let mut m = vec!["mean_return".to_string()];
    for prefix in ["risk_value", "lambda"] {
        m.extend((1..=u).map(|i| format!("{prefix}_{i}")));
    }
    m.push("lagrangian".to_string());
    m
}

fn metric_values(r: &RunRecord<f64>) -> Vec<f64> {
    let mut v = vec![r.mean_return];
    v.extend(&r.risk_values);
    v.extend(&r.lambda);
    v.push(r.lagrangian);
    v
}

/// Sample mean and half-width of a normal-approximation 95% interval.
pub fn mean_ci(xs: &[f64]) -> (f64, f64) {
    let n = xs.len() as f64;
    let mean = xs.iter().sum::<f64>() / n;
    if xs.len() < 2 {
        return (mean, 0.0);
    }
    let var = xs.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1.0);
    (mean, Z95 * (var / n).sqrt())
}

pub fn write_aggregate_csv(path: &Path, logs: &[RunLog<f64>], u: usize) -> Result<()> {
    let mut w =
        csv::Writer::from_path(path).with_context(|| format!("writing {}", path.display()))?;
    let mut header = vec!["iteration".to_string(), "trajectories_consumed".to_string()];
    for m in aggregate_metrics(u) {
        header.extend([
            format!("{m}_mean"),
            format!("{m}_ci_low"),
            format!("{m}_ci_high"),
        ]);
    }
    w.write_record(&header)?;
    let len = logs.iter().map(|l| l.records.len()).min().unwrap_or(0);
    for k in 0..len {
        let first = &logs[0].records[k];
        let per_seed: Vec<Vec<f64>> = logs.iter().map(|l| metric_values(&l.records[k])).collect();
        let mut row = vec![
            first.iteration.to_string(),
            first.trajectories_consumed.to_string(),
        ];
        for m in 0..per_seed[0].len() {
            let xs: Vec<f64> = per_seed.iter().map(|v| v[m]).collect();
            let (mean, half) = mean_ci(&xs);
            row.extend([fmt_num(mean), fmt_num(mean - half), fmt_num(mean + half)]);
        }
        w.write_record(row)?;
    }
    w.flush()?;
    Ok(())
}

/// Mean of `metric` over the last `window` records.
pub fn tail_mean(log: &RunLog<f64>, window: usize, metric: impl Fn(&RunRecord<f64>) -> f64) -> f64 {
    let n = log.records.len();
    let tail = &log.records[n.saturating_sub(window)..];
    tail.iter().map(metric).sum::<f64>() / tail.len().max(1) as f64
}

/// Mean of `metric` over the first `window` records.
pub fn head_mean(log: &RunLog<f64>, window: usize, metric: impl Fn(&RunRecord<f64>) -> f64) -> f64 {
    let head = &log.records[..window.min(log.records.len())];
    head.iter().map(metric).sum::<f64>() / head.len().max(1) as f64
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::config::parse_config;

    #[test]
    fn ci_of_constant_sample_is_degenerate() {
        assert_eq!(mean_ci(&[2.0, 2.0, 2.0]), (2.0, 0.0));
        assert_eq!(mean_ci(&[5.0]), (5.0, 0.0));
        let (m, h) = mean_ci(&[1.0, 3.0]);
        assert_eq!(m, 2.0);
        assert!((h - Z95 * 1.0).abs() < 1e-12);
    }

    #[test]
    fn writes_expected_layout() {
        let src = crate::config::bundled("dgww_table6_desk").unwrap();
        let cfg = parse_config(src, &["solver.iterations=6".into()]).unwrap();
        let dir = tempfile::tempdir().unwrap();
        let summary = run_experiment(&cfg, &[7, 8], dir.path(), &[]).unwrap();
        assert_eq!(summary.variants.len(), 1);
        for f in [
            "main/seed_7.csv",
            "main/seed_8.csv",
            "main/aggregate.csv",
            "manifest.json",
        ] {
            assert!(dir.path().join(f).exists(), "{f}");
        }
        let text = fs::read_to_string(dir.path().join("main/seed_7.csv")).unwrap();
        let mut lines = text.lines();
        assert_eq!(lines.next().unwrap(), log_header(1).join(","));
        assert_eq!(lines.count(), 6);
        let manifest: serde_json::Value =
            serde_json::from_str(&fs::read_to_string(dir.path().join("manifest.json")).unwrap())
                .unwrap();
        assert_eq!(manifest["seeds"], serde_json::json!([7, 8]));
        assert_eq!(manifest["config"]["solver"]["iterations"], 6);
    }

    #[test]
    fn sweep_gets_one_directory_per_omega() {
        let src = crate::config::bundled("costlqr_table12_cpgae_desk").unwrap();
        let cfg = parse_config(
            src,
            &["solver.iterations=2".into(), "solver.batch_size=4".into()],
        )
        .unwrap();
        let dir = tempfile::tempdir().unwrap();
        let summary = run_experiment(&cfg, &[1], dir.path(), &[]).unwrap();
        let labels: Vec<_> = summary.variants.iter().map(|v| v.label.clone()).collect();
        assert_eq!(labels, ["omega_0e0", "omega_1e-4", "omega_1e-2"]);
        for l in labels {
            assert!(dir.path().join(l).join("seed_1.csv").exists());
        }
    }

    #[test]
    fn window_means() {
        let src = crate::config::bundled("dgww_table6_desk").unwrap();
        let cfg = parse_config(src, &["solver.iterations=4".into()]).unwrap();
        let log = run_single(&cfg, 1e-4, 3).unwrap();
        let all = log.records.iter().map(|r| r.mean_return).sum::<f64>() / 4.0;
        assert!((tail_mean(&log, 100, |r| r.mean_return) - all).abs() < 1e-15);
        assert_eq!(
            head_mean(&log, 1, |r| r.mean_return),
            log.records[0].mean_return
        );
    }
}
