use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::Result;
use clap::{Parser, Subcommand};
use cpg_harness::config::{load_source, parse_config, BUNDLED};
use cpg_harness::{plot, run, verify};

#[derive(Parser)]
#[command(
    name = "cpg",
    version,
    about = "Constrained policy gradient experiments"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run a configuration and write CSVs, a manifest and plots.
    Run {
        /// Bundled config name or path to a TOML file.
        #[arg(long)]
        config: String,
        /// Run this seed only instead of the config's seed list.
        #[arg(long)]
        seed: Option<u64>,
        #[arg(long)]
        out: Option<PathBuf>,
        /// Dotted-path override, e.g. `solver.omega=0.01`. Repeatable.
        #[arg(long = "override", value_name = "KEY=VALUE")]
        overrides: Vec<String>,
    },
    /// Run the oracle cross-check suite.
    Verify,
    /// Regenerate plots from a run directory.
    Plot {
        #[arg(long)]
        out: PathBuf,
    },
    /// List bundled configurations.
    ListConfigs,
}

fn main() -> ExitCode {
    match real_main() {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(2)
        }
    }
}

fn real_main() -> Result<ExitCode> {
    match Cli::parse().command {
        Command::Run {
            config,
            seed,
            out,
            overrides,
        } => {
            let cfg = parse_config(&load_source(&config)?, &overrides)?;
            let seeds = seed.map_or_else(|| cfg.seeds.clone(), |s| vec![s]);
            let dir = run::resolve_out_dir(&cfg, out.as_deref());
            let summary = run::run_experiment(&cfg, &seeds, &dir, &overrides)?;
            plot::plot_run_dir(&dir)?;
            for v in &summary.variants {
                for (seed, log) in v.seeds.iter().zip(&v.logs) {
                    let ret = run::tail_mean(log, 100, |r| r.mean_return);
                    let risk: Vec<String> = (0..summary.num_constraints)
                        .map(|i| format!("{:.4}", run::tail_mean(log, 100, |r| r.risk_values[i])))
                        .collect();
                    println!(
                        "{} seed {seed}: final return {ret:.4}, final risk [{}]",
                        v.label,
                        risk.join(", ")
                    );
                }
            }
            println!("wrote {}", dir.display());
            Ok(ExitCode::SUCCESS)
        }
        Command::Verify => {
            let outcomes = verify::run_suite()?;
            let mut ok = true;
            for o in &outcomes {
                println!(
                    "{} {}: {}",
                    if o.pass { "PASS" } else { "FAIL" },
                    o.name,
                    o.detail
                );
                ok &= o.pass;
            }
            Ok(if ok {
                ExitCode::SUCCESS
            } else {
                ExitCode::FAILURE
            })
        }
        Command::Plot { out } => {
            for p in plot::plot_run_dir(&out)? {
                println!("{}", p.display());
            }
            Ok(ExitCode::SUCCESS)
        }
        Command::ListConfigs => {
            for (name, src) in BUNDLED {
                let description = parse_config(src, &[])
                    .map(|c| c.description)
                    .unwrap_or_default();
                println!("{name:32} {description}");
            }
            Ok(ExitCode::SUCCESS)
        }
    }
}
