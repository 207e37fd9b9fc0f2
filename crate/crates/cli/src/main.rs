use std::fs::{self, File};
use std::io::BufWriter;
use std::panic::{self, AssertUnwindSafe};
use std::path::{Path, PathBuf};
use std::sync::Mutex;

use anyhow::{bail, Context, Result};
use clap::{Parser, Subcommand};
use log::{info, warn};
use rayon::prelude::*;
use sha2::{Digest, Sha256};

use trustsim_core::config::ExperimentConfig;
use trustsim_core::results::{append_rows, read_rows, ResultRow, Status};
use trustsim_core::sim::{self, write_trace};
use trustsim_core::stats::{write_report, Facet, Metric};

mod sweep;

#[derive(Parser)]
#[command(
    name = "trustsim",
    version,
    about = "Closed-loop planning experiments with prediction reliability estimation"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run one configuration for one or more consecutive seeds.
    Run {
        #[arg(long)]
        config: PathBuf,
        /// First seed; defaults to the seed in the configuration.
        #[arg(long)]
        seed: Option<u64>,
        /// Number of consecutive seeds.
        #[arg(long, default_value_t = 1)]
        seeds: u64,
        #[arg(long, env = "TRUSTSIM_OUT", default_value = "out")]
        out: PathBuf,
        #[arg(long, default_value_t = 1)]
        jobs: usize,
        /// Override a configuration value, e.g. `--set trustmhe.t_est=8`.
        #[arg(long = "set", value_name = "KEY=VALUE")]
        set: Vec<String>,
    },
    /// Run the cartesian product of a sweep file, skipping finished runs.
    Sweep {
        #[arg(long)]
        config: PathBuf,
        #[arg(long, env = "TRUSTSIM_OUT", default_value = "out")]
        out: PathBuf,
        #[arg(long, default_value_t = 1)]
        jobs: usize,
        /// Also write a trace per run.
        #[arg(long)]
        traces: bool,
        #[arg(long = "set", value_name = "KEY=VALUE")]
        set: Vec<String>,
    },
    /// Compare enabled and disabled runs of a results table.
    Stats {
        #[arg(long)]
        input: PathBuf,
        #[arg(long, env = "TRUSTSIM_OUT", default_value = "out")]
        out: PathBuf,
        #[arg(
            long,
            value_delimiter = ',',
            default_value = "t_est,mode,noise,scenario,sigma_pla"
        )]
        group_by: Vec<String>,
    },
}

/// SHA-256 of the configuration as JSON with sorted keys.
pub fn config_hash(config: &ExperimentConfig) -> String {
    let value: serde_json::Value =
        serde_json::from_str(&config.to_json()).expect("configuration serializes");
    let canonical = serde_json::to_string(&value).expect("json value serializes");
    hex::encode(Sha256::digest(canonical.as_bytes()))
}

fn trace_path(out: &Path, config: &ExperimentConfig, hash: &str) -> PathBuf {
    out.join(format!(
        "trace_{}_seed{}_{}.csv",
        config.scenario,
        config.seed,
        &hash[..12]
    ))
}

/// Runs one configuration; panics and errors become an error row.
fn execute(config: &ExperimentConfig, out: &Path, write_traces: bool) -> ResultRow {
    let hash = config_hash(config);
    let outcome = panic::catch_unwind(AssertUnwindSafe(|| -> Result<_> {
        let output = sim::run(config)?;
        if write_traces {
            let file = File::create(trace_path(out, config, &hash))?;
            write_trace(BufWriter::new(file), &output.trace)?;
        }
        Ok(output.record)
    }));
    match outcome {
        Ok(Ok(record)) => {
            info!(
                "{} seed {}: crashes {} progress {:.1}% omega {:.3} ({:.1} s)",
                config.scenario,
                config.seed,
                record.crashes,
                record.progress,
                record.final_omega,
                record.wall_time
            );
            ResultRow::completed(config, &hash, &record)
        }
        Ok(Err(e)) => {
            warn!("{} seed {} failed: {e:#}", config.scenario, config.seed);
            ResultRow::failed(config, &hash, &format!("{e:#}"))
        }
        Err(payload) => {
            let msg = payload
                .downcast_ref::<String>()
                .cloned()
                .or_else(|| payload.downcast_ref::<&str>().map(|s| s.to_string()))
                .unwrap_or_else(|| "panic".to_string());
            warn!("{} seed {} aborted: {msg}", config.scenario, config.seed);
            ResultRow::failed(config, &hash, &format!("aborted: {msg}"))
        }
    }
}

fn run_all(
    configs: Vec<ExperimentConfig>,
    out: &Path,
    jobs: usize,
    traces: bool,
) -> Result<Vec<ResultRow>> {
    fs::create_dir_all(out).with_context(|| format!("creating {}", out.display()))?;
    let results = out.join("results.csv");
    let writer = Mutex::new(());
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(jobs.max(1))
        .build()?;
    let rows: Vec<Result<ResultRow>> = pool.install(|| {
        configs
            .par_iter()
            .map(|c| {
                let row = execute(c, out, traces);
                let _guard = writer.lock().unwrap_or_else(|e| e.into_inner());
                append_rows(&results, std::slice::from_ref(&row))?;
                Ok(row)
            })
            .collect()
    });
    rows.into_iter().collect()
}

fn report_failures(rows: &[ResultRow]) -> Result<()> {
    let failed = rows.iter().filter(|r| r.status == Status::Error).count();
    if failed > 0 {
        bail!(
            "{failed} of {} runs failed; see the error column of results.csv",
            rows.len()
        );
    }
    Ok(())
}

fn main() -> Result<()> {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("info")).init();
    let cli = Cli::parse();
    match cli.command {
        Command::Run {
            config,
            seed,
            seeds,
            out,
            jobs,
            set,
        } => {
            let text = fs::read_to_string(&config)
                .with_context(|| format!("reading {}", config.display()))?;
            let base = ExperimentConfig::from_toml_with(&text, &set)?;
            let first = seed.unwrap_or(base.seed);
            let configs = (first..first + seeds)
                .map(|s| ExperimentConfig {
                    seed: s,
                    ..base.clone()
                })
                .collect();
            let rows = run_all(configs, &out, jobs, true)?;
            for r in &rows {
                if let Some(o) = r.observation() {
                    println!(
                        "seed {:>4}  crashes {}  progress {:6.2}%  min_dist {:.3} m",
                        o.seed, o.crashes, o.progress, o.min_dist
                    );
                }
            }
            report_failures(&rows)
        }
        Command::Sweep {
            config,
            out,
            jobs,
            traces,
            set,
        } => {
            let text = fs::read_to_string(&config)
                .with_context(|| format!("reading {}", config.display()))?;
            let configs = sweep::expand(&text, &set)?;
            let results = out.join("results.csv");
            let done: std::collections::HashSet<String> = if results.exists() {
                read_rows(&results)?
                    .into_iter()
                    .filter(|r| r.status == Status::Ok)
                    .map(|r| r.config_hash)
                    .collect()
            } else {
                Default::default()
            };
            let total = configs.len();
            let todo: Vec<_> = configs
                .into_iter()
                .filter(|c| !done.contains(&config_hash(c)))
                .collect();
            info!("{} of {total} runs to do", todo.len());
            let rows = run_all(todo, &out, jobs, traces)?;
            report_failures(&rows)
        }
        Command::Stats {
            input,
            out,
            group_by,
        } => {
            let facets = group_by
                .iter()
                .map(|f| f.parse::<Facet>())
                .collect::<Result<Vec<_>, _>>()?;
            let rows = read_rows(&input).with_context(|| format!("reading {}", input.display()))?;
            let observations: Vec<_> = rows.iter().filter_map(ResultRow::observation).collect();
            if observations.is_empty() {
                bail!("{} has no completed runs", input.display());
            }
            let report = write_report(&out, &observations, &facets)?;
            println!(
                "{:<9} {:<28} {:<9} {:>5} {:>10} {:>5} {:>10} {:>11}",
                "facet", "level", "metric", "n_on", "mean_on", "n_off", "mean_off", "p"
            );
            for s in report
                .summaries
                .iter()
                .filter(|s| s.metric != Metric::MinDist || s.enabled.n > 0)
            {
                let fmt = |v: Option<f64>| v.map_or("-".to_string(), |v| format!("{v:.3}"));
                println!(
                    "{:<9} {:<28} {:<9} {:>5} {:>10} {:>5} {:>10} {:>11}",
                    s.facet.as_str(),
                    s.level,
                    s.metric.as_str(),
                    s.enabled.n,
                    fmt(s.enabled.mean),
                    s.disabled.n,
                    fmt(s.disabled.mean),
                    s.test
                        .map_or("-".to_string(), |t| format!("{:.3e}", t.p_value)),
                );
            }
            Ok(())
        }
    }
}
