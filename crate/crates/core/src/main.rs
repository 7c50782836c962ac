use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use pfilin::environments::surrogate_rewards;
use pfilin::harness::validate::validation_suite;
use pfilin::harness::{instance_bounds, run_experiment, ExperimentConfig, HarnessError};

#[derive(Debug, Parser)]
#[command(name = "pfilin", version, about = "Pareto front identification for linear bandits")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Run an experiment from a TOML config.
    Run {
        #[arg(long)]
        config: PathBuf,
        /// Output directory (default `results/<experiment>`).
        #[arg(long)]
        out: Option<PathBuf>,
        #[arg(long)]
        seed: Option<u64>,
        #[arg(long)]
        reps: Option<usize>,
        #[arg(long)]
        workers: Option<usize>,
    },
    /// Run the invariant suite.
    Validate {
        /// Directory with extra `contexts*.csv` fixtures.
        #[arg(long)]
        fixtures: Option<PathBuf>,
    },
    /// Print the closed-form lower bounds of an instance.
    Bounds {
        /// Mean table: arms separated by `;`, objectives by `,` (e.g. "1;-1;-1").
        #[arg(long, allow_hyphen_values = true)]
        means: String,
        #[arg(long)]
        sigma: f64,
        #[arg(long)]
        epsilon: f64,
        #[arg(long)]
        delta: f64,
        /// Context dimension (default: number of arms).
        #[arg(long)]
        dim: Option<usize>,
        /// Print JSON instead of `key = value` lines.
        #[arg(long)]
        json: bool,
    },
    /// Write the surrogate clustered reward table as CSV.
    GenData {
        #[arg(long)]
        out: PathBuf,
        #[arg(long, default_value_t = 0)]
        seed: u64,
    },
}

fn parse_means(text: &str) -> Result<Vec<Vec<f64>>, HarnessError> {
    text.split(';')
        .map(|arm| {
            arm.split(',')
                .map(|v| {
                    v.trim()
                        .parse::<f64>()
                        .map_err(|e| HarnessError::Parameter(format!("means entry {v:?}: {e}")))
                })
                .collect()
        })
        .collect()
}

fn execute(command: Command) -> Result<bool, HarnessError> {
    match command {
        Command::Run {
            config,
            out,
            seed,
            reps,
            workers,
        } => {
            let mut cfg = ExperimentConfig::load(&config)?;
            if let Some(seed) = seed {
                cfg.seed = seed;
            }
            if let Some(reps) = reps {
                cfg.replications = reps;
            }
            if let Some(workers) = workers {
                cfg.workers = workers;
            }
            let out = out.unwrap_or_else(|| PathBuf::from("results").join(cfg.experiment.as_str()));
            let manifest = run_experiment(&cfg, &out)?;
            println!(
                "{}: {} replications, seed {}, wrote {} files to {}",
                manifest.experiment,
                manifest.replications,
                manifest.seed,
                manifest.files.len() + 1,
                out.display()
            );
            Ok(true)
        }
        Command::Validate { fixtures } => {
            let results = validation_suite(fixtures.as_deref())?;
            let mut ok = true;
            for r in &results {
                println!("{} {}: {}", if r.passed { "PASS" } else { "FAIL" }, r.name, r.detail);
                ok &= r.passed;
            }
            Ok(ok)
        }
        Command::Bounds {
            means,
            sigma,
            epsilon,
            delta,
            dim,
            json,
        } => {
            let means = parse_means(&means)?;
            let dim = dim.unwrap_or(means.len());
            let report = instance_bounds(&means, sigma, epsilon, delta, dim)?;
            if json {
                println!("{}", serde_json::to_string_pretty(&report).expect("report serializes"));
            } else {
                println!("pareto_front = {:?}", report.pareto_front);
                println!("sorted_deltas = {:?}", report.sorted_deltas);
                println!("min_suboptimal_gap = {}", report.min_suboptimal_gap);
                println!("sample_lower_bound = {}", report.sample_lower_bound);
                println!("regret_lower_bound = {}", report.regret_lower_bound);
            }
            Ok(true)
        }
        Command::GenData { out, seed } => {
            let rows = surrogate_rewards(seed);
            let mut writer = csv::Writer::from_writer(Vec::new());
            let to_err = |e: csv::Error| HarnessError::Parameter(e.to_string());
            let width = rows.first().map_or(0, Vec::len);
            let header: Vec<String> = (0..width).map(|c| format!("objective_{c}")).collect();
            writer.write_record(&header).map_err(to_err)?;
            for row in &rows {
                writer
                    .write_record(row.iter().map(f64::to_string))
                    .map_err(to_err)?;
            }
            let bytes = writer.into_inner().map_err(|e| HarnessError::Parameter(e.to_string()))?;
            std::fs::write(&out, bytes).map_err(|e| HarnessError::Io {
                path: out.display().to_string(),
                message: e.to_string(),
            })?;
            println!("wrote {} rows to {}", rows.len(), out.display());
            Ok(true)
        }
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            if matches!(
                e.kind(),
                clap::error::ErrorKind::DisplayHelp | clap::error::ErrorKind::DisplayVersion
            ) {
                print!("{e}");
                return ExitCode::SUCCESS;
            }
            let message = e.to_string();
            let first = message.lines().next().unwrap_or("").trim_start_matches("error: ");
            eprintln!("error[usage]: {first}");
            return ExitCode::from(2);
        }
    };
    match execute(cli.command) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(1),
        Err(e) => {
            eprintln!("error[{}]: {e}", e.kind());
            ExitCode::from(2)
        }
    }
}
