//! The paper experiments: replication loops, aggregation and CSV output.

use std::path::{Path, PathBuf};

use rayon::prelude::*;
use serde::Serialize;

use crate::environments::RewardSource;
use crate::multipfi::{run_multipfi, MultiPfiConfig};
use crate::pareto::gap_profile;
use crate::pfiwr::{run, PfiConfig, RunResult};
use crate::rng::{replication_seed, RngStreams};

use super::config::{AlgorithmKind, ExperimentConfig, ExperimentKind};
use super::environment::Environment;
use super::estimation::{trace_estimators, EstimationProtocol, EstimationTrace, EstimatorKind, Schedule};
use super::HarnessError;

pub fn mean(values: &[f64]) -> f64 {
    if values.is_empty() {
        return f64::NAN;
    }
    values.iter().sum::<f64>() / values.len() as f64
}

/// Sample standard deviation; zero for fewer than two values.
pub fn sample_sd(values: &[f64]) -> f64 {
    if values.len() < 2 {
        return 0.0;
    }
    let m = mean(values);
    let ss = values.iter().map(|v| (v - m) * (v - m)).sum::<f64>();
    (ss / (values.len() - 1) as f64).sqrt()
}

pub fn median(values: &[f64]) -> f64 {
    if values.is_empty() {
        return f64::NAN;
    }
    let mut sorted = values.to_vec();
    sorted.sort_by(f64::total_cmp);
    let n = sorted.len();
    if n % 2 == 1 {
        sorted[n / 2]
    } else {
        0.5 * (sorted[n / 2 - 1] + sorted[n / 2])
    }
}

/// Evaluate `job(i)` for `i in 0..n` on up to `workers` threads, in index order.
pub fn par_map<T, F>(n: usize, workers: usize, job: F) -> Result<Vec<T>, HarnessError>
where
    T: Send,
    F: Fn(usize) -> Result<T, HarnessError> + Sync + Send,
{
    let work = || (0..n).into_par_iter().map(&job).collect::<Result<Vec<T>, HarnessError>>();
    if workers == 0 {
        work()
    } else {
        rayon::ThreadPoolBuilder::new()
            .num_threads(workers)
            .build()
            .map_err(|e| HarnessError::Parameter(format!("thread pool: {e}")))?
            .install(work)
    }
}

fn estimator_kinds(kind: ExperimentKind) -> Vec<EstimatorKind> {
    match kind {
        ExperimentKind::DrImputation => vec![EstimatorKind::DrMix, EstimatorKind::DrRidge],
        _ => vec![
            EstimatorKind::Ridge,
            EstimatorKind::ExplorationMixed,
            EstimatorKind::DrMix,
        ],
    }
}

pub fn estimation_protocol(config: &ExperimentConfig) -> EstimationProtocol {
    EstimationProtocol {
        horizon: config.horizon,
        schedule: Schedule::Forced {
            explore_rounds: config.explore_rounds,
        },
        exploited_arm: config.exploited_arm,
        delta: config.delta,
        gamma_c: config.effective_gamma_c(),
        mixed_on_unmatched: config.mixed_on_unmatched,
        track_ridge_dr: false,
        log_updates: false,
    }
}

/// Replicated estimator traces of an estimation experiment.
#[derive(Debug, Clone, PartialEq)]
pub struct EstimationOutcome {
    pub kinds: Vec<EstimatorKind>,
    pub seeds: Vec<u64>,
    pub traces: Vec<EstimationTrace>,
}

impl EstimationOutcome {
    /// Error point of `kind` after `n` rounds in every replication.
    pub fn at(&self, kind: EstimatorKind, n: usize) -> Vec<super::estimation::ErrorPoint> {
        let idx = self.kinds.iter().position(|&k| k == kind).expect("estimator kind traced");
        self.traces.iter().map(|tr| tr.curves[idx][n - 1]).collect()
    }
}

pub fn run_estimation_experiment(
    config: &ExperimentConfig,
    env: &Environment,
) -> Result<EstimationOutcome, HarnessError> {
    let contexts = env.contexts();
    let protocol = estimation_protocol(config);
    let kinds = estimator_kinds(config.experiment);
    let seeds: Vec<u64> = (0..config.replications)
        .map(|i| replication_seed(config.seed, i))
        .collect();
    let traces = par_map(config.replications, config.workers, |i| {
        Ok(trace_estimators(
            env,
            &contexts,
            &protocol,
            &kinds,
            &config.checkpoints,
            RngStreams::new(seeds[i], 0),
        )?)
    })?;
    Ok(EstimationOutcome { kinds, seeds, traces })
}

/// One replication of one algorithm at one epsilon.
#[derive(Debug, Clone, PartialEq)]
pub struct ReplicationResult {
    pub seed: u64,
    pub tau: usize,
    pub success: bool,
    pub terminated: bool,
    pub cum_regret: f64,
    pub output: Vec<usize>,
    pub regret_windows: Vec<f64>,
    /// Round log CSV, kept for the first `round_logs` replications.
    pub round_log: Option<Vec<u8>>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct AlgorithmSummary {
    pub algorithm: AlgorithmKind,
    pub epsilon: f64,
    pub replications: usize,
    pub tau_mean: f64,
    pub tau_sd: f64,
    pub tau_median: f64,
    pub regret_mean: f64,
    pub regret_sd: f64,
    pub regret_median: f64,
    pub success_rate: f64,
    pub terminated_rate: f64,
    /// Mean and sd of cumulative regret at the end of each window.
    #[serde(skip)]
    pub curve_mean: Vec<f64>,
    #[serde(skip)]
    pub curve_sd: Vec<f64>,
}

impl AlgorithmSummary {
    pub fn from_runs(algorithm: AlgorithmKind, epsilon: f64, runs: &[ReplicationResult]) -> Self {
        let taus: Vec<f64> = runs.iter().map(|r| r.tau as f64).collect();
        let regrets: Vec<f64> = runs.iter().map(|r| r.cum_regret).collect();
        let n = runs.len() as f64;
        let windows = runs.first().map_or(0, |r| r.regret_windows.len());
        let cumulative: Vec<Vec<f64>> = runs
            .iter()
            .map(|r| {
                r.regret_windows
                    .iter()
                    .scan(0.0, |acc, w| {
                        *acc += w;
                        Some(*acc)
                    })
                    .collect()
            })
            .collect();
        let (mut curve_mean, mut curve_sd) = (Vec::with_capacity(windows), Vec::with_capacity(windows));
        for w in 0..windows {
            let column: Vec<f64> = cumulative.iter().map(|c| c[w]).collect();
            curve_mean.push(mean(&column));
            curve_sd.push(sample_sd(&column));
        }
        Self {
            algorithm,
            epsilon,
            replications: runs.len(),
            tau_mean: mean(&taus),
            tau_sd: sample_sd(&taus),
            tau_median: median(&taus),
            regret_mean: mean(&regrets),
            regret_sd: sample_sd(&regrets),
            regret_median: median(&regrets),
            success_rate: runs.iter().filter(|r| r.success).count() as f64 / n,
            terminated_rate: runs.iter().filter(|r| r.terminated).count() as f64 / n,
            curve_mean,
            curve_sd,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct AggregateMetrics {
    pub curve_stride: usize,
    pub summaries: Vec<AlgorithmSummary>,
}

impl AggregateMetrics {
    pub fn get(&self, algorithm: AlgorithmKind, epsilon: f64) -> Option<&AlgorithmSummary> {
        self.summaries
            .iter()
            .find(|s| s.algorithm == algorithm && s.epsilon == epsilon)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ComparisonOutcome {
    /// `(algorithm, epsilon, replications)` in config order.
    pub runs: Vec<(AlgorithmKind, f64, Vec<ReplicationResult>)>,
    pub aggregate: AggregateMetrics,
}

impl ComparisonOutcome {
    pub fn runs_of(&self, algorithm: AlgorithmKind, epsilon: f64) -> Option<&[ReplicationResult]> {
        self.runs
            .iter()
            .find(|(a, e, _)| *a == algorithm && *e == epsilon)
            .map(|(_, _, r)| r.as_slice())
    }
}

pub fn pfi_config(config: &ExperimentConfig, env: &Environment, epsilon: f64) -> PfiConfig {
    PfiConfig {
        epsilon,
        delta: config.delta,
        sigma: config.bound_sigma.unwrap_or_else(|| env.noise_scale()),
        theta_max: config.theta_max.unwrap_or_else(|| env.theta_max()),
        gamma_c: config.effective_gamma_c(),
        resample_delta: None,
        max_rounds: config.max_rounds,
        mixed_on_unmatched: config.mixed_on_unmatched,
        keep_history: false,
        curve_stride: config.curve_stride,
        log_updates: false,
    }
}

pub fn multipfi_config(config: &ExperimentConfig, epsilon: f64) -> MultiPfiConfig {
    MultiPfiConfig {
        epsilon,
        delta: config.delta,
        radius_scale: config.radius_scale,
        max_rounds: config.max_rounds,
        keep_history: false,
        curve_stride: config.curve_stride,
    }
}

/// Run every configured algorithm at every epsilon over paired seeds.
pub fn run_comparison(config: &ExperimentConfig, env: &Environment) -> Result<ComparisonOutcome, HarnessError> {
    let contexts = env.contexts();
    let profile = gap_profile(env.means()).map_err(|e| HarnessError::Parameter(e.to_string()))?;
    let mut cells = Vec::new();
    for &algorithm in &config.algorithms {
        for &epsilon in &config.epsilons {
            cells.push((algorithm, epsilon));
        }
    }
    let reps = config.replications;
    let flat = par_map(cells.len() * reps, config.workers, |job| {
        let (algorithm, epsilon) = cells[job / reps];
        let rep = job % reps;
        let seed = replication_seed(config.seed, rep);
        let streams = RngStreams::new(seed, algorithm.salt());
        let keep_history = rep < config.round_logs;
        let result: RunResult = match algorithm {
            AlgorithmKind::Pfiwr => {
                let mut pfi = pfi_config(config, env, epsilon);
                pfi.keep_history = keep_history;
                run(env, contexts.clone(), &pfi, streams)?
            }
            AlgorithmKind::Multipfi => {
                let mut multi = multipfi_config(config, epsilon);
                multi.keep_history = keep_history;
                run_multipfi(env, &contexts, &multi, streams)?
            }
        };
        let round_log = if keep_history {
            let mut buf = Vec::new();
            result
                .write_round_log(&mut buf)
                .map_err(|e| HarnessError::Parameter(format!("round log: {e}")))?;
            Some(buf)
        } else {
            None
        };
        Ok(ReplicationResult {
            seed,
            tau: result.tau,
            success: result.success(&profile, epsilon),
            terminated: result.terminated(),
            cum_regret: result.cum_regret,
            output: result.output,
            regret_windows: result.regret_windows,
            round_log,
        })
    })?;

    let mut runs = Vec::with_capacity(cells.len());
    let mut summaries = Vec::with_capacity(cells.len());
    let mut flat = flat.into_iter();
    for (algorithm, epsilon) in cells {
        let cell: Vec<ReplicationResult> = flat.by_ref().take(reps).collect();
        summaries.push(AlgorithmSummary::from_runs(algorithm, epsilon, &cell));
        runs.push((algorithm, epsilon, cell));
    }
    Ok(ComparisonOutcome {
        runs,
        aggregate: AggregateMetrics {
            curve_stride: config.curve_stride,
            summaries,
        },
    })
}

struct CsvOut {
    dir: PathBuf,
    files: Vec<String>,
}

impl CsvOut {
    fn write(&mut self, name: &str, header: &[&str], rows: Vec<Vec<String>>) -> Result<(), HarnessError> {
        let mut writer = csv::Writer::from_writer(Vec::new());
        let to_err = |e: csv::Error| HarnessError::Parameter(format!("csv: {e}"));
        writer.write_record(header).map_err(to_err)?;
        for row in rows {
            writer.write_record(&row).map_err(to_err)?;
        }
        let bytes = writer.into_inner().map_err(|e| HarnessError::Parameter(e.to_string()))?;
        self.raw(name, &bytes)
    }

    fn raw(&mut self, name: &str, bytes: &[u8]) -> Result<(), HarnessError> {
        let path = self.dir.join(name);
        if let Some(parent) = path.parent() {
            std::fs::create_dir_all(parent).map_err(|e| HarnessError::io(parent, e))?;
        }
        std::fs::write(&path, bytes).map_err(|e| HarnessError::io(&path, e))?;
        self.files.push(name.to_string());
        Ok(())
    }
}

fn eps_label(epsilon: f64) -> String {
    format!("{epsilon}")
}

fn write_estimation(
    out: &mut CsvOut,
    config: &ExperimentConfig,
    outcome: &EstimationOutcome,
) -> Result<(), HarnessError> {
    if config.experiment == ExperimentKind::Density {
        let mut rows = Vec::new();
        for (k, kind) in outcome.kinds.iter().enumerate() {
            for (c, &n) in config.checkpoints.iter().enumerate() {
                let arms = outcome.traces[0].checkpoints[c].1[k].len();
                for arm in 0..arms {
                    for (rep, trace) in outcome.traces.iter().enumerate() {
                        let value = (n as f64).sqrt() * trace.checkpoints[c].1[k][arm][0];
                        rows.push(vec![
                            kind.as_str().to_string(),
                            arm.to_string(),
                            n.to_string(),
                            rep.to_string(),
                            value.to_string(),
                        ]);
                    }
                }
            }
        }
        return out.write("density.csv", &["estimator", "arm", "n", "replication", "value"], rows);
    }

    let mut rows = Vec::new();
    for (k, kind) in outcome.kinds.iter().enumerate() {
        for n in 1..=config.horizon {
            let exploited: Vec<f64> = outcome.traces.iter().map(|t| t.curves[k][n - 1].exploited).collect();
            let unexploited: Vec<f64> = outcome.traces.iter().map(|t| t.curves[k][n - 1].unexploited).collect();
            rows.push(vec![
                kind.as_str().to_string(),
                n.to_string(),
                mean(&exploited).to_string(),
                sample_sd(&exploited).to_string(),
                mean(&unexploited).to_string(),
                sample_sd(&unexploited).to_string(),
            ]);
        }
    }
    out.write(
        "curves.csv",
        &["estimator", "n", "exploited_mean", "exploited_sd", "unexploited_mean", "unexploited_sd"],
        rows,
    )?;

    let mut rows = Vec::new();
    for (k, kind) in outcome.kinds.iter().enumerate() {
        for &n in &config.checkpoints {
            for (rep, trace) in outcome.traces.iter().enumerate() {
                let point = trace.curves[k][n - 1];
                rows.push(vec![
                    kind.as_str().to_string(),
                    rep.to_string(),
                    outcome.seeds[rep].to_string(),
                    n.to_string(),
                    point.exploited.to_string(),
                    point.unexploited.to_string(),
                ]);
            }
        }
    }
    out.write(
        "checkpoints.csv",
        &["estimator", "replication", "seed", "n", "exploited", "unexploited"],
        rows,
    )
}

fn write_comparison(out: &mut CsvOut, outcome: &ComparisonOutcome) -> Result<(), HarnessError> {
    for (algorithm, epsilon, runs) in &outcome.runs {
        let rows = runs
            .iter()
            .map(|r| {
                vec![
                    r.seed.to_string(),
                    r.tau.to_string(),
                    r.success.to_string(),
                    r.cum_regret.to_string(),
                    r.output.iter().map(usize::to_string).collect::<Vec<_>>().join(";"),
                ]
            })
            .collect();
        let name = format!("summary_{}_eps{}.csv", algorithm.as_str(), eps_label(*epsilon));
        out.write(&name, &["seed", "tau", "success", "cum_regret", "pareto_out"], rows)?;
        for (rep, r) in runs.iter().enumerate() {
            if let Some(log) = &r.round_log {
                let name = format!("round_logs/{}_eps{}_rep{rep}.csv", algorithm.as_str(), eps_label(*epsilon));
                out.raw(&name, log)?;
            }
        }
    }

    let rows = outcome
        .aggregate
        .summaries
        .iter()
        .map(|s| {
            vec![
                s.algorithm.as_str().to_string(),
                s.epsilon.to_string(),
                s.replications.to_string(),
                s.tau_mean.to_string(),
                s.tau_sd.to_string(),
                s.tau_median.to_string(),
                s.regret_mean.to_string(),
                s.regret_sd.to_string(),
                s.regret_median.to_string(),
                s.success_rate.to_string(),
                s.terminated_rate.to_string(),
            ]
        })
        .collect();
    out.write(
        "aggregate.csv",
        &[
            "algorithm",
            "epsilon",
            "replications",
            "tau_mean",
            "tau_sd",
            "tau_median",
            "regret_mean",
            "regret_sd",
            "regret_median",
            "success_rate",
            "terminated_rate",
        ],
        rows,
    )?;

    let stride = outcome.aggregate.curve_stride;
    let mut rows = Vec::new();
    for s in &outcome.aggregate.summaries {
        for (w, (m, sd)) in s.curve_mean.iter().zip(&s.curve_sd).enumerate() {
            rows.push(vec![
                s.algorithm.as_str().to_string(),
                s.epsilon.to_string(),
                ((w + 1) * stride).to_string(),
                m.to_string(),
                sd.to_string(),
            ]);
        }
    }
    out.write(
        "regret_curve.csv",
        &["algorithm", "epsilon", "round", "cum_regret_mean", "cum_regret_sd"],
        rows,
    )
}

/// Run manifest written next to the CSV outputs.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Manifest {
    pub experiment: &'static str,
    pub seed: u64,
    pub replications: usize,
    pub version: &'static str,
    pub config: ExperimentConfig,
    pub files: Vec<String>,
}

/// Run the configured experiment and write its outputs under `out_dir`.
pub fn run_experiment(config: &ExperimentConfig, out_dir: &Path) -> Result<Manifest, HarnessError> {
    config.validate()?;
    let env = config.build_environment()?;
    std::fs::create_dir_all(out_dir).map_err(|e| HarnessError::io(out_dir, e))?;
    let mut out = CsvOut {
        dir: out_dir.to_path_buf(),
        files: Vec::new(),
    };
    if config.experiment.is_estimation() {
        let outcome = run_estimation_experiment(config, &env)?;
        write_estimation(&mut out, config, &outcome)?;
    } else {
        let outcome = run_comparison(config, &env)?;
        write_comparison(&mut out, &outcome)?;
    }
    let manifest = Manifest {
        experiment: config.experiment.as_str(),
        seed: config.seed,
        replications: config.replications,
        version: env!("CARGO_PKG_VERSION"),
        config: config.clone(),
        files: out.files,
    };
    let json = serde_json::to_string_pretty(&manifest).expect("manifest serializes");
    let path = out_dir.join("manifest.json");
    std::fs::write(&path, json + "\n").map_err(|e| HarnessError::io(&path, e))?;
    Ok(manifest)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn summary_statistics() {
        assert_eq!(mean(&[1.0, 2.0, 6.0]), 3.0);
        assert_eq!(median(&[5.0, 1.0, 3.0]), 3.0);
        assert_eq!(median(&[4.0, 1.0, 3.0, 2.0]), 2.5);
        assert!((sample_sd(&[1.0, 2.0, 3.0]) - 1.0).abs() < 1e-12);
        assert_eq!(sample_sd(&[7.0]), 0.0);
    }

    #[test]
    fn summary_curves_accumulate_windows() {
        let run = |windows: Vec<f64>, tau| ReplicationResult {
            seed: 0,
            tau,
            success: true,
            terminated: true,
            cum_regret: windows.iter().sum(),
            output: vec![],
            regret_windows: windows,
            round_log: None,
        };
        let s = AlgorithmSummary::from_runs(
            AlgorithmKind::Pfiwr,
            0.1,
            &[run(vec![1.0, 2.0, 0.0], 20), run(vec![3.0, 0.0, 0.0], 10)],
        );
        assert_eq!(s.curve_mean, vec![2.0, 3.0, 3.0]);
        assert_eq!(s.tau_median, 15.0);
        assert_eq!(s.success_rate, 1.0);
    }

    #[test]
    fn par_map_keeps_order() {
        let v = par_map(50, 3, |i| Ok(i * i)).unwrap();
        assert_eq!(v, (0..50).map(|i| i * i).collect::<Vec<_>>());
    }
}
