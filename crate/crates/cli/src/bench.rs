//! Benchmark orchestration: each method runs `repeats` times with seeds
//! seed, seed+1, ..., independent repeats fan out in parallel, and the
//! aggregate table carries the per-method statistics used to compare
//! search strategies.

use std::path::{Path, PathBuf};

use anyhow::{Context, Result};
use serde::Serialize;

use atest_core::engine::{self, Method, RunConfig, RunResult};
use atest_core::exec;

use crate::config::{BenchConfig, ConfigFile};
use crate::report;

#[derive(Debug, Clone, Serialize)]
pub struct BenchRunRow {
    pub method: Method,
    pub seed: u64,
    pub evaluations: usize,
    pub counterexamples: usize,
    pub worst_phi: f64,
    /// First model-guided iteration whose sample landed within the
    /// configured tolerance of the known optimum, if any.
    pub converged_at: Option<usize>,
    pub report_file: PathBuf,
}

#[derive(Debug, Clone, Serialize)]
pub struct MethodAggregate {
    pub method: Method,
    pub runs: usize,
    pub counterexamples_mean: f64,
    pub counterexamples_stddev: f64,
    pub worst_phi_mean: f64,
    pub worst_phi_stddev: f64,
    pub converged_runs: usize,
    /// Median of converged_at, treating unconverged runs as beyond any
    /// iteration; absent when the median run never converged or no target
    /// was configured.
    pub convergence_median: Option<f64>,
}

#[derive(Debug, Serialize)]
pub struct BenchReport {
    pub schema_version: u32,
    pub spec_text: String,
    pub budget: usize,
    pub base_seed: u64,
    pub repeats: usize,
    pub methods: Vec<Method>,
    pub runs: Vec<BenchRunRow>,
    pub aggregates: Vec<MethodAggregate>,
}

fn converged_at(result: &RunResult, bench: &BenchConfig) -> Option<usize> {
    let target = bench.target_w.as_ref()?;
    result
        .history
        .iter()
        .filter(|row| row.iteration >= 1)
        .find(|row| {
            row.w.len() == target.len()
                && row
                    .w
                    .iter()
                    .zip(target)
                    .all(|(a, b)| (a - b).abs() <= bench.target_tolerance)
        })
        .map(|row| row.iteration)
}

fn mean_stddev(values: &[f64]) -> (f64, f64) {
    let n = values.len() as f64;
    let mean = values.iter().sum::<f64>() / n;
    let var = values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / n;
    (mean, var.sqrt())
}

fn median_convergence(rows: &[&BenchRunRow]) -> (usize, Option<f64>) {
    let converged = rows.iter().filter(|r| r.converged_at.is_some()).count();
    let mut keyed: Vec<Option<usize>> = rows.iter().map(|r| r.converged_at).collect();
    // None sorts after every Some: an unconverged run is worse than any
    // convergence iteration.
    keyed.sort_by_key(|c| (c.is_none(), c.unwrap_or(0)));
    let n = keyed.len();
    let value_at = |i: usize| keyed[i].map(|v| v as f64);
    let median = if n % 2 == 1 {
        value_at(n / 2)
    } else {
        match (value_at(n / 2 - 1), value_at(n / 2)) {
            (Some(a), Some(b)) => Some((a + b) / 2.0),
            _ => None,
        }
    };
    (converged, median)
}

/// Runs the full method-by-repeat grid, writes one report per run into
/// `out_dir`, and returns the aggregate. Failed runs abort, but reports
/// of completed runs and a partial aggregate are flushed first.
pub fn run_bench(
    config: &ConfigFile,
    base: &RunConfig,
    bench: &BenchConfig,
    out_dir: &Path,
) -> Result<BenchReport> {
    let tasks: Vec<(Method, u64)> = bench
        .methods
        .iter()
        .flat_map(|&method| {
            (0..bench.repeats).map(move |r| (method, base.seed.wrapping_add(r as u64)))
        })
        .collect();

    let results = exec::map_collect(tasks.len(), |i| {
        let (method, seed) = tasks[i];
        let mut run_config = base.clone();
        run_config.method = method;
        run_config.seed = seed;
        // Benchmarks count counterexamples over the full budget.
        run_config.verify = false;
        let domain = config.domain().map_err(|e| e.to_string())?;
        let mut env = config.environment().map_err(|e| e.to_string())?;
        engine::run(&config.spec, &mut env, &domain, &run_config).map_err(|e| e.to_string())
    });

    let mut runs = Vec::new();
    let mut first_error = None;
    for ((method, seed), outcome) in tasks.iter().zip(results) {
        match outcome {
            Ok(result) => {
                let file = out_dir.join(format!("{method}-seed{seed}.json"));
                report::write_json(&file, &result)
                    .with_context(|| format!("writing {}", file.display()))?;
                runs.push(BenchRunRow {
                    method: *method,
                    seed: *seed,
                    evaluations: result.history.len(),
                    counterexamples: result.counterexample_count,
                    worst_phi: result.worst_phi,
                    converged_at: converged_at(&result, bench),
                    report_file: file,
                });
            }
            Err(message) if first_error.is_none() => {
                first_error = Some(format!("{method} seed {seed}: {message}"));
            }
            Err(_) => {}
        }
    }

    let aggregates = bench
        .methods
        .iter()
        .map(|&method| {
            let rows: Vec<&BenchRunRow> = runs.iter().filter(|r| r.method == method).collect();
            let counts: Vec<f64> = rows.iter().map(|r| r.counterexamples as f64).collect();
            let worsts: Vec<f64> = rows.iter().map(|r| r.worst_phi).collect();
            let (count_mean, count_sd) = if counts.is_empty() {
                (f64::NAN, f64::NAN)
            } else {
                mean_stddev(&counts)
            };
            let (worst_mean, worst_sd) = if worsts.is_empty() {
                (f64::NAN, f64::NAN)
            } else {
                mean_stddev(&worsts)
            };
            let (converged_runs, convergence_median) = median_convergence(&rows);
            MethodAggregate {
                method,
                runs: rows.len(),
                counterexamples_mean: count_mean,
                counterexamples_stddev: count_sd,
                worst_phi_mean: worst_mean,
                worst_phi_stddev: worst_sd,
                converged_runs,
                convergence_median,
            }
        })
        .collect();

    let bench_report = BenchReport {
        schema_version: engine::REPORT_SCHEMA_VERSION,
        spec_text: config.spec.clone(),
        budget: base.budget,
        base_seed: base.seed,
        repeats: bench.repeats,
        methods: bench.methods.clone(),
        runs,
        aggregates,
    };
    let aggregate_file = out_dir.join("aggregate.json");
    report::write_json(&aggregate_file, &bench_report)
        .with_context(|| format!("writing {}", aggregate_file.display()))?;

    match first_error {
        Some(message) => Err(anyhow::anyhow!(
            "benchmark run failed ({message}); completed runs were flushed to {}",
            out_dir.display()
        )),
        None => Ok(bench_report),
    }
}

pub fn print_table(report: &BenchReport) {
    println!(
        "{:<20} {:>5} {:>12} {:>10} {:>14} {:>12} {:>10} {:>10}",
        "method", "runs", "count-mean", "count-sd", "worst-phi-mean", "worst-phi-sd", "conv", "conv-med"
    );
    for agg in &report.aggregates {
        let median = agg
            .convergence_median
            .map_or_else(|| "-".to_string(), |m| format!("{m:.1}"));
        println!(
            "{:<20} {:>5} {:>12.2} {:>10.2} {:>14.4} {:>12.4} {:>10} {:>10}",
            agg.method.to_string(),
            agg.runs,
            agg.counterexamples_mean,
            agg.counterexamples_stddev,
            agg.worst_phi_mean,
            agg.worst_phi_stddev,
            agg.converged_runs,
            median
        );
    }
}
