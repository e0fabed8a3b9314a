//! `atest` searches the environment space of a simulated closed-loop
//! system for counterexamples to a boolean safety specification, or
//! certifies that none exist.

mod bench;
mod config;
mod report;

use std::path::PathBuf;
use std::process::ExitCode;
use std::time::Instant;

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand};

use atest_core::engine::{self, Method, RunConfig, RunResult};
use atest_core::speclang::{build_parse_tree, parse_spec, to_nnf};

use config::ConfigFile;

#[derive(Parser)]
#[command(
    name = "atest",
    version,
    about = "Counterexample search and verification for simulated closed-loop systems"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Search for a specification violation with the full budget.
    Falsify(FalsifyArgs),
    /// Search until the confidence bound certifies the specification or a
    /// counterexample appears.
    Verify(VerifyArgs),
    /// Run several methods repeatedly and compare their statistics.
    Bench(BenchArgs),
}

#[derive(Args)]
struct CommonArgs {
    /// Run configuration file (TOML).
    #[arg(long)]
    config: PathBuf,
    /// Override the configured evaluation budget.
    #[arg(long)]
    budget: Option<usize>,
    /// Override the configured seed.
    #[arg(long)]
    seed: Option<u64>,
    /// Print the lowered specification tree and exit without running.
    #[arg(long)]
    print_tree: bool,
}

#[derive(Args)]
struct FalsifyArgs {
    #[command(flatten)]
    common: CommonArgs,
    /// Override the search method (multi-gp, multi-gp-embedded, single-gp,
    /// single-gp-embedded, random).
    #[arg(long)]
    method: Option<String>,
    /// Report path; overrides [output].report.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct VerifyArgs {
    #[command(flatten)]
    common: CommonArgs,
    /// Override the certificate confidence parameter (in (0,1)).
    #[arg(long)]
    delta: Option<f64>,
    /// Report path; overrides [output].report.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct BenchArgs {
    #[command(flatten)]
    common: CommonArgs,
    /// Override the number of repeats per method.
    #[arg(long)]
    repeats: Option<usize>,
    /// Comma-separated methods to compare; overrides [bench].methods.
    #[arg(long, value_delimiter = ',')]
    methods: Option<Vec<String>>,
    /// Output directory for per-run and aggregate reports.
    #[arg(long)]
    out_dir: Option<PathBuf>,
}

fn main() -> ExitCode {
    env_logger::init();
    let cli = Cli::parse();
    let outcome = match cli.command {
        Command::Falsify(args) => cmd_falsify(args),
        Command::Verify(args) => cmd_verify(args),
        Command::Bench(args) => cmd_bench(args),
    };
    match outcome {
        Ok(code) => ExitCode::from(code),
        Err(err) => {
            eprintln!("error: {err:#}");
            ExitCode::from(2)
        }
    }
}

fn load(common: &CommonArgs) -> Result<(ConfigFile, RunConfig)> {
    let config = ConfigFile::load(&common.config)?;
    let mut run_config = config.run.clone();
    if let Some(budget) = common.budget {
        run_config.budget = budget;
    }
    if let Some(seed) = common.seed {
        run_config.seed = seed;
    }
    Ok((config, run_config))
}

/// Handles --print-tree: renders the lowered tree and short-circuits.
fn print_tree_requested(config: &ConfigFile, common: &CommonArgs) -> Result<bool> {
    if !common.print_tree {
        return Ok(false);
    }
    let tree = build_parse_tree(&to_nnf(&parse_spec(&config.spec)?))
        .context("lowering specification")?;
    print!("{tree}");
    Ok(true)
}

fn execute(config: &ConfigFile, run_config: &RunConfig) -> Result<(RunResult, f64)> {
    let domain = config.domain()?;
    let mut env = config.environment()?;
    let started = Instant::now();
    let result = engine::run(&config.spec, &mut env, &domain, run_config)?;
    Ok((result, started.elapsed().as_secs_f64()))
}

fn write_report(
    config: &ConfigFile,
    out_flag: &Option<PathBuf>,
    result: &RunResult,
) -> Result<PathBuf> {
    let path = out_flag
        .clone()
        .or_else(|| config.output.report.clone())
        .unwrap_or_else(|| PathBuf::from("atest-report.json"));
    report::write_json(&path, result)?;
    Ok(path)
}

fn cmd_falsify(args: FalsifyArgs) -> Result<u8> {
    let (config, mut run_config) = load(&args.common)?;
    if print_tree_requested(&config, &args.common)? {
        return Ok(0);
    }
    if let Some(method) = &args.method {
        run_config.method = method
            .parse::<Method>()
            .map_err(|e| anyhow::anyhow!("{e}"))?;
    }
    run_config.verify = false;
    let (result, wall) = execute(&config, &run_config)?;
    let path = write_report(&config, &args.out, &result)?;
    println!(
        "{}: worst phi {:.6} at w[{}], {} counterexamples in {} evaluations, {:.2}s",
        if result.found_counterexample() {
            "counterexample"
        } else {
            "no counterexample"
        },
        result.worst_phi,
        result.worst_index,
        result.counterexample_count,
        result.history.len(),
        wall
    );
    println!("report: {}", path.display());
    Ok(u8::from(!result.found_counterexample()))
}

fn cmd_verify(args: VerifyArgs) -> Result<u8> {
    let (config, mut run_config) = load(&args.common)?;
    if print_tree_requested(&config, &args.common)? {
        return Ok(0);
    }
    if let Some(delta) = args.delta {
        run_config.delta = delta;
    }
    run_config.verify = true;
    let (result, wall) = execute(&config, &run_config)?;
    let path = write_report(&config, &args.out, &result)?;
    let code = if result.found_counterexample() {
        println!(
            "falsified: counterexample with phi {:.6} after {} evaluations, {:.2}s",
            result.worst_phi,
            result.history.len(),
            wall
        );
        0
    } else if let Some(cert) = result.certificate.as_ref().filter(|c| c.verified) {
        println!(
            "verified: bound minimum {:.6} > 0 (beta_sqrt {:.3}, delta {}, heuristic optimum), {} evaluations, {:.2}s",
            cert.acquisition_minimum,
            cert.beta_sqrt,
            cert.delta,
            result.history.len(),
            wall
        );
        0
    } else {
        println!(
            "inconclusive: budget exhausted, worst phi {:.6} after {} evaluations, {:.2}s",
            result.worst_phi,
            result.history.len(),
            wall
        );
        1
    };
    println!("report: {}", path.display());
    Ok(code)
}

fn cmd_bench(args: BenchArgs) -> Result<u8> {
    let (config, run_config) = load(&args.common)?;
    if print_tree_requested(&config, &args.common)? {
        return Ok(0);
    }
    let mut bench_config = config.bench.clone();
    if let Some(repeats) = args.repeats {
        bench_config.repeats = repeats;
    }
    if let Some(methods) = &args.methods {
        bench_config.methods = methods
            .iter()
            .map(|m| m.parse::<Method>().map_err(|e| anyhow::anyhow!("{e}")))
            .collect::<Result<Vec<Method>>>()?;
    }
    if bench_config.repeats == 0 {
        bail!("--repeats must be >= 1");
    }
    if bench_config.methods.is_empty() {
        bail!("no methods selected");
    }
    let out_dir = args
        .out_dir
        .clone()
        .or_else(|| config.output.bench_dir.clone())
        .unwrap_or_else(|| PathBuf::from("atest-bench"));
    let started = Instant::now();
    let bench_report = bench::run_bench(&config, &run_config, &bench_config, &out_dir)?;
    bench::print_table(&bench_report);
    println!(
        "{} runs in {:.2}s; reports in {}",
        bench_report.runs.len(),
        started.elapsed().as_secs_f64(),
        out_dir.display()
    );
    Ok(0)
}
