//! Command-line front end. Every subcommand prints machine-readable output:
//! one JSON object per line, or CSV for grids and sweeps.

use std::io::Write;
use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde_json::json;

use crate::adaptive::{adaptive_delta, adaptive_gamma, delta_test_bound, gamma_test_bound, TestOracle};
use crate::decode::{comp, dd};
use crate::design::{
    build_delta_regular, build_gamma_auto, build_gamma_config, build_gamma_matching, design_stats,
    DesignKind,
};
use crate::error::{Error, Result};
use crate::experiment::{read_config, run_sweep, write_output};
use crate::instance::{read_instance, Instance};
use crate::model::{compute_outcomes, draw_uniform_k_sparse, k_from_theta};
use crate::rng::{stream_rng, Stream};
use crate::thresholds::ThresholdSet;

const VERSION: &str = concat!(env!("CARGO_PKG_VERSION"), " (csv schema ", "1", ")");

/// Environment variable consulted when `--threads` is absent.
pub const THREADS_ENV: &str = "POOLTEST_THREADS";

#[derive(Parser, Debug)]
#[command(name = "pooltest", version = VERSION, about = "Group testing under degree constraints")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Subcommand, Debug)]
pub enum Command {
    /// Build one design and print its degree statistics.
    DesignStats(DesignStatsArgs),
    /// Decode a stored instance with COMP or DD.
    Decode(DecodeArgs),
    /// Run one adaptive recovery against a freshly drawn truth.
    Adaptive(AdaptiveArgs),
    /// Evaluate threshold formulas at a point or over a grid.
    Thresholds(ThresholdArgs),
    /// Run a Monte Carlo sweep described by a config file.
    Sweep(SweepArgs),
    /// Write an instance dump for later decoding.
    Instance(InstanceArgs),
}

#[derive(Clone, Copy, Debug, ValueEnum)]
pub enum KindArg {
    Delta,
    GammaConfig,
    GammaMatching,
    GammaAuto,
}

#[derive(Args, Debug)]
pub struct DesignStatsArgs {
    #[arg(long, value_enum)]
    pub kind: KindArg,
    #[arg(long)]
    pub n: usize,
    #[arg(long)]
    pub m: usize,
    #[arg(long)]
    pub delta: Option<usize>,
    #[arg(long)]
    pub gamma: Option<usize>,
    /// Density used by gamma-auto to pick a builder.
    #[arg(long)]
    pub theta: Option<f64>,
    /// Integer seed or `random`.
    #[arg(long, default_value = "0")]
    pub seed: String,
}

#[derive(Clone, Copy, Debug, ValueEnum)]
pub enum AlgoArg {
    Comp,
    Dd,
}

#[derive(Args, Debug)]
pub struct DecodeArgs {
    #[arg(long, value_enum)]
    pub algo: AlgoArg,
    #[arg(long)]
    pub instance: PathBuf,
}

#[derive(Clone, Copy, Debug, ValueEnum)]
pub enum ModeArg {
    Delta,
    Gamma,
}

#[derive(Args, Debug)]
pub struct AdaptiveArgs {
    #[arg(long, value_enum)]
    pub mode: ModeArg,
    #[arg(long)]
    pub n: usize,
    #[arg(long, conflicts_with = "theta")]
    pub k: Option<usize>,
    /// Sets `k = round(n^theta)`.
    #[arg(long)]
    pub theta: Option<f64>,
    #[arg(long)]
    pub delta: Option<usize>,
    #[arg(long)]
    pub gamma: Option<usize>,
    #[arg(long, default_value = "0")]
    pub seed: String,
}

#[derive(Args, Debug)]
pub struct ThresholdArgs {
    #[arg(long)]
    pub n: f64,
    #[arg(long)]
    pub k: Option<f64>,
    #[arg(long)]
    pub delta: Option<f64>,
    #[arg(long)]
    pub gamma: Option<f64>,
    #[arg(long)]
    pub theta: Option<f64>,
    /// `theta=a:b:step`, `delta=a:b` or `gamma=a:b`; prints CSV.
    #[arg(long)]
    pub grid: Option<String>,
}

#[derive(Args, Debug)]
pub struct SweepArgs {
    #[arg(long)]
    pub config: PathBuf,
    /// Output CSV; stdout when absent.
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// Worker threads (also read from POOLTEST_THREADS).
    #[arg(long)]
    pub threads: Option<usize>,
}

#[derive(Args, Debug)]
pub struct InstanceArgs {
    #[arg(long, value_enum)]
    pub kind: KindArg,
    #[arg(long)]
    pub n: usize,
    #[arg(long, conflicts_with = "theta")]
    pub k: Option<usize>,
    #[arg(long)]
    pub theta: Option<f64>,
    #[arg(long)]
    pub m: usize,
    #[arg(long)]
    pub delta: Option<usize>,
    #[arg(long)]
    pub gamma: Option<usize>,
    #[arg(long, default_value = "0")]
    pub seed: String,
    /// List every test and the infected set instead of only the seed.
    #[arg(long)]
    pub explicit: bool,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

/// Parses `--seed`: a `u64`, or `random` for a fresh one.
pub fn parse_seed(text: &str) -> Result<u64> {
    if text == "random" {
        return Ok(rand::random());
    }
    text.parse()
        .map_err(|_| Error::param(format!("seed must be an integer or 'random', got '{text}'")))
}

fn required<T: Copy>(value: Option<T>, flag: &str) -> Result<T> {
    value.ok_or_else(|| Error::param(format!("--{flag} is required here")))
}

fn print_line(out: &mut dyn Write, value: &serde_json::Value) -> Result<()> {
    writeln!(out, "{value}").map_err(|e| Error::io("<stdout>", e))
}

fn resolve_k(n: usize, k: Option<usize>, theta: Option<f64>) -> Result<usize> {
    match (k, theta) {
        (Some(k), _) => Ok(k),
        (None, Some(theta)) => Ok(k_from_theta(n, theta)),
        (None, None) => Err(Error::param("one of --k or --theta is required")),
    }
}

fn design_stats_cmd(args: &DesignStatsArgs, out: &mut dyn Write) -> Result<()> {
    let seed = parse_seed(&args.seed)?;
    let rng = &mut stream_rng(seed, Stream::Design);
    let design = match args.kind {
        KindArg::Delta => build_delta_regular(args.n, args.m, required(args.delta, "delta")?, rng)?,
        KindArg::GammaConfig => build_gamma_config(args.n, args.m, required(args.gamma, "gamma")?, rng)?,
        KindArg::GammaMatching => build_gamma_matching(args.n, args.m, required(args.gamma, "gamma")?, rng)?,
        KindArg::GammaAuto => build_gamma_auto(
            args.n,
            args.m,
            required(args.gamma, "gamma")?,
            required(args.theta, "theta")?,
            rng,
        )?,
    };
    let stats = design_stats(&design);
    print_line(
        out,
        &json!({
            "kind": design.kind().as_str(),
            "n": design.n(),
            "m": design.m(),
            "seed": seed,
            "max_item_degree": design.max_item_degree(),
            "untested": design.untested_count(),
            "min_test_degree": stats.min_test_degree,
            "max_test_degree": stats.max_test_degree,
            "mean_test_degree": stats.mean_test_degree,
            "multi_edge_count": stats.multi_edge_count,
            "distinct_members_per_test": stats.distinct_members_per_test,
        }),
    )
}

fn decode_cmd(args: &DecodeArgs, out: &mut dyn Write) -> Result<()> {
    let instance = read_instance(&args.instance)?;
    let (design, sigma) = instance.materialize()?;
    let outcomes = compute_outcomes(&design, &sigma)?;
    let result = match args.algo {
        AlgoArg::Comp => comp(&design, &outcomes)?,
        AlgoArg::Dd => dd(&design, &outcomes)?,
    };
    print_line(
        out,
        &json!({
            "algorithm": result.algorithm,
            "n": design.n(),
            "m": design.m(),
            "k": sigma.k(),
            "seed": instance.seed,
            "declared_infected": result.declared_infected,
            "untested": result.untested,
            "success": result.matches(&sigma),
        }),
    )
}

fn adaptive_cmd(args: &AdaptiveArgs, out: &mut dyn Write) -> Result<()> {
    let seed = parse_seed(&args.seed)?;
    let k = resolve_k(args.n, args.k, args.theta)?;
    let sigma = draw_uniform_k_sparse(args.n, k, &mut stream_rng(seed, Stream::Infection))?;
    let mut oracle = TestOracle::new(sigma);
    let (constraint, bound, report) = match args.mode {
        ModeArg::Delta => {
            let delta = required(args.delta, "delta")?;
            let report = adaptive_delta(args.n, k, delta, &mut oracle)?;
            (delta, delta_test_bound(args.n, k, delta), report)
        }
        ModeArg::Gamma => {
            let gamma = required(args.gamma, "gamma")?;
            let report = adaptive_gamma(args.n, gamma, &mut oracle, &mut stream_rng(seed, Stream::Grouping))?;
            (gamma, gamma_test_bound(args.n, k, gamma), report)
        }
    };
    let success = report.matches(oracle.truth());
    print_line(
        out,
        &json!({
            "mode": match args.mode { ModeArg::Delta => "delta", ModeArg::Gamma => "gamma" },
            "n": args.n,
            "k": k,
            "constraint": constraint,
            "seed": seed,
            "declared_infected": report.declared_infected,
            "tests_used": report.tests_used,
            "test_bound": bound,
            "max_tests_per_item": report.max_tests_per_item,
            "max_test_size": report.max_test_size,
            "success": success,
        }),
    )?;
    if !success {
        return Err(Error::integrity(format!("adaptive recovery failed for seed {seed}")));
    }
    Ok(())
}

fn float_range(spec: &str, default_step: Option<f64>) -> Result<Vec<f64>> {
    let parts: Vec<&str> = spec.split(':').collect();
    let parse = |s: &str| {
        s.parse::<f64>()
            .map_err(|_| Error::param(format!("grid: cannot parse '{s}'")))
    };
    let (start, end, step) = match (parts.as_slice(), default_step) {
        ([a, b, s], _) => (parse(a)?, parse(b)?, parse(s)?),
        ([a, b], Some(s)) => (parse(a)?, parse(b)?, s),
        _ => return Err(Error::param(format!("grid: bad range '{spec}'"))),
    };
    if step.is_nan() || step <= 0.0 || end < start {
        return Err(Error::param(format!("grid: empty or invalid range '{spec}'")));
    }
    // Count steps up front so accumulated rounding never drops the end point.
    let count = ((end - start) / step + 1e-9).floor() as usize;
    Ok((0..=count).map(|i| start + i as f64 * step).collect())
}

fn thresholds_cmd(args: &ThresholdArgs, out: &mut dyn Write) -> Result<()> {
    let Some(grid) = &args.grid else {
        let k = match (args.k, args.theta) {
            (Some(k), _) => k,
            (None, Some(theta)) => args.n.powf(theta),
            (None, None) => return Err(Error::param("one of --k or --theta is required")),
        };
        let set = ThresholdSet::evaluate(args.n, k, args.theta, args.delta, args.gamma)?;
        let value = serde_json::to_value(&set).map_err(|e| Error::integrity(e.to_string()))?;
        return print_line(out, &value);
    };
    let (axis, range) = grid
        .split_once('=')
        .ok_or_else(|| Error::param(format!("grid must look like axis=a:b[:step], got '{grid}'")))?;
    let mut rows = Vec::new();
    match axis {
        "theta" => {
            for theta in float_range(range, None)? {
                rows.push(ThresholdSet::evaluate(args.n, args.n.powf(theta), Some(theta), args.delta, args.gamma)?);
            }
        }
        "delta" | "gamma" => {
            let k = required(args.k, "k")?;
            for value in float_range(range, Some(1.0))? {
                let (delta, gamma) = if axis == "delta" { (Some(value), args.gamma) } else { (args.delta, Some(value)) };
                rows.push(ThresholdSet::evaluate(args.n, k, args.theta, delta, gamma)?);
            }
        }
        other => return Err(Error::param(format!("unknown grid axis '{other}'"))),
    }
    let mut w = csv::Writer::from_writer(out);
    for row in &rows {
        w.serialize(row).map_err(|e| Error::integrity(format!("csv encoding failed: {e}")))?;
    }
    w.flush().map_err(|e| Error::io("<stdout>", e))
}

fn threads_from_env(flag: Option<usize>) -> Result<Option<usize>> {
    if flag.is_some() {
        return Ok(flag);
    }
    match std::env::var(THREADS_ENV) {
        Ok(v) if !v.trim().is_empty() => v
            .trim()
            .parse()
            .map(Some)
            .map_err(|_| Error::param(format!("{THREADS_ENV} must be a positive integer, got '{v}'"))),
        _ => Ok(None),
    }
}

fn sweep_cmd(args: &SweepArgs, out: &mut dyn Write) -> Result<()> {
    let config = read_config(&args.config)?;
    let threads = threads_from_env(args.threads)?;
    if threads == Some(0) {
        return Err(Error::param("thread count must be at least 1"));
    }
    let output = run_sweep(&config, threads)?;
    match &args.out {
        Some(path) => crate::experiment::write_csv(&output, path),
        None => write_output(&output, out),
    }
}

fn instance_cmd(args: &InstanceArgs, out: &mut dyn Write) -> Result<()> {
    let seed = parse_seed(&args.seed)?;
    let k = resolve_k(args.n, args.k, args.theta)?;
    let (kind, constraint) = match args.kind {
        KindArg::Delta => (DesignKind::DeltaRegular, required(args.delta, "delta")?),
        KindArg::GammaConfig => (DesignKind::GammaConfig, required(args.gamma, "gamma")?),
        KindArg::GammaMatching => (DesignKind::GammaMatching, required(args.gamma, "gamma")?),
        KindArg::GammaAuto => {
            let theta = required(args.theta, "theta")?;
            let kind = if theta >= 0.5 { DesignKind::GammaConfig } else { DesignKind::GammaMatching };
            (kind, required(args.gamma, "gamma")?)
        }
    };
    let mut instance = Instance::generated(args.n, k, seed, kind, args.m, constraint);
    // Materialize even for seed-only dumps so bad parameters fail here.
    let (design, sigma) = instance.materialize()?;
    if args.explicit {
        instance = Instance::explicit(&design, &sigma, seed);
    }
    let text = instance.to_text();
    match &args.out {
        Some(path) => std::fs::write(path, text).map_err(|e| Error::io(path, e)),
        None => out.write_all(text.as_bytes()).map_err(|e| Error::io("<stdout>", e)),
    }
}

/// Runs a parsed command, writing results to `out`.
pub fn execute(cli: &Cli, out: &mut dyn Write) -> Result<()> {
    match &cli.command {
        Command::DesignStats(a) => design_stats_cmd(a, out),
        Command::Decode(a) => decode_cmd(a, out),
        Command::Adaptive(a) => adaptive_cmd(a, out),
        Command::Thresholds(a) => thresholds_cmd(a, out),
        Command::Sweep(a) => sweep_cmd(a, out),
        Command::Instance(a) => instance_cmd(a, out),
    }
}

/// Exit status for an error: 1 for integrity failures, 2 otherwise.
pub fn exit_code(error: &Error) -> i32 {
    if error.is_parameter_error() {
        2
    } else {
        1
    }
}

/// Entry point used by the binary.
pub fn main_with_args<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { 2 } else { 0 };
        }
    };
    let stdout = std::io::stdout();
    let mut lock = stdout.lock();
    match execute(&cli, &mut lock) {
        Ok(()) => 0,
        Err(e) => {
            eprintln!("error: {e}");
            exit_code(&e)
        }
    }
}
