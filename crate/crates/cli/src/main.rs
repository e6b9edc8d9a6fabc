//! `cachepart` command-line runner.
//!
//! Exit codes: 0 success, 1 I/O or other failure, 2 invalid input
//! (bad flags, malformed or invalid scenario), 3 instance too large for
//! exhaustive enumeration.

mod commands;
mod run;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Serialize;

#[derive(Parser, Debug)]
#[command(name = "cachepart", version, about = "Joint cache partitioning and request routing experiments")]
struct Cli {
    /// Parent directory for run directories.
    #[arg(long, global = true, default_value = "runs")]
    out: PathBuf,
    /// Run every data-parallel loop on the calling thread.
    #[arg(long, global = true)]
    sequential: bool,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Joint optimum (and equal-split baseline) of a scenario, a sweep or a random family.
    Solve(SolveArgs),
    /// Price-based mechanism: every single-cache routing, or one given routing.
    Decentralized(DecentralArgs),
    /// Optimum under per-link volume limits.
    Bandwidth(PointArgs),
    /// Optimum of the mean-latency objective.
    Latency(PointArgs),
    /// Request-level simulation of the optimized (or baseline) solution.
    Simulate(SimulateArgs),
    /// Parameter sweep under any objective.
    Sweep(SweepArgs),
    /// Model-versus-simulation campaign on single slices.
    Validate(ValidateArgs),
}

#[derive(Args, Debug, Clone, Serialize)]
pub struct ScenarioArgs {
    /// Scenario JSON file.
    #[arg(long)]
    #[serde(skip)]
    pub scenario: PathBuf,
    /// Override a scenario field, e.g. `caches[1].capacity=1900`. Repeatable.
    #[arg(long = "set", value_name = "PATH=VALUE")]
    #[serde(skip)]
    pub set: Vec<String>,
}

#[derive(Copy, Clone, Debug, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Solver {
    /// Exhaustive enumeration of single-cache routings (global optimum).
    Enumerate,
    /// Alternate convex search from the equal-split baseline.
    Acs,
}

#[derive(Args, Debug, Clone, Serialize)]
pub struct SolverArgs {
    #[arg(long, value_enum, default_value_t = Solver::Enumerate)]
    pub solver: Solver,
    /// Largest routing count enumerated before giving up.
    #[arg(long, default_value_t = cachepart::alloc::DEFAULT_ENUMERATION_CAP)]
    pub cap: u128,
}

#[derive(Args, Debug, Clone, Serialize)]
pub struct PointArgs {
    #[command(flatten)]
    #[serde(skip)]
    pub scenario: ScenarioArgs,
    #[command(flatten)]
    #[serde(flatten)]
    pub solver: SolverArgs,
    /// Sweep one parameter: `path=start:stop:step` or `path=v1,v2,...`.
    #[arg(long)]
    pub sweep: Option<String>,
    /// Column name for the swept value (defaults to the path).
    #[arg(long)]
    pub label: Option<String>,
}

#[derive(Args, Debug, Clone, Serialize)]
pub struct SolveArgs {
    #[arg(long, required_unless_present = "family", conflicts_with = "family")]
    #[serde(skip)]
    pub scenario: Option<PathBuf>,
    #[arg(long = "set", value_name = "PATH=VALUE")]
    #[serde(skip)]
    pub set: Vec<String>,
    /// Random scenario families (JSON), compared joint versus static.
    #[arg(long)]
    #[serde(skip)]
    pub family: Option<PathBuf>,
    #[command(flatten)]
    #[serde(flatten)]
    pub solver: SolverArgs,
    #[arg(long)]
    pub sweep: Option<String>,
    #[arg(long)]
    pub label: Option<String>,
}

#[derive(Copy, Clone, Debug, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Mode {
    Hit,
    Bandwidth,
    Latency,
}

#[derive(Args, Debug, Clone, Serialize)]
pub struct SweepArgs {
    #[command(flatten)]
    #[serde(skip)]
    pub scenario: ScenarioArgs,
    #[arg(long)]
    pub sweep: String,
    #[arg(long, value_enum, default_value_t = Mode::Hit)]
    pub mode: Mode,
    #[command(flatten)]
    #[serde(flatten)]
    pub solver: SolverArgs,
    #[arg(long)]
    pub label: Option<String>,
}

#[derive(Args, Debug, Clone, Serialize)]
pub struct DecentralArgs {
    #[command(flatten)]
    #[serde(skip)]
    pub scenario: ScenarioArgs,
    /// Price step size.
    #[arg(long, default_value_t = 1e-6)]
    pub gamma: f64,
    /// `constant` or `sqrt` (step gamma/sqrt(t)).
    #[arg(long, default_value = "constant")]
    pub schedule: String,
    #[arg(long, default_value_t = 20_000)]
    pub max_rounds: usize,
    #[arg(long, default_value_t = 1e-8)]
    pub stop_tol: f64,
    #[arg(long, default_value_t = 100)]
    pub window: usize,
    /// Comma-separated starting prices, one per cache (default zeros).
    #[arg(long)]
    pub initial_prices: Option<String>,
    /// Only run this routing: cache index per provider, e.g. `0,1`.
    #[arg(long)]
    pub routing: Option<String>,
    /// Keep every n-th round in the traces.
    #[arg(long, default_value_t = 1)]
    pub trace_stride: usize,
}

#[derive(Args, Debug, Clone, Serialize)]
pub struct SimulateArgs {
    #[command(flatten)]
    #[serde(skip)]
    pub scenario: ScenarioArgs,
    /// Requests drawn per provider.
    #[arg(long, default_value_t = 2_000_000)]
    pub horizon: u64,
    #[arg(long, default_value_t = 1)]
    pub seed: u64,
    /// Simulate the equal-split baseline instead of the joint optimum.
    #[arg(long)]
    pub baseline: bool,
    /// Optimize and report the latency objective (needs delays).
    #[arg(long)]
    pub latency: bool,
    #[command(flatten)]
    #[serde(flatten)]
    pub solver: SolverArgs,
}

#[derive(Args, Debug, Clone, Serialize)]
pub struct ValidateArgs {
    /// Eviction policies, comma-separated (LRU, FIFO, RANDOM).
    #[arg(long, default_value = "LRU", value_delimiter = ',')]
    pub policy: Vec<String>,
    #[arg(long, default_value = "0.8", value_delimiter = ',')]
    pub alpha: Vec<f64>,
    /// Catalog sizes.
    #[arg(long, default_value = "2000", value_delimiter = ',')]
    pub n: Vec<usize>,
    #[arg(long, default_value = "15", value_delimiter = ',')]
    pub rate: Vec<f64>,
    #[arg(long, default_value = "100,200,500", value_delimiter = ',')]
    pub slices: Vec<usize>,
    #[arg(long, default_value_t = 2_000_000)]
    pub horizon: u64,
    #[arg(long, default_value_t = 1)]
    pub seed: u64,
    /// Fail (exit 1) when any cell's relative error exceeds this.
    #[arg(long)]
    pub max_rel_err: Option<f64>,
}

/// A failure with its exit code.
#[derive(Debug)]
pub struct Failure {
    pub code: u8,
    pub message: String,
}

impl Failure {
    pub fn invalid(message: impl Into<String>) -> Self {
        Self {
            code: 2,
            message: message.into(),
        }
    }
}

impl From<cachepart::Error> for Failure {
    fn from(e: cachepart::Error) -> Self {
        use cachepart::Error as E;
        let code = match &e {
            E::InstanceTooLarge { .. } => 3,
            E::Io(_) | E::Csv(_) => 1,
            _ => 2,
        };
        let mut message = e.to_string();
        if let E::InvalidScenario(violations) = &e {
            message = format!("scenario failed validation:");
            for v in violations {
                message.push_str(&format!("\n  {v}"));
            }
        }
        if code == 3 {
            message.push_str(" (rerun with --solver acs)");
        }
        Self { code, message }
    }
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = Cli::parse();
    let exec = if cli.sequential {
        cachepart::par::Execution::Sequential
    } else {
        cachepart::par::Execution::Parallel
    };
    let ctx = commands::Context {
        out: cli.out,
        exec,
    };
    let result = match &cli.command {
        Command::Solve(a) => commands::solve(&ctx, a),
        Command::Decentralized(a) => commands::decentralized(&ctx, a),
        Command::Bandwidth(a) => commands::point(&ctx, "bandwidth", Mode::Bandwidth, a),
        Command::Latency(a) => commands::point(&ctx, "latency", Mode::Latency, a),
        Command::Simulate(a) => commands::simulate(&ctx, a),
        Command::Sweep(a) => commands::sweep(&ctx, a),
        Command::Validate(a) => commands::validate(&ctx, a),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(f) => {
            eprintln!("error: {}", f.message);
            ExitCode::from(f.code)
        }
    }
}
