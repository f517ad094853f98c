use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Serialize;

#[derive(Debug, Parser)]
#[command(name = "gbv", version, about = "Generalized bounded-variation functionals and inclusion criteria")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// p-Λ-variation of a one-variable grid function
    Variation(VariationArgs),
    /// BV(q(n)↑q) per-n partition maxima of a one-variable grid function
    Bvq(BvqArgs),
    /// Λ^# variation and per-axis BV(q(n)↑q) of a multivariable grid function
    Multivar(MultivarArgs),
    /// Scan the criterion M(n) over a horizon
    Criterion(CriterionArgs),
    /// Solve max Σ x_i^q under Σ x_i/λ_i ≤ 1 for ordered x
    Extremal(ExtremalArgs),
    /// Build and check witness stages for a failing criterion
    Forge(ForgeArgs),
}

/// Where sequence specs come from. Every spec argument takes inline JSON,
/// `@path`, or a path to a JSON file.
#[derive(Debug, Args, Serialize)]
pub struct SequenceArgs {
    /// Λ spec, e.g. '{"family":"power","alpha":1}' or '{"explicit":[1,2,4]}'
    #[arg(long)]
    pub lambda: Option<String>,
    /// Combined {"lambda": …, "q": …} document
    #[arg(long)]
    pub sequences: Option<String>,
}

#[derive(Debug, Args, Serialize)]
pub struct OutputArgs {
    /// Write the report here instead of stdout
    #[arg(long)]
    #[serde(skip)]
    pub out: Option<PathBuf>,
    #[arg(long, value_enum, default_value_t = Format::Json)]
    pub format: Format,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Format {
    Json,
    Csv,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum StrategyArg {
    Exact,
    Heuristic,
}

#[derive(Debug, Args, Serialize)]
pub struct VariationArgs {
    /// GridFunction1D JSON: {"resolution": N, "samples": [...]}
    #[arg(long)]
    pub input: String,
    #[command(flatten)]
    pub sequences: SequenceArgs,
    #[arg(long)]
    pub p: f64,
    #[arg(long, value_enum, default_value_t = StrategyArg::Exact)]
    pub strategy: StrategyArg,
    /// Allow intervals that cross the end of the period
    #[arg(long)]
    pub wrap: bool,
    #[arg(long, default_value_t = 14)]
    pub exact_cap: usize,
    /// Compare with exhaustive enumeration (grids up to 12 cells)
    #[arg(long)]
    pub verify: bool,
    #[command(flatten)]
    pub output: OutputArgs,
}

#[derive(Debug, Args, Serialize)]
pub struct BvqArgs {
    #[arg(long)]
    pub input: String,
    /// q(n) spec: a number or e.g. '{"family":"loglog","c":1,"n0":3}'
    #[arg(long)]
    pub q: Option<String>,
    #[arg(long)]
    pub sequences: Option<String>,
    #[arg(long)]
    pub n_max: u64,
    #[command(flatten)]
    pub output: OutputArgs,
}

#[derive(Debug, Args, Serialize)]
pub struct MultivarArgs {
    /// GridFunctionND JSON: {"dims": [N, …], "samples": [row-major …]}
    #[arg(long)]
    pub input: String,
    #[command(flatten)]
    pub sequences: SequenceArgs,
    #[arg(long)]
    pub p: f64,
    /// Also compute per-axis BV(q(n)↑q) with this q(n)
    #[arg(long)]
    pub q: Option<String>,
    #[arg(long, default_value_t = 4)]
    pub n_max: u64,
    #[arg(long, value_enum, default_value_t = StrategyArg::Exact)]
    pub strategy: StrategyArg,
    #[arg(long)]
    pub wrap: bool,
    #[arg(long, default_value_t = 14)]
    pub exact_cap: usize,
    #[command(flatten)]
    pub output: OutputArgs,
}

#[derive(Debug, Args, Serialize)]
pub struct CriterionArgs {
    #[command(flatten)]
    pub sequences: SequenceArgs,
    #[arg(long)]
    pub q: Option<String>,
    #[arg(long)]
    pub p: f64,
    #[arg(long)]
    pub n_max: u64,
    /// Range of k: "n" (k ≤ n) or "2n" (k ≤ 2^n)
    #[arg(long, default_value = "n")]
    pub k_range: String,
    #[arg(long, default_value_t = 2.0)]
    pub growth_factor: f64,
    #[arg(long, default_value_t = gbv_core::criterion::DEFAULT_MAX_K)]
    pub max_k: u64,
    #[command(flatten)]
    pub output: OutputArgs,
}

#[derive(Debug, Args, Serialize)]
pub struct ExtremalArgs {
    #[command(flatten)]
    pub sequences: SequenceArgs,
    /// Exponent q > 0
    #[arg(long)]
    pub q: f64,
    #[arg(long)]
    pub n: usize,
    /// Random feasible points to test against the closed form
    #[arg(long)]
    pub verify: Option<usize>,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Grid density of the brute-force search run with --verify (n ≤ 4)
    #[arg(long, default_value_t = 1000)]
    pub density: usize,
    #[command(flatten)]
    pub output: OutputArgs,
}

#[derive(Debug, Args, Serialize)]
pub struct ForgeArgs {
    #[command(flatten)]
    pub sequences: SequenceArgs,
    #[arg(long)]
    pub q: Option<String>,
    #[arg(long)]
    pub p: f64,
    /// Number of stages K (k = 1..=K)
    #[arg(long)]
    pub stages: u32,
    /// Largest n_k searched
    #[arg(long, default_value_t = 1 << 20)]
    pub cap: u64,
    /// Index at which q(·) is read for stage k: "stage-size" or "mesh-level"
    #[arg(long, default_value = "stage-size")]
    pub q_indexing: String,
    /// Number of variables of the assembled function
    #[arg(long, default_value_t = 2)]
    pub dim: usize,
    /// Omit the breakpoint list from the report
    #[arg(long)]
    pub no_breakpoints: bool,
    #[command(flatten)]
    pub output: OutputArgs,
}
