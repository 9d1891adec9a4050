use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Serialize;

mod commands;

/// Experiments on squares of Hamilton cycles in randomly perturbed graphs.
#[derive(Parser, Debug)]
#[command(name = "perturb-lab", version, about)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Write a generated graph in edge-list format.
    Gen(GenArgs),
    /// Search a graph for the square of a Hamilton cycle.
    Solve(SolveArgs),
    /// Try both absence certificates on a partition.
    Certify(CertifyArgs),
    /// Run the extremal embedding pipeline.
    Embed(EmbedArgs),
    /// Run a square-path pipeline on a generated super-regular instance.
    Gadget(GadgetArgs),
    /// Estimate success probabilities over a grid of p; writes CSV.
    Sweep(SweepArgs),
    /// Fit the exponent of p̂ against n.
    Fit(FitArgs),
}

#[derive(Copy, Clone, Debug, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "kebab-case")]
enum Family {
    Gnp,
    GnpMulti,
    GnpDigraph,
    Extremal,
    Stable,
}

#[derive(Args, Debug, Serialize)]
struct GenArgs {
    #[arg(long, value_enum)]
    family: Family,
    #[arg(long)]
    n: usize,
    #[arg(long, default_value_t = 0.5)]
    p: f64,
    #[arg(long, default_value_t = 1.0 / 3.0)]
    alpha: f64,
    #[arg(long, default_value_t = 0.01)]
    beta: f64,
    /// Fraction of `n^2` extra edges inside `B` for stable instances.
    #[arg(long, default_value_t = 0.0)]
    noise: f64,
    /// Number of equal parts for gnp-multi.
    #[arg(long, default_value_t = 2)]
    parts: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args, Debug, Serialize)]
struct SolveArgs {
    #[arg(long = "in")]
    input: PathBuf,
    #[arg(long, default_value_t = 50_000_000)]
    budget: u64,
}

#[derive(Args, Debug, Serialize)]
struct CertifyArgs {
    #[arg(long = "in")]
    input: PathBuf,
    /// Comma-separated vertices of `A`; `B` is the rest.
    #[arg(long = "A", value_delimiter = ',', required = true)]
    a: Vec<usize>,
    #[arg(long)]
    k: usize,
    /// Node budget for the exact packing number; copy counts are used without it.
    #[arg(long)]
    packing_budget: Option<u64>,
}

#[derive(Args, Debug, Serialize)]
struct EmbedArgs {
    /// Graph to embed into; a stable instance is generated when absent.
    #[arg(long = "in")]
    input: Option<PathBuf>,
    /// Witness JSON for `--in`, as written by `gen --family stable`.
    #[arg(long)]
    witness: Option<PathBuf>,
    #[arg(long, default_value_t = 400)]
    n: usize,
    #[arg(long, default_value_t = 2)]
    k: usize,
    #[arg(long, default_value_t = 0.01)]
    beta: f64,
    #[arg(long, default_value_t = 0.01)]
    noise: f64,
    /// Overrides `--c`.
    #[arg(long)]
    p: Option<f64>,
    /// `p = c log n / n`.
    #[arg(long, default_value_t = 10.0)]
    c: f64,
    #[arg(long, default_value_t = 0)]
    seed: u64,
}

#[derive(Copy, Clone, Debug, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "kebab-case")]
enum GadgetMode {
    Multipartite,
    Bipartite,
}

#[derive(Args, Debug, Serialize)]
struct GadgetArgs {
    #[arg(long, value_enum, default_value_t = GadgetMode::Multipartite)]
    mode: GadgetMode,
    #[arg(long, default_value_t = 2)]
    k: usize,
    #[arg(long, default_value_t = 506)]
    n: usize,
    /// `|U|` in bipartite mode; defaults to `n`.
    #[arg(long)]
    m: Option<usize>,
    #[arg(long, default_value_t = 0.3)]
    d: f64,
    #[arg(long)]
    delta0: Option<f64>,
    #[arg(long)]
    delta1: Option<f64>,
    /// Overrides `--c`.
    #[arg(long)]
    p: Option<f64>,
    /// `p = c / n`.
    #[arg(long, default_value_t = 40.0)]
    c: f64,
    #[arg(long, default_value_t = 0)]
    seed: u64,
}

#[derive(Copy, Clone, Debug, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "kebab-case")]
enum DeciderArg {
    Exact,
    Pipeline,
    Certificate,
}

#[derive(Args, Debug, Serialize)]
struct SweepArgs {
    #[arg(long)]
    alpha: f64,
    #[arg(long)]
    n: usize,
    /// `lo:hi:count`, evenly spaced and inclusive.
    #[arg(long)]
    p_grid: String,
    #[arg(long, default_value_t = 100)]
    trials: usize,
    #[arg(long, value_enum, default_value_t = DeciderArg::Exact)]
    decider: DeciderArg,
    #[arg(long, default_value_t = 0.01)]
    beta: f64,
    /// Extra `B` edges of the stable instance used by the pipeline decider.
    #[arg(long, default_value_t = 0.0)]
    noise: f64,
    #[arg(long, default_value_t = 50_000_000)]
    budget: u64,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long, env = "PERTURB_LAB_JOBS")]
    #[serde(skip)]
    jobs: Option<usize>,
    /// Also write the points as JSON here.
    #[arg(long)]
    json: Option<PathBuf>,
}

#[derive(Args, Debug, Serialize)]
struct FitArgs {
    /// CSV with columns `n,p_hat`.
    #[arg(long = "in", conflicts_with_all = ["points", "bisect"])]
    input: Option<PathBuf>,
    /// `n:p_hat` pairs, comma-separated.
    #[arg(long, value_delimiter = ',')]
    points: Vec<String>,
    /// Bisect p̂ of the extremal pipeline on stable instances at these n.
    #[arg(long, value_delimiter = ',')]
    bisect: Vec<usize>,
    #[arg(long, default_value_t = 1.0 / 3.0)]
    alpha: f64,
    #[arg(long, default_value_t = 40)]
    trials: usize,
    #[arg(long, default_value_t = 0.08)]
    tol: f64,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long, env = "PERTURB_LAB_JOBS")]
    #[serde(skip)]
    jobs: Option<usize>,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match commands::run(cli.command) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(2)
        }
    }
}
