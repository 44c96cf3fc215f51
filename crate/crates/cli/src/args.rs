use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};
use gardingkit::plateau::Init;
use gardingkit::LemmaId;
use serde::{Deserialize, Serialize};

#[derive(Debug, Parser)]
#[command(name = "gardingkit", version, about = "σ_k inequality checks, cone sampling, graph geometry and radial Plateau solves")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Check lemmas on sampled and adversarially refined points.
    Verify(VerifyArgs),
    /// Solve the radial problem along a schedule of boundary heights.
    Solve(SolveArgs),
    /// Curvature data and diagnostics of a graph given as CSV.
    Shape(ShapeArgs),
    /// Draw points from a stratum of the Garding cone.
    Sample(SampleArgs),
    /// Re-run a command from its manifest.
    Replay(ReplayArgs),
}

/// Flags every output-producing command shares.
#[derive(Debug, Clone, Args, Serialize, Deserialize)]
pub struct Output {
    #[arg(long, default_value = "out")]
    pub out_dir: PathBuf,
    /// Pin timestamps and wall times so reruns are byte-identical.
    #[arg(long)]
    pub reproducible: bool,
}

fn parse_lemma(s: &str) -> Result<LemmaId, String> {
    s.parse().map_err(|e: gardingkit::Error| e.to_string())
}

#[derive(Debug, Clone, Args, Serialize, Deserialize)]
pub struct VerifyArgs {
    /// Run all twelve lemma checks.
    #[arg(long)]
    pub all: bool,
    /// Lemma ids, comma separated.
    #[arg(long, value_delimiter = ',', value_parser = parse_lemma)]
    pub lemma: Vec<LemmaId>,
    /// Also run the Maclaurin chain and the q_2 Hessian identity.
    #[arg(long)]
    pub extra: bool,
    #[arg(long)]
    pub n: usize,
    #[arg(long)]
    pub k: usize,
    #[arg(long = "A", default_value_t = 1.0)]
    #[serde(rename = "A")]
    pub a: f64,
    #[arg(long = "B", default_value_t = 2.0)]
    #[serde(rename = "B")]
    pub b: f64,
    #[arg(long, default_value_t = 42)]
    pub seed: u64,
    #[arg(long, default_value_t = 10_000)]
    pub trials: usize,
    #[arg(long, default_value_t = 0.1)]
    pub epsilon: f64,
    #[arg(long = "N", default_value_t = 3.0)]
    #[serde(rename = "N")]
    pub big_n: f64,
    #[arg(long, default_value_t = 1.0)]
    pub sigma_lo: f64,
    #[arg(long, default_value_t = 2.0)]
    pub sigma_hi: f64,
    #[arg(long, default_value_t = 16)]
    pub rounds: usize,
    #[arg(long, default_value_t = 16)]
    pub top: usize,
    #[arg(long, default_value_t = 400)]
    pub polish_rounds: usize,
    #[arg(long, default_value_t = 4)]
    pub directions: usize,
    #[command(flatten)]
    pub output: Output,
}

#[derive(Debug, Clone, Copy, ValueEnum, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum InitArg {
    Cap,
    Previous,
    Flat,
}

impl From<InitArg> for Init {
    fn from(a: InitArg) -> Self {
        match a {
            InitArg::Cap => Init::Cap,
            InitArg::Previous => Init::Previous,
            InitArg::Flat => Init::Flat,
        }
    }
}

#[derive(Debug, Clone, Args, Serialize, Deserialize)]
pub struct SolveArgs {
    #[arg(long)]
    pub n: usize,
    #[arg(long)]
    pub k: usize,
    #[arg(long)]
    pub sigma: f64,
    #[arg(long = "R", default_value_t = 1.0)]
    #[serde(rename = "R")]
    pub radius: f64,
    /// Decreasing boundary heights, comma separated.
    #[arg(long, value_delimiter = ',', required = true)]
    pub eps: Vec<f64>,
    /// Grid intervals M.
    #[arg(long, default_value_t = 2048)]
    pub grid: usize,
    #[arg(long, default_value_t = 1e-9)]
    pub tol: f64,
    #[arg(long, default_value_t = 50)]
    pub max_iters: usize,
    #[arg(long, default_value_t = 1.0)]
    pub damping: f64,
    #[arg(long, value_enum, default_value_t = InitArg::Previous)]
    pub init: InitArg,
    /// Semi-convexity bound reported in the a priori table.
    #[arg(long = "A", default_value_t = 1.0)]
    #[serde(rename = "A")]
    pub a: f64,
    #[command(flatten)]
    pub output: Output,
}

#[derive(Debug, Clone, Args, Serialize, Deserialize)]
pub struct ShapeArgs {
    /// CSV with header `r,u` or `x,y,u`.
    #[arg(long)]
    pub input: PathBuf,
    #[arg(long)]
    pub n: usize,
    #[arg(long)]
    pub k: usize,
    /// Exponent of ν in the test function.
    #[arg(long = "L", default_value_t = 4.0)]
    #[serde(rename = "L")]
    pub l: f64,
    #[command(flatten)]
    pub output: Output,
}

#[derive(Debug, Clone, Copy, ValueEnum, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum StratumArg {
    Interior,
    NearBoundary,
    Gap,
    HugeKappa1,
}

#[derive(Debug, Clone, Args, Serialize, Deserialize)]
pub struct SampleArgs {
    #[arg(long)]
    pub n: usize,
    #[arg(long)]
    pub k: usize,
    #[arg(long = "A", default_value_t = 1.0)]
    #[serde(rename = "A")]
    pub a: f64,
    #[arg(long = "B", default_value_t = 2.0)]
    #[serde(rename = "B")]
    pub b: f64,
    #[arg(long, value_enum, default_value_t = StratumArg::Interior)]
    pub stratum: StratumArg,
    /// Gap index l of the gap stratum.
    #[arg(long, default_value_t = 1)]
    pub l: usize,
    /// Gap size M of the gap stratum.
    #[arg(long = "M", default_value_t = 10.0)]
    #[serde(rename = "M")]
    pub m: f64,
    /// N of the huge-κ_1 stratum.
    #[arg(long = "N", default_value_t = 3.0)]
    #[serde(rename = "N")]
    pub big_n: f64,
    /// Extra large entries of the huge-κ_1 stratum.
    #[arg(long, default_value_t = 0)]
    pub spread: usize,
    /// Require κ_n < 0.
    #[arg(long)]
    pub negative_tail: bool,
    #[arg(long, default_value_t = 1000)]
    pub count: usize,
    #[arg(long, default_value_t = 42)]
    pub seed: u64,
    #[arg(long, default_value_t = gardingkit::cones::DEFAULT_RETRY_CAP)]
    pub retry_cap: u64,
    #[command(flatten)]
    pub output: Output,
}

#[derive(Debug, Clone, Args)]
pub struct ReplayArgs {
    /// Manifest written by an earlier run.
    #[arg(long)]
    pub manifest: PathBuf,
    /// Write outputs here instead of the recorded directory.
    #[arg(long)]
    pub out_dir: Option<PathBuf>,
}
