use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};

/// Voronoi-cell lattice navigation experiments.
#[derive(Debug, Parser)]
#[command(name = "vornav", version, about)]
pub struct Cli {
    #[command(flatten)]
    pub global: Global,

    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Clone, Args)]
pub struct Global {
    /// Seed for every random choice.
    #[arg(long, global = true, env = "VORNAV_SEED", default_value_t = 0)]
    pub seed: u64,

    /// Fractional bits of sampled points.
    #[arg(
        long,
        global = true,
        env = "VORNAV_PRECISION_BITS",
        default_value_t = 128
    )]
    pub precision_bits: u32,

    /// Largest dimension accepted for relevant-vector computation.
    #[arg(long, global = true, env = "VORNAV_DIM_CAP", default_value_t = vornav::lattice::DEFAULT_DIM_CAP)]
    pub dim_cap: usize,

    /// Output file; stdout when absent.
    #[arg(long, global = true, env = "VORNAV_OUT")]
    pub out: Option<PathBuf>,

    /// Output format; each command has its own default.
    #[arg(long, global = true, env = "VORNAV_FORMAT", value_enum)]
    pub format: Option<Format>,

    /// Cross-check answers against the enumeration oracle.
    #[arg(long, global = true, env = "VORNAV_CHECK")]
    pub check: bool,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Format {
    Csv,
    Json,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Write a basis file.
    Gen(GenArgs),
    /// Compute the relevant vectors of a basis and write a cache file.
    Preprocess(PreprocessArgs),
    /// Find a closest lattice vector to one target.
    Solve(SolveArgs),
    /// Count phase B and phase C crossings of the randomized straight line.
    Crossings(CrossingsArgs),
    /// Compare Voronoi-graph distances with the Voronoi norm.
    Graphdist(GraphdistArgs),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum GenKind {
    IntegerIdentity,
    RandomRational,
    FromFile,
}

#[derive(Debug, Args)]
pub struct GenArgs {
    #[arg(long, value_enum)]
    pub kind: GenKind,

    /// Dimension; required unless reading from a file.
    #[arg(long)]
    pub n: Option<usize>,

    /// Numerators are drawn from [-num-bound, num-bound].
    #[arg(long, default_value_t = 5)]
    pub num_bound: i64,

    /// Denominators are drawn from [1, den-bound].
    #[arg(long, default_value_t = 4)]
    pub den_bound: i64,

    /// Basis file for `from-file`.
    #[arg(long)]
    pub input: Option<PathBuf>,
}

/// Where the lattice comes from.
#[derive(Debug, Args)]
pub struct LatticeArgs {
    /// Basis JSON file.
    #[arg(long)]
    pub basis: PathBuf,

    /// Relevant-vector cache; read if present, written otherwise.
    #[arg(long)]
    pub cache: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct PreprocessArgs {
    #[command(flatten)]
    pub lattice: LatticeArgs,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Strategy {
    Rsl,
    Slicer,
    Mv,
    DeterministicLine,
}

impl Strategy {
    pub fn name(self) -> &'static str {
        match self {
            Strategy::Rsl => "rsl",
            Strategy::Slicer => "slicer",
            Strategy::Mv => "mv",
            Strategy::DeterministicLine => "deterministic-line",
        }
    }
}

#[derive(Debug, Args)]
pub struct SolveArgs {
    #[command(flatten)]
    pub lattice: LatticeArgs,

    /// Target as a JSON file or a comma-separated list such as `1/2,-3,0.25`.
    #[arg(long, allow_hyphen_values = true)]
    pub target: String,

    #[arg(long, value_enum, default_value_t = Strategy::Rsl)]
    pub strategy: Strategy,

    /// Starting point of the slicer and walk strategies.
    #[arg(long, value_enum, default_value_t = Start::Rounded)]
    pub start: Start,

    /// Edge budget for the walk strategies.
    #[arg(long)]
    pub max_edges: Option<usize>,

    /// Restart-threshold constant C of the rsl strategy.
    #[arg(long, default_value_t = vornav::cvpp::DEFAULT_RESTART_CONSTANT)]
    pub restart_constant: f64,

    /// Write the crossing events as JSON lines to this file.
    #[arg(long)]
    pub trace: Option<PathBuf>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Start {
    /// Start at the origin.
    Origin,
    /// Start at the rounding of the target in a basis of relevant vectors.
    Rounded,
}

impl Start {
    pub fn name(self) -> &'static str {
        match self {
            Start::Origin => "origin",
            Start::Rounded => "rounded",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum SamplerChoice {
    Rejection,
    HitAndRun,
}

#[derive(Debug, Args)]
pub struct CrossingsArgs {
    #[command(flatten)]
    pub lattice: LatticeArgs,

    #[arg(long, default_value_t = 100)]
    pub trials: u64,

    /// Target as a JSON file or a comma-separated list.
    #[arg(long, allow_hyphen_values = true)]
    pub target: String,

    /// Truncation parameter of phase C, e.g. `1/32`.
    #[arg(long, default_value = "1/32")]
    pub alpha: String,

    #[arg(long, value_enum, default_value_t = Start::Origin)]
    pub start: Start,

    /// Perturbation sampler; hit-and-run marks the run as exploratory.
    #[arg(long, value_enum, default_value_t = SamplerChoice::Rejection)]
    pub sampler: SamplerChoice,

    /// Hit-and-run steps per sample.
    #[arg(long)]
    pub steps: Option<u64>,

    /// Write the summary JSON here instead of stderr (csv format only).
    #[arg(long)]
    pub summary: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct GraphdistArgs {
    #[command(flatten)]
    pub lattice: LatticeArgs,

    /// `ball` for every y with d_G(0, y) <= cap, `random:K` for K random
    /// pairs, or explicit pairs `0,0;1,1|2,0;0,1` in basis coefficients.
    #[arg(long, default_value = "ball", allow_hyphen_values = true)]
    pub pairs: String,

    /// Largest graph distance explored by the search.
    #[arg(long, default_value_t = 3)]
    pub cap: u32,
}
