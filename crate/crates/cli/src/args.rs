use std::path::PathBuf;

use clap::{Args, Parser, Subcommand};

#[derive(Debug, Parser)]
#[command(name = "ritzkit", version, about = "Deep Ritz experiments with ReLU networks")]
pub struct Cli {
    #[command(flatten)]
    pub global: GlobalArgs,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Clone, Default, Args)]
pub struct GlobalArgs {
    /// TOML run configuration; flags override its values.
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
    /// Output directory.
    #[arg(long, global = true)]
    pub out: Option<PathBuf>,
    /// Global seed (falls back to the config file, then RITZKIT_SEED, then 0).
    #[arg(long, global = true)]
    pub seed: Option<u64>,
    /// Worker threads (0: one per core).
    #[arg(long, global = true)]
    pub jobs: Option<usize>,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Train a ladder of networks on a manufactured case.
    Solve(SolveArgs),
    /// Compare parameter gradients with central finite differences.
    Gradcheck(GradcheckArgs),
    /// Spread of Monte-Carlo energy estimates across seeds and sample sizes.
    McCheck(McCheckArgs),
    /// Exact CPWL-to-network constructions against direct evaluation.
    Pwl(PwlArgs),
    /// Sobolev error of Kuhn interpolants across mesh widths.
    Interp(InterpArgs),
}

#[derive(Debug, Clone, Default, Args)]
pub struct SolveArgs {
    #[arg(long)]
    pub case: Option<String>,
    #[arg(long)]
    pub rungs: Option<usize>,
    #[arg(long, value_delimiter = ',')]
    pub widths: Option<Vec<usize>>,
    #[arg(long, value_delimiter = ',')]
    pub lambdas: Option<Vec<f64>>,
    #[arg(long, value_delimiter = ',')]
    pub deltas: Option<Vec<f64>>,
    /// Step budget of every rung.
    #[arg(long)]
    pub steps: Option<usize>,
    /// Record wall time (outputs are then no longer byte-identical).
    #[arg(long)]
    pub timing: bool,
}

#[derive(Debug, Clone, Default, Args)]
pub struct GradcheckArgs {
    #[arg(long)]
    pub nets: Option<usize>,
    /// Negative control: flips the sign of one analytic gradient entry.
    #[arg(long, hide = true)]
    pub inject_bug: bool,
}

#[derive(Debug, Clone, Default, Args)]
pub struct McCheckArgs {
    #[arg(long)]
    pub case: Option<String>,
    /// Interior sample sizes.
    #[arg(long, value_delimiter = ',')]
    pub n: Option<Vec<usize>>,
    #[arg(long)]
    pub seeds: Option<usize>,
}

#[derive(Debug, Clone, Default, Args)]
pub struct PwlArgs {
    /// Hat at 0.5 on (0, 1).
    #[arg(long)]
    pub hat: bool,
    #[arg(long, value_delimiter = ',', allow_hyphen_values = true)]
    pub knots: Option<Vec<f64>>,
    #[arg(long, value_delimiter = ',', allow_hyphen_values = true)]
    pub values: Option<Vec<f64>>,
    /// Maximum and minimum of this many random affine maps.
    #[arg(long)]
    pub affines: Option<usize>,
    #[arg(long)]
    pub dim: Option<usize>,
    #[arg(long)]
    pub points: Option<usize>,
}

#[derive(Debug, Clone, Default, Args)]
pub struct InterpArgs {
    /// Standard mollifier bump (the only fixture).
    #[arg(long)]
    pub bump: bool,
    #[arg(long, value_delimiter = ',')]
    pub deltas: Option<Vec<f64>>,
    #[arg(long, value_delimiter = ',')]
    pub p: Option<Vec<f64>>,
    #[arg(long, value_delimiter = ',')]
    pub dim: Option<Vec<usize>>,
    #[arg(long)]
    pub resolution: Option<usize>,
}
