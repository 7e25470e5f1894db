use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};

#[derive(Debug, Parser)]
#[command(name = "polymer", version, about = "Tail experiments for a randomly charged polymer on Z^d")]
pub struct Cli {
    /// Flat `key = value` file; command-line flags take precedence.
    #[arg(long, global = true, value_name = "FILE")]
    pub config: Option<PathBuf>,

    /// Output file; relative paths resolve against $POLYMER_OUTPUT_DIR when set.
    #[arg(long, short = 'o', global = true, value_name = "PATH")]
    pub output: Option<PathBuf>,

    #[arg(long, global = true, value_enum)]
    pub format: Option<Format>,

    /// Worker threads; results do not depend on this.
    #[arg(long, global = true)]
    pub workers: Option<usize>,

    #[command(subcommand)]
    pub command: Command,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum Format {
    Json,
    Csv,
}

impl std::str::FromStr for Format {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        <Self as ValueEnum>::from_str(s, false)
    }
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Green function at the origin and the derived lattice constants.
    Constants(ConstantsArgs),
    /// Upper-tail rate constant, rate-function table and shape certificate.
    Rate(RateArgs),
    /// Per-sample energy summaries.
    Simulate(SimulateArgs),
    /// Exact, plain and tilted tail estimates, optionally with a rate curve.
    Tails(TailsArgs),
    /// Run the invariant suite.
    Verify(VerifyArgs),
}

#[derive(Debug, Args)]
pub struct DistArgs {
    /// gaussian, rademacher or example_family.
    #[arg(long)]
    pub dist: Option<String>,
    /// Gaussian variance.
    #[arg(long)]
    pub sigma: Option<f64>,
    /// Rescale a Gaussian to unit variance.
    #[arg(long)]
    pub standardize: bool,
    /// Mixture parameter `a > 0`.
    #[arg(long)]
    pub a: Option<f64>,
    /// Mixture parameter `beta > 1`.
    #[arg(long)]
    pub beta: Option<f64>,
}

#[derive(Debug, Args)]
pub struct ConstantsArgs {
    #[arg(short = 'd', long)]
    pub dimension: Option<usize>,
    /// Agreement required between two quadrature levels.
    #[arg(long)]
    pub tol: Option<f64>,
    /// Add a Monte Carlo return-frequency check.
    #[arg(long)]
    pub mc_check: bool,
    #[arg(long)]
    pub samples: Option<u64>,
    #[arg(long)]
    pub horizon: Option<u32>,
    #[arg(long)]
    pub seed: Option<u64>,
}

#[derive(Debug, Args)]
pub struct RateArgs {
    #[arg(short = 'd', long)]
    pub dimension: Option<usize>,
    #[command(flatten)]
    pub dist: DistArgs,
    /// Report the largest residual of `I(x) = x I'(x) - Γ(I'(x))` on a grid.
    #[arg(long)]
    pub identity_check: bool,
    /// Rows in the rate-function table.
    #[arg(long)]
    pub points: Option<usize>,
    /// Largest `x` in the rate-function table.
    #[arg(long)]
    pub x_max: Option<f64>,
}

#[derive(Debug, Args)]
pub struct SimulateArgs {
    #[arg(short = 'd', long)]
    pub dimension: Option<usize>,
    #[arg(short = 'n', long)]
    pub n: Option<usize>,
    #[arg(long)]
    pub samples: Option<u64>,
    #[arg(long)]
    pub seed: Option<u64>,
    #[command(flatten)]
    pub dist: DistArgs,
}

#[derive(Debug, Args)]
pub struct TailsArgs {
    /// exact, naive, tilted or all.
    #[arg(long)]
    pub method: Option<String>,
    #[arg(short = 'd', long)]
    pub dimension: Option<usize>,
    #[arg(short = 'n', long)]
    pub n: Option<usize>,
    /// Thresholds, comma separated.
    #[arg(long, value_delimiter = ',')]
    pub xi: Option<Vec<f64>>,
    #[arg(long)]
    pub samples: Option<u64>,
    #[arg(long)]
    pub seed: Option<u64>,
    #[command(flatten)]
    pub dist: DistArgs,
    /// centered, collective or fixed.
    #[arg(long)]
    pub plan: Option<String>,
    /// Tilt parameter for the fixed plan.
    #[arg(long)]
    pub theta: Option<f64>,
    /// Also emit `-log p̂ / √ξ_n` for `ξ_n = n^p` over `--n-list`.
    #[arg(long)]
    pub rate_curve: bool,
    #[arg(long, value_delimiter = ',')]
    pub n_list: Option<Vec<usize>>,
    /// Exponent `p` in `ξ_n = n^p`, within (2/3, 2).
    #[arg(long)]
    pub xi_power: Option<f64>,
}

#[derive(Debug, Args)]
pub struct VerifyArgs {
    /// Smaller sample budgets.
    #[arg(long)]
    pub quick: bool,
    /// Base seed of the stochastic checks; the suite has a fixed default.
    #[arg(long)]
    pub seed: Option<u64>,
}
