use std::path::PathBuf;

use cdma_core::{GaussianIntegrator, SpreadingDistribution};
use clap::{Args, Parser, Subcommand};

use crate::values::Values;

#[derive(Debug, Parser)]
#[command(
    name = "cdma-lab",
    version,
    about = "Capacity bounds, exact enumeration and interpolation checks for randomly spread binary CDMA",
    args_override_self = true
)]
pub struct Cli {
    #[command(flatten)]
    pub common: Common,

    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Args)]
pub struct Common {
    /// CSV output path; the manifest goes to `<out>.manifest.json`.
    #[arg(long, global = true)]
    pub out: Option<PathBuf>,

    #[arg(long, global = true, default_value_t = 1)]
    pub seed: u64,

    /// Worker threads (default: CDMA_LAB_THREADS, then all cores).
    #[arg(long, global = true)]
    pub threads: Option<usize>,

    /// File of `key = value` lines; flags on the command line win.
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,

    /// Add bit-valued columns next to the nat-valued ones.
    #[arg(long, global = true)]
    pub bits: bool,

    /// Gaussian integration rule: `adaptive`, `adaptive:TOL` or `hermite:N`.
    #[arg(long, global = true, default_value = "adaptive")]
    pub quad: GaussianIntegrator,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Replica upper bound at each (beta, sigma2).
    Replica(ReplicaArgs),
    /// Fixed-point count and bound over a (beta, sigma2) grid.
    Phase(ReplicaArgs),
    /// Finite-size capacity by exact enumeration.
    Simulate(SimulateArgs),
    /// Fluctuations of the mutual information and free energy across matrices.
    Concentrate(ConcentrateArgs),
    /// Capacity under several spreading laws with shared randomness.
    Universality(UniversalityArgs),
    /// Finite-size capacity as the user count grows.
    Trend(TrendArgs),
    /// Free energy and derivative terms along the interpolation path.
    Interpolate(PathArgs),
    /// Gauge identity residuals of the interpolated system.
    Nishimori(PathArgs),
    /// Both sides of the free-energy sum rule.
    Sumrule(SumRuleArgs),
    /// Gaussian-input capacity: closed form against the replica saddle.
    Gaussian(GridArgs),
    /// Bound under AR(1) colored noise.
    Colored(ColoredArgs),
    /// Bound with unequal user powers.
    Powers(PowersArgs),
}

impl Command {
    pub fn name(&self) -> &'static str {
        match self {
            Command::Replica(_) => "replica",
            Command::Phase(_) => "phase",
            Command::Simulate(_) => "simulate",
            Command::Concentrate(_) => "concentrate",
            Command::Universality(_) => "universality",
            Command::Trend(_) => "trend",
            Command::Interpolate(_) => "interpolate",
            Command::Nishimori(_) => "nishimori",
            Command::Sumrule(_) => "sumrule",
            Command::Gaussian(_) => "gaussian",
            Command::Colored(_) => "colored",
            Command::Powers(_) => "powers",
        }
    }
}

#[derive(Debug, Args)]
pub struct GridArgs {
    /// Loads K/N; a list `a,b`, a range `a:b:n` or `log:a:b:n`.
    #[arg(long, default_value = "1")]
    pub beta: Values,

    /// Noise variances, same syntax as --beta.
    #[arg(long, default_value = "1")]
    pub sigma2: Values,
}

#[derive(Debug, Args)]
pub struct ReplicaArgs {
    #[command(flatten)]
    pub grid_args: GridArgs,

    /// Points of the root-bracketing grid on [0, 1].
    #[arg(long, default_value_t = cdma_core::replica::DEFAULT_GRID)]
    pub grid: usize,

    /// Report the functional with `ln 2cosh` in place of `ln cosh`.
    #[arg(long)]
    pub as_printed: bool,
}

#[derive(Debug, Args)]
pub struct Ensemble {
    #[arg(long, default_value_t = 1.0)]
    pub beta: f64,

    #[arg(long, default_value_t = 200)]
    pub matrices: usize,

    /// Noise realizations per matrix.
    #[arg(long, default_value_t = 4)]
    pub noise_draws: usize,

    /// Largest K that may be enumerated.
    #[arg(long, default_value_t = cdma_core::posterior::DEFAULT_K_MAX)]
    pub k_max: usize,
}

#[derive(Debug, Args)]
pub struct SimulateArgs {
    #[arg(long = "K", value_delimiter = ',', default_value = "8")]
    pub users: Vec<usize>,

    #[arg(long, default_value = "1")]
    pub sigma2: Values,

    /// Spreading law: gaussian, binary, uniform or `custom:v@p;...`.
    #[arg(long, default_value = "gaussian")]
    pub dist: SpreadingDistribution,

    #[command(flatten)]
    pub ensemble: Ensemble,
}

#[derive(Debug, Args)]
pub struct ConcentrateArgs {
    #[arg(long = "K", value_delimiter = ',', default_value = "8,12,16")]
    pub users: Vec<usize>,

    #[arg(long, default_value_t = 1.0)]
    pub sigma2: f64,

    /// Deviation thresholds for the tail frequencies, in nats.
    #[arg(long, value_delimiter = ',', default_value = "0.05,0.1")]
    pub epsilon: Vec<f64>,

    /// Spreading law: gaussian, binary, uniform or `custom:v@p;...`.
    #[arg(long, default_value = "gaussian")]
    pub dist: SpreadingDistribution,

    #[command(flatten)]
    pub ensemble: Ensemble,
}

#[derive(Debug, Args)]
pub struct UniversalityArgs {
    #[arg(long = "K", value_delimiter = ',', default_value = "4,8,16")]
    pub users: Vec<usize>,

    #[arg(long, default_value_t = 1.0)]
    pub sigma2: f64,

    /// Spreading laws to compare.
    #[arg(long = "dist", value_delimiter = ',', default_value = "gaussian,binary")]
    pub dists: Vec<SpreadingDistribution>,

    #[command(flatten)]
    pub ensemble: Ensemble,
}

#[derive(Debug, Args)]
pub struct TrendArgs {
    #[arg(long = "K", value_delimiter = ',', default_value = "4,8,12,16")]
    pub users: Vec<usize>,

    #[arg(long, default_value_t = 1.0)]
    pub sigma2: f64,

    /// Spreading law: gaussian, binary, uniform or `custom:v@p;...`.
    #[arg(long, default_value = "gaussian")]
    pub dist: SpreadingDistribution,

    #[command(flatten)]
    pub ensemble: Ensemble,
}

#[derive(Debug, Args)]
pub struct SystemArgs {
    #[arg(long = "K", default_value_t = 8)]
    pub users: usize,

    /// Chips per symbol (default: K).
    #[arg(long = "N")]
    pub chips: Option<usize>,

    #[arg(long, default_value_t = 1.0)]
    pub sigma2: f64,

    /// Interpolation parameter m (default: minimizer of the replica bound).
    #[arg(long)]
    pub m: Option<f64>,

    #[arg(long, default_value_t = 1000)]
    pub samples: usize,

    #[arg(long, default_value = "gaussian")]
    pub dist: SpreadingDistribution,

    #[arg(long, default_value_t = cdma_core::posterior::DEFAULT_K_MAX)]
    pub k_max: usize,
}

#[derive(Debug, Args)]
pub struct PathArgs {
    #[command(flatten)]
    pub system: SystemArgs,

    /// Path positions in [0, 1].
    #[arg(long, default_value = "0:1:11")]
    pub t: Values,

    /// Side-channel SNRs.
    #[arg(long, default_value = "0.1")]
    pub u: Values,

    /// Step of the central difference in t.
    #[arg(long, default_value_t = 1e-3)]
    pub delta: f64,
}

#[derive(Debug, Args)]
pub struct SumRuleArgs {
    #[command(flatten)]
    pub system: SystemArgs,

    #[arg(long, default_value = "0.05,0.0125")]
    pub u: Values,

    /// Trapezoid nodes for the remainder integral; must span [0, 1].
    #[arg(long, default_value = "0:1:21")]
    pub t_grid: Values,
}

#[derive(Debug, Args)]
pub struct ColoredArgs {
    #[command(flatten)]
    pub grid_args: GridArgs,

    /// AR(1) correlation coefficients; `sigma2` is the process power.
    #[arg(long, default_value = "0,0.5,0.9")]
    pub rho: Values,

    /// Frequency samples for the spectral averages.
    #[arg(long, default_value_t = 1024)]
    pub omega_grid: usize,
}

#[derive(Debug, Args)]
pub struct PowersArgs {
    #[command(flatten)]
    pub grid_args: GridArgs,

    /// Power profiles `P@p;P@p;...`, normalized to unit mean; repeat or
    /// separate with commas.
    #[arg(long, value_delimiter = ',', default_value = "1@1")]
    pub profile: Vec<String>,
}
