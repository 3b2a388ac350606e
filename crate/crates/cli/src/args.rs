use std::path::PathBuf;

use clap::{Args, Parser, Subcommand};
use sketchlab::Family;

/// Random sketching experiments: bounds, distortion sweeps, complexity,
/// recovery and calibration.
#[derive(Parser, Debug)]
#[command(name = "sketchlab", version, args_override_self = true)]
pub struct Cli {
    #[command(flatten)]
    pub global: Global,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Args, Debug, Clone)]
pub struct Global {
    /// JSON document whose keys mirror the flags; flags given on the command
    /// line take precedence.
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
    /// Seed for every random draw.
    #[arg(long, global = true, env = "SKETCHLAB_SEED")]
    pub seed: Option<u64>,
    /// Worker threads for trial-parallel commands.
    #[arg(long, global = true)]
    pub jobs: Option<usize>,
    /// Output file; stdout when absent.
    #[arg(long, global = true)]
    pub out: Option<PathBuf>,
    /// Constant `C` of the bound formulas.
    #[arg(long = "C", global = true, default_value_t = 1.0)]
    pub c_const: f64,
    /// Subgaussian parameter; defaults to the family's value.
    #[arg(long, global = true)]
    pub alpha: Option<f64>,
}

#[derive(Subcommand, Debug)]
pub enum Command {
    /// Evaluate a target-dimension bound.
    #[command(args_override_self = true)]
    Bound(BoundArgs),
    /// Measure the distortion of sketches on a set.
    #[command(args_override_self = true)]
    Distort(DistortArgs),
    /// Sweep `m` and report median distortion and failure rates.
    #[command(args_override_self = true)]
    Phase(PhaseArgs),
    /// Dudley bound and Monte Carlo Gaussian width of a sampled set.
    #[command(args_override_self = true)]
    Width(WidthArgs),
    /// Projected Landweber recovery from sketched measurements.
    #[command(args_override_self = true)]
    Recover(RecoverArgs),
    /// Calibrate `C` on a benchmark.
    #[command(args_override_self = true)]
    Calibrate(CalibrateArgs),
    /// Check the chord inequalities on random samples.
    #[command(args_override_self = true)]
    Props(PropsArgs),
}

pub const COMMANDS: [&str; 7] = ["bound", "distort", "phase", "width", "recover", "calibrate", "props"];

#[derive(Args, Debug, Clone)]
pub struct BoundArgs {
    /// Bound variant, e.g. jl_finite, sparse, matrix, manifold_curves.
    #[arg(long, required_unless_present = "batch")]
    pub model: Option<String>,
    /// CSV with a `model` column and one column per parameter; one output
    /// row per input row.
    #[arg(long)]
    pub batch: Option<PathBuf>,
    /// Take `alpha` from this family instead of 1.
    #[arg(long)]
    pub family: Option<Family>,
    /// Covering profile for a Dudley bound on γ2, as JSON.
    #[arg(long)]
    pub profile: Option<String>,
    #[command(flatten)]
    pub params: BoundParamArgs,
}

macro_rules! param_args {
    ($($field:ident),* $(,)?) => {
        #[derive(Args, Debug, Clone, Default)]
        pub struct BoundParamArgs {
            $(
                #[arg(long)]
                pub $field: Option<String>,
            )*
        }

        impl BoundParamArgs {
            pub fn pairs(&self) -> Vec<(&'static str, &str)> {
                let mut out = Vec::new();
                $(
                    if let Some(v) = &self.$field {
                        out.push((stringify!($field), v.as_str()));
                    }
                )*
                out
            }
        }
    };
}

param_args!(
    eps, delta, zeta, kappa, eta, points, gamma2, radius, diameter, pieces, n0, c, dim, n, s, l, p, n1, n2, r, dims,
    ranks, k2, k_fin, tau, iota, volume, doubling,
);

/// Description of a structured set.
#[derive(Args, Debug, Clone)]
pub struct SetArgs {
    /// gaussian_cloud, points_file, sparse, cosparse, low_rank, tucker,
    /// rotating_plane, coordinate_uos, circle, sphere or helix.
    #[arg(long = "set")]
    pub kind: String,
    /// Ambient dimension.
    #[arg(long)]
    pub n: Option<usize>,
    /// Sparsity, or subspace dimension of a coordinate union.
    #[arg(long)]
    pub s: Option<usize>,
    /// Cosparsity.
    #[arg(long)]
    pub l: Option<usize>,
    /// Size of a gaussian cloud.
    #[arg(long)]
    pub points: Option<usize>,
    #[arg(long)]
    pub n1: Option<usize>,
    #[arg(long)]
    pub n2: Option<usize>,
    /// Rank of a low-rank set.
    #[arg(long)]
    pub r: Option<usize>,
    /// Tensor dimensions, e.g. `4;4;4`.
    #[arg(long)]
    pub dims: Option<String>,
    /// Tucker ranks, e.g. `2;2;2`.
    #[arg(long)]
    pub ranks: Option<String>,
    #[arg(long)]
    pub radius: Option<f64>,
    /// Helix radius.
    #[arg(long)]
    pub a: Option<f64>,
    /// Helix pitch.
    #[arg(long)]
    pub b: Option<f64>,
    /// Ambient dimension of a manifold (defaults to `n`, then the smallest).
    #[arg(long)]
    pub ambient: Option<usize>,
    /// CSV of points, one per row.
    #[arg(long)]
    pub points_file: Option<PathBuf>,
    /// Seed of a gaussian cloud; defaults to the run seed.
    #[arg(long)]
    pub set_seed: Option<u64>,
}

#[derive(Args, Debug, Clone)]
pub struct DistortArgs {
    #[command(flatten)]
    pub set: SetArgs,
    #[arg(long, default_value = "gaussian")]
    pub family: Family,
    #[arg(long)]
    pub m: usize,
    #[arg(long, default_value_t = 1)]
    pub trials: usize,
    /// Monte Carlo sample count.
    #[arg(long, default_value_t = 1000)]
    pub samples: usize,
}

#[derive(Args, Debug, Clone)]
pub struct PhaseArgs {
    #[command(flatten)]
    pub set: SetArgs,
    #[arg(long, default_value = "gaussian")]
    pub family: Family,
    /// `start:stop:step`, inclusive of `stop` when aligned.
    #[arg(long)]
    pub m_grid: String,
    #[arg(long, default_value_t = 20)]
    pub trials: usize,
    /// Distortion level counted as a failure when exceeded.
    #[arg(long, default_value_t = 0.25)]
    pub target: f64,
    #[arg(long, default_value_t = 1000)]
    pub samples: usize,
}

#[derive(Args, Debug, Clone)]
pub struct WidthArgs {
    #[command(flatten)]
    pub set: SetArgs,
    /// Points sampled from the set.
    #[arg(long, default_value_t = 2000)]
    pub samples: usize,
    /// Gaussian draws for the width.
    #[arg(long, default_value_t = 2000)]
    pub g_trials: usize,
    /// Dyadic net radii `Δ·2^{-k}`, `k = 1..levels`, for the Dudley bound.
    #[arg(long, default_value_t = 12)]
    pub levels: usize,
}

#[derive(Args, Debug, Clone)]
pub struct RecoverArgs {
    /// Sketch matrix CSV as written by the library; generated when absent.
    #[arg(long)]
    pub sketch: Option<PathBuf>,
    #[arg(long, default_value = "gaussian")]
    pub family: Family,
    #[arg(long)]
    pub m: Option<usize>,
    #[arg(long)]
    pub n: Option<usize>,
    /// Measurements, one value per line.
    #[arg(long)]
    pub y: Option<PathBuf>,
    /// Ground-truth signal; measurements are computed from it when `--y`
    /// is absent and the relative error is reported.
    #[arg(long)]
    pub signal: Option<PathBuf>,
    /// sparse or uos.
    #[arg(long, default_value = "sparse")]
    pub model: String,
    #[arg(long)]
    pub s: Option<usize>,
    /// JSON list of subspaces, each a list of spanning vectors.
    #[arg(long)]
    pub subspaces: Option<PathBuf>,
    #[arg(long, default_value_t = 1.0)]
    pub step: f64,
    /// fixed or normalized.
    #[arg(long, default_value = "fixed")]
    pub rule: String,
    #[arg(long, default_value_t = 100)]
    pub max_iters: usize,
    #[arg(long, default_value_t = 1e-10)]
    pub tol: f64,
    /// Measured distortion on the model differences, for the bilipschitz check.
    #[arg(long)]
    pub bilipschitz_eps: Option<f64>,
    /// Where to write the JSON run summary.
    #[arg(long)]
    pub summary: Option<PathBuf>,
}

#[derive(Args, Debug, Clone)]
pub struct CalibrateArgs {
    /// jl, sparse or curve.
    #[arg(long)]
    pub benchmark: String,
    #[arg(long, default_value = "gaussian")]
    pub family: Family,
    #[arg(long)]
    pub n: Option<usize>,
    #[arg(long)]
    pub points: Option<usize>,
    #[arg(long)]
    pub s: Option<usize>,
    /// Ambient dimension of the curve benchmark.
    #[arg(long)]
    pub ambient: Option<usize>,
    #[arg(long)]
    pub radius: Option<f64>,
    /// Seed of the JL cloud; defaults to the run seed.
    #[arg(long)]
    pub cloud_seed: Option<u64>,
    #[arg(long)]
    pub eps: Option<f64>,
    #[arg(long)]
    pub delta: Option<f64>,
    #[arg(long)]
    pub eta: f64,
    #[arg(long)]
    pub gamma2: Option<f64>,
    #[arg(long, default_value_t = 50)]
    pub trials: usize,
    /// Largest `m` worth running; defaults to four times the ambient dimension.
    #[arg(long)]
    pub max_m: Option<u64>,
    #[arg(long, default_value_t = 1000)]
    pub samples: usize,
}

#[derive(Args, Debug, Clone)]
pub struct PropsArgs {
    /// chords (both suites), long or short.
    #[arg(long)]
    pub suite: String,
    #[arg(long, default_value_t = 100_000)]
    pub samples: usize,
    /// Ambient dimension of the long-chord quadruples.
    #[arg(long, default_value_t = 5)]
    pub dim: usize,
    /// Minimal chord length of the long-chord suite.
    #[arg(long, default_value_t = 0.5)]
    pub t: f64,
    /// Circle radius (the reach) of the short-chord suite.
    #[arg(long, default_value_t = 1.0)]
    pub radius: f64,
}
