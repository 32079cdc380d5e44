//! `duq`: synthetic data, toy-model training and sampling, uncertainty
//! metrics, and uncertainty-filtered ICP from the command line.
//!
//! Exit codes: 0 success, 1 usage error, 2 data or format error.
//! `DUQ_THREADS` caps the worker pool (0 or unset = one per core).

mod error;
mod evaluate;
mod meta;
mod model;
mod registration;
mod synth;
mod tabular;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};

use error::{CliError, Result};

#[derive(Parser)]
#[command(
    name = "duq",
    version,
    about = "Uncertainty quantification for depth regression"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Generate synthetic regression data, depth scenes, or cloud pairs.
    Synth(SynthArgs),
    /// Train a toy regressor (or an ensemble of them) on a CSV table.
    Train(TrainArgs),
    /// Draw predictive samples by MC dropout or from an ensemble.
    Predict(PredictArgs),
    /// Moment-match a sample set into a Gaussian prediction.
    Fuse(FuseArgs),
    /// Depth, calibration, and sparsification metrics against ground truth.
    Eval(EvalArgs),
    /// Lift a depth raster and its sigma to an uncertain point cloud.
    Backproject(BackprojectArgs),
    /// Align two clouds after keeping their most certain points.
    Icp(IcpArgs),
    /// ICP pose errors over certainty percentiles for a set of pairs.
    Sweep(SweepArgs),
}

#[derive(Clone, Copy, ValueEnum)]
pub enum SynthKind {
    Regress1d,
    Depthscene,
    Pairset,
}

#[derive(Args)]
pub struct SynthArgs {
    #[arg(long, value_enum)]
    pub kind: SynthKind,
    /// Points (regress1d), images (depthscene), or pairs (pairset).
    #[arg(long)]
    pub n: usize,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// regress1d: hetero | homo | zero. pairset: corrupt | clean.
    #[arg(long)]
    pub noise: Option<String>,
    #[arg(long)]
    pub out_dir: PathBuf,
}

#[derive(Args)]
pub struct TrainArgs {
    /// Layer sizes from input to output, e.g. 1,32,32,2.
    #[arg(long, default_value = "1,32,32,2")]
    pub config: String,
    /// Hidden layers that get dropout: none, first_half, second_half, all,
    /// first_layer, last_layer.
    #[arg(long, default_value = "none")]
    pub dropout: String,
    /// Dropout rate.
    #[arg(long, default_value_t = 0.1)]
    pub p: f64,
    /// CSV table with a header row.
    #[arg(long)]
    pub data: PathBuf,
    /// Feature columns, comma-separated.
    #[arg(long, value_delimiter = ',', default_value = "x")]
    pub features: Vec<String>,
    #[arg(long, default_value = "y")]
    pub target: String,
    #[arg(long, default_value_t = 100)]
    pub epochs: usize,
    #[arg(long, default_value_t = 64)]
    pub batch: usize,
    #[arg(long, default_value_t = 1e-3)]
    pub lr: f64,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Train this many members with seeds seed, seed+1, ...; `--out` is then
    /// a directory. Members never use dropout.
    #[arg(long, default_value_t = 1)]
    pub members: usize,
    /// Checkpoint file, or a directory when `--members` > 1.
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum PredictMode {
    Mcdropout,
    Ensemble,
}

#[derive(Args)]
pub struct PredictArgs {
    /// Checkpoint with dropout layers (MC dropout).
    #[arg(long, conflicts_with = "ensemble")]
    pub model: Option<PathBuf>,
    /// Directory of member checkpoints (`*.duqm`).
    #[arg(long)]
    pub ensemble: Option<PathBuf>,
    /// Defaults to the mode implied by `--model` or `--ensemble`.
    #[arg(long, value_enum)]
    pub mode: Option<PredictMode>,
    /// Stochastic passes for MC dropout; ensembles use one per member.
    #[arg(long, default_value_t = 32)]
    pub samples: usize,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// CSV feature table, or a DUQ1 raster with one plane per feature.
    #[arg(long)]
    pub input: PathBuf,
    /// Feature columns for CSV input.
    #[arg(long, value_delimiter = ',', default_value = "x")]
    pub features: Vec<String>,
    /// Sample set (DUQ1, depth/sigma plane pairs).
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Args)]
pub struct FuseArgs {
    /// Sample set (DUQ1).
    #[arg(long)]
    pub input: PathBuf,
    /// Prediction (DUQ1 planes: mean, epistemic, aleatoric, total variance).
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Args)]
pub struct EvalArgs {
    /// Predictions or sample sets, one per image.
    #[arg(long, num_args = 1.., required = true)]
    pub pred: Vec<PathBuf>,
    /// Ground-truth depth rasters, matching `--pred` in order.
    #[arg(long, num_args = 1.., required = true)]
    pub gt: Vec<PathBuf>,
    /// Comma-separated subset of depth,auce,ause.
    #[arg(long, default_value = "depth,auce,ause")]
    pub metrics: String,
    /// pooled | per-image.
    #[arg(long, default_value = "pooled")]
    pub aggregate: String,
    /// Report path; printed to stdout when omitted.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Args)]
pub struct BackprojectArgs {
    /// Depth raster (a depth plane, optional mask) or a prediction.
    #[arg(long)]
    pub depth: PathBuf,
    /// Raster with a sigma plane, or a prediction. Defaults to `--depth`.
    #[arg(long)]
    pub sigma: Option<PathBuf>,
    #[arg(long)]
    pub fx: f64,
    #[arg(long)]
    pub fy: f64,
    #[arg(long)]
    pub cx: f64,
    #[arg(long)]
    pub cy: f64,
    #[arg(long, default_value_t = 1)]
    pub stride: usize,
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Args)]
pub struct IcpOptions {
    #[arg(long, default_value_t = 50)]
    pub max_iter: usize,
    /// Stop when the correspondence RMSE changes by less than this (m).
    #[arg(long, default_value_t = 1e-6)]
    pub tol: f64,
    /// Correspondence gate in meters; default is 5x the target's median
    /// point spacing.
    #[arg(long)]
    pub max_corr_dist: Option<f64>,
}

#[derive(Args)]
pub struct IcpArgs {
    #[arg(long)]
    pub source: PathBuf,
    #[arg(long)]
    pub target: PathBuf,
    /// Fraction of most certain points kept in both clouds.
    #[arg(long, default_value_t = 1.0)]
    pub percentile: f64,
    #[command(flatten)]
    pub icp: IcpOptions,
    /// Result JSON; printed to stdout when omitted.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Args)]
pub struct SweepArgs {
    /// Pair manifest written by `synth --kind pairset`.
    #[arg(long)]
    pub pairs: PathBuf,
    #[arg(
        long,
        value_delimiter = ',',
        default_value = ".30,.50,.75,.90,.95,.99,1.00"
    )]
    pub percentiles: Vec<f64>,
    #[command(flatten)]
    pub icp: IcpOptions,
    /// CSV path; printed to stdout when omitted.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

fn configure_threads() -> Result<()> {
    let Some(raw) = std::env::var_os("DUQ_THREADS") else {
        return Ok(());
    };
    let n: usize = raw
        .to_str()
        .and_then(|s| s.trim().parse().ok())
        .ok_or_else(|| {
            CliError::Usage(format!(
                "DUQ_THREADS must be a non-negative integer, got {raw:?}"
            ))
        })?;
    rayon::ThreadPoolBuilder::new()
        .num_threads(n)
        .build_global()
        .map_err(|e| CliError::Usage(format!("cannot start {n} worker threads: {e}")))
}

fn run(cli: Cli) -> Result<()> {
    configure_threads()?;
    match cli.command {
        Command::Synth(a) => synth::run(a),
        Command::Train(a) => model::train(a),
        Command::Predict(a) => model::predict(a),
        Command::Fuse(a) => model::fuse(a),
        Command::Eval(a) => evaluate::run(a),
        Command::Backproject(a) => registration::backproject(a),
        Command::Icp(a) => registration::icp(a),
        Command::Sweep(a) => registration::sweep(a),
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { 1 } else { 0 });
        }
    };
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}
