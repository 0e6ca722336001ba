use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};

#[derive(Debug, Parser)]
#[command(name = "fastpls", version, about = "Partial least squares with fast cross-validation")]
pub struct Cli {
    /// Worker threads for parallel kernels (default: all cores).
    #[arg(long, global = true, env = "FASTPLS_THREADS")]
    pub threads: Option<usize>,

    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Fit a model and write it with a fit report.
    Fit(FitArgs),
    /// Predict responses for new rows with a saved model.
    Predict(PredictArgs),
    /// Cross-validate the component count, then refit on all rows.
    Cv(CvArgs),
    /// Export per-fold training products.
    Cvmatrix(CvMatrixArgs),
    /// Time the fast and naive fold-product paths on synthetic data.
    Bench(BenchArgs),
    /// Weighted column statistics.
    Stats(StatsArgs),
    /// Fit a bias/scale line taking predictions onto references.
    Calibrate(CalibrateArgs),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum WeightSource {
    None,
    /// One weight per row, read from --weights-file.
    Column,
    /// Balanced class weights from the class labels in Y.
    BalancedClasses,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum ZeroVariance {
    Error,
    Unit,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Algorithm {
    Ikpls1,
    Ikpls2,
    Nipals,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum ProductMode {
    Retained,
    Streaming,
}

#[derive(Debug, Clone, Args)]
pub struct DataArgs {
    /// Predictor matrix (CSV).
    #[arg(long)]
    pub x: PathBuf,
    /// Response matrix (CSV).
    #[arg(long)]
    pub y: PathBuf,
    /// Treat the first CSV line as column names.
    #[arg(long)]
    pub header: bool,
    #[arg(long, value_enum, default_value = "none")]
    pub weights: WeightSource,
    /// Single-column CSV of row weights, used with `--weights column`.
    #[arg(long)]
    pub weights_file: Option<PathBuf>,
    /// Column flags, a comma set over cx, cy, sx, sy.
    #[arg(long, default_value = "none")]
    pub flags: String,
    /// Row-wise preprocessing, e.g. "snv|savgol:w=7,p=2,d=1|center_x".
    #[arg(long, default_value = "")]
    pub pipeline: String,
    #[arg(long, value_enum, default_value = "error")]
    pub zero_variance: ZeroVariance,
}

#[derive(Debug, Args)]
pub struct FitArgs {
    #[command(flatten)]
    pub data: DataArgs,
    #[arg(long)]
    pub amax: usize,
    #[arg(long, value_enum, default_value = "ikpls1")]
    pub algorithm: Algorithm,
    #[arg(long)]
    pub out_dir: PathBuf,
}

#[derive(Debug, Args)]
pub struct PredictArgs {
    #[arg(long)]
    pub model: PathBuf,
    #[arg(long)]
    pub x: PathBuf,
    #[arg(long)]
    pub header: bool,
    /// Component count (default: all fitted components).
    #[arg(long)]
    pub a: Option<usize>,
    /// Write decoded class labels instead of responses.
    #[arg(long)]
    pub classes: bool,
    #[arg(long)]
    pub out_dir: PathBuf,
}

#[derive(Debug, Args)]
pub struct CvArgs {
    #[command(flatten)]
    pub data: DataArgs,
    /// Number of folds, or "loo" for leave-one-out.
    #[arg(long)]
    pub folds: String,
    #[arg(long)]
    pub amax: usize,
    #[arg(long, default_value = "rmse")]
    pub metric: String,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Stratify folds by the class labels in Y.
    #[arg(long)]
    pub stratify: bool,
    #[arg(long, default_value = "fast")]
    pub engine: String,
    #[arg(long)]
    pub out_dir: PathBuf,
}

#[derive(Debug, Args)]
pub struct CvMatrixArgs {
    #[command(flatten)]
    pub data: DataArgs,
    #[arg(long)]
    pub folds: String,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long, value_enum, default_value = "retained")]
    pub mode: ProductMode,
    #[arg(long)]
    pub out_dir: PathBuf,
}

#[derive(Debug, Args)]
pub struct BenchArgs {
    #[arg(long, default_value_t = 5000)]
    pub n: usize,
    #[arg(long, default_value_t = 100)]
    pub k: usize,
    #[arg(long, default_value_t = 1)]
    pub m: usize,
    /// Comma-separated fold counts.
    #[arg(long, default_value = "2,10,100", value_delimiter = ',')]
    pub p: Vec<usize>,
    #[arg(long, default_value = "cx,cy,sx,sy")]
    pub flags: String,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Timing repeats per point; the minimum is reported.
    #[arg(long, default_value_t = 3)]
    pub repeats: usize,
    #[arg(long)]
    pub out_dir: PathBuf,
}

#[derive(Debug, Args)]
pub struct StatsArgs {
    #[arg(long)]
    pub x: PathBuf,
    /// Class responses, needed for `--weights balanced-classes`.
    #[arg(long)]
    pub y: Option<PathBuf>,
    #[arg(long)]
    pub header: bool,
    #[arg(long, value_enum, default_value = "none")]
    pub weights: WeightSource,
    #[arg(long)]
    pub weights_file: Option<PathBuf>,
    #[arg(long)]
    pub out_dir: PathBuf,
}

#[derive(Debug, Args)]
pub struct CalibrateArgs {
    /// Single-column CSV of predictions.
    #[arg(long)]
    pub pred: PathBuf,
    /// Single-column CSV of reference values.
    #[arg(long)]
    pub reference: PathBuf,
    #[arg(long)]
    pub header: bool,
    /// Where the predictions came from: train, validation or train+validation.
    #[arg(long)]
    pub source: String,
    /// Predictions to correct with the fitted line.
    #[arg(long)]
    pub apply: Option<PathBuf>,
    #[arg(long)]
    pub out_dir: PathBuf,
}
