use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};
use eln_core::CenterStrategy;

use crate::output::Format;

#[derive(Debug, Parser)]
#[command(name = "eln", version, about = "Error loss network experiments")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Synthetic linear regression y = 2 x1 + x2 + noise, one row per method.
    SynthLinreg(SynthLinregArgs),
    /// Fit on a training CSV, report test RMSE.
    Regress(RegressArgs),
    /// Fit a one-hot classifier on a training CSV, report test accuracy.
    Classify(ClassifyArgs),
    /// Fit an ELN to an error sample and tabulate the loss next to the negated density.
    ElnDump(ElnDumpArgs),
    /// Cross-validated grid search on a CSV dataset.
    GridSearch(GridSearchArgs),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Centers {
    All,
    Random,
    Kmeans,
}

impl From<Centers> for CenterStrategy {
    fn from(c: Centers) -> Self {
        match c {
            Centers::All => CenterStrategy::AllSamples,
            Centers::Random => CenterStrategy::RandomSample,
            Centers::Kmeans => CenterStrategy::KMeans,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Features {
    Linear,
    Rvflnn,
    Rbf,
}

#[derive(Debug, Clone, Args)]
pub struct CommonArgs {
    /// Master seed; every random stream is derived from it.
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Output file (stdout when omitted).
    #[arg(long)]
    pub out: Option<PathBuf>,
    #[arg(long, value_enum)]
    pub format: Option<Format>,
}

/// Loss and solver settings. List-valued flags take comma-separated values;
/// commands that fit a single model reject lists.
#[derive(Debug, Clone, Args)]
pub struct ModelArgs {
    /// Kernel width σ (MCC, MCC-VC, KRSL, KMPE, QMEE; reference width for ELN).
    #[arg(long, value_delimiter = ',')]
    pub sigma: Vec<f64>,
    /// Scaled regularizer γ2′.
    #[arg(long, value_delimiter = ',')]
    pub gamma2: Vec<f64>,
    /// Ridge term of the PDF-matching solve.
    #[arg(long)]
    pub gamma1: Option<f64>,
    /// Number of ELN nodes.
    #[arg(long)]
    pub m: Option<usize>,
    /// Width perturbation variance (and width floor) of the ELN nodes.
    #[arg(long)]
    pub epsilon: Option<f64>,
    #[arg(long, value_enum, default_value_t = Centers::Random)]
    pub centers: Centers,
    /// Other hyperparameters as key=value, e.g. --param alpha=2 --param lambda=0.1.
    #[arg(long = "param", value_parser = parse_key_val)]
    pub params: Vec<(String, f64)>,
    #[arg(long, default_value_t = 50)]
    pub max_iter: usize,
    #[arg(long, default_value_t = 1e-7)]
    pub tol: f64,
}

fn parse_key_val(s: &str) -> Result<(String, f64), String> {
    let (k, v) = s.split_once('=').ok_or_else(|| format!("expected key=value, got {s:?}"))?;
    let v: f64 = v.trim().parse().map_err(|_| format!("{k}: {v:?} is not a number"))?;
    Ok((k.trim().to_string(), v))
}

#[derive(Debug, Clone, Args)]
pub struct FeatureArgs {
    /// Input map; defaults to rvflnn for regression and rbf for classification.
    #[arg(long, value_enum)]
    pub features: Option<Features>,
    /// Hidden units of the random-feature map.
    #[arg(long, default_value_t = 100)]
    pub hidden: usize,
    /// RBF width.
    #[arg(long, default_value_t = 1.0)]
    pub width: f64,
    /// Keep raw inputs instead of scaling them into [-1, 1] with training statistics.
    #[arg(long)]
    pub no_normalize: bool,
}

#[derive(Debug, Clone, Args)]
pub struct SynthLinregArgs {
    /// Noise case 1..4.
    #[arg(long, value_parser = clap::value_parser!(u8).range(1..=4))]
    pub case: u8,
    #[arg(long, default_value_t = 100)]
    pub runs: usize,
    /// Samples per run.
    #[arg(long, default_value_t = 500)]
    pub n: usize,
    /// Methods, comma-separated (default: all single-loss methods).
    #[arg(long, value_delimiter = ',')]
    pub loss: Vec<String>,
    /// Grid file; defaults to the shipped grids.
    #[arg(long)]
    pub config: Option<PathBuf>,
    /// Calibration instances pooled by the grid search.
    #[arg(long, default_value_t = 3)]
    pub calibration_sets: usize,
    #[command(flatten)]
    pub model: ModelArgs,
    #[command(flatten)]
    pub common: CommonArgs,
}

#[derive(Debug, Clone, Args)]
pub struct RegressArgs {
    #[arg(long)]
    pub train: PathBuf,
    #[arg(long)]
    pub test: PathBuf,
    /// Number of trailing target columns.
    #[arg(long, default_value_t = 1)]
    pub targets: usize,
    #[arg(long, default_value = "eln")]
    pub loss: String,
    #[command(flatten)]
    pub model: ModelArgs,
    #[command(flatten)]
    pub features: FeatureArgs,
    #[command(flatten)]
    pub common: CommonArgs,
}

#[derive(Debug, Clone, Args)]
pub struct ClassifyArgs {
    #[arg(long)]
    pub train: PathBuf,
    #[arg(long)]
    pub test: PathBuf,
    /// Fraction of training labels flipped to the next class.
    #[arg(long, default_value_t = 0.0)]
    pub label_noise: f64,
    #[arg(long, default_value = "eln")]
    pub loss: String,
    #[command(flatten)]
    pub model: ModelArgs,
    #[command(flatten)]
    pub features: FeatureArgs,
    #[command(flatten)]
    pub common: CommonArgs,
}

#[derive(Debug, Clone, Args)]
pub struct ElnDumpArgs {
    /// CSV whose first column holds the errors (header row expected).
    #[arg(long, conflicts_with = "case")]
    pub errors: Option<PathBuf>,
    /// Draw the errors from a synthetic noise case instead.
    #[arg(long, value_parser = clap::value_parser!(u8).range(1..=4))]
    pub case: Option<u8>,
    /// Sample size for --case.
    #[arg(long, default_value_t = 1000)]
    pub n: usize,
    #[arg(long, default_value_t = -10.0, allow_negative_numbers = true)]
    pub lo: f64,
    #[arg(long, default_value_t = 10.0, allow_negative_numbers = true)]
    pub hi: f64,
    #[arg(long, default_value_t = 401)]
    pub steps: usize,
    /// Also write an SVG plot here.
    #[arg(long)]
    pub svg: Option<PathBuf>,
    #[command(flatten)]
    pub model: ModelArgs,
    #[command(flatten)]
    pub common: CommonArgs,
}

#[derive(Debug, Clone, Args)]
pub struct GridSearchArgs {
    #[arg(long)]
    pub data: PathBuf,
    #[arg(long, default_value_t = 1)]
    pub targets: usize,
    #[arg(long, default_value = "eln")]
    pub loss: String,
    /// Grid file; defaults to the shipped grids. Flags override its entries.
    #[arg(long)]
    pub config: Option<PathBuf>,
    #[arg(long, default_value_t = 10)]
    pub folds: usize,
    /// Treat the target column as class labels and minimize the error rate.
    #[arg(long)]
    pub classify: bool,
    /// Write the full cross-validation table (CSV) here.
    #[arg(long)]
    pub table: Option<PathBuf>,
    #[command(flatten)]
    pub model: ModelArgs,
    #[command(flatten)]
    pub features: FeatureArgs,
    #[command(flatten)]
    pub common: CommonArgs,
}
