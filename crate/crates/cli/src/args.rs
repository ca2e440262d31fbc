use std::path::PathBuf;

use clap::{Args, Parser, Subcommand};

pub const EXIT_CODES: &str = "\
Exit codes:
  0  success
  1  other failure (degenerate input, dimension mismatch, ...)
  2  usage or configuration error
  3  I/O or parse failure
  4  numerical divergence during training or valuation

Errors are printed as one line: `gradval: error[<kind>]: <message>`.";

#[derive(Debug, Parser)]
#[command(name = "gradval", version, about = "Data valuation with gradient similarity", after_help = EXIT_CODES)]
pub struct Cli {
    /// Worker threads for parallel stages (defaults to all cores).
    #[arg(long, global = true, value_name = "N")]
    pub jobs: Option<usize>,

    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Generate a synthetic dataset CSV.
    Synth(SynthArgs),
    /// Corrupt labels or features of a dataset CSV and record the ground truth.
    Corrupt(CorruptArgs),
    /// Compute data values of a source set against a target set.
    Value(ValueArgs),
    /// Score values against recorded corruption (always uses the negated values).
    Evaluate(EvaluateArgs),
    /// Retrain after removing the lowest- or highest-valued samples.
    FilterCurve(FilterCurveArgs),
    /// Fraction of corrupted samples found when inspecting lowest values first.
    Discovery(DiscoveryArgs),
    /// Average Pearson correlation of replicate groups in a CSV.
    Apc(ApcArgs),
    /// Execute a full experiment plan and write a result bundle.
    Run(RunArgs),
}

#[derive(Debug, Args)]
pub struct SynthArgs {
    /// Generator: labelled Gaussian blobs or unlabelled low-rank data.
    #[arg(long, default_value = "classification", value_parser = ["classification", "lowrank"])]
    pub kind: String,
    /// Number of samples.
    #[arg(long, default_value_t = 2000)]
    pub n: usize,
    /// Number of features.
    #[arg(long, default_value_t = 40)]
    pub d: usize,
    /// Number of classes (classification only).
    #[arg(long, default_value_t = 2)]
    pub classes: usize,
    /// Distance between class means in within-class standard deviations.
    #[arg(long, default_value_t = 8.0)]
    pub separation: f64,
    /// Latent dimension (lowrank only).
    #[arg(long, default_value_t = 8)]
    pub rank: usize,
    /// Random seed.
    #[arg(long, env = "GRADVAL_SEED", default_value_t = 0)]
    pub seed: u64,
    /// Output dataset CSV.
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Args)]
pub struct CorruptArgs {
    /// Input dataset CSV.
    #[arg(long)]
    pub data: PathBuf,
    /// Flip labels or add per-sample Gaussian feature noise.
    #[arg(long, value_parser = ["labels", "features"])]
    pub kind: String,
    /// Fraction of labels to flip.
    #[arg(long, default_value_t = 0.2)]
    pub proportion: f64,
    /// Upper bound of the per-sample noise standard deviations.
    #[arg(long, default_value_t = 1.0)]
    pub phi_max: f64,
    /// Fraction of samples that receive feature noise.
    #[arg(long, default_value_t = 1.0)]
    pub fraction: f64,
    /// Random seed.
    #[arg(long, env = "GRADVAL_SEED", default_value_t = 0)]
    pub seed: u64,
    /// Output CSV of the corrupted dataset.
    #[arg(long)]
    pub out: PathBuf,
    /// Output CSV of the corruption record [default: <out stem>.corruption.csv].
    #[arg(long)]
    pub record: Option<PathBuf>,
}

/// Plan-file and `key=value` overrides shared by the model-based commands.
#[derive(Debug, Args, Default)]
pub struct ConfigArgs {
    /// Plan file with `key = value` lines; command-line flags take precedence.
    #[arg(long, value_name = "FILE")]
    pub config: Option<PathBuf>,
    /// Override a plan key, e.g. `--set valuation.period=2`; repeatable.
    #[arg(long = "set", value_name = "KEY=VALUE")]
    pub set: Vec<String>,
}

#[derive(Debug, Args, Default)]
pub struct ValuationArgs {
    /// Valuation method.
    #[arg(long, value_parser = ["dvgs", "dvgs-unsupervised", "loo", "tmc-shapley", "exact-shapley", "random"])]
    pub method: Option<String>,
    /// Gradient similarity kernel.
    #[arg(long, value_parser = ["cosine", "euclidean", "dot", "projection"])]
    pub similarity: Option<String>,
    /// Valuation iterations.
    #[arg(long)]
    pub iters: Option<usize>,
    /// Valuation learning rate.
    #[arg(long)]
    pub lr: Option<f64>,
    /// Target mini-batch size.
    #[arg(long)]
    pub batch: Option<usize>,
    /// Compare gradients every T-th iteration.
    #[arg(long, value_name = "T")]
    pub period: Option<usize>,
    /// Independent valuation runs to average.
    #[arg(long)]
    pub runs: Option<usize>,
    /// Base seed [env: GRADVAL_SEED].
    #[arg(long, env = "GRADVAL_SEED", hide_env = true)]
    pub seed: Option<u64>,
    /// Source samples per gradient chunk (bounds memory).
    #[arg(long)]
    pub chunk: Option<usize>,
    /// Weight the target loss by inverse class frequency.
    #[arg(long)]
    pub balance_classes: bool,
    /// Parameters compared: all, last-layer, or `+`-joined tensor names.
    #[arg(long)]
    pub params: Option<String>,
}

#[derive(Debug, Args, Default)]
pub struct ModelArgs {
    /// Network type.
    #[arg(long, value_parser = ["classifier", "autoencoder"])]
    pub model: Option<String>,
    /// Comma-separated hidden layer widths.
    #[arg(long)]
    pub hidden: Option<String>,
    /// Hidden activation.
    #[arg(long, value_parser = ["relu", "mish"])]
    pub activation: Option<String>,
    /// Dropout rate of hidden layers.
    #[arg(long)]
    pub dropout: Option<f64>,
    /// Standardize each input sample across its features.
    #[arg(long)]
    pub instance_norm: bool,
}

#[derive(Debug, Args, Default)]
pub struct TrainArgs {
    /// Epochs when training models (retraining, LOO and Shapley utilities).
    #[arg(long)]
    pub epochs: Option<usize>,
    /// Learning rate when training models.
    #[arg(long)]
    pub train_lr: Option<f64>,
    /// Mini-batch size when training models.
    #[arg(long)]
    pub train_batch: Option<usize>,
}

#[derive(Debug, Args, Default)]
pub struct ShapleyArgs {
    /// Permutations sampled by TMC Shapley.
    #[arg(long)]
    pub budget: Option<usize>,
    /// TMC truncation tolerance.
    #[arg(long)]
    pub tolerance: Option<f64>,
}

#[derive(Debug, Args)]
pub struct ValueArgs {
    /// Source dataset CSV (the samples being valued).
    #[arg(long)]
    pub source: PathBuf,
    /// Target dataset CSV (clean reference data).
    #[arg(long)]
    pub target: PathBuf,
    /// Output values CSV; the resolved configuration goes to `<out stem>.plan`.
    #[arg(long)]
    pub out: PathBuf,
    #[command(flatten)]
    pub valuation: ValuationArgs,
    #[command(flatten)]
    pub model: ModelArgs,
    #[command(flatten)]
    pub train: TrainArgs,
    #[command(flatten)]
    pub shapley: ShapleyArgs,
    #[command(flatten)]
    pub config: ConfigArgs,
}

#[derive(Debug, Args)]
pub struct EvaluateArgs {
    /// Values CSV.
    #[arg(long)]
    pub values: PathBuf,
    /// Corruption record CSV.
    #[arg(long)]
    pub corruption: PathBuf,
    /// Metric [default: auroc for flipped labels, spearman for feature noise].
    #[arg(long, value_parser = ["auroc", "spearman"])]
    pub metric: Option<String>,
    /// Output report JSON (printed to stdout when omitted).
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct FilterCurveArgs {
    /// Source dataset CSV the values refer to.
    #[arg(long)]
    pub source: PathBuf,
    /// Held-out test dataset CSV.
    #[arg(long)]
    pub test: PathBuf,
    /// Values CSV.
    #[arg(long)]
    pub values: PathBuf,
    /// Comma-separated fractions to remove.
    #[arg(long, default_value = "0,0.1,0.2,0.3")]
    pub grid: String,
    /// Remove the lowest or highest values; repeatable [default: both].
    #[arg(long, value_parser = ["lowest", "highest"])]
    pub direction: Vec<String>,
    /// Retraining seeds per fraction.
    #[arg(long, default_value_t = 1)]
    pub repeats: usize,
    /// Base seed [env: GRADVAL_SEED].
    #[arg(long, env = "GRADVAL_SEED", hide_env = true)]
    pub seed: Option<u64>,
    /// Output curve CSV.
    #[arg(long)]
    pub out: PathBuf,
    #[command(flatten)]
    pub model: ModelArgs,
    #[command(flatten)]
    pub train: TrainArgs,
    #[command(flatten)]
    pub config: ConfigArgs,
}

#[derive(Debug, Args)]
pub struct DiscoveryArgs {
    /// Values CSV.
    #[arg(long)]
    pub values: PathBuf,
    /// Corruption record CSV.
    #[arg(long)]
    pub corruption: PathBuf,
    /// Comma-separated inspected fractions.
    #[arg(long, default_value = "0,0.1,0.2,0.3,0.4,0.5,0.6,0.7,0.8,0.9,1")]
    pub grid: String,
    /// Output curve CSV.
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Args)]
pub struct ApcArgs {
    /// CSV with a group-id column and one feature profile per row.
    #[arg(long)]
    pub data: PathBuf,
    /// Name of the group-id column.
    #[arg(long, default_value = "group")]
    pub group_column: String,
    /// Output report JSON (printed to stdout when omitted).
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct RunArgs {
    /// Experiment plan file [default: the built-in synthetic benchmark].
    #[arg(long, value_name = "FILE")]
    pub plan: Option<PathBuf>,
    /// Override a plan key, e.g. `--set replicates=3`; repeatable.
    #[arg(long = "set", value_name = "KEY=VALUE")]
    pub set: Vec<String>,
    /// Directory that receives the result bundle.
    #[arg(long, default_value = "runs")]
    pub out: PathBuf,
    #[command(flatten)]
    pub valuation: ValuationArgs,
    #[command(flatten)]
    pub model: ModelArgs,
    #[command(flatten)]
    pub train: TrainArgs,
    #[command(flatten)]
    pub shapley: ShapleyArgs,
}
