use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};

#[derive(Debug, Parser)]
#[command(name = "rknn-tsvm", version, about = "Train and evaluate KNN-weighted twin support vector machines")]
pub struct Cli {
    /// Log progress to stderr.
    #[arg(short, long, global = true)]
    pub verbose: bool,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Train a model on a CSV file and save it.
    Train(TrainArgs),
    /// Predict a CSV file with a saved model.
    Predict(PredictArgs),
    /// k-fold cross-validation of one parameter setting.
    Cv(CvArgs),
    /// Exhaustive grid search scored by k-fold cross-validation.
    Gridsearch(GridArgs),
    /// Training-time comparison on generated data of growing size.
    Bench(BenchArgs),
    /// Write a synthetic dataset.
    Gen(GenArgs),
    /// Write neighbor lists, sample weights, margin flags and a fold plan.
    Diag(DiagArgs),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Algo {
    Tsvm,
    Wltsvm,
    Rknn,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Knn {
    Fsa,
    Ldmdba,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Kernel {
    Linear,
    Gaussian,
}

#[derive(Debug, Clone, Args)]
pub struct DataArgs {
    /// Input CSV.
    #[arg(long)]
    pub data: PathBuf,
    /// Label column: `first`, `last`, a zero-based index or a header name.
    #[arg(long, default_value = "first")]
    pub label_col: String,
    /// Label values, e.g. `M=+1,B=-1`. Defaults to numeric 1/-1 (0 also -1).
    #[arg(long)]
    pub label_map: Option<String>,
}

#[derive(Debug, Clone, Args)]
pub struct ModelArgs {
    #[arg(long, value_enum, default_value = "rknn")]
    pub algo: Algo,
    /// Neighbor search for the weight graphs.
    #[arg(long, value_enum, default_value = "fsa")]
    pub knn: Knn,
    /// Penalty of the slack terms (TSVM: positive plane).
    #[arg(long)]
    pub c1: Option<f64>,
    /// Stabilizer of the positive plane (TSVM: penalty of the negative plane).
    #[arg(long)]
    pub c2: Option<f64>,
    /// Stabilizer of the negative plane.
    #[arg(long)]
    pub c3: Option<f64>,
    /// Single penalty; shorthand for WLTSVM, same as --c1.
    #[arg(long, conflicts_with = "c1")]
    pub c: Option<f64>,
    #[arg(long, default_value_t = 5)]
    pub k: usize,
    #[arg(long, value_enum, default_value = "gaussian")]
    pub kernel: Kernel,
    /// Gaussian width in exp(-|x-y|^2 / (2 sigma^2)).
    #[arg(long, conflicts_with = "gamma")]
    pub sigma: Option<f64>,
    /// Gaussian coefficient in exp(-gamma |x-y|^2).
    #[arg(long)]
    pub gamma: Option<f64>,
    /// Fraction of training rows used as kernel basis.
    #[arg(long, default_value_t = 1.0)]
    pub rect_ratio: f64,
    /// Use the unsquared distance in the Gaussian exponent.
    #[arg(long)]
    pub unsquared: bool,
    /// Keep every opposite-class row in the constraints.
    #[arg(long)]
    pub no_filter: bool,
    /// Solver stopping tolerance.
    #[arg(long, default_value_t = 1e-5)]
    pub tol: f64,
}

#[derive(Debug, Args)]
#[command(allow_negative_numbers = true)]
pub struct TrainArgs {
    #[command(flatten)]
    pub data: DataArgs,
    #[command(flatten)]
    pub model: ModelArgs,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Model file to write.
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Args)]
pub struct PredictArgs {
    #[command(flatten)]
    pub data: DataArgs,
    #[arg(long)]
    pub model: PathBuf,
    /// Per-sample CSV: index, predicted label, distances to both planes.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args)]
#[command(allow_negative_numbers = true)]
pub struct CvArgs {
    #[command(flatten)]
    pub data: DataArgs,
    #[command(flatten)]
    pub model: ModelArgs,
    #[arg(long, default_value_t = 5)]
    pub folds: usize,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Accuracy table CSV.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args)]
#[command(allow_negative_numbers = true)]
pub struct GridArgs {
    #[command(flatten)]
    pub data: DataArgs,
    #[command(flatten)]
    pub model: ModelArgs,
    #[arg(long, default_value_t = 5)]
    pub folds: usize,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Grid points evaluated concurrently.
    #[arg(long, default_value_t = 1)]
    pub jobs: usize,
    /// Penalty exponents of 2, `LO:HI`.
    #[arg(long, default_value = "-8:2", allow_hyphen_values = true)]
    pub penalty_exp: String,
    /// Gaussian coefficient exponents of 2, `LO:HI`.
    #[arg(long, default_value = "-10:2", conflicts_with = "sigma_exp", allow_hyphen_values = true)]
    pub gamma_exp: String,
    /// Gaussian width exponents of 2, `LO:HI`, instead of --gamma-exp.
    #[arg(long, allow_hyphen_values = true)]
    pub sigma_exp: Option<String>,
    /// Neighbor counts, `LO:HI`.
    #[arg(long, default_value = "2:15")]
    pub k_range: String,
    /// Search c2 and c3 independently.
    #[arg(long)]
    pub untie_c2_c3: bool,
    /// Name of the dataset column in the output table.
    #[arg(long)]
    pub name: Option<String>,
    /// Best-result table CSV.
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// Every grid point with its accuracy.
    #[arg(long)]
    pub points_out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct BenchArgs {
    /// Training-set sizes, comma separated.
    #[arg(long, value_delimiter = ',', default_value = "1000,2000,5000")]
    pub sizes: Vec<usize>,
    #[arg(long, default_value_t = 32)]
    pub dims: usize,
    /// Distance between the two class means.
    #[arg(long, default_value_t = 2.0)]
    pub separation: f64,
    #[arg(long, value_enum, default_value = "gaussian")]
    pub kernel: Kernel,
    /// Fraction of training rows used as kernel basis.
    #[arg(long, default_value_t = 0.1)]
    pub rect_ratio: f64,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Timing table CSV.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Generator {
    Checkerboard,
    Mixture,
}

#[derive(Debug, Args)]
pub struct GenArgs {
    #[arg(value_enum)]
    pub generator: Generator,
    #[arg(long, default_value_t = 1000)]
    pub n: usize,
    /// Checkerboard cells per side.
    #[arg(long, default_value_t = 4)]
    pub cells: usize,
    /// Mixture dimension.
    #[arg(long, default_value_t = 32)]
    pub dims: usize,
    /// Mixture mean distance.
    #[arg(long, default_value_t = 2.0)]
    pub separation: f64,
    /// Size of an extra mixture test set.
    #[arg(long, default_value_t = 0)]
    pub n_test: usize,
    /// Where the test set goes; required with --n-test.
    #[arg(long)]
    pub test_out: Option<PathBuf>,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Args)]
pub struct DiagArgs {
    #[command(flatten)]
    pub data: DataArgs,
    #[arg(long, value_enum, default_value = "fsa")]
    pub knn: Knn,
    #[arg(long, default_value_t = 5)]
    pub k: usize,
    /// Search space of the neighbor graph.
    #[arg(long, value_enum, default_value = "linear")]
    pub kernel: Kernel,
    #[arg(long, conflicts_with = "gamma")]
    pub sigma: Option<f64>,
    #[arg(long)]
    pub gamma: Option<f64>,
    #[arg(long, default_value_t = 5)]
    pub folds: usize,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Output directory.
    #[arg(long)]
    pub out: PathBuf,
}
