use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};

#[derive(Debug, Parser)]
#[command(name = "blocktau", version, about = "Kendall's tau matrices under a block structure")]
pub struct Cli {
    /// Worker threads; 0 picks one per core.
    #[arg(long, global = true, default_value_t = 0)]
    pub threads: usize,

    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Estimate the Kendall's tau matrix of a data file.
    Ktmatrix(KtArgs),
    /// Estimate conditional Kendall's tau matrices on a covariate grid.
    Cktmatrix(CktArgs),
    /// Finite-sample variance of an off-diagonal block estimator.
    Variance(VarianceArgs),
    /// Concordance probabilities P..U of one or two column pairs.
    Quantities(QuantitiesArgs),
    /// Positive definiteness of a two-block correlation matrix.
    Pdcheck(PdArgs),
    /// Value-at-Risk of a linear portfolio under an elliptical model.
    Var(VarArgs),
    /// Count VaR exceedances in a P&L series.
    Backtest(BacktestArgs),
    /// Run a simulation experiment from a JSON configuration.
    Simulate(SimulateArgs),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Scheme {
    Naive,
    Block,
    Row,
    #[value(alias = "diagonal")]
    Diag,
    Random,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Format {
    Csv,
    Json,
}

#[derive(Debug, Args)]
pub struct DataArgs {
    /// CSV file with one column per variable.
    pub data: PathBuf,
    /// The data file has no header line.
    #[arg(long)]
    pub no_header: bool,
    /// Fail on missing or non-finite values instead of dropping rows.
    #[arg(long)]
    pub strict: bool,
}

#[derive(Debug, Args)]
pub struct SchemeArgs {
    #[arg(long, value_enum, default_value_t = Scheme::Naive)]
    pub scheme: Scheme,
    /// Group file with `column,group` lines (name or 1-based index).
    #[arg(long)]
    pub groups: Option<PathBuf>,
    /// Averaging count N for row, diag and random schemes.
    #[arg(long = "N", alias = "n-avg")]
    pub n_avg: Option<usize>,
    /// Seed of the random scheme.
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
}

#[derive(Debug, Args)]
pub struct KtArgs {
    #[command(flatten)]
    pub data: DataArgs,
    #[command(flatten)]
    pub scheme: SchemeArgs,
    /// Output file; standard output when absent.
    #[arg(long)]
    pub out: Option<PathBuf>,
    #[arg(long, value_enum, default_value_t = Format::Csv)]
    pub format: Format,
}

#[derive(Debug, Args)]
pub struct CktArgs {
    #[command(flatten)]
    pub data: DataArgs,
    #[command(flatten)]
    pub scheme: SchemeArgs,
    /// Covariate columns, comma separated (names or 1-based indices).
    #[arg(long, required = true)]
    pub z_cols: String,
    /// `start:stop:step`, a value or a comma-separated list.
    #[arg(long)]
    pub grid: String,
    #[arg(long)]
    pub bandwidth: f64,
    /// epanechnikov, triangular, uniform, or a `u,k` CSV file.
    #[arg(long, default_value = "epanechnikov")]
    pub kernel: String,
    #[arg(long)]
    pub out: Option<PathBuf>,
    #[arg(long, value_enum, default_value_t = Format::Json)]
    pub format: Format,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Limit {
    Finite,
    Large,
}

#[derive(Debug, Args)]
pub struct VarianceArgs {
    /// Data file; quantities are estimated for the requested block.
    pub data: Option<PathBuf>,
    #[arg(long)]
    pub no_header: bool,
    #[arg(long)]
    pub strict: bool,
    /// JSON request with quantities, n, g1, g2, N and scheme.
    #[arg(long, conflicts_with = "data")]
    pub quantities: Option<PathBuf>,
    #[command(flatten)]
    pub scheme: SchemeArgs,
    /// Block as `k1,k2` (1-based group ids).
    #[arg(long, default_value = "1,2")]
    pub block: String,
    /// Rows used for pair-level quantities; all rows when absent.
    #[arg(long)]
    pub pair_rows: Option<usize>,
    /// Also report the asymptotic variance constant.
    #[arg(long, value_enum)]
    pub asymptotic: Option<Limit>,
}

#[derive(Debug, Args)]
pub struct QuantitiesArgs {
    #[command(flatten)]
    pub data: DataArgs,
    /// First pair `a,b` (names or 1-based indices).
    #[arg(long)]
    pub pair: String,
    /// Second pair for R..U.
    #[arg(long)]
    pub pair2: Option<String>,
}

#[derive(Debug, Args)]
pub struct PdArgs {
    #[arg(long)]
    pub b1: usize,
    #[arg(long)]
    pub b2: usize,
    #[arg(long, allow_negative_numbers = true)]
    pub rho1: f64,
    #[arg(long, allow_negative_numbers = true)]
    pub rho2: f64,
    #[arg(long, allow_negative_numbers = true)]
    pub rho3: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Exponent {
    #[value(name = "+1/5", alias = "positive", alias = "0.2")]
    Positive,
    #[value(name = "-1/5", alias = "negative", alias = "-0.2")]
    Negative,
}

#[derive(Debug, Args)]
pub struct VarArgs {
    /// Returns data; mean and covariance are estimated from it.
    pub data: Option<PathBuf>,
    #[arg(long)]
    pub no_header: bool,
    #[arg(long)]
    pub strict: bool,
    /// Covariance matrix CSV (as written by `ktmatrix`), instead of data.
    #[arg(long, conflicts_with = "data")]
    pub sigma: Option<PathBuf>,
    /// Mean vector, comma separated; zero when absent.
    #[arg(long, allow_hyphen_values = true)]
    pub mu: Option<String>,
    /// Portfolio weights, comma separated.
    #[arg(long, allow_hyphen_values = true)]
    pub weights: String,
    #[arg(long, default_value_t = 0.05)]
    pub alpha: f64,
    /// gaussian, t:<nu>, or a `u,g` CSV file.
    #[arg(long, default_value = "gaussian")]
    pub generator: String,
    /// Exponent of n in the bandwidth rule for the radii.
    #[arg(long, value_enum, default_value_t = Exponent::Positive, allow_hyphen_values = true)]
    pub silverman_exponent: Exponent,
    #[command(flatten)]
    pub scheme: SchemeArgs,
    /// Repair an indefinite correlation estimate.
    #[arg(long)]
    pub repair: bool,
}

#[derive(Debug, Args)]
pub struct BacktestArgs {
    #[command(flatten)]
    pub data: DataArgs,
    /// Column holding the P&L (name or 1-based index).
    #[arg(long, default_value = "1")]
    pub column: String,
    /// VaR level (a positive loss).
    #[arg(long = "var", allow_negative_numbers = true)]
    pub var_level: f64,
    #[arg(long, default_value_t = 0.05)]
    pub alpha: f64,
}

#[derive(Debug, Args)]
pub struct SimulateArgs {
    /// Experiment configuration (JSON).
    pub config: PathBuf,
    /// Long-format CSV output; standard output when absent.
    #[arg(long)]
    pub csv: Option<PathBuf>,
    /// JSON summary output.
    #[arg(long)]
    pub json: Option<PathBuf>,
}
