mod commands;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};

#[derive(Parser, Debug)]
#[command(name = "dropreg", version, about = "Dropout and feature-noising regularization for GLMs")]
pub struct Cli {
    /// Master seed; every command is deterministic given it.
    #[arg(long, global = true, default_value_t = 0)]
    pub seed: u64,

    /// Output path (model file for `train`, dataset for `simulate`, report otherwise).
    #[arg(long, global = true)]
    pub out: Option<PathBuf>,

    #[arg(long, global = true, value_enum, default_value_t = Format::Json)]
    pub format: Format,

    #[command(subcommand)]
    pub command: Command,
}

#[derive(ValueEnum, Clone, Copy, Debug, PartialEq, Eq)]
pub enum Format {
    Csv,
    Json,
}

#[derive(Subcommand, Debug)]
pub enum Command {
    /// Fit a model and save it as JSON.
    Train(TrainArgs),
    /// Score a saved model on a dataset.
    Eval(EvalArgs),
    /// Write a rare-feature simulation dataset.
    Simulate(SimulateArgs),
    /// L2 versus dropout on the rare-feature simulation.
    Table3(Table3Args),
    /// Monte Carlo penalty versus quadratic surrogate along a fit.
    Trace(TraceArgs),
    /// Compare squared-gradient and curvature Fisher diagonals.
    Fisher(FisherArgs),
    /// Exact versus quadratic penalty for one logistic margin.
    Fig1a,
    /// Semi-supervised experiments on synthetic two-topic documents.
    Semisup(SemisupArgs),
}

#[derive(ValueEnum, Clone, Copy, Debug, PartialEq, Eq)]
pub enum PenaltyArg {
    None,
    L2,
    Dropout,
    Additive,
}

#[derive(ValueEnum, Clone, Copy, Debug, PartialEq, Eq)]
pub enum SurrogateArg {
    /// Second-order surrogate.
    Quadratic,
    /// Exact penalty (enumeration or quadrature).
    Exact,
    /// Fixed-draw Monte Carlo approximation of the noised loss.
    Mc,
}

#[derive(ValueEnum, Clone, Copy, Debug, PartialEq, Eq)]
pub enum ScaleArg {
    None,
    /// Scale every column to unit sum of squares.
    Unit,
}

#[derive(Args, Debug)]
pub struct TrainArgs {
    #[arg(long, default_value = "logistic")]
    pub family: String,
    #[arg(long, value_enum, default_value_t = PenaltyArg::None)]
    pub penalty: PenaltyArg,
    #[arg(long)]
    pub lambda: Option<f64>,
    #[arg(long)]
    pub delta: Option<f64>,
    #[arg(long)]
    pub sigma2: Option<f64>,
    #[arg(long, value_enum, default_value_t = SurrogateArg::Quadratic)]
    pub surrogate: SurrogateArg,
    #[arg(long, default_value_t = 100)]
    pub mc_samples: usize,
    #[arg(long)]
    pub data: PathBuf,
    /// Unlabeled rows (labels ignored); switches to the semi-supervised penalty.
    #[arg(long)]
    pub unlabeled: Option<PathBuf>,
    #[arg(long)]
    pub alpha: Option<f64>,
    #[arg(long, value_enum, default_value_t = ScaleArg::None)]
    pub scale: ScaleArg,
    #[arg(long, default_value_t = 500)]
    pub max_iterations: usize,
    #[arg(long, default_value_t = 1e-6)]
    pub tolerance: f64,
    #[arg(long)]
    pub vocabulary: Option<String>,
}

#[derive(Args, Debug)]
pub struct EvalArgs {
    #[arg(long)]
    pub model: PathBuf,
    #[arg(long)]
    pub data: PathBuf,
    /// One 0/1 flag per row; only rows flagged 1 are scored.
    #[arg(long)]
    pub mask: Option<PathBuf>,
}

#[derive(Args, Debug)]
pub struct SimulateArgs {
    #[arg(long, default_value_t = 75)]
    pub n: usize,
    /// Also write the per-row signal flags (0/1 per line) here.
    #[arg(long)]
    pub mask_out: Option<PathBuf>,
}

#[derive(Args, Debug)]
pub struct Table3Args {
    #[arg(long, default_value_t = 100)]
    pub runs: usize,
    #[arg(long, default_value_t = 10_000)]
    pub n_test: usize,
}

#[derive(Args, Debug)]
pub struct TraceArgs {
    /// Logistic dataset to trace on; defaults to a seeded synthetic task.
    #[arg(long)]
    pub data: Option<PathBuf>,
    #[arg(long, default_value_t = 0.5)]
    pub delta: f64,
    #[arg(long, default_value_t = 1000)]
    pub samples: usize,
}

#[derive(Args, Debug)]
pub struct FisherArgs {
    #[arg(long, default_value_t = 50_000)]
    pub n: usize,
    #[arg(long, default_value_t = 1)]
    pub passes: usize,
    /// Learning rate for dropout descent.
    #[arg(long, default_value_t = 2.0)]
    pub eta: f64,
}

#[derive(ValueEnum, Clone, Copy, Debug, PartialEq, Eq)]
pub enum SemisupCheck {
    /// Held-out accuracy of semi-supervised versus supervised dropout.
    Accuracy,
    /// Error of the penalty estimators against the population penalty.
    Variance,
}

#[derive(Args, Debug)]
pub struct SemisupArgs {
    #[arg(long, value_enum, default_value_t = SemisupCheck::Accuracy)]
    pub check: SemisupCheck,
    #[arg(long)]
    pub trials: Option<usize>,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match commands::run(&cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(1)
        }
    }
}
