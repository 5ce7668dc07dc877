mod commands;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};

use selm_core::kernels::Kernel;
use selm_core::triplet::Scope;
use selm_core::tuning::Method;

#[derive(Parser)]
#[command(name = "selm", version, about = "Cohort-aware pair verification with Siamese ELMs")]
struct Cli {
    /// Master seed; every random stream of a command is derived from it.
    #[arg(long, global = true, default_value_t = 0)]
    seed: u64,

    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Write a synthetic six-cohort embedding file.
    Generate(GenerateArgs),
    /// Split an embedding file by identity into train, validation and test files.
    Split(SplitArgs),
    /// Build genuine and impostor pairs from an embedding file.
    Pairs(PairsArgs),
    /// Grid-search a pair verifier and save the best model.
    Train(TrainArgs),
    /// Train the full cohort-routed verification framework.
    Framework(FrameworkArgs),
    /// Per-cohort metrics of one or more models on a pairs file.
    Eval(EvalArgs),
    /// Run the scope and method comparison protocol on synthetic data.
    Bench(BenchArgs),
    /// Decide whether two embedding rows belong to the same identity.
    Verify(VerifyArgs),
}

#[derive(Args)]
struct GenerateArgs {
    #[arg(long, short)]
    out: PathBuf,
    /// Identities per cohort.
    #[arg(long, default_value_t = 10)]
    identities: usize,
    #[arg(long, default_value_t = 3)]
    poses: usize,
    #[arg(long, default_value_t = 8)]
    dim: usize,
    #[arg(long, default_value_t = 10.0)]
    separation: f64,
    #[arg(long, default_value_t = 1.0)]
    spread: f64,
    #[arg(long, default_value_t = 0.1)]
    noise: f64,
}

#[derive(Args)]
struct SplitArgs {
    #[arg(long, short)]
    input: PathBuf,
    /// Receives train.txt, validation.txt and test.txt.
    #[arg(long)]
    out_dir: PathBuf,
    #[arg(long, default_value_t = 0.6)]
    train: f64,
    #[arg(long, default_value_t = 0.1)]
    validation: f64,
    #[arg(long, default_value_t = 0.3)]
    test: f64,
}

#[derive(Args)]
struct PairsArgs {
    #[arg(long, short)]
    input: PathBuf,
    #[arg(long, short)]
    out: PathBuf,
    #[arg(long, default_value_t = 1.0)]
    negatives_per_positive: f64,
    /// Draw impostors from the same cohort only.
    #[arg(long)]
    same_cohort_negatives: bool,
}

#[derive(Clone, Copy, ValueEnum)]
enum KernelArg {
    Sigmoid,
    Rbf,
    Cosine,
    Euclidean,
}

#[derive(Clone, Copy, ValueEnum)]
enum WeightingArg {
    Balanced,
    Uniform,
}

#[derive(Args)]
struct TrainArgs {
    /// Training pairs file.
    #[arg(long)]
    train: PathBuf,
    /// Validation pairs file, used for threshold calibration and model selection.
    #[arg(long)]
    validation: PathBuf,
    #[arg(long, short)]
    out: PathBuf,
    /// Tuning log; defaults to the model path with a `.tuning.csv` suffix.
    #[arg(long)]
    log: Option<PathBuf>,
    /// distance, elm, welm-concat or selm-{sum,dist,mult,mean}.
    #[arg(long, default_value = "selm-dist", value_parser = parse_method)]
    method: Method,
    #[arg(long, value_enum, default_value = "euclidean")]
    kernel: KernelArg,
    /// Comma-separated regularisation values; defaults to 1e-6..1e6 in decades.
    #[arg(long, value_delimiter = ',')]
    c: Vec<f64>,
    /// Comma-separated hidden-node percentages; defaults to 10..100 in steps of 10.
    #[arg(long, value_delimiter = ',')]
    hidden: Vec<f64>,
    /// Comma-separated RBF widths; defaults to 1e-6..1e6 in decades.
    #[arg(long, value_delimiter = ',')]
    gamma: Vec<f64>,
    #[arg(long, value_enum, default_value = "balanced")]
    weighting: WeightingArg,
}

#[derive(Args)]
struct FrameworkArgs {
    /// Embedding file; it is split by identity internally.
    #[arg(long, short)]
    input: PathBuf,
    #[arg(long, short)]
    out: PathBuf,
    #[arg(long, default_value = "ged", value_parser = parse_scope)]
    scope: Scope,
    #[arg(long, default_value = "selm-dist", value_parser = parse_method)]
    method: Method,
    #[arg(long, value_enum, default_value = "euclidean")]
    kernel: KernelArg,
    #[arg(long, default_value_t = 1.0)]
    c: f64,
    #[arg(long, default_value_t = 20.0)]
    hidden: f64,
    #[arg(long, default_value_t = 1.0)]
    negatives_per_positive: f64,
    /// Also write held-out test pairs here, ready for `eval`.
    #[arg(long)]
    test_pairs: Option<PathBuf>,
}

#[derive(Clone, Copy, ValueEnum)]
enum ReportFormat {
    Csv,
    Kv,
}

#[derive(Args)]
struct EvalArgs {
    /// Model file; repeat for a repeated-runs summary.
    #[arg(long = "model", short, required = true)]
    models: Vec<PathBuf>,
    #[arg(long, short)]
    pairs: PathBuf,
    /// Defaults to stdout.
    #[arg(long, short)]
    out: Option<PathBuf>,
    #[arg(long, value_enum, default_value = "csv")]
    format: ReportFormat,
}

#[derive(Args)]
struct BenchArgs {
    #[arg(long, default_value_t = 10)]
    runs: usize,
    /// Identities per cohort in each run's synthetic population.
    #[arg(long, default_value_t = 20)]
    identities: usize,
    /// Triplet training epochs.
    #[arg(long)]
    epochs: Option<usize>,
    #[arg(long, short)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct VerifyArgs {
    /// A pair model or framework file.
    #[arg(long, short)]
    model: PathBuf,
    /// Embedding file holding both rows.
    #[arg(long, short)]
    embeddings: PathBuf,
    /// First row as `identity` or `identity:pose` (pose defaults to 0).
    #[arg(long)]
    a: String,
    /// Second row, same syntax.
    #[arg(long)]
    b: String,
}

fn parse_method(s: &str) -> Result<Method, String> {
    s.parse().map_err(|e: selm_core::Error| e.to_string())
}

fn parse_scope(s: &str) -> Result<Scope, String> {
    s.parse().map_err(|e: selm_core::Error| e.to_string())
}

impl KernelArg {
    fn kernel(self, gamma: f64) -> Kernel {
        match self {
            KernelArg::Sigmoid => Kernel::Sigmoid,
            KernelArg::Rbf => Kernel::Rbf { gamma },
            KernelArg::Cosine => Kernel::Cosine,
            KernelArg::Euclidean => Kernel::Euclidean,
        }
    }
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = Cli::parse();
    match commands::run(cli.command, cli.seed) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(2)
        }
    }
}
