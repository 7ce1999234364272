mod commands;
mod report;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use ruleprob::approx::SimplifyStrategy;

/// Rule-based exact and bounded inference for discrete Bayesian networks.
#[derive(Parser)]
#[command(name = "ruleprob", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Check that a model is a well-formed rule base.
    Validate(ValidateArgs),
    /// Rewrite tables as rules, or exact rules as tables.
    Convert(ConvertArgs),
    /// Merge rules and report per-variable rule counts.
    Compress(CompressArgs),
    /// Compute a posterior with one of the exact engines.
    Infer(InferArgs),
    /// Simplify the model, then bound the posterior.
    Bounds(BoundsArgs),
    /// Cross-check the engines on random queries.
    Compare(CompareArgs),
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum Format {
    Table,
    Record,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum Engine {
    Ve,
    Rules,
    Enum,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum Strategy {
    Drop,
    Resolve,
    Both,
}

impl Strategy {
    pub fn core(self) -> SimplifyStrategy {
        match self {
            Strategy::Drop => SimplifyStrategy::Drop,
            Strategy::Resolve => SimplifyStrategy::Resolve,
            Strategy::Both => SimplifyStrategy::Both,
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            Strategy::Drop => "drop",
            Strategy::Resolve => "resolve",
            Strategy::Both => "both",
        }
    }
}

#[derive(Args)]
pub struct Output {
    #[arg(long, value_enum, default_value_t = Format::Table)]
    pub format: Format,
}

#[derive(Args)]
pub struct Query {
    #[arg(long, value_name = "VAR")]
    pub query: String,
    #[arg(long = "evidence", value_name = "VAR=VAL")]
    pub evidence: Vec<String>,
    /// `auto` for min-degree, or a comma-separated list of variables.
    #[arg(long, value_name = "auto|LIST", default_value = "auto")]
    pub order: String,
}

#[derive(Args)]
pub struct Simplify {
    #[arg(long, default_value_t = 0.1)]
    pub threshold: f64,
    #[arg(long, value_enum, default_value_t = Strategy::Both)]
    pub strategy: Strategy,
    /// Refuse merges whose interval would reach into the neighbourhood of 0 or 1.
    #[arg(long)]
    pub extreme_guard: bool,
}

#[derive(Args)]
pub struct ValidateArgs {
    #[arg(long)]
    pub model: PathBuf,
    #[command(flatten)]
    pub output: Output,
}

#[derive(Args)]
pub struct ConvertArgs {
    #[arg(long)]
    pub model: PathBuf,
    /// Write the converted model here instead of standard output.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Args)]
pub struct CompressArgs {
    #[arg(long)]
    pub model: PathBuf,
    #[arg(long, default_value_t = 0.0)]
    pub threshold: f64,
    #[arg(long)]
    pub extreme_guard: bool,
    /// Write the compressed rule base here.
    #[arg(long)]
    pub out: Option<PathBuf>,
    #[command(flatten)]
    pub output: Output,
}

#[derive(Args)]
pub struct InferArgs {
    #[arg(long)]
    pub model: PathBuf,
    #[command(flatten)]
    pub query: Query,
    #[arg(long, value_enum, default_value_t = Engine::Rules)]
    pub engine: Engine,
    #[command(flatten)]
    pub output: Output,
    /// Also write the record report here.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Args)]
pub struct BoundsArgs {
    #[arg(long)]
    pub model: PathBuf,
    #[command(flatten)]
    pub query: Query,
    #[command(flatten)]
    pub simplify: Simplify,
    #[command(flatten)]
    pub output: Output,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Args)]
pub struct CompareArgs {
    #[arg(long)]
    pub model: PathBuf,
    #[arg(long, default_value_t = 100)]
    pub trials: usize,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[command(flatten)]
    pub simplify: Simplify,
    #[command(flatten)]
    pub output: Output,
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// Test fixture: push every bound away from the reference posterior.
    #[arg(long, hide = true)]
    pub corrupt_bounds: bool,
}

/// Why a command stopped; each maps to one exit status.
#[derive(Debug)]
pub enum Failure {
    Violation(String),
    Input(String),
    Impossible,
}

impl Failure {
    fn code(&self) -> u8 {
        match self {
            Failure::Violation(_) => 1,
            Failure::Input(_) => 2,
            Failure::Impossible => 3,
        }
    }
}

impl From<ruleprob::Error> for Failure {
    fn from(e: ruleprob::Error) -> Self {
        match e {
            ruleprob::Error::ImpossibleEvidence => Failure::Impossible,
            e => Failure::Input(e.to_string()),
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let argv: Vec<String> = std::env::args().skip(1).collect();
    let result = match cli.command {
        Command::Validate(a) => commands::validate(&a, &argv),
        Command::Convert(a) => commands::convert(&a),
        Command::Compress(a) => commands::compress(&a, &argv),
        Command::Infer(a) => commands::infer(&a, &argv),
        Command::Bounds(a) => commands::bounds(&a, &argv),
        Command::Compare(a) => commands::compare(&a, &argv),
    };
    match result {
        Ok(code) => ExitCode::from(code),
        Err(f) => {
            match &f {
                Failure::Violation(m) | Failure::Input(m) => eprintln!("error: {}", m),
                Failure::Impossible => eprintln!("error: the evidence has probability zero"),
            }
            ExitCode::from(f.code())
        }
    }
}
