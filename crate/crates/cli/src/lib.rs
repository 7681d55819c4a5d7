//! Command-line harness: corpus/dataset ingestion, experiment grids, seed
//! management, and the recipe commands that turn a config into CSV/JSON
//! artifacts.

pub mod commands;
pub mod config;
pub mod csvout;
pub mod manifest;
pub mod parallel;

use clap::{Parser, Subcommand};

/// Errors mapped onto process exit codes: usage = 1, precondition or
/// hypothesis violation = 2, verifier failure = 3.
#[derive(Debug)]
pub enum CliError {
    Usage(String),
    Precondition(String),
    VerifierFailed(String),
}

impl CliError {
    pub fn code(&self) -> i32 {
        match self {
            CliError::Usage(_) => 1,
            CliError::Precondition(_) => 2,
            CliError::VerifierFailed(_) => 3,
        }
    }
}

impl std::fmt::Display for CliError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            CliError::Usage(m) => write!(f, "{m}"),
            CliError::Precondition(m) => write!(f, "precondition violated: {m}"),
            CliError::VerifierFailed(m) => write!(f, "verifier failed: {m}"),
        }
    }
}

impl std::error::Error for CliError {}

impl From<wmaudit_core::Error> for CliError {
    fn from(e: wmaudit_core::Error) -> Self {
        match e {
            wmaudit_core::Error::Io(_) | wmaudit_core::Error::Json(_) => {
                CliError::Usage(e.to_string())
            }
            other => CliError::Precondition(other.to_string()),
        }
    }
}

#[derive(Parser)]
#[command(
    name = "wmaudit",
    version,
    about = "Green/red-list watermark auditing over n-gram language models"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Subcommand)]
pub enum Command {
    /// Train and serialize n-gram models (one per duplication factor).
    Train(commands::train::TrainArgs),
    /// Relative perplexity increase of memorized samples per (scheme, prompt length).
    Memorization(commands::memorization::MemorizationArgs),
    /// Sweep watermark strength against memorization and generation quality.
    StrengthSweep(commands::sweep::SweepArgs),
    /// Run the attack suite over the watermark grid and report AUC drops.
    Mia(commands::mia::MiaArgs),
    /// Paired plain vs watermark-aware min-K comparison over length buckets.
    Adaptive(commands::adaptive::AdaptiveArgs),
    /// Closed-form generation bounds and their Monte-Carlo verifiers.
    Bounds(commands::bounds::BoundsArgs),
    /// Generate text from a trained model, optionally watermarked.
    Generate(commands::generate::GenerateArgs),
    /// Key-holder watermark detection via the green-fraction z-score.
    Detect(commands::detect::DetectArgs),
}

pub fn run(cli: Cli) -> Result<(), CliError> {
    match cli.command {
        Command::Train(args) => commands::train::run(&args.config.resolve()?).map(|_| ()),
        Command::Memorization(args) => {
            commands::memorization::run(&args.config.resolve()?).map(|_| ())
        }
        Command::StrengthSweep(args) => commands::sweep::run(&args.config.resolve()?).map(|_| ()),
        Command::Mia(args) => commands::mia::run(&args.config.resolve()?).map(|_| ()),
        Command::Adaptive(args) => commands::adaptive::run(&args.config.resolve()?).map(|_| ()),
        Command::Bounds(args) => commands::bounds::run(&args),
        Command::Generate(args) => commands::generate::run(&args),
        Command::Detect(args) => commands::detect::run(&args),
    }
}
