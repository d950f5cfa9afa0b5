//! Command-line harness: run sessions, evaluate them against human panels,
//! generate benchmark pieces, and inspect data.
//!
//! Exit codes: 0 success, 1 runtime or evaluation failure, 2 usage or
//! configuration error.

use std::ffi::OsString;
use std::path::PathBuf;

use clap::{Args, Parser, Subcommand};

use coggpt::agent_core::AgentKind;
use coggpt::llm_provider::ProviderMode;

pub mod commands;
pub mod config;

pub use config::RunConfig;

#[derive(Debug, Parser)]
#[command(name = "coggpt", version, about = "Iterative cognitive agents on dynamic information flows")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Run agent sessions over a benchmark.
    Run(RunArgs),
    /// Score session logs against human ratings.
    Eval(EvalArgs),
    /// Generate benchmark material.
    #[command(subcommand)]
    Gen(GenCommand),
    /// Check a benchmark for structural problems.
    Validate(BenchArg),
    /// Print per-category word-count statistics.
    Stats(BenchArg),
    /// Summarize a transcript, optionally against a session log.
    ReplayInspect(InspectArgs),
}

#[derive(Debug, Args)]
pub struct RunArgs {
    /// TOML manifest; flags override its values.
    #[arg(long)]
    pub config: Option<PathBuf>,
    /// Benchmark root directory.
    #[arg(long)]
    pub bench: Option<PathBuf>,
    /// coggpt, cot, react or reflexion.
    #[arg(long)]
    pub agent: Option<AgentKind>,
    /// replay or live.
    #[arg(long, value_parser = parse_mode)]
    pub provider: Option<ProviderMode>,
    /// Transcript file, or directory of per-session transcripts.
    #[arg(long)]
    pub transcript: Option<PathBuf>,
    /// Restrict to these topics (repeatable).
    #[arg(long = "topic")]
    pub topics: Vec<String>,
    /// Profile paired with every topic.
    #[arg(long)]
    pub profile: Option<String>,
    /// Output directory for session logs.
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// Sessions run in parallel.
    #[arg(long)]
    pub jobs: Option<usize>,
    /// Require exactly the canonical 10 iterations per topic.
    #[arg(long)]
    pub strict: bool,
    /// Statements recalled per question.
    #[arg(long)]
    pub recall_k: Option<usize>,
    /// Seed for replay-mode pseudo embeddings.
    #[arg(long)]
    pub seed: Option<u64>,
    /// Embedding width for replay-mode pseudo embeddings.
    #[arg(long)]
    pub embedding_dim: Option<usize>,
    /// Directory of template overrides.
    #[arg(long)]
    pub templates: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct EvalArgs {
    /// Directory searched recursively for session.json files.
    #[arg(long)]
    pub sessions: PathBuf,
    #[arg(long)]
    pub humans: PathBuf,
    #[arg(long)]
    pub rationality: Option<PathBuf>,
    #[arg(long, default_value = ".")]
    pub out: PathBuf,
    /// Authenticity as per-question exact agreement instead of one kappa.
    #[arg(long)]
    pub per_question: bool,
}

#[derive(Debug, Args)]
pub struct ModelArgs {
    #[arg(long, value_parser = parse_mode, default_value = "replay")]
    pub provider: ProviderMode,
    #[arg(long)]
    pub transcript: Option<PathBuf>,
    #[arg(long)]
    pub templates: Option<PathBuf>,
}

#[derive(Debug, Subcommand)]
pub enum GenCommand {
    /// Ask the model for a topic's opinion set.
    Opinions {
        #[arg(long)]
        topic: String,
        #[arg(long)]
        out: PathBuf,
        #[command(flatten)]
        model: ModelArgs,
    },
    /// Ask the model for a character profile.
    Profile {
        #[arg(long)]
        character: String,
        #[arg(long)]
        out: PathBuf,
        #[command(flatten)]
        model: ModelArgs,
    },
    /// Rank supporters across opinion-set files.
    Rank {
        #[arg(long = "opinions", required = true)]
        opinions: Vec<PathBuf>,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Export an opinion set as a review sheet.
    Sheet {
        #[arg(long)]
        opinions: PathBuf,
        #[arg(long)]
        topic_id: String,
        #[arg(long)]
        out: PathBuf,
    },
    /// Turn a completed review sheet into a questionnaire.
    Import {
        #[arg(long)]
        sheet: PathBuf,
        #[arg(long)]
        out: PathBuf,
    },
}

#[derive(Debug, Args)]
pub struct BenchArg {
    #[arg(long)]
    pub bench: PathBuf,
}

#[derive(Debug, Args)]
pub struct InspectArgs {
    #[arg(long)]
    pub transcript: PathBuf,
    /// Session log whose recorded replies are checked against the transcript.
    #[arg(long)]
    pub session: Option<PathBuf>,
}

fn parse_mode(s: &str) -> Result<ProviderMode, String> {
    match s.to_ascii_lowercase().as_str() {
        "replay" => Ok(ProviderMode::Replay),
        "live" => Ok(ProviderMode::Live),
        other => Err(format!("unknown provider mode {other:?} (expected replay or live)")),
    }
}

/// A failed command and the exit code it maps to.
#[derive(Debug)]
pub enum Failure {
    Usage(anyhow::Error),
    Runtime(anyhow::Error),
}

impl Failure {
    pub fn exit_code(&self) -> i32 {
        match self {
            Failure::Runtime(_) => 1,
            Failure::Usage(_) => 2,
        }
    }

    pub fn error(&self) -> &anyhow::Error {
        match self {
            Failure::Usage(e) | Failure::Runtime(e) => e,
        }
    }
}

pub type Outcome = Result<(), Failure>;

pub fn execute(cli: Cli) -> Outcome {
    match cli.command {
        Command::Run(args) => commands::run(args),
        Command::Eval(args) => commands::eval(args),
        Command::Gen(cmd) => commands::gen(cmd),
        Command::Validate(args) => commands::validate(&args.bench),
        Command::Stats(args) => commands::stats(&args.bench),
        Command::ReplayInspect(args) => commands::replay_inspect(args),
    }
}

/// Parses `args` (program name first) and runs the command, printing any
/// error to stderr. Returns the process exit code.
pub fn run_cli<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { 2 } else { 0 };
        }
    };
    match execute(cli) {
        Ok(()) => 0,
        Err(failure) => {
            eprintln!("error: {:#}", failure.error());
            failure.exit_code()
        }
    }
}
