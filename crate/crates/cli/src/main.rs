//! `alemannic`: prepare splits, classify, evaluate, align, and run the
//! annotation service.
//!
//! Exit codes: 0 success, 2 configuration or usage error, 3 data error,
//! 4 backend failure.

mod commands;
mod config;

use std::path::PathBuf;
use std::process::ExitCode;

use alemannic::Task;
use clap::{Args, Parser, Subcommand};

use config::{BackendKind, Mode};

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("configuration error: {0}")]
    Config(String),
    #[error("data error: {0}")]
    Data(String),
    #[error("backend error: {0}")]
    Backend(String),
}

impl CliError {
    fn code(&self) -> u8 {
        match self {
            CliError::Config(_) => 2,
            CliError::Data(_) => 3,
            CliError::Backend(_) => 4,
        }
    }
}

#[derive(Parser)]
#[command(name = "alemannic", version, about = "Swiss German dialect classification workbench")]
struct Cli {
    /// More log output (-v info, -vv debug). RUST_LOG overrides.
    #[arg(short, long, action = clap::ArgAction::Count, global = true)]
    verbose: u8,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Draw balanced train/validation/test manifests.
    PrepareSplits(PrepareSplitsArgs),
    /// Classify every segment of a manifest.
    Classify(ClassifyArgs),
    /// Score prediction files against a gold manifest.
    Evaluate(EvaluateArgs),
    /// Print the phone alignment of transcriptions against Standard German.
    Align(AlignArgs),
    /// Run the annotation service.
    Serve(ServeArgs),
    /// Create an annotation session from a manifest.
    InitSession(InitSessionArgs),
}

#[derive(Args)]
struct PrepareSplitsArgs {
    /// Input manifest.
    #[arg(long = "in")]
    input: PathBuf,
    /// Output directory for train.jsonl, validation.jsonl and test.jsonl.
    #[arg(long)]
    out: PathBuf,
    /// Run config (TOML); its [dataset] section gives cantons and split sizes.
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    task: Option<Task>,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    train: Option<usize>,
    #[arg(long)]
    validation: Option<usize>,
    #[arg(long)]
    test: Option<usize>,
}

#[derive(Args)]
struct ClassifyArgs {
    /// Input manifest.
    #[arg(long = "in")]
    input: PathBuf,
    /// Predictions file (JSON lines).
    #[arg(long)]
    out: PathBuf,
    /// Run config (TOML); flags override it.
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    task: Option<Task>,
    #[arg(long, value_enum)]
    mode: Option<Mode>,
    #[arg(long, value_enum)]
    backend: Option<BackendKind>,
    /// Replay file, read in replay mode and appended to in record mode.
    #[arg(long)]
    replay: Option<PathBuf>,
    /// Maximum concurrent segments.
    #[arg(long)]
    concurrency: Option<usize>,
    /// Recorded in the run id.
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    run_id: Option<String>,
    /// Agent graph (TOML).
    #[arg(long)]
    graph: Option<PathBuf>,
    /// Directory with prompt files replacing the bundled ones.
    #[arg(long)]
    prompts: Option<PathBuf>,
    /// Feature ruleset (TOML) replacing the starter rules.
    #[arg(long)]
    rules: Option<PathBuf>,
    /// Leave the IPA chart attachment out of agent prompts.
    #[arg(long)]
    no_ipa_charts: bool,
}

#[derive(Args)]
struct EvaluateArgs {
    /// Prediction files; several files are treated as repeated runs.
    #[arg(long = "predictions", required = true, num_args = 1..)]
    predictions: Vec<PathBuf>,
    /// Manifest with gold labels.
    #[arg(long)]
    gold: PathBuf,
    /// Defaults to the task of the first prediction.
    #[arg(long)]
    task: Option<Task>,
    /// Run config (TOML); its [dataset] section maps STT rows to labels.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Also write the reports as JSON here.
    #[arg(long)]
    json: Option<PathBuf>,
}

#[derive(Args)]
struct AlignArgs {
    /// Dialect IPA transcription.
    #[arg(long, requires = "german", conflicts_with = "input")]
    ipa: Option<String>,
    /// Standard German sentence.
    #[arg(long)]
    german: Option<String>,
    /// Manifest whose segments are aligned.
    #[arg(long = "in")]
    input: Option<PathBuf>,
    /// Only this segment of the manifest.
    #[arg(long, requires = "input")]
    id: Option<String>,
    /// Gap penalty of the aligner.
    #[arg(long, default_value_t = alemannic::alignment::DEFAULT_GAP_PENALTY)]
    gap_penalty: f64,
}

#[derive(Args)]
struct ServeArgs {
    /// Service config (TOML); flags override it.
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long, env = "ALEMANNIC_DATA_DIR")]
    data_dir: Option<PathBuf>,
    #[arg(long, env = "ALEMANNIC_BIND")]
    bind: Option<std::net::SocketAddr>,
    /// Directory with the annotation UI bundle.
    #[arg(long)]
    static_dir: Option<PathBuf>,
}

#[derive(Args)]
struct InitSessionArgs {
    #[arg(long, env = "ALEMANNIC_DATA_DIR")]
    data_dir: PathBuf,
    /// Session id: letters, digits, `-` and `_`.
    #[arg(long)]
    id: String,
    /// Manifest with the segments to annotate.
    #[arg(long = "in")]
    input: PathBuf,
    #[arg(long, default_value = "binary")]
    task: Task,
    /// Seed of the presentation order.
    #[arg(long, default_value_t = 42)]
    seed: u64,
    /// Run config (TOML); its [dataset] section maps STT rows to labels.
    #[arg(long)]
    config: Option<PathBuf>,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let level = match cli.verbose {
        0 => "warn",
        1 => "info",
        _ => "debug",
    };
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or(level)).init();
    let result = match cli.command {
        Command::PrepareSplits(a) => commands::prepare_splits(a),
        Command::Classify(a) => commands::classify(a),
        Command::Evaluate(a) => commands::evaluate(a),
        Command::Align(a) => commands::align(a),
        Command::Serve(a) => commands::serve(a),
        Command::InitSession(a) => commands::init_session(a),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("alemannic: {e}");
            ExitCode::from(e.code())
        }
    }
}
