use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use praise_core::gateway::ApiCredential;
use praise_core::pipeline::PipelineMode;

mod backend;
mod eval;
mod run;

/// Find where product reviews disagree with the seller description.
#[derive(Parser, Debug)]
#[command(name = "praise", version, about)]
struct Cli {
    /// Log level filter (overridden by RUST_LOG).
    #[arg(long, global = true, default_value = "warn")]
    log_level: String,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Run the pipeline over a dataset and write one report per product.
    Run(RunArgs),
    /// Score run outputs against gold attributes and annotator tallies.
    Eval(EvalArgs),
    /// Run against an upstream backend, saving every response as a replay fixture.
    RecordFixtures(RecordArgs),
}

#[derive(Copy, Clone, Debug, PartialEq, Eq, ValueEnum)]
enum BackendKind {
    /// OpenAI-compatible chat-completions endpoint.
    Live,
    /// Recorded fixtures only; never touches the network.
    Replay,
    /// Hand-authored answers from a script file.
    Scripted,
}

#[derive(Copy, Clone, Debug, PartialEq, Eq, ValueEnum)]
enum FormatArg {
    Json,
    Markdown,
    Both,
}

#[derive(Copy, Clone, Debug, PartialEq, Eq, ValueEnum)]
enum ModeArg {
    Full,
    Baseline,
    Ablated,
}

impl From<ModeArg> for PipelineMode {
    fn from(mode: ModeArg) -> Self {
        match mode {
            ModeArg::Full => PipelineMode::Full,
            ModeArg::Baseline => PipelineMode::Baseline,
            ModeArg::Ablated => PipelineMode::Ablated,
        }
    }
}

#[derive(Args, Debug, Clone)]
struct PipelineArgs {
    /// Dataset JSON: an array of products (or a single product).
    #[arg(long)]
    dataset: PathBuf,
    /// Only run this product id.
    #[arg(long)]
    product: Option<String>,
    /// Pipeline config JSON; flags below override its values.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Concurrent review units per product.
    #[arg(long)]
    workers: Option<usize>,
    /// Response cache directory.
    #[arg(long)]
    cache_dir: Option<PathBuf>,
    /// Products processed at the same time.
    #[arg(long, default_value_t = 1)]
    parallel_products: usize,
    #[arg(long, value_enum, default_value_t = BackendKind::Live)]
    backend: BackendKind,
    /// Fixture directory for the replay backend.
    #[arg(long)]
    fixtures: Option<PathBuf>,
    /// Script file for the scripted backend.
    #[arg(long)]
    script: Option<PathBuf>,
    /// API key for the live backend; defaults to the PRAISE_API_KEY variable.
    #[arg(long, value_parser = parse_credential)]
    api_key: Option<ApiCredential>,
    /// Base URL of the OpenAI-compatible endpoint.
    #[arg(long)]
    base_url: Option<String>,
}

#[derive(Args, Debug)]
struct RunArgs {
    #[command(flatten)]
    pipeline: PipelineArgs,
    #[arg(long, value_enum)]
    mode: Option<ModeArg>,
    #[arg(long, value_enum, default_value_t = FormatArg::Both)]
    format: FormatArg,
    /// Output directory; each product gets a subdirectory.
    #[arg(long, default_value = "runs")]
    out: PathBuf,
}

#[derive(Args, Debug)]
struct EvalArgs {
    /// Run output directories (one per mode for the mode comparison).
    run_dirs: Vec<PathBuf>,
    /// Gold attribute file.
    #[arg(long)]
    gold: Option<PathBuf>,
    /// Error annotations, one JSON object per line.
    #[arg(long)]
    annotations: Option<PathBuf>,
    /// Per-category precision/recall rows to tabulate with F1.
    #[arg(long)]
    pr_table: Option<PathBuf>,
    /// Print machine-readable JSON instead of tables.
    #[arg(long)]
    json: bool,
}

#[derive(Args, Debug)]
struct RecordArgs {
    #[command(flatten)]
    pipeline: PipelineArgs,
    /// Modes to record; all three when omitted.
    #[arg(long, value_enum)]
    mode: Vec<ModeArg>,
    /// Directory to write fixtures into.
    #[arg(long)]
    out: PathBuf,
}

fn parse_credential(raw: &str) -> Result<ApiCredential, String> {
    ApiCredential::new(raw).ok_or_else(|| "the key is empty".to_string())
}

fn main() -> ExitCode {
    // Usage errors exit 1; 2 is reserved for partial runs.
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(err) => {
            let _ = err.print();
            return if err.use_stderr() { run::Outcome::Fatal.into() } else { ExitCode::SUCCESS };
        }
    };
    env_logger::Builder::new().parse_filters(&cli.log_level).parse_default_env().format_timestamp(None).init();
    let outcome = match cli.command {
        Command::Run(args) => run::cmd_run(args),
        Command::Eval(args) => eval::cmd_eval(args),
        Command::RecordFixtures(args) => run::cmd_record_fixtures(args),
    };
    match outcome {
        Ok(code) => code.into(),
        Err(err) => {
            eprintln!("error: {err:#}");
            run::Outcome::Fatal.into()
        }
    }
}
