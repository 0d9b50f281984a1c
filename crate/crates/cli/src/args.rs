use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};

#[derive(Debug, Parser)]
#[command(
    name = "recomp",
    version,
    about = "Turn decompiler pseudocode back into compilable, test-passing C++",
    after_help = "The HTTP backend reads its API key from the environment variable named by \
                  `http.api_key_env` in the config file (default: OPENAI_API_KEY). \
                  Keys are never accepted as flags.\n\
                  Log verbosity follows RUST_LOG (default: warn)."
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Repair every admitted program with the model in the loop.
    Refine(RefineArgs),
    /// Rule-only comparator: cleanup rules plus a header preamble, no model.
    Baseline(CommonArgs),
    /// Write the rule-cleaned source of every program.
    Preprocess(CommonArgs),
    /// Recompute the report from an existing outcomes file.
    Report(ReportArgs),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum BackendKind {
    Http,
    Replay,
    Record,
}

#[derive(Debug, Args)]
pub struct CommonArgs {
    /// Program manifest (JSON).
    #[arg(long)]
    pub manifest: PathBuf,

    /// Rule configuration (JSON); the built-in rules are used otherwise.
    #[arg(long)]
    pub rules: Option<PathBuf>,

    /// Context-length bucketing as LO:HI:K.
    #[arg(long, value_name = "LO:HI:K")]
    pub bucket_range: Option<String>,

    /// Output directory.
    #[arg(long)]
    pub out: Option<PathBuf>,

    /// Parallel worker count.
    #[arg(long)]
    pub jobs: Option<usize>,

    /// Seed for scratch-directory names.
    #[arg(long)]
    pub seed: Option<u64>,

    /// Config file (TOML, or JSON by `.json` extension).
    #[arg(long)]
    pub config: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct RefineArgs {
    #[command(flatten)]
    pub common: CommonArgs,

    #[arg(long, value_enum, default_value = "http")]
    pub backend: BackendKind,

    /// Fixture directory read by `replay` and written by `record`.
    #[arg(long)]
    pub fixtures: Option<PathBuf>,

    /// Also save live responses into this fixture directory.
    #[arg(long)]
    pub record: Option<PathBuf>,

    /// Maximum model queries per program.
    #[arg(long)]
    pub budget: Option<u32>,

    /// Query the model even when cleanup alone yields a compilable unit.
    #[arg(long)]
    pub always_refine: bool,
}

#[derive(Debug, Args)]
pub struct ReportArgs {
    #[command(flatten)]
    pub common: CommonArgs,

    /// Outcomes file; defaults to `<out>/outcomes.jsonl`.
    #[arg(long)]
    pub outcomes: Option<PathBuf>,

    /// Comma-separated C thresholds.
    #[arg(long, value_delimiter = ',')]
    pub thresholds: Option<Vec<u32>>,
}
