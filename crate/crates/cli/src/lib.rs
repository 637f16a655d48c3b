//! The `satd` command line.
//!
//! Every subcommand is reachable through [`run`], which takes the argument
//! vector and the two output streams and returns the process exit code:
//! `0` on success, `1` on a fatal error, `2` when the command completed but
//! emitted diagnostics.
//!
//! Option precedence, highest first: command-line flag, environment variable
//! (`SATD_ENDPOINT`, `SATD_DATASET`), `--config` file, built-in default.

mod analyze;
mod backend;
mod config;
mod dataset;
mod extract;
mod output;
mod serve_check;
mod train;

use std::io::Write;
use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};
use satd_core::extract::SourceLanguage;
use serde::Deserialize;

pub use backend::BackendSpec;
pub use config::FileConfig;

pub const EXIT_OK: i32 = 0;
pub const EXIT_FATAL: i32 = 1;
pub const EXIT_DIAGNOSTICS: i32 = 2;

/// Seed used when neither `--seed` nor the config file sets one.
pub const DEFAULT_SEED: u64 = 0;

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Format {
    Json,
    Csv,
    Md,
}

#[derive(Debug, Parser)]
#[command(name = "satd", version, about = "Find and classify self-admitted technical debt in source comments")]
pub struct Cli {
    #[command(flatten)]
    pub global: GlobalArgs,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Args)]
pub struct GlobalArgs {
    /// Seed for every random choice (splits, shuffles, folds). Default 0.
    #[arg(long, global = true)]
    pub seed: Option<u64>,
    /// Output format for reports.
    #[arg(long, global = true, value_enum)]
    pub format: Option<Format>,
    /// Increase log verbosity (-v info, -vv debug, -vvv trace).
    #[arg(short, long, global = true, action = clap::ArgAction::Count)]
    pub verbose: u8,
    /// Classifier: `ngram[:MODEL]`, `patterns[:RULES]` or `remote[:URL]`.
    #[arg(long, global = true)]
    pub backend: Option<BackendSpec>,
    /// Inference server used by `remote` without a URL and by serve-check.
    #[arg(long, global = true, env = "SATD_ENDPOINT")]
    pub endpoint: Option<String>,
    /// Worker threads; defaults to the number of cores.
    #[arg(long, global = true)]
    pub jobs: Option<usize>,
    /// TOML file mirroring the flags; flags take precedence.
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
    /// Stop-word policy: `none` or `file:PATH`.
    #[arg(long = "stop-words", global = true)]
    pub stop_words: Option<String>,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Extract comments from a source tree as JSON lines.
    Extract(ExtractArgs),
    /// Train an n-gram model and report its held-out metrics.
    Train(TrainArgs),
    /// Evaluate a backend intra-project or across project folds.
    Evaluate(EvaluateArgs),
    /// Classify every comment of one or more repositories.
    Analyze(AnalyzeArgs),
    /// Handshake with a remote inference server.
    ServeCheck(ServeCheckArgs),
}

#[derive(Debug, Args)]
pub struct ExtractArgs {
    pub path: PathBuf,
    /// Only these languages (comma separated).
    #[arg(long, value_delimiter = ',')]
    pub langs: Vec<SourceLanguage>,
    /// Write to this file instead of stdout.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct DatasetArgs {
    /// Dataset file (`.csv` or `.jsonl`); repeat to merge several.
    #[arg(long, env = "SATD_DATASET", value_delimiter = ',')]
    pub dataset: Vec<PathBuf>,
}

#[derive(Debug, Args)]
pub struct TrainArgs {
    #[command(flatten)]
    pub data: DatasetArgs,
    /// Add one paraphrase of every training example with this label.
    #[arg(long)]
    pub augment_label: Option<String>,
    /// Paraphrase source: `rotation` or `chat:URL`.
    #[arg(long)]
    pub paraphraser: Option<String>,
    /// Model name sent to a chat paraphraser.
    #[arg(long)]
    pub paraphrase_model: Option<String>,
    /// Search the 3x3 learning-rate / weight-decay grid.
    #[arg(long)]
    pub grid: bool,
    #[command(flatten)]
    pub hyper: HyperArgs,
    /// Output directory for `model.json` and the report.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct HyperArgs {
    #[arg(long)]
    pub learning_rate: Option<f64>,
    #[arg(long)]
    pub weight_decay: Option<f64>,
    #[arg(long)]
    pub max_epochs: Option<usize>,
    #[arg(long)]
    pub batch_size: Option<usize>,
    #[arg(long)]
    pub patience: Option<usize>,
    #[arg(long)]
    pub min_freq: Option<usize>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Mode {
    Intra,
    Cross,
}

#[derive(Debug, Args)]
pub struct EvaluateArgs {
    #[command(flatten)]
    pub data: DatasetArgs,
    #[arg(long, value_enum)]
    pub mode: Option<Mode>,
    /// Number of project folds for `--mode cross`. Default 5.
    #[arg(long)]
    pub k: Option<usize>,
    /// Grid-search hyperparameters when training (intra mode).
    #[arg(long)]
    pub grid: bool,
    #[command(flatten)]
    pub hyper: HyperArgs,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Render {
    Json,
    Csv,
    Md,
    /// One JSON line per SATD instance (file, lines, label, score).
    Instances,
}

#[derive(Debug, Args)]
pub struct AnalyzeArgs {
    /// Repository roots forming the first cohort.
    pub repos: Vec<PathBuf>,
    /// File with one `PATH[,DOMAIN[,SLUG]]` per line; SLUG keys the metadata lookup.
    #[arg(long)]
    pub repo_list: Option<PathBuf>,
    /// Repository roots of a second cohort to compare against.
    #[arg(long, num_args = 1..)]
    pub compare: Vec<PathBuf>,
    /// Domain tag recorded for repositories without one.
    #[arg(long)]
    pub domain: Option<String>,
    /// Selection thresholds (JSON); needs a metadata source.
    #[arg(long)]
    pub criteria: Option<PathBuf>,
    /// Repository metadata JSON (one record or a list).
    #[arg(long)]
    pub metadata: Option<PathBuf>,
    /// Query repository metadata from this hosting API base URL instead.
    #[arg(long)]
    pub github_api: Option<String>,
    /// Skip repositories that fail the selection criteria.
    #[arg(long)]
    pub enforce_criteria: bool,
    /// Output rendering; defaults to `--format`.
    #[arg(long, value_enum)]
    pub render: Option<Render>,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct ServeCheckArgs {
    /// Server URL; overrides `--endpoint`.
    pub url: Option<String>,
}

/// What a successful command reports back.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub(crate) enum Outcome {
    Clean,
    Diagnostics,
}

/// Streams a command writes to.
pub(crate) struct Io<'a> {
    pub out: &'a mut (dyn Write + Send),
    pub err: &'a mut (dyn Write + Send),
}

impl Io<'_> {
    pub(crate) fn warn(&mut self, message: impl std::fmt::Display) {
        // A closed stderr is not worth failing the command over.
        let _ = writeln!(self.err, "warning: {message}");
    }
}

/// Resolved global settings shared by every subcommand.
pub(crate) struct Context {
    pub seed: u64,
    pub format: Format,
    pub backend: Option<BackendSpec>,
    pub endpoint: Option<String>,
    pub jobs: Option<usize>,
    pub stop_words: satd_core::preprocess::StopWordPolicy,
    pub file: FileConfig,
}

/// Parses `args` (including the program name) and runs the command.
pub fn run<I, T>(args: I, out: &mut (dyn Write + Send), err: &mut (dyn Write + Send)) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_FATAL } else { EXIT_OK };
            let rendered = e.render().to_string();
            let _ = if e.use_stderr() {
                err.write_all(rendered.as_bytes())
            } else {
                out.write_all(rendered.as_bytes())
            };
            return code;
        }
    };
    init_logging(cli.global.verbose);
    let mut io = Io { out, err };
    match execute(cli, &mut io) {
        Ok(Outcome::Clean) => EXIT_OK,
        Ok(Outcome::Diagnostics) => EXIT_DIAGNOSTICS,
        Err(e) => {
            let _ = writeln!(io.err, "error: {e:#}");
            EXIT_FATAL
        }
    }
}

fn init_logging(verbose: u8) {
    let level = match verbose {
        0 => log::LevelFilter::Warn,
        1 => log::LevelFilter::Info,
        2 => log::LevelFilter::Debug,
        _ => log::LevelFilter::Trace,
    };
    // Already initialised when run more than once in one process.
    let _ = env_logger::Builder::new().filter_level(level).try_init();
}

fn execute(cli: Cli, io: &mut Io) -> anyhow::Result<Outcome> {
    let ctx = config::resolve(&cli.global)?;
    let pool = {
        let mut builder = rayon::ThreadPoolBuilder::new();
        if let Some(jobs) = ctx.jobs {
            anyhow::ensure!(jobs > 0, "--jobs must be at least 1");
            builder = builder.num_threads(jobs);
        }
        builder.build()?
    };
    pool.install(|| match cli.command {
        Command::Extract(args) => extract::run(&ctx, args, io),
        Command::Train(args) => train::train(&ctx, args, io),
        Command::Evaluate(args) => train::evaluate(&ctx, args, io),
        Command::Analyze(args) => analyze::run(&ctx, args, io),
        Command::ServeCheck(args) => serve_check::run(&ctx, args, io),
    })
}
