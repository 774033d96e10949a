//! Subcommand front end. [`run`] parses arguments, dispatches to one
//! pipeline and maps failures to exit codes:
//!
//! | code | meaning |
//! |------|---------|
//! | 0 | success |
//! | 2 | configuration error (bad flag, missing input, invalid setting) |
//! | 3 | data error (malformed or inconsistent input files) |
//! | 4 | numeric error (non-finite loss or values) |
//!
//! Every command finishes with a reproducibility line
//! `repro command=<name> config_sha256=<hex> seed=<seed> version=<crate version>`,
//! where the hash covers the canonical JSON of the fully resolved settings.
//! Reports go to stdout and, with `--out-report`, to that file as well.

mod commands;

use std::ffi::OsString;
use std::fmt;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Serialize;
use sha2::{Digest, Sha256};

use crate::types::Subtask;

pub const EXIT_OK: i32 = 0;
pub const EXIT_CONFIG: i32 = 2;
pub const EXIT_DATA: i32 = 3;
pub const EXIT_NUMERIC: i32 = 4;

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum CliError {
    Config(String),
    Data(String),
    Numeric(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Config(_) => EXIT_CONFIG,
            CliError::Data(_) => EXIT_DATA,
            CliError::Numeric(_) => EXIT_NUMERIC,
        }
    }
}

impl fmt::Display for CliError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            CliError::Config(m) => write!(f, "configuration error: {m}"),
            CliError::Data(m) => write!(f, "data error: {m}"),
            CliError::Numeric(m) => write!(f, "numeric error: {m}"),
        }
    }
}

impl std::error::Error for CliError {}

#[derive(Debug, Parser)]
#[command(
    name = "offlang",
    version,
    about = "Offensive-language classification pipeline"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Normalize tweets (`id<TAB>text` or OLID TSV) into `id<TAB>text`.
    Normalize(NormalizeArgs),
    /// Count labels and print cost-sensitive class weights.
    Weigh(WeighArgs),
    /// Train the aggregation head on concatenated feature files.
    TrainHead(TrainHeadArgs),
    /// Run a trained head over feature files and write class probabilities.
    Predict(PredictArgs),
    /// Soft-vote member probability files.
    Vote(VoteArgs),
    /// Train a logistic-regression stacker, or apply one with `--model`.
    Stack(StackArgs),
    /// Fit and score the tf-idf + naive Bayes baseline.
    BaselineNb(BaselineNbArgs),
    /// Score predictions against gold labels.
    Evaluate(EvaluateArgs),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum InputFormat {
    /// OLID-style TSV with `subtask_a` / `subtask_c` columns.
    Olid,
    /// Confidence-scored TSV; labels come from thresholding.
    Solid,
    /// `id<TAB>label` rows.
    Labels,
}

#[derive(Debug, Args)]
pub struct NormalizeArgs {
    #[arg(long = "in")]
    pub input: PathBuf,
    #[arg(long)]
    pub out: PathBuf,
    /// JSON normalizer config (table paths, `max_user_run`).
    #[arg(long)]
    pub config: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct WeighArgs {
    #[arg(long = "in")]
    pub input: PathBuf,
    #[arg(long)]
    pub subtask: Subtask,
    #[arg(long, value_enum, default_value = "olid")]
    pub format: InputFormat,
    /// Confidence threshold for `--format solid`.
    #[arg(long, default_value_t = crate::corpus::DEFAULT_CONF_THRESHOLD)]
    pub threshold: f64,
    #[arg(long, default_value = "avg_conf")]
    pub conf_column: String,
    /// Also write the (thresholded) labels as `id<TAB>label`.
    #[arg(long)]
    pub out_labels: Option<PathBuf>,
    #[arg(long)]
    pub out_report: Option<PathBuf>,
}

/// Training settings shared by `train-head` and `stack`. Flags override the
/// JSON file given by `--config`, which overrides the defaults.
#[derive(Debug, Args, Clone)]
pub struct TrainFlags {
    #[arg(long)]
    pub config: Option<PathBuf>,
    #[arg(long)]
    pub max_epochs: Option<usize>,
    #[arg(long)]
    pub batch_size: Option<usize>,
    #[arg(long)]
    pub patience: Option<usize>,
    #[arg(long)]
    pub seed: Option<u64>,
    /// Decision threshold on the positive-class probability (binary only).
    #[arg(long)]
    pub threshold: Option<f64>,
    /// Fraction of labeled examples used for fitting; the rest drives early
    /// stopping.
    #[arg(long)]
    pub train_fraction: Option<f64>,
    #[arg(long)]
    pub learning_rate: Option<f64>,
}

#[derive(Debug, Args)]
pub struct TrainHeadArgs {
    /// Comma-separated OFSFEAT1 files, concatenated in this order.
    #[arg(long, value_delimiter = ',', required = true)]
    pub features: Vec<PathBuf>,
    #[arg(long)]
    pub labels: PathBuf,
    #[arg(long)]
    pub subtask: Option<Subtask>,
    #[arg(long)]
    pub out_model: PathBuf,
    #[arg(long)]
    pub out_report: Option<PathBuf>,
    #[command(flatten)]
    pub train: TrainFlags,
}

#[derive(Debug, Args)]
pub struct PredictArgs {
    #[arg(long)]
    pub model: PathBuf,
    /// Same files, same order as at training time.
    #[arg(long, value_delimiter = ',', required = true)]
    pub features: Vec<PathBuf>,
    #[arg(long)]
    pub out: PathBuf,
    /// Member name written to the probability file; defaults to the model
    /// file stem.
    #[arg(long)]
    pub name: Option<String>,
    #[arg(long, default_value_t = 0.5)]
    pub threshold: f64,
    #[arg(long)]
    pub out_labels: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct VoteArgs {
    #[arg(long, value_delimiter = ',', required = true)]
    pub members: Vec<PathBuf>,
    #[arg(long)]
    pub out: PathBuf,
    #[arg(long, value_delimiter = ',')]
    pub weights: Option<Vec<f64>>,
    #[arg(long, default_value_t = 0.5)]
    pub threshold: f64,
    #[arg(long)]
    pub out_labels: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct StackArgs {
    #[arg(long, value_delimiter = ',', required = true)]
    pub members: Vec<PathBuf>,
    /// Gold labels; selects training mode.
    #[arg(long, requires = "out_model", conflicts_with = "model")]
    pub labels: Option<PathBuf>,
    #[arg(long)]
    pub out_model: Option<PathBuf>,
    /// Trained stacker; selects prediction mode.
    #[arg(long, requires = "out")]
    pub model: Option<PathBuf>,
    #[arg(long)]
    pub out: Option<PathBuf>,
    #[arg(long)]
    pub out_labels: Option<PathBuf>,
    #[arg(long)]
    pub out_report: Option<PathBuf>,
    #[command(flatten)]
    pub train: TrainFlags,
}

#[derive(Debug, Args)]
pub struct BaselineNbArgs {
    /// OLID TSV or `id<TAB>text<TAB>label` rows.
    #[arg(long)]
    pub train: PathBuf,
    #[arg(long)]
    pub test: PathBuf,
    #[arg(long, default_value = "A")]
    pub subtask: Subtask,
    #[arg(long, default_value_t = crate::baseline_nb::DEFAULT_ALPHA)]
    pub alpha: f64,
    /// JSON normalizer config applied to both files.
    #[arg(long)]
    pub config: Option<PathBuf>,
    /// Use the text as given instead of normalizing it first.
    #[arg(long)]
    pub no_normalize: bool,
    #[arg(long)]
    pub out_report: Option<PathBuf>,
    #[arg(long)]
    pub out_model: Option<PathBuf>,
    #[arg(long)]
    pub out_labels: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct EvaluateArgs {
    /// `id<TAB>label` rows or a `#member=` probability file.
    #[arg(long)]
    pub pred: PathBuf,
    /// `id<TAB>label` rows or OLID TSV.
    #[arg(long)]
    pub gold: PathBuf,
    /// Required for OLID gold files; otherwise inferred from the labels.
    #[arg(long)]
    pub subtask: Option<Subtask>,
    #[arg(long, default_value_t = 0.5)]
    pub threshold: f64,
    #[arg(long)]
    pub out_report: Option<PathBuf>,
}

/// Hex SHA-256 of the canonical (sorted-key, compact) JSON form of `config`.
pub fn config_hash<T: Serialize>(config: &T) -> String {
    let value = serde_json::to_value(config).expect("settings serialize to JSON");
    let digest = Sha256::digest(value.to_string().as_bytes());
    digest.iter().map(|b| format!("{b:02x}")).collect()
}

pub fn repro_line<T: Serialize>(command: &str, config: &T, seed: Option<u64>) -> String {
    let seed = seed.map_or_else(|| "none".to_string(), |s| s.to_string());
    format!(
        "repro command={command} config_sha256={} seed={seed} version={}",
        config_hash(config),
        crate::VERSION
    )
}

pub(crate) fn require_input(path: &Path) -> Result<&Path, CliError> {
    if path.is_file() {
        Ok(path)
    } else {
        Err(CliError::Config(format!(
            "input file {} does not exist",
            path.display()
        )))
    }
}

pub fn execute(cli: Cli) -> Result<(), CliError> {
    match cli.command {
        Command::Normalize(a) => commands::normalize(a),
        Command::Weigh(a) => commands::weigh(a),
        Command::TrainHead(a) => commands::train_head(a),
        Command::Predict(a) => commands::predict(a),
        Command::Vote(a) => commands::vote(a),
        Command::Stack(a) => commands::stack(a),
        Command::BaselineNb(a) => commands::baseline_nb(a),
        Command::Evaluate(a) => commands::evaluate(a),
    }
}

/// Parse `args` (including the program name) and run; returns the exit code.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { EXIT_CONFIG } else { EXIT_OK };
        }
    };
    match execute(cli) {
        Ok(()) => EXIT_OK,
        Err(e) => {
            eprintln!("offlang: {e}");
            e.exit_code()
        }
    }
}
