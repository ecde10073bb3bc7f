//! `stance`: corpus preparation, classification campaigns, regression fits,
//! effect summaries and footprint estimates, composed through files.

mod commands;
mod config;
mod error;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use stance_core::corpus::Split;
use stance_core::effects::ModelId;
use stance_core::footprint::BillingConvention;
use stance_core::inference::Variant;

#[derive(Debug, Parser)]
#[command(name = "stance", version, about = "Cross-lingual stance classification harness")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Validate a corpus file and write it in canonical form with a summary.
    Ingest(IngestArgs),
    /// Keep records whose text contains a search term for their language.
    Filter(FilterArgs),
    /// Assign unassigned records to train/test per language and build the
    /// four training sets.
    Split(SplitArgs),
    /// Classify records with one model variant (resumable).
    Classify(ClassifyArgs),
    /// Machine-translate non-English records into English (resumable).
    Translate(TranslateArgs),
    /// Fit the logistic regression models on classification outcomes.
    Fit(FitArgs),
    /// Cumulative effects, accuracy curves and pretraining-share analysis.
    Effects(EffectsArgs),
    /// Energy, water, CO₂ and cost estimates per provider.
    Footprint(FootprintArgs),
    /// Render everything available into one markdown report.
    Report(ReportArgs),
}

#[derive(Debug, Clone, Args)]
pub struct Common {
    /// TOML run configuration; flags override its values.
    #[arg(long)]
    pub config: Option<PathBuf>,
    /// Output directory.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct IngestArgs {
    #[command(flatten)]
    pub common: Common,
    #[arg(long)]
    pub corpus: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct FilterArgs {
    #[command(flatten)]
    pub common: Common,
    #[arg(long)]
    pub corpus: Option<PathBuf>,
    /// Search-term table (TOML); defaults to the built-in table.
    #[arg(long)]
    pub terms: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct SplitArgs {
    #[command(flatten)]
    pub common: Common,
    #[arg(long)]
    pub corpus: Option<PathBuf>,
    #[arg(long)]
    pub seed: Option<u64>,
    #[arg(long, default_value_t = 0.75)]
    pub train_fraction: f64,
}

#[derive(Debug, Args)]
pub struct ClassifyArgs {
    #[command(flatten)]
    pub common: Common,
    #[arg(long)]
    pub corpus: Option<PathBuf>,
    #[arg(long)]
    pub variant: Variant,
    /// Base URL of the chat-completion service.
    #[arg(long)]
    pub endpoint: Option<String>,
    #[arg(long)]
    pub model_id: Option<String>,
    #[arg(long)]
    pub checkpoint_dir: Option<PathBuf>,
    #[arg(long)]
    pub parallelism: Option<usize>,
    /// Stop after this many new items; rerun to continue.
    #[arg(long)]
    pub max_items: Option<usize>,
    #[arg(long)]
    pub max_attempts: Option<u32>,
    /// Only classify records of this split.
    #[arg(long)]
    pub split: Option<Split>,
}

#[derive(Debug, Args)]
pub struct TranslateArgs {
    #[command(flatten)]
    pub common: Common,
    #[arg(long)]
    pub corpus: Option<PathBuf>,
    #[arg(long)]
    pub endpoint: Option<String>,
    #[arg(long)]
    pub model_id: Option<String>,
    #[arg(long)]
    pub checkpoint_dir: Option<PathBuf>,
    #[arg(long)]
    pub parallelism: Option<usize>,
    #[arg(long)]
    pub max_items: Option<usize>,
    #[arg(long)]
    pub max_attempts: Option<u32>,
}

#[derive(Debug, Args)]
pub struct FitArgs {
    #[command(flatten)]
    pub common: Common,
    #[arg(long)]
    pub corpus: Option<PathBuf>,
    /// Model to fit (1-4); repeatable. Defaults to all four.
    #[arg(long = "model")]
    pub models: Vec<ModelId>,
    /// Directory holding the classify logs.
    #[arg(long)]
    pub checkpoint_dir: Option<PathBuf>,
    /// Explicit classify logs, instead of scanning the checkpoint directory.
    #[arg(long)]
    pub predictions: Vec<PathBuf>,
}

#[derive(Debug, Args)]
pub struct EffectsArgs {
    #[command(flatten)]
    pub common: Common,
    /// Coefficient tables: a directory of model<N>.tsv files, or no value for
    /// the shipped tables. Without this flag the fitted tables in the output
    /// directory are used.
    #[arg(long, num_args = 0..=1, default_missing_value = "builtin")]
    pub fixtures: Option<PathBuf>,
    /// Corpus for the pretraining-share analysis.
    #[arg(long)]
    pub corpus: Option<PathBuf>,
    #[arg(long)]
    pub checkpoint_dir: Option<PathBuf>,
    #[arg(long, default_value_t = 20)]
    pub grid_steps: usize,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
pub enum BillingArg {
    /// All tokens at the input rate plus output tokens at the output rate.
    TotalAtInputRate,
    /// Input tokens at the input rate plus output tokens at the output rate.
    InputAtInputRate,
}

impl From<BillingArg> for BillingConvention {
    fn from(b: BillingArg) -> Self {
        match b {
            BillingArg::TotalAtInputRate => BillingConvention::TotalAtInputRate,
            BillingArg::InputAtInputRate => BillingConvention::InputAtInputRate,
        }
    }
}

#[derive(Debug, Args)]
pub struct FootprintArgs {
    #[command(flatten)]
    pub common: Common,
    /// Provider catalog (TOML); defaults to the built-in catalog.
    #[arg(long)]
    pub catalog: Option<PathBuf>,
    /// Number of items classified; defaults to 10 billion.
    #[arg(long)]
    pub items: Option<u64>,
    /// Provider id the ratios are taken against.
    #[arg(long)]
    pub baseline: Option<String>,
    #[arg(long, value_enum, default_value = "total-at-input-rate")]
    pub billing: BillingArg,
}

#[derive(Debug, Args)]
pub struct ReportArgs {
    #[command(flatten)]
    pub common: Common,
    #[arg(long, num_args = 0..=1, default_missing_value = "builtin")]
    pub fixtures: Option<PathBuf>,
    #[arg(long)]
    pub catalog: Option<PathBuf>,
    #[arg(long)]
    pub items: Option<u64>,
    #[arg(long)]
    pub baseline: Option<String>,
    #[arg(long)]
    pub corpus: Option<PathBuf>,
    #[arg(long)]
    pub checkpoint_dir: Option<PathBuf>,
    /// Leave the footprint section out.
    #[arg(long)]
    pub no_footprint: bool,
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() {
                ExitCode::from(2)
            } else {
                ExitCode::SUCCESS
            };
        }
    };
    let result = match &cli.command {
        Command::Ingest(a) => commands::ingest(a),
        Command::Filter(a) => commands::filter(a),
        Command::Split(a) => commands::split(a),
        Command::Classify(a) => commands::classify(a),
        Command::Translate(a) => commands::translate(a),
        Command::Fit(a) => commands::fit(a),
        Command::Effects(a) => commands::effects(a),
        Command::Footprint(a) => commands::footprint(a),
        Command::Report(a) => commands::report(a),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            e.exit_code()
        }
    }
}
