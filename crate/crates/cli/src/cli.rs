//! Command-line arguments.

use std::path::PathBuf;
use std::str::FromStr;

use clap::{Args, Parser, Subcommand, ValueEnum};
use ingredient_hmm_core::{OovPolicy, Space, TagCondition};

use crate::synth::{DEFAULT_SENTENCES, DEFAULT_SEED};

#[derive(Debug, Parser)]
#[command(name = "ingredient-hmm", version, about = "Train, run and evaluate HMM ingredient extractors")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Estimate a model from an annotated corpus and write a model file.
    Train(TrainArgs),
    /// Label a token file with a single model (or the POS layer of a pipeline).
    Tag(TagArgs),
    /// Run the two-layer extractor: tagged tokens plus an ingredient span report.
    Extract(ExtractArgs),
    /// Closed test of every model family on one corpus (closed_test.csv).
    Eval(EvalArgs),
    /// Seeded k-fold cross-validation (crossval.csv).
    Crossval(CrossvalArgs),
    /// Closed-test accuracy of the extractor across lambda values (sweep.csv).
    Sweep(SweepArgs),
    /// Corpus statistics, optionally with the OOV rate against a training corpus.
    Stats(StatsArgs),
    /// Write a seeded synthetic corpus.
    Synth(SynthArgs),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum FamilyArg {
    First,
    Second,
    Feature,
    Pipeline,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum ObsArg {
    Token,
    Pos,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum StateArg {
    Pos,
    IngState,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum OrderArg {
    First,
    Second,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum CvFamilyArg {
    /// First-order HMM over tokens.
    First,
    /// Second-order HMM over tokens.
    Second,
    /// First-order HMM over gold POS tags.
    FirstTags,
    /// Second-order HMM over gold POS tags.
    SecondTags,
    /// The two-layer extractor; see --tag-source.
    Extractor,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum SpaceArg {
    Log,
    Probability,
}

impl From<SpaceArg> for Space {
    fn from(s: SpaceArg) -> Space {
        match s {
            SpaceArg::Log => Space::Log,
            SpaceArg::Probability => Space::Probability,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum OovArg {
    /// Substitute the prefix table for unknown words.
    PrefixTable,
    /// Fail on the first unknown word.
    Error,
}

impl From<OovArg> for OovPolicy {
    fn from(o: OovArg) -> OovPolicy {
        match o {
            OovArg::PrefixTable => OovPolicy::PrefixTable,
            OovArg::Error => OovPolicy::Error,
        }
    }
}

/// Decoder settings shared by several commands. Unset values keep the
/// model's or the default configuration.
#[derive(Debug, Clone, Args)]
pub struct DecodeArgs {
    /// Emission weight of the ingredient layer (>= 1) [default: 4]
    #[arg(long)]
    pub lambda: Option<f64>,
    /// Decode in log or probability space [default: log]
    #[arg(long, value_enum)]
    pub space: Option<SpaceArg>,
    /// Apply lambda to prefix-table emissions of unknown words too.
    #[arg(long)]
    pub lambda_on_oov: bool,
    /// What to do with unknown words [default: prefix-table]
    #[arg(long, value_enum)]
    pub oov_policy: Option<OovArg>,
    /// Fail instead of falling back to uniform scores when no path survives.
    #[arg(long)]
    pub no_fallback: bool,
}

#[derive(Debug, Clone, Args)]
pub struct TrainArgs {
    #[arg(long)]
    pub corpus: PathBuf,
    #[arg(long, value_enum, default_value = "pipeline")]
    pub family: FamilyArg,
    /// Observation column of first/second-order models.
    #[arg(long, value_enum, default_value = "token")]
    pub obs: ObsArg,
    /// Hidden-state column of first/second-order models.
    #[arg(long, value_enum, default_value = "ing-state")]
    pub state: StateArg,
    /// Order of the POS layer of a pipeline.
    #[arg(long, value_enum, default_value = "first")]
    pub layer1_order: OrderArg,
    /// Add-epsilon smoothing of every table (0 = relative frequencies).
    #[arg(long, default_value_t = 0.0)]
    pub smoothing: f64,
    #[command(flatten)]
    pub decode: DecodeArgs,
    /// Model file to write.
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Clone, Args)]
pub struct TagArgs {
    #[arg(long)]
    pub model: PathBuf,
    /// Token file: one token per line, blank line between sentences. A second
    /// column is read as the POS tag (needed by feature models).
    #[arg(long)]
    pub input: PathBuf,
    #[command(flatten)]
    pub decode: DecodeArgs,
    #[arg(long)]
    pub out: PathBuf,
}

/// Where the extractor takes its POS tags from.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum TagsArg {
    Predict,
    /// The input's second column, or a separate tag file.
    Oracle(Option<PathBuf>),
}

impl FromStr for TagsArg {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        match s {
            "predict" | "predicted" => Ok(TagsArg::Predict),
            "oracle" => Ok(TagsArg::Oracle(None)),
            _ => match s.strip_prefix("oracle:") {
                Some(path) if !path.is_empty() => Ok(TagsArg::Oracle(Some(path.into()))),
                _ => Err(format!("expected predict, oracle or oracle:<path>, got {s:?}")),
            },
        }
    }
}

#[derive(Debug, Clone, Args)]
pub struct ExtractArgs {
    /// Pipeline model file.
    #[arg(long)]
    pub model: PathBuf,
    /// Token file, or an annotated corpus whose tags and states serve as gold.
    #[arg(long)]
    pub input: PathBuf,
    /// predict | oracle | oracle:<path>
    #[arg(long, alias = "tag-source", default_value = "predict")]
    pub tags: TagsArg,
    #[command(flatten)]
    pub decode: DecodeArgs,
    /// Directory for extracted.tsv, spans.csv and run_config.txt.
    #[arg(long)]
    pub out_dir: PathBuf,
}

/// First-layer condition of an evaluation: oracle, predicted or
/// degraded:<target accuracy>.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum ConditionArg {
    Oracle,
    Predicted,
    Degraded(f64),
}

impl FromStr for ConditionArg {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        match s {
            "oracle" => Ok(ConditionArg::Oracle),
            "predicted" | "predict" => Ok(ConditionArg::Predicted),
            _ => s
                .strip_prefix("degraded:")
                .and_then(|t| t.parse::<f64>().ok())
                .filter(|t| (0.0..=1.0).contains(t))
                .map(ConditionArg::Degraded)
                .ok_or_else(|| format!("expected oracle, predicted or degraded:<accuracy in [0,1]>, got {s:?}")),
        }
    }
}

impl ConditionArg {
    pub fn resolve(self, seed: u64) -> TagCondition {
        match self {
            ConditionArg::Oracle => TagCondition::Oracle,
            ConditionArg::Predicted => TagCondition::Predicted,
            ConditionArg::Degraded(target) => TagCondition::Degraded { target, seed },
        }
    }
}

#[derive(Debug, Clone, Args)]
pub struct EvalArgs {
    #[arg(long)]
    pub corpus: PathBuf,
    /// Also evaluate the extractor on gold tags degraded to this accuracy.
    #[arg(long)]
    pub degraded_target: Option<f64>,
    #[arg(long, default_value_t = 1)]
    pub seed: u64,
    #[arg(long, value_enum, default_value = "first")]
    pub layer1_order: OrderArg,
    #[command(flatten)]
    pub decode: DecodeArgs,
    #[arg(long)]
    pub out_dir: PathBuf,
}

#[derive(Debug, Clone, Args)]
pub struct CrossvalArgs {
    #[arg(long)]
    pub corpus: PathBuf,
    #[arg(long, default_value_t = 10)]
    pub folds: usize,
    #[arg(long, default_value_t = 1)]
    pub seed: u64,
    #[arg(long, value_enum, default_value = "extractor")]
    pub family: CvFamilyArg,
    /// oracle | predicted | degraded:<accuracy>
    #[arg(long, default_value = "oracle")]
    pub tag_source: ConditionArg,
    #[arg(long, value_enum, default_value = "first")]
    pub layer1_order: OrderArg,
    #[command(flatten)]
    pub decode: DecodeArgs,
    #[arg(long)]
    pub out_dir: PathBuf,
}

#[derive(Debug, Clone, Args)]
pub struct SweepArgs {
    #[arg(long)]
    pub corpus: PathBuf,
    /// Comma-separated lambdas or an inclusive integer range `a..b`.
    #[arg(long, default_value = "1..9")]
    pub lambdas: String,
    /// Comma-separated conditions: oracle, predicted, degraded:<accuracy>.
    #[arg(long, alias = "tag-source", default_value = "oracle,predicted")]
    pub conditions: String,
    #[arg(long, default_value_t = 1)]
    pub seed: u64,
    #[arg(long, value_enum, default_value = "first")]
    pub layer1_order: OrderArg,
    #[command(flatten)]
    pub decode: DecodeArgs,
    #[arg(long)]
    pub out_dir: PathBuf,
}

#[derive(Debug, Clone, Args)]
pub struct StatsArgs {
    #[arg(long)]
    pub corpus: PathBuf,
    /// Training corpus whose lexicon defines known words for the OOV rate.
    #[arg(long)]
    pub against: Option<PathBuf>,
    /// Also write stats.csv and run_config.txt here.
    #[arg(long)]
    pub out_dir: Option<PathBuf>,
}

#[derive(Debug, Clone, Args)]
pub struct SynthArgs {
    #[arg(long, default_value_t = DEFAULT_SENTENCES)]
    pub sentences: usize,
    #[arg(long, default_value_t = DEFAULT_SEED)]
    pub seed: u64,
    #[arg(long)]
    pub out: PathBuf,
}
