use std::net::SocketAddr;
use std::path::PathBuf;

use arsid_core::classifiers::Family;
use arsid_core::experiment::FeatureSpec;
use arsid_core::ingest::{InputFormat, Label};
use clap::{Args, Parser, Subcommand, ValueEnum};

#[derive(Debug, Parser)]
#[command(name = "pipeline", version, about = "Arabic suicidal-ideation tweet classification pipeline")]
pub struct Cli {
    /// Experiment configuration (TOML, or JSON with a .json extension)
    #[arg(long, global = true, value_name = "PATH")]
    pub config: Option<PathBuf>,

    /// Master seed; overrides the configuration
    #[arg(long, global = true)]
    pub seed: Option<u64>,

    /// Output directory; overrides the configuration
    #[arg(long, global = true, value_name = "DIR")]
    pub out: Option<PathBuf>,

    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Load a tweet dump, keep keyword matches and drop duplicates
    Ingest(IngestArgs),
    /// Class weights, length histograms, frequent terms and hourly trends
    Stats(StatsArgs),
    /// Stratified train/test split of a labeled corpus
    Split(SplitArgs),
    /// Fit one feature scheme and classifier and save the pipeline
    Train(TrainArgs),
    /// Run every configured (classifier, feature) cell and write the report
    Grid,
    /// Score a saved pipeline on labeled tweets
    Evaluate(EvaluateArgs),
    /// Cohen's kappa between two label files
    Kappa(KappaArgs),
    /// Score a prediction file produced by another system
    ScoreExternal(ScoreExternalArgs),
    /// Generate a labeled synthetic corpus
    Synth(SynthArgs),
    /// Run the annotation HTTP service
    ServeAnnotation(ServeArgs),
}

/// Tweets to work on; defaults to the configured corpus.
#[derive(Debug, Args)]
pub struct InputArgs {
    /// Tweet file (JSONL or CSV)
    #[arg(long, value_name = "PATH")]
    pub input: Option<PathBuf>,

    /// Input format; guessed from the extension when omitted
    #[arg(long, value_parser = parse_format)]
    pub format: Option<InputFormat>,

    /// `id,label` CSV whose labels override those in the tweet file
    #[arg(long, value_name = "PATH")]
    pub labels: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct IngestArgs {
    /// Tweet dump (JSONL or CSV)
    #[arg(long, value_name = "PATH")]
    pub input: PathBuf,

    #[arg(long, value_parser = parse_format)]
    pub format: Option<InputFormat>,

    /// Keyword file (`phrase<TAB>source` per line); without it every tweet is kept
    #[arg(long, value_name = "PATH")]
    pub keywords: Option<PathBuf>,

    /// Keep near-duplicate tweets
    #[arg(long)]
    pub no_dedup: bool,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum ClassArg {
    All,
    Suicidal,
    NonSuicidal,
}

impl ClassArg {
    pub fn label(self) -> Option<Label> {
        match self {
            ClassArg::All => None,
            ClassArg::Suicidal => Some(Label::Suicidal),
            ClassArg::NonSuicidal => Some(Label::NonSuicidal),
        }
    }

    pub fn as_str(self) -> &'static str {
        match self {
            ClassArg::All => "all",
            ClassArg::Suicidal => "suicidal",
            ClassArg::NonSuicidal => "non_suicidal",
        }
    }
}

#[derive(Debug, Args)]
pub struct StatsArgs {
    #[command(flatten)]
    pub input: InputArgs,

    /// Restrict to one class
    #[arg(long, value_enum, default_value = "all")]
    pub class: ClassArg,

    /// Offset from UTC for the hourly trend, as minutes or ±HH:MM
    #[arg(long, default_value = "0", value_parser = parse_tz_offset, allow_hyphen_values = true)]
    pub tz_offset: i32,

    /// Number of frequent terms to report
    #[arg(long, default_value_t = 50)]
    pub top_k: usize,

    /// Histogram bin width in tokens
    #[arg(long, default_value_t = 5)]
    pub bin_width: usize,

    /// Stop-word file excluded from the term counts
    #[arg(long, value_name = "PATH")]
    pub stopwords: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct SplitArgs {
    #[command(flatten)]
    pub input: InputArgs,

    /// Fraction of each class used for training
    #[arg(long)]
    pub train_fraction: Option<f64>,
}

#[derive(Debug, Args)]
pub struct TrainArgs {
    #[command(flatten)]
    pub input: InputArgs,

    /// Classifier family (gnb, svm_rbf, knn, random_forest, gbdt)
    #[arg(long)]
    pub family: Family,

    /// Feature scheme (bow, unigram, ngram23, char, word2vec:PATH, fasttext:PATH)
    #[arg(long)]
    pub feature: FeatureSpec,

    /// Train only on the training ids of this split file
    #[arg(long, value_name = "PATH")]
    pub split: Option<PathBuf>,

    /// Where to write the pipeline; defaults to OUT/model.json
    #[arg(long, value_name = "PATH")]
    pub model: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct EvaluateArgs {
    #[command(flatten)]
    pub input: InputArgs,

    /// Saved pipeline from `train`
    #[arg(long, value_name = "PATH")]
    pub model: PathBuf,

    /// Evaluate only on the test ids of this split file
    #[arg(long, value_name = "PATH")]
    pub split: Option<PathBuf>,

    /// Model name written to the prediction file
    #[arg(long)]
    pub name: Option<String>,
}

#[derive(Debug, Args)]
pub struct KappaArgs {
    /// First annotator's `id,label` CSV
    #[arg(long, value_name = "PATH")]
    pub a: PathBuf,

    /// Second annotator's `id,label` CSV
    #[arg(long, value_name = "PATH")]
    pub b: PathBuf,
}

#[derive(Debug, Args)]
pub struct ScoreExternalArgs {
    /// Prediction file (`# model=NAME`, then `id,pred[,score]`)
    #[arg(long, value_name = "PATH")]
    pub predictions: PathBuf,

    /// Gold labels: an `id,label` CSV or a labeled tweet file
    #[arg(long, value_name = "PATH")]
    pub gold: PathBuf,
}

#[derive(Debug, Args)]
pub struct SynthArgs {
    /// Number of tweets
    #[arg(long)]
    pub n: Option<usize>,

    /// Fraction of suicidal tweets
    #[arg(long)]
    pub balance: Option<f64>,

    /// Probability that a token is misspelled
    #[arg(long)]
    pub misspelling_rate: Option<f64>,
}

#[derive(Debug, Args)]
pub struct ServeArgs {
    /// Tweets to annotate
    #[arg(long, value_name = "PATH")]
    pub input: PathBuf,

    #[arg(long, value_parser = parse_format)]
    pub format: Option<InputFormat>,

    /// Directory for the session and decision logs; defaults to OUT/annotation
    #[arg(long, value_name = "DIR")]
    pub data_dir: Option<PathBuf>,

    #[arg(long, default_value = "127.0.0.1:8080")]
    pub addr: SocketAddr,

    /// Write a state snapshot every this many decisions
    #[arg(long, default_value_t = 100)]
    pub snapshot_every: u64,
}

fn parse_format(s: &str) -> Result<InputFormat, String> {
    s.parse().map_err(|e: arsid_core::Error| e.to_string())
}

/// Accepts whole minutes (`180`, `-300`) or `±HH:MM` (`+03:00`).
pub fn parse_tz_offset(s: &str) -> Result<i32, String> {
    let s = s.trim();
    if let Ok(m) = s.parse::<i32>() {
        return Ok(m);
    }
    let (sign, rest) = match s.as_bytes().first() {
        Some(b'+') => (1, &s[1..]),
        Some(b'-') => (-1, &s[1..]),
        _ => (1, s),
    };
    let (h, m) = rest
        .split_once(':')
        .ok_or_else(|| format!("expected minutes or ±HH:MM, got {s:?}"))?;
    let h: i32 = h.parse().map_err(|_| format!("bad hours in {s:?}"))?;
    let m: i32 = m.parse().map_err(|_| format!("bad minutes in {s:?}"))?;
    if !(0..60).contains(&m) {
        return Err(format!("bad minutes in {s:?}"));
    }
    Ok(sign * (h * 60 + m))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn tz_offsets() {
        assert_eq!(parse_tz_offset("180"), Ok(180));
        assert_eq!(parse_tz_offset("-300"), Ok(-300));
        assert_eq!(parse_tz_offset("+03:00"), Ok(180));
        assert_eq!(parse_tz_offset("-04:30"), Ok(-270));
        assert!(parse_tz_offset("03:75").is_err());
        assert!(parse_tz_offset("soon").is_err());
    }

    #[test]
    fn cli_definition_is_consistent() {
        use clap::CommandFactory;
        Cli::command().debug_assert();
    }
}
