//! Configuration-driven runs over classifier families × feature schemes.

pub mod config;
pub mod pipeline;
pub mod report;
pub mod runner;
pub mod synth;

pub use config::{CorpusSource, EmbeddingKind, ExperimentConfig, ExternalSpec, FeatureSpec, TuningConfig};
pub use pipeline::{tokenize_corpus, tune_and_fit, Featurizer, TrainedPipeline};
pub use report::{emit_report, render_csv, render_json, render_markdown, ReportFormat, ResultRow, ResultTable};
pub use runner::{load_labeled_corpus, run_grid, run_grid_with, FitObserver, NoObserver, RunOutput};
pub use synth::{make_synthetic, SynthSpec};
