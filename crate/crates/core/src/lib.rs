//! Arabic suicidal-ideation tweet classification: text normalization,
//! ingestion, annotator agreement, feature extraction, classical
//! classifiers, evaluation and experiment orchestration.

pub mod agreement;
pub mod classifiers;
pub mod error;
pub mod evaluation;
pub mod experiment;
pub mod features;
pub mod ingest;
pub mod seed;
pub mod stats;
pub mod textnorm;

pub use agreement::{cohen_kappa, contingency, AgreementTable, KappaResult};
pub use classifiers::{ClassifierModel, Dataset, Family, HyperGrid, Hyperparams, Metric};
pub use error::{Error, Result};
pub use evaluation::{ConfusionMatrix, EvalReport, MetricsReport, Prediction, RocCurve, SplitSpec};
pub use experiment::{ExperimentConfig, ResultTable};
pub use features::{FeatureModel, Scheme, SparseVector};
pub use ingest::{Corpus, Label, Tweet};
pub use textnorm::{normalize, NormalizeOptions};
