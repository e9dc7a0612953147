//! A fitted feature extractor plus classifier, saved and loaded as one file.

use std::path::{Path, PathBuf};
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use super::config::{EmbeddingKind, FeatureSpec};
use crate::classifiers::{self, ClassifierModel, Dataset, Family, GridResult, HyperGrid, Metric, Rows};
use crate::error::{Error, Result};
use crate::evaluation::Prediction;
use crate::features::{EmbeddingTable, FeatureModel, FitOptions, SparseVector};
use crate::ingest::{Corpus, Label};
use crate::textnorm::{self, NormalizeOptions};

pub const PIPELINE_FORMAT_VERSION: u32 = 1;

/// Maps tokenized documents to feature rows.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Featurizer {
    Sparse {
        model: FeatureModel,
    },
    /// Mean-pooled pretrained word vectors. The table itself is not
    /// serialized; it is reloaded from `path`.
    Embedding {
        embedding: EmbeddingKind,
        path: PathBuf,
        dim: usize,
        normalize: bool,
        #[serde(skip)]
        table: Option<Arc<EmbeddingTable>>,
    },
}

impl Featurizer {
    /// Fits on training documents only. Embedding tables are read through
    /// `load`, which lets callers share one table across fits.
    pub fn fit(
        spec: &FeatureSpec,
        docs: &[Vec<String>],
        opts: &FitOptions,
        load: impl FnOnce(&Path) -> Result<Arc<EmbeddingTable>>,
    ) -> Result<Self> {
        match spec {
            FeatureSpec::Sparse(scheme) => Ok(Featurizer::Sparse {
                model: FeatureModel::fit(docs, *scheme, opts)?,
            }),
            FeatureSpec::Embedding { kind, path } => {
                if docs.is_empty() {
                    return Err(Error::Empty("cannot fit features on an empty corpus".into()));
                }
                let table = load(path)?;
                Ok(Featurizer::Embedding {
                    embedding: *kind,
                    path: path.clone(),
                    dim: table.dim(),
                    normalize: opts.normalize,
                    table: Some(table),
                })
            }
        }
    }

    pub fn dim(&self) -> usize {
        match self {
            Featurizer::Sparse { model } => model.dim(),
            Featurizer::Embedding { dim, .. } => *dim,
        }
    }

    pub fn normalizes(&self) -> bool {
        match self {
            Featurizer::Sparse { model } => model.normalizes(),
            Featurizer::Embedding { normalize, .. } => *normalize,
        }
    }

    pub fn with_normalize(&self, normalize: bool) -> Self {
        match self {
            Featurizer::Sparse { model } => Featurizer::Sparse {
                model: model.with_normalize(normalize),
            },
            Featurizer::Embedding {
                embedding,
                path,
                dim,
                table,
                ..
            } => Featurizer::Embedding {
                embedding: *embedding,
                path: path.clone(),
                dim: *dim,
                normalize,
                table: table.clone(),
            },
        }
    }

    /// Reads the embedding table if it is not in memory yet.
    pub fn ensure_loaded(&mut self) -> Result<()> {
        if let Featurizer::Embedding { path, dim, table, .. } = self {
            if table.is_none() {
                let t = EmbeddingTable::load(&*path)?;
                if t.dim() != *dim {
                    return Err(Error::DimensionMismatch {
                        expected: *dim,
                        got: t.dim(),
                    });
                }
                *table = Some(Arc::new(t));
            }
        }
        Ok(())
    }

    pub fn transform(&self, docs: &[Vec<String>]) -> Result<Rows> {
        use rayon::prelude::*;
        match self {
            Featurizer::Sparse { model } => Ok(Rows::Sparse(model.transform_all(docs))),
            Featurizer::Embedding {
                table, normalize, path, ..
            } => {
                let table = table
                    .as_ref()
                    .ok_or_else(|| Error::Config(format!("embedding table {} not loaded", path.display())))?;
                Ok(Rows::Dense(
                    docs.par_iter()
                        .map(|d| {
                            let mut v = table.embed_doc(d);
                            if *normalize {
                                l2_normalize(&mut v);
                            }
                            v
                        })
                        .collect(),
                ))
            }
        }
    }
}

fn l2_normalize(v: &mut [f64]) {
    // same arithmetic as the sparse path so both representations agree
    let mut s = SparseVector::from_dense(v);
    s.normalize();
    v.copy_from_slice(&s.to_dense());
}

/// Normalized tokens of every tweet, in corpus order.
pub fn tokenize_corpus(corpus: &Corpus, opts: &NormalizeOptions) -> Vec<Vec<String>> {
    use rayon::prelude::*;
    corpus
        .tweets
        .par_iter()
        .map(|t| textnorm::normalize_with(&t.text, opts).tokens)
        .collect()
}

/// Selects the hyperparameters for `family` by cross-validation on `train`
/// (skipped when the grid has a single candidate) and refits on all of it.
pub fn tune_and_fit(
    family: Family,
    train: &Dataset,
    grid: &HyperGrid,
    folds: usize,
    metric: Metric,
    seed: u64,
) -> Result<(ClassifierModel, Option<GridResult>)> {
    let candidates = grid.candidates(family);
    let (hp, search) = match candidates.as_slice() {
        [] => return Err(Error::Config(format!("no candidates for {family}"))),
        [only] => (*only, None),
        _ => {
            let r = classifiers::grid_search(family, train, grid, folds, metric, seed)?;
            (r.best, Some(r))
        }
    };
    Ok((classifiers::fit(train, &hp, seed)?, search))
}

/// Everything needed to label new tweets.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct TrainedPipeline {
    pub version: u32,
    pub text: NormalizeOptions,
    pub featurizer: Featurizer,
    pub classifier: ClassifierModel,
}

impl TrainedPipeline {
    pub fn new(text: NormalizeOptions, featurizer: Featurizer, classifier: ClassifierModel) -> Self {
        Self {
            version: PIPELINE_FORMAT_VERSION,
            text,
            featurizer,
            classifier,
        }
    }

    /// Fits features and a classifier on every labeled tweet of `corpus`.
    #[allow(clippy::too_many_arguments)]
    pub fn train(
        corpus: &Corpus,
        feature: &FeatureSpec,
        family: Family,
        text: NormalizeOptions,
        fit_opts: FitOptions,
        grid: &HyperGrid,
        folds: usize,
        metric: Metric,
        seed: u64,
    ) -> Result<(Self, Option<GridResult>)> {
        let labels: Vec<Label> = corpus.labels()?.into_iter().map(|(_, l)| l).collect();
        let docs = tokenize_corpus(corpus, &text);
        let featurizer = Featurizer::fit(feature, &docs, &fit_opts, |p| EmbeddingTable::load(p).map(Arc::new))?;
        let rows = featurizer.transform(&docs)?;
        let data = Dataset::new(rows, labels, featurizer.dim())?;
        let (model, search) = tune_and_fit(family, &data, grid, folds, metric, seed)?;
        Ok((Self::new(text, featurizer, model), search))
    }

    pub fn predict(&self, corpus: &Corpus) -> Result<Vec<Prediction>> {
        let docs = tokenize_corpus(corpus, &self.text);
        let rows = self.featurizer.transform(&docs)?;
        let out = self.classifier.predict_rows(&rows)?;
        Ok(corpus
            .tweets
            .iter()
            .zip(out)
            .map(|(t, (pred, score))| Prediction {
                id: t.id.clone(),
                pred,
                score: Some(score),
            })
            .collect())
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string(self)?)
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        let path = path.as_ref();
        std::fs::write(path, self.to_json()?).map_err(|e| Error::io(path, e))
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let s = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        let mut p: Self = serde_json::from_str(&s)?;
        if p.version != PIPELINE_FORMAT_VERSION {
            return Err(Error::Config(format!(
                "unsupported pipeline version {} (expected {PIPELINE_FORMAT_VERSION})",
                p.version
            )));
        }
        if p.classifier.dim != p.featurizer.dim() {
            return Err(Error::DimensionMismatch {
                expected: p.classifier.dim,
                got: p.featurizer.dim(),
            });
        }
        p.featurizer.ensure_loaded()?;
        Ok(p)
    }
}
