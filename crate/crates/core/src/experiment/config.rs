//! Experiment configuration, read from TOML or JSON.

use std::collections::BTreeMap;
use std::fmt;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use super::synth::SynthSpec;
use crate::classifiers::{Family, HyperGrid, Metric};
use crate::error::{Error, Result};
use crate::evaluation::SplitSpec;
use crate::features::Scheme;
use crate::ingest::InputFormat;
use crate::textnorm::{NgramRange, NormalizeOptions};

/// Kind of pretrained word vectors used for pooled document features.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum EmbeddingKind {
    Word2vec,
    Fasttext,
}

impl EmbeddingKind {
    pub fn as_str(self) -> &'static str {
        match self {
            EmbeddingKind::Word2vec => "word2vec",
            EmbeddingKind::Fasttext => "fasttext",
        }
    }
}

/// One feature representation of the experiment grid.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(try_from = "FeatureEntry", into = "FeatureEntry")]
pub enum FeatureSpec {
    Sparse(Scheme),
    Embedding { kind: EmbeddingKind, path: PathBuf },
}

impl FeatureSpec {
    /// Short name used in file names and seeds.
    pub fn name(&self) -> &'static str {
        match self {
            FeatureSpec::Sparse(s) => s.as_str(),
            FeatureSpec::Embedding { kind, .. } => kind.as_str(),
        }
    }

    /// Name used in result tables.
    pub fn display_name(&self) -> &'static str {
        match self {
            FeatureSpec::Sparse(Scheme::Bow) => "BOW",
            FeatureSpec::Sparse(Scheme::TfidfUnigram) => "TF-IDF unigram",
            FeatureSpec::Sparse(Scheme::TfidfNgram23) => "TF-IDF n-gram (2,3)",
            FeatureSpec::Sparse(Scheme::TfidfChar) => "TF-IDF char n-gram",
            FeatureSpec::Embedding {
                kind: EmbeddingKind::Word2vec,
                ..
            } => "Word2Vec",
            FeatureSpec::Embedding {
                kind: EmbeddingKind::Fasttext,
                ..
            } => "FastText",
        }
    }
}

impl fmt::Display for FeatureSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

/// Sparse schemes parse from their names; embeddings need a path and are
/// written `word2vec:<path>` or `fasttext:<path>`.
impl FromStr for FeatureSpec {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        if let Some((kind, path)) = s.split_once(':') {
            let kind = match kind {
                "word2vec" => EmbeddingKind::Word2vec,
                "fasttext" => EmbeddingKind::Fasttext,
                other => return Err(Error::InvalidArgument(format!("unknown embedding kind {other:?}"))),
            };
            return Ok(FeatureSpec::Embedding {
                kind,
                path: PathBuf::from(path),
            });
        }
        match s {
            "word2vec" | "fasttext" => Err(Error::InvalidArgument(format!(
                "{s} features need an embedding file: {s}:<path>"
            ))),
            other => Ok(FeatureSpec::Sparse(other.parse()?)),
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(untagged)]
enum FeatureEntry {
    Name(String),
    Table {
        scheme: String,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        embeddings: Option<PathBuf>,
    },
}

impl TryFrom<FeatureEntry> for FeatureSpec {
    type Error = Error;

    fn try_from(e: FeatureEntry) -> Result<Self> {
        match e {
            FeatureEntry::Name(s) => s.parse(),
            FeatureEntry::Table { scheme, embeddings } => match (scheme.as_str(), embeddings) {
                ("word2vec", Some(path)) => Ok(FeatureSpec::Embedding {
                    kind: EmbeddingKind::Word2vec,
                    path,
                }),
                ("fasttext", Some(path)) => Ok(FeatureSpec::Embedding {
                    kind: EmbeddingKind::Fasttext,
                    path,
                }),
                (s, None) => s.parse(),
                (s, Some(_)) => Err(Error::Config(format!("scheme {s:?} does not take an embeddings file"))),
            },
        }
    }
}

impl From<FeatureSpec> for FeatureEntry {
    fn from(f: FeatureSpec) -> Self {
        match f {
            FeatureSpec::Sparse(s) => FeatureEntry::Name(s.as_str().to_string()),
            FeatureSpec::Embedding { kind, path } => FeatureEntry::Table {
                scheme: kind.as_str().to_string(),
                embeddings: Some(path),
            },
        }
    }
}

/// Where the labeled tweets come from.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "source", rename_all = "snake_case")]
pub enum CorpusSource {
    /// A tweet file; labels come from the file itself or from an
    /// `id,label` CSV that overrides them.
    File {
        path: PathBuf,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        format: Option<InputFormat>,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        labels: Option<PathBuf>,
    },
    /// A generated corpus; see [`SynthSpec`].
    Synthetic(SynthSpec),
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct TuningConfig {
    /// Cross-validation folds inside the training split.
    pub folds: usize,
    pub metric: Metric,
}

impl Default for TuningConfig {
    fn default() -> Self {
        Self {
            folds: 5,
            metric: Metric::Accuracy,
        }
    }
}

/// A prediction file produced by a model outside this crate, scored on the
/// test split.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExternalSpec {
    pub path: PathBuf,
    /// Table label; defaults to the model name in the file.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub feature: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ExperimentConfig {
    /// Master seed; every randomized step derives from it.
    pub seed: u64,
    pub corpus: CorpusSource,
    pub split: SplitSpec,
    pub features: Vec<FeatureSpec>,
    pub families: Vec<Family>,
    /// Inline candidate lists; replaced by `grid_file` when that is set.
    pub grid: HyperGrid,
    pub grid_file: Option<PathBuf>,
    pub tuning: TuningConfig,
    pub text: NormalizeOptions,
    pub char_range: NgramRange,
    pub min_df: u64,
    /// Per-family override of L2 normalization of feature vectors.
    pub l2_normalize: BTreeMap<Family, bool>,
    pub external: Vec<ExternalSpec>,
    pub out_dir: PathBuf,
    /// Write fitted models next to the report.
    pub save_models: bool,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        Self {
            seed: 42,
            corpus: CorpusSource::Synthetic(SynthSpec::default()),
            split: SplitSpec::default(),
            features: Scheme::ALL.iter().map(|&s| FeatureSpec::Sparse(s)).collect(),
            families: Family::ALL.to_vec(),
            grid: HyperGrid::default(),
            grid_file: None,
            tuning: TuningConfig::default(),
            text: NormalizeOptions::default(),
            char_range: NgramRange::default(),
            min_df: 1,
            l2_normalize: BTreeMap::new(),
            external: Vec::new(),
            out_dir: PathBuf::from("results"),
            save_models: true,
        }
    }
}

impl ExperimentConfig {
    pub fn from_toml(s: &str) -> Result<Self> {
        toml::from_str(s).map_err(|e| Error::Config(e.to_string()))
    }

    pub fn from_json(s: &str) -> Result<Self> {
        serde_json::from_str(s).map_err(|e| Error::Config(e.to_string()))
    }

    /// Reads a `.json` or TOML file. Relative paths inside it are taken
    /// relative to the file's directory; a grid file, if named, is loaded.
    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let content = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        let is_json = path.extension().is_some_and(|e| e.eq_ignore_ascii_case("json"));
        let mut cfg = if is_json {
            Self::from_json(&content)?
        } else {
            Self::from_toml(&content)?
        };
        let base = path.parent().unwrap_or(Path::new(""));
        cfg.resolve_paths(base);
        cfg.load_grid_file()?;
        Ok(cfg)
    }

    /// Makes every relative path absolute against `base`.
    pub fn resolve_paths(&mut self, base: &Path) {
        let fix = |p: &mut PathBuf| {
            if p.is_relative() {
                *p = base.join(&*p);
            }
        };
        if let CorpusSource::File { path, labels, .. } = &mut self.corpus {
            fix(path);
            if let Some(l) = labels {
                fix(l);
            }
        }
        for f in &mut self.features {
            if let FeatureSpec::Embedding { path, .. } = f {
                fix(path);
            }
        }
        if let Some(g) = &mut self.grid_file {
            fix(g);
        }
        for e in &mut self.external {
            fix(&mut e.path);
        }
        fix(&mut self.out_dir);
    }

    pub fn load_grid_file(&mut self) -> Result<()> {
        if let Some(path) = &self.grid_file {
            let s = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
            self.grid = serde_json::from_str(&s).map_err(|e| Error::Config(format!("{}: {e}", path.display())))?;
        }
        Ok(())
    }

    pub fn normalizes(&self, family: Family) -> bool {
        self.l2_normalize
            .get(&family)
            .copied()
            .unwrap_or_else(|| family.normalizes_by_default())
    }

    /// Checks value ranges and that every referenced file exists.
    pub fn validate(&self) -> Result<()> {
        self.split.validate()?;
        self.char_range.validate()?;
        self.grid.validate()?;
        if self.features.is_empty() {
            return Err(Error::Config("no feature schemes configured".into()));
        }
        if self.families.is_empty() {
            return Err(Error::Config("no classifier families configured".into()));
        }
        if self.tuning.folds < 2 {
            return Err(Error::Config(format!("tuning.folds must be at least 2, got {}", self.tuning.folds)));
        }
        let mut files: Vec<&Path> = Vec::new();
        match &self.corpus {
            CorpusSource::File { path, labels, .. } => {
                files.push(path);
                files.extend(labels.as_deref());
            }
            CorpusSource::Synthetic(spec) => spec.validate()?,
        }
        for f in &self.features {
            if let FeatureSpec::Embedding { path, .. } = f {
                files.push(path);
            }
        }
        files.extend(self.external.iter().map(|e| e.path.as_path()));
        for f in files {
            if !f.is_file() {
                return Err(Error::Config(format!("file not found: {}", f.display())));
            }
        }
        Ok(())
    }
}
