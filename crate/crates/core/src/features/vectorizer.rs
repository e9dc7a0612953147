use std::collections::{BTreeMap, HashMap};
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use super::SparseVector;
use crate::error::{Error, Result};
use crate::textnorm::{char_ngrams_into, NgramRange};

/// Term space and weighting of a sparse vectorizer.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Scheme {
    /// Raw unigram counts.
    Bow,
    /// TF-IDF over single tokens.
    TfidfUnigram,
    /// TF-IDF over token bigrams and trigrams (no unigrams).
    TfidfNgram23,
    /// TF-IDF over within-token character n-grams.
    TfidfChar,
}

impl Scheme {
    pub const ALL: [Scheme; 4] = [
        Scheme::Bow,
        Scheme::TfidfUnigram,
        Scheme::TfidfNgram23,
        Scheme::TfidfChar,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            Scheme::Bow => "bow",
            Scheme::TfidfUnigram => "tfidf_unigram",
            Scheme::TfidfNgram23 => "tfidf_ngram23",
            Scheme::TfidfChar => "tfidf_char",
        }
    }

    fn is_tfidf(self) -> bool {
        self != Scheme::Bow
    }
}

impl fmt::Display for Scheme {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Scheme {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "bow" => Ok(Scheme::Bow),
            "tfidf_unigram" | "unigram" => Ok(Scheme::TfidfUnigram),
            "tfidf_ngram23" | "ngram23" => Ok(Scheme::TfidfNgram23),
            "tfidf_char" | "char" => Ok(Scheme::TfidfChar),
            other => Err(Error::InvalidArgument(format!("unknown scheme {other:?}"))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(default)]
pub struct FitOptions {
    /// Character n-gram lengths; used by [`Scheme::TfidfChar`] only.
    pub char_range: NgramRange,
    /// Terms seen in fewer documents are dropped.
    pub min_df: u64,
    /// Scale transformed vectors to unit Euclidean length.
    pub normalize: bool,
}

impl Default for FitOptions {
    fn default() -> Self {
        Self {
            char_range: NgramRange::default(),
            min_df: 1,
            normalize: false,
        }
    }
}

/// The terms of one tokenized document in a scheme's term space, with
/// repetition.
pub fn extract_terms<S: AsRef<str>>(scheme: Scheme, tokens: &[S], char_range: NgramRange) -> Vec<String> {
    match scheme {
        Scheme::Bow | Scheme::TfidfUnigram => tokens.iter().map(|t| t.as_ref().to_owned()).collect(),
        Scheme::TfidfNgram23 => {
            let mut out = Vec::new();
            for n in 2..=3 {
                for w in tokens.windows(n) {
                    let parts: Vec<&str> = w.iter().map(AsRef::as_ref).collect();
                    out.push(parts.join(" "));
                }
            }
            out
        }
        Scheme::TfidfChar => {
            let mut out = Vec::new();
            for t in tokens {
                char_ngrams_into(t.as_ref(), char_range, &mut out);
            }
            out
        }
    }
}

/// Term metadata as serialized: text, column index, document frequency.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct TermEntry {
    pub t: String,
    pub idx: u32,
    pub df: u64,
}

/// A fitted sparse vectorizer.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "FeatureModelWire", into = "FeatureModelWire")]
pub struct FeatureModel {
    scheme: Scheme,
    char_range: Option<NgramRange>,
    n_docs: u64,
    terms: Vec<TermEntry>,
    normalize: bool,
    index: HashMap<String, u32>,
}

#[derive(Serialize, Deserialize)]
struct FeatureModelWire {
    scheme: Scheme,
    n_range: Option<NgramRange>,
    #[serde(rename = "N")]
    n_docs: u64,
    terms: Vec<TermEntry>,
    normalize: bool,
}

impl From<FeatureModel> for FeatureModelWire {
    fn from(m: FeatureModel) -> Self {
        Self {
            scheme: m.scheme,
            n_range: m.char_range,
            n_docs: m.n_docs,
            terms: m.terms,
            normalize: m.normalize,
        }
    }
}

impl TryFrom<FeatureModelWire> for FeatureModel {
    type Error = String;

    fn try_from(w: FeatureModelWire) -> std::result::Result<Self, String> {
        let mut terms = w.terms;
        terms.sort_by_key(|t| t.idx);
        for (k, t) in terms.iter().enumerate() {
            if t.idx as usize != k {
                return Err(format!("term indices must be 0..{} without gaps", terms.len()));
            }
            if t.df == 0 || t.df > w.n_docs {
                return Err(format!("df of {:?} outside [1, N]", t.t));
            }
        }
        if w.scheme == Scheme::TfidfChar {
            let r = w.n_range.ok_or("char scheme requires n_range")?;
            r.validate().map_err(|e| e.to_string())?;
        }
        let index = terms.iter().map(|t| (t.t.clone(), t.idx)).collect();
        Ok(Self {
            scheme: w.scheme,
            char_range: w.n_range,
            n_docs: w.n_docs,
            terms,
            normalize: w.normalize,
            index,
        })
    }
}

impl FeatureModel {
    /// Builds the vocabulary from the training documents. Columns are
    /// assigned in lexicographic term order.
    pub fn fit<S: AsRef<str>>(docs: &[Vec<S>], scheme: Scheme, opts: &FitOptions) -> Result<Self> {
        if docs.is_empty() {
            return Err(Error::Empty("cannot fit a vectorizer on an empty corpus".into()));
        }
        if scheme == Scheme::TfidfChar {
            opts.char_range.validate()?;
        }
        let mut df: BTreeMap<String, u64> = BTreeMap::new();
        for doc in docs {
            let mut terms = extract_terms(scheme, doc, opts.char_range);
            terms.sort_unstable();
            terms.dedup();
            for t in terms {
                *df.entry(t).or_insert(0) += 1;
            }
        }
        let terms: Vec<TermEntry> = df
            .into_iter()
            .filter(|(_, d)| *d >= opts.min_df)
            .enumerate()
            .map(|(i, (t, df))| TermEntry { t, idx: i as u32, df })
            .collect();
        let index = terms.iter().map(|t| (t.t.clone(), t.idx)).collect();
        Ok(Self {
            scheme,
            char_range: (scheme == Scheme::TfidfChar).then_some(opts.char_range),
            n_docs: docs.len() as u64,
            terms,
            normalize: opts.normalize,
            index,
        })
    }

    pub fn transform<S: AsRef<str>>(&self, doc: &[S]) -> SparseVector {
        let range = self.char_range.unwrap_or_default();
        let terms = extract_terms(self.scheme, doc, range);
        let total = terms.len();
        let mut counts: HashMap<u32, u64> = HashMap::new();
        for t in &terms {
            if let Some(&idx) = self.index.get(t.as_str()) {
                *counts.entry(idx).or_insert(0) += 1;
            }
        }
        let pairs = counts
            .into_iter()
            .map(|(idx, c)| {
                let w = if self.scheme.is_tfidf() {
                    let tf = c as f64 / total as f64;
                    let idf = (self.n_docs as f64 / self.terms[idx as usize].df as f64).ln();
                    tf * idf
                } else {
                    c as f64
                };
                (idx, w)
            })
            .collect();
        let mut v = SparseVector::from_pairs(self.dim(), pairs).expect("indices come from the vocabulary");
        if self.normalize {
            v.normalize();
        }
        v
    }

    pub fn transform_all<S: AsRef<str> + Sync>(&self, docs: &[Vec<S>]) -> Vec<SparseVector> {
        use rayon::prelude::*;
        docs.par_iter().map(|d| self.transform(d)).collect()
    }

    pub fn dim(&self) -> usize {
        self.terms.len()
    }

    pub fn scheme(&self) -> Scheme {
        self.scheme
    }

    pub fn n_docs(&self) -> u64 {
        self.n_docs
    }

    pub fn normalizes(&self) -> bool {
        self.normalize
    }

    pub fn char_range(&self) -> Option<NgramRange> {
        self.char_range
    }

    pub fn terms(&self) -> &[TermEntry] {
        &self.terms
    }

    pub fn index_of(&self, term: &str) -> Option<u32> {
        self.index.get(term).copied()
    }

    pub fn df(&self, term: &str) -> Option<u64> {
        self.index_of(term).map(|i| self.terms[i as usize].df)
    }

    /// Same vocabulary with a different normalization flag.
    pub fn with_normalize(&self, normalize: bool) -> Self {
        Self {
            normalize,
            ..self.clone()
        }
    }
}
