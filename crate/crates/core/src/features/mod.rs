//! Bag-of-words and TF-IDF vectorizers at word, word-n-gram and character
//! granularity, plus mean-pooled document embeddings.
//!
//! TF-IDF weights use `tf = count / terms_in_doc` and `idf = ln(N / df)`,
//! with no smoothing. Terms outside the training vocabulary are dropped at
//! transform time but still count toward `terms_in_doc`.

mod embeddings;
mod sparse;
mod vectorizer;

use std::path::Path;

pub use embeddings::EmbeddingTable;
pub use sparse::SparseVector;
pub use vectorizer::{extract_terms, FeatureModel, FitOptions, Scheme, TermEntry};

use crate::error::Result;

pub fn fit<S: AsRef<str>>(docs: &[Vec<S>], scheme: Scheme, opts: &FitOptions) -> Result<FeatureModel> {
    FeatureModel::fit(docs, scheme, opts)
}

pub fn transform<S: AsRef<str>>(model: &FeatureModel, doc: &[S]) -> SparseVector {
    model.transform(doc)
}

pub fn load_embeddings(path: impl AsRef<Path>) -> Result<EmbeddingTable> {
    EmbeddingTable::load(path)
}

pub fn embed_doc<S: AsRef<str>>(table: &EmbeddingTable, doc: &[S]) -> Vec<f64> {
    table.embed_doc(doc)
}
