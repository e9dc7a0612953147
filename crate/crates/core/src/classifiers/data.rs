use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::features::SparseVector;
use crate::ingest::Label;

/// Feature rows, either sparse (vectorizer output) or dense (embeddings).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Rows {
    Sparse(Vec<SparseVector>),
    Dense(Vec<Vec<f64>>),
}

impl Rows {
    pub fn len(&self) -> usize {
        match self {
            Rows::Sparse(r) => r.len(),
            Rows::Dense(r) => r.len(),
        }
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn get(&self, i: usize) -> Sample<'_> {
        match self {
            Rows::Sparse(r) => Sample::Sparse(&r[i]),
            Rows::Dense(r) => Sample::Dense(&r[i]),
        }
    }

    pub fn iter(&self) -> impl Iterator<Item = Sample<'_>> + '_ {
        (0..self.len()).map(move |i| self.get(i))
    }

    pub fn select(&self, idx: &[usize]) -> Rows {
        match self {
            Rows::Sparse(r) => Rows::Sparse(idx.iter().map(|&i| r[i].clone()).collect()),
            Rows::Dense(r) => Rows::Dense(idx.iter().map(|&i| r[i].clone()).collect()),
        }
    }
}

/// Borrowed view of one feature row.
#[derive(Debug, Clone, Copy)]
pub enum Sample<'a> {
    Sparse(&'a SparseVector),
    Dense(&'a [f64]),
}

impl<'a> Sample<'a> {
    pub fn dim(&self) -> usize {
        match self {
            Sample::Sparse(v) => v.dim(),
            Sample::Dense(v) => v.len(),
        }
    }

    pub fn get(&self, j: usize) -> f64 {
        match self {
            Sample::Sparse(v) => v.get(j as u32),
            Sample::Dense(v) => v[j],
        }
    }

    /// Calls `f` for every non-zero entry in ascending index order.
    pub fn for_each_nonzero(&self, mut f: impl FnMut(usize, f64)) {
        match self {
            Sample::Sparse(v) => v.iter().for_each(|(j, x)| f(j as usize, x)),
            Sample::Dense(v) => v
                .iter()
                .enumerate()
                .filter(|(_, x)| **x != 0.0)
                .for_each(|(j, x)| f(j, *x)),
        }
    }

    /// Squared Euclidean distance summed in ascending index order.
    pub fn sq_dist(&self, other: &Sample<'_>) -> f64 {
        match (self, other) {
            (Sample::Sparse(a), Sample::Sparse(b)) => a.sq_dist(b),
            (Sample::Dense(a), Sample::Dense(b)) => a
                .iter()
                .zip(b.iter())
                .fold(0.0, |acc, (x, y)| acc + (x - y) * (x - y)),
            _ => {
                let (a, b) = (self.to_dense(), other.to_dense());
                Sample::Dense(&a).sq_dist(&Sample::Dense(&b))
            }
        }
    }

    pub fn to_dense(&self) -> Vec<f64> {
        match self {
            Sample::Sparse(v) => v.to_dense(),
            Sample::Dense(v) => v.to_vec(),
        }
    }
}

impl<'a> From<&'a SparseVector> for Sample<'a> {
    fn from(v: &'a SparseVector) -> Self {
        Sample::Sparse(v)
    }
}

impl<'a> From<&'a [f64]> for Sample<'a> {
    fn from(v: &'a [f64]) -> Self {
        Sample::Dense(v)
    }
}

impl<'a> From<&'a Vec<f64>> for Sample<'a> {
    fn from(v: &'a Vec<f64>) -> Self {
        Sample::Dense(v)
    }
}

/// Labeled feature matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct Dataset {
    rows: Rows,
    labels: Vec<Label>,
    dim: usize,
}

impl Dataset {
    pub fn new(rows: Rows, labels: Vec<Label>, dim: usize) -> Result<Self> {
        if rows.len() != labels.len() {
            return Err(Error::InvalidArgument(format!(
                "{} rows but {} labels",
                rows.len(),
                labels.len()
            )));
        }
        if rows.is_empty() {
            return Err(Error::Empty("dataset has no rows".into()));
        }
        if let Some(bad) = rows.iter().find(|r| r.dim() != dim) {
            return Err(Error::DimensionMismatch {
                expected: dim,
                got: bad.dim(),
            });
        }
        Ok(Self { rows, labels, dim })
    }

    pub fn dense(rows: Vec<Vec<f64>>, labels: Vec<Label>) -> Result<Self> {
        let dim = rows.first().map_or(0, Vec::len);
        Self::new(Rows::Dense(rows), labels, dim)
    }

    pub fn sparse(rows: Vec<SparseVector>, labels: Vec<Label>, dim: usize) -> Result<Self> {
        Self::new(Rows::Sparse(rows), labels, dim)
    }

    pub fn len(&self) -> usize {
        self.labels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.labels.is_empty()
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn rows(&self) -> &Rows {
        &self.rows
    }

    pub fn row(&self, i: usize) -> Sample<'_> {
        self.rows.get(i)
    }

    pub fn labels(&self) -> &[Label] {
        &self.labels
    }

    pub fn label(&self, i: usize) -> Label {
        self.labels[i]
    }

    pub fn positives(&self) -> usize {
        self.labels.iter().filter(|l| l.is_positive()).count()
    }

    pub fn has_both_classes(&self) -> bool {
        let p = self.positives();
        p > 0 && p < self.len()
    }

    pub fn require_both_classes(&self) -> Result<()> {
        if self.has_both_classes() {
            Ok(())
        } else {
            Err(Error::SingleClass)
        }
    }

    pub fn subset(&self, idx: &[usize]) -> Dataset {
        Dataset {
            rows: self.rows.select(idx),
            labels: idx.iter().map(|&i| self.labels[i]).collect(),
            dim: self.dim,
        }
    }
}

pub(crate) fn check_dim(expected: usize, x: &Sample<'_>) -> Result<()> {
    if x.dim() != expected {
        return Err(Error::DimensionMismatch {
            expected,
            got: x.dim(),
        });
    }
    Ok(())
}
