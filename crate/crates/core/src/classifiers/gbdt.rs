//! Gradient-boosted regression trees under logistic loss.
//!
//! `F_0` is the log-odds of the training base rate. Each stage fits a
//! depth-limited tree to the residuals `y - sigmoid(F)` and sets every leaf
//! to the Newton step `sum(residual) / sum(p (1 - p))`, scaled by the
//! learning rate.

use serde::{Deserialize, Serialize};

use super::data::{check_dim, Dataset, Sample};
use super::tree::{Builder, Target, Tree, TreeConfig};
use crate::error::{Error, Result};
use crate::ingest::Label;
use crate::seed;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GbdtParams {
    pub n_estimators: usize,
    pub learning_rate: f64,
    pub max_depth: usize,
}

impl Default for GbdtParams {
    fn default() -> Self {
        Self {
            n_estimators: 200,
            learning_rate: 0.1,
            max_depth: 6,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GbdtModel {
    pub params: GbdtParams,
    dim: usize,
    /// Training base rate of class 1.
    pub base_rate: f64,
    /// Initial raw score; absent for single-class training data.
    pub init: Option<f64>,
    pub trees: Vec<Tree>,
}

pub fn sigmoid(x: f64) -> f64 {
    if x >= 0.0 {
        1.0 / (1.0 + (-x).exp())
    } else {
        let e = x.exp();
        e / (1.0 + e)
    }
}

pub fn fit(data: &Dataset, params: GbdtParams) -> Result<GbdtModel> {
    if params.n_estimators == 0 {
        return Err(Error::InvalidArgument("n_estimators must be at least 1".into()));
    }
    if !(params.learning_rate > 0.0) {
        return Err(Error::InvalidArgument(format!(
            "learning_rate must be positive, got {}",
            params.learning_rate
        )));
    }
    let n = data.len();
    let base_rate = data.positives() as f64 / n as f64;
    if !data.has_both_classes() {
        log::warn!("gbdt: single-class training data; the model emits the base rate {base_rate}");
        return Ok(GbdtModel {
            params,
            dim: data.dim(),
            base_rate,
            init: None,
            trees: Vec::new(),
        });
    }

    let f0 = (base_rate / (1.0 - base_rate)).ln();
    let y: Vec<f64> = data.labels().iter().map(|l| l.as_u8() as f64).collect();
    let mut raw = vec![f0; n];
    let mut trees = Vec::with_capacity(params.n_estimators);
    // the builder only draws randomness for feature subsampling, which is off
    let mut rng = seed::rng(0);
    for _ in 0..params.n_estimators {
        let p: Vec<f64> = raw.iter().map(|&f| sigmoid(f)).collect();
        let grad: Vec<f64> = y.iter().zip(&p).map(|(y, p)| y - p).collect();
        let hess: Vec<f64> = p.iter().map(|p| p * (1.0 - p)).collect();
        let config = TreeConfig {
            max_depth: Some(params.max_depth),
            max_features: None,
        };
        let mut tree = Builder::new(data, Target::Newton { grad: &grad, hess: &hess }, config)
            .build((0..n).collect(), &mut rng);
        for node in &mut tree.nodes {
            if let super::tree::Node::Leaf { value } = node {
                *value *= params.learning_rate;
            }
        }
        for (i, f) in raw.iter_mut().enumerate() {
            *f += tree.eval(&data.row(i));
        }
        trees.push(tree);
    }
    Ok(GbdtModel {
        params,
        dim: data.dim(),
        base_rate,
        init: Some(f0),
        trees,
    })
}

impl GbdtModel {
    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn raw_score(&self, x: &Sample<'_>) -> Result<Option<f64>> {
        check_dim(self.dim, x)?;
        Ok(self
            .init
            .map(|f0| f0 + self.trees.iter().map(|t| t.eval(x)).sum::<f64>()))
    }

    /// Probability of class 1.
    pub fn score(&self, x: &Sample<'_>) -> Result<f64> {
        Ok(match self.raw_score(x)? {
            Some(f) => sigmoid(f),
            None => self.base_rate,
        })
    }

    /// Class 1 iff the probability is at least 0.5.
    pub fn predict(&self, x: &Sample<'_>) -> Result<Label> {
        Ok(Label::from(self.score(x)? >= 0.5))
    }
}
