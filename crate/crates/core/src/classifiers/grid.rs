//! Hyperparameter grids and stratified k-fold grid search.

use std::fmt;
use std::str::FromStr;

use rand::seq::SliceRandom;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::{fit_cached, Dataset, Family, FitCache, Hyperparams, MaxFeatures};
use crate::error::{Error, Result};
use crate::evaluation::{ConfusionMatrix, MetricsReport};
use crate::ingest::Label;
use crate::seed;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GnbGrid {
    pub var_smoothing: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SvmGrid {
    pub c: Vec<f64>,
    pub gamma: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct KnnGrid {
    pub k: Vec<usize>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ForestGrid {
    pub max_features: Vec<MaxFeatures>,
    pub n_estimators: Vec<usize>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GbdtGrid {
    pub n_estimators: Vec<usize>,
    #[serde(default = "default_lr")]
    pub learning_rate: Vec<f64>,
    #[serde(default = "default_depth")]
    pub max_depth: Vec<usize>,
}

fn default_lr() -> Vec<f64> {
    vec![0.1]
}

fn default_depth() -> Vec<usize> {
    vec![6]
}

/// Candidate lists per family. The default is the full search space.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct HyperGrid {
    pub gnb: GnbGrid,
    pub svm_rbf: SvmGrid,
    pub knn: KnnGrid,
    pub random_forest: ForestGrid,
    pub gbdt: GbdtGrid,
}

impl Default for HyperGrid {
    fn default() -> Self {
        Self {
            gnb: GnbGrid {
                var_smoothing: vec![1e-11, 1e-10, 1e-9, 1e-8, 1e-7],
            },
            svm_rbf: SvmGrid {
                c: (1..=10).map(f64::from).collect(),
                gamma: (1..=10).map(|i| f64::from(i) / 10.0).collect(),
            },
            knn: KnnGrid { k: (1..=31).collect() },
            random_forest: ForestGrid {
                max_features: vec![MaxFeatures::Auto, MaxFeatures::Sqrt, MaxFeatures::Log2],
                n_estimators: vec![100, 200, 300, 1000],
            },
            gbdt: GbdtGrid {
                n_estimators: vec![200, 300],
                learning_rate: default_lr(),
                max_depth: default_depth(),
            },
        }
    }
}

impl HyperGrid {
    /// A grid holding exactly one candidate for `hp`'s family; other
    /// families keep their defaults.
    pub fn single(hp: Hyperparams) -> Self {
        let mut g = Self::default();
        match hp {
            Hyperparams::Gnb { var_smoothing } => g.gnb.var_smoothing = vec![var_smoothing],
            Hyperparams::SvmRbf { c, gamma } => {
                g.svm_rbf.c = vec![c];
                g.svm_rbf.gamma = vec![gamma];
            }
            Hyperparams::Knn { k } => g.knn.k = vec![k],
            Hyperparams::RandomForest {
                n_estimators,
                max_features,
            } => {
                g.random_forest.n_estimators = vec![n_estimators];
                g.random_forest.max_features = vec![max_features];
            }
            Hyperparams::Gbdt {
                n_estimators,
                learning_rate,
                max_depth,
            } => {
                g.gbdt.n_estimators = vec![n_estimators];
                g.gbdt.learning_rate = vec![learning_rate];
                g.gbdt.max_depth = vec![max_depth];
            }
        }
        g
    }

    /// Candidates in grid order (outer list first).
    pub fn candidates(&self, family: Family) -> Vec<Hyperparams> {
        let mut out = Vec::new();
        match family {
            Family::Gnb => {
                for &var_smoothing in &self.gnb.var_smoothing {
                    out.push(Hyperparams::Gnb { var_smoothing });
                }
            }
            Family::SvmRbf => {
                for &c in &self.svm_rbf.c {
                    for &gamma in &self.svm_rbf.gamma {
                        out.push(Hyperparams::SvmRbf { c, gamma });
                    }
                }
            }
            Family::Knn => {
                for &k in &self.knn.k {
                    out.push(Hyperparams::Knn { k });
                }
            }
            Family::RandomForest => {
                for &max_features in &self.random_forest.max_features {
                    for &n_estimators in &self.random_forest.n_estimators {
                        out.push(Hyperparams::RandomForest {
                            n_estimators,
                            max_features,
                        });
                    }
                }
            }
            Family::Gbdt => {
                for &n_estimators in &self.gbdt.n_estimators {
                    for &learning_rate in &self.gbdt.learning_rate {
                        for &max_depth in &self.gbdt.max_depth {
                            out.push(Hyperparams::Gbdt {
                                n_estimators,
                                learning_rate,
                                max_depth,
                            });
                        }
                    }
                }
            }
        }
        out
    }

    pub fn validate(&self) -> Result<()> {
        for family in Family::ALL {
            if self.candidates(family).is_empty() {
                return Err(Error::Config(format!("hyperparameter grid for {family} is empty")));
            }
        }
        Ok(())
    }
}

/// Model-selection criterion.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Metric {
    #[default]
    Accuracy,
    /// F1 of the positive (suicidal) class.
    F1,
    MacroF1,
}

impl Metric {
    pub fn of(self, report: &MetricsReport) -> f64 {
        match self {
            Metric::Accuracy => report.accuracy,
            Metric::F1 => report.positive.f1,
            Metric::MacroF1 => report.macro_avg.f1,
        }
    }
}

impl fmt::Display for Metric {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Metric::Accuracy => "accuracy",
            Metric::F1 => "f1",
            Metric::MacroF1 => "macro_f1",
        })
    }
}

impl FromStr for Metric {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "accuracy" => Ok(Metric::Accuracy),
            "f1" => Ok(Metric::F1),
            "macro_f1" => Ok(Metric::MacroF1),
            other => Err(Error::InvalidArgument(format!("unknown metric {other:?}"))),
        }
    }
}

/// Test-fold row indices. Each class is shuffled with the seed and dealt
/// round-robin, continuing the deal across classes so fold sizes differ by
/// at most one.
pub fn stratified_kfold(labels: &[Label], folds: usize, seed: u64) -> Result<Vec<Vec<usize>>> {
    if folds < 2 {
        return Err(Error::InvalidArgument(format!("need at least 2 folds, got {folds}")));
    }
    let mut rng = seed::rng(seed);
    let mut out = vec![Vec::new(); folds];
    let mut next = 0usize;
    for class in [Label::NonSuicidal, Label::Suicidal] {
        let mut idx: Vec<usize> = (0..labels.len()).filter(|&i| labels[i] == class).collect();
        if idx.len() < folds {
            let fold = idx.len();
            return Err(Error::FoldMissingClass {
                fold,
                class: class.as_u8(),
            });
        }
        idx.shuffle(&mut rng);
        for i in idx {
            out[next % folds].push(i);
            next += 1;
        }
    }
    for f in &mut out {
        f.sort_unstable();
    }
    Ok(out)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CandidateResult {
    pub hyperparams: Hyperparams,
    pub fold_scores: Vec<f64>,
    /// Mean over folds; absent when any fold failed.
    pub mean: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub error: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GridResult {
    pub family: Family,
    pub metric: Metric,
    pub folds: usize,
    pub best: Hyperparams,
    pub best_score: f64,
    pub table: Vec<CandidateResult>,
}

/// Cross-validated selection over `grid`'s candidates for `family`. The best
/// mean wins; ties go to the earlier candidate in grid order.
pub fn grid_search(
    family: Family,
    data: &Dataset,
    grid: &HyperGrid,
    folds: usize,
    metric: Metric,
    seed: u64,
) -> Result<GridResult> {
    let candidates = grid.candidates(family);
    if candidates.is_empty() {
        return Err(Error::Config(format!("no candidates for {family}")));
    }
    let fold_idx = stratified_kfold(data.labels(), folds, seed)?;
    let splits: Vec<(Dataset, Dataset, FitCache)> = fold_idx
        .iter()
        .map(|test| {
            let mut in_test = vec![false; data.len()];
            for &i in test {
                in_test[i] = true;
            }
            let train: Vec<usize> = (0..data.len()).filter(|&i| !in_test[i]).collect();
            (data.subset(&train), data.subset(test), FitCache::new())
        })
        .collect();

    let jobs: Vec<(usize, usize)> = (0..candidates.len())
        .flat_map(|c| (0..folds).map(move |f| (c, f)))
        .collect();
    let scores: Vec<Result<f64>> = jobs
        .par_iter()
        .map(|&(c, f)| {
            let (train, test, cache) = &splits[f];
            let model = fit_cached(train, &candidates[c], seed::derive(seed, &[f as u64]), cache)?;
            let preds = model.predict_rows(test.rows())?;
            let cm = ConfusionMatrix::from_pairs(
                preds.iter().map(|p| p.0).zip(test.labels().iter().copied()),
            )?;
            Ok(metric.of(&cm.metrics()))
        })
        .collect();

    let mut table = Vec::with_capacity(candidates.len());
    let mut scores = scores.into_iter();
    for hp in candidates {
        let mut fold_scores = Vec::with_capacity(folds);
        let mut error = None;
        for r in scores.by_ref().take(folds) {
            match r {
                Ok(s) => fold_scores.push(s),
                Err(e) => {
                    error.get_or_insert(e.to_string());
                }
            }
        }
        let mean = error
            .is_none()
            .then(|| fold_scores.iter().sum::<f64>() / folds as f64);
        table.push(CandidateResult {
            hyperparams: hp,
            fold_scores,
            mean,
            error,
        });
    }

    let mut best: Option<(usize, f64)> = None;
    for (i, c) in table.iter().enumerate() {
        if let Some(m) = c.mean {
            if best.is_none_or(|(_, b)| m > b) {
                best = Some((i, m));
            }
        }
    }
    let Some((bi, best_score)) = best else {
        let reason = table
            .iter()
            .find_map(|c| c.error.clone())
            .unwrap_or_default();
        return Err(Error::InvalidArgument(format!(
            "every {family} candidate failed during cross-validation: {reason}"
        )));
    };
    Ok(GridResult {
        family,
        metric,
        folds,
        best: table[bi].hyperparams,
        best_score,
        table,
    })
}
