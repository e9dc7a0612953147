//! Five supervised learners behind one fit / predict / score contract.
//!
//! | family          | score                          |
//! |-----------------|--------------------------------|
//! | `gnb`           | posterior of class 1, `[0, 1]` |
//! | `svm_rbf`       | decision value, unbounded      |
//! | `knn`           | neighbour vote share, `[0, 1]` |
//! | `random_forest` | tree vote share, `[0, 1]`      |
//! | `gbdt`          | sigmoid of the raw score       |

pub mod data;
pub mod forest;
pub mod gbdt;
pub mod gnb;
pub mod grid;
pub mod knn;
pub mod svm;
pub mod tree;

use std::fmt;
use std::path::Path;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

pub use data::{Dataset, Rows, Sample};
pub use forest::{ForestModel, ForestParams, MaxFeatures};
pub use gbdt::{GbdtModel, GbdtParams};
pub use gnb::GnbModel;
pub use grid::{grid_search, GridResult, HyperGrid, Metric};
pub use knn::KnnModel;
pub use svm::{SvmModel, SvmParams};

use crate::error::{Error, Result};
use crate::ingest::Label;

/// Version of the serialized model schema.
pub const MODEL_FORMAT_VERSION: u32 = 1;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Family {
    Gnb,
    SvmRbf,
    Knn,
    RandomForest,
    Gbdt,
}

impl Family {
    pub const ALL: [Family; 5] = [
        Family::Gnb,
        Family::SvmRbf,
        Family::Knn,
        Family::RandomForest,
        Family::Gbdt,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            Family::Gnb => "gnb",
            Family::SvmRbf => "svm_rbf",
            Family::Knn => "knn",
            Family::RandomForest => "random_forest",
            Family::Gbdt => "gbdt",
        }
    }

    /// Display name used in result tables.
    pub fn display_name(self) -> &'static str {
        match self {
            Family::Gnb => "NB",
            Family::SvmRbf => "SVM",
            Family::Knn => "KNN",
            Family::RandomForest => "RF",
            Family::Gbdt => "GBDT",
        }
    }

    /// Whether inputs are L2-normalized unless configured otherwise.
    pub fn normalizes_by_default(self) -> bool {
        matches!(self, Family::SvmRbf | Family::Knn)
    }
}

impl fmt::Display for Family {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Family {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "gnb" | "nb" => Ok(Family::Gnb),
            "svm_rbf" | "svm" => Ok(Family::SvmRbf),
            "knn" => Ok(Family::Knn),
            "random_forest" | "rf" => Ok(Family::RandomForest),
            "gbdt" | "xgboost" => Ok(Family::Gbdt),
            other => Err(Error::InvalidArgument(format!("unknown classifier family {other:?}"))),
        }
    }
}

/// One point of a family's hyperparameter space.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "family", rename_all = "snake_case")]
pub enum Hyperparams {
    Gnb { var_smoothing: f64 },
    SvmRbf { c: f64, gamma: f64 },
    Knn { k: usize },
    RandomForest { n_estimators: usize, max_features: MaxFeatures },
    Gbdt { n_estimators: usize, learning_rate: f64, max_depth: usize },
}

impl Hyperparams {
    pub fn family(&self) -> Family {
        match self {
            Hyperparams::Gnb { .. } => Family::Gnb,
            Hyperparams::SvmRbf { .. } => Family::SvmRbf,
            Hyperparams::Knn { .. } => Family::Knn,
            Hyperparams::RandomForest { .. } => Family::RandomForest,
            Hyperparams::Gbdt { .. } => Family::Gbdt,
        }
    }

    pub fn default_for(family: Family) -> Self {
        match family {
            Family::Gnb => Hyperparams::Gnb { var_smoothing: 1e-9 },
            Family::SvmRbf => Hyperparams::SvmRbf { c: 1.0, gamma: 1.0 },
            Family::Knn => Hyperparams::Knn { k: 5 },
            Family::RandomForest => Hyperparams::RandomForest {
                n_estimators: 1000,
                max_features: MaxFeatures::Log2,
            },
            Family::Gbdt => {
                let p = GbdtParams::default();
                Hyperparams::Gbdt {
                    n_estimators: p.n_estimators,
                    learning_rate: p.learning_rate,
                    max_depth: p.max_depth,
                }
            }
        }
    }
}

impl fmt::Display for Hyperparams {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Hyperparams::Gnb { var_smoothing } => write!(f, "var_smoothing={var_smoothing:e}"),
            Hyperparams::SvmRbf { c, gamma } => write!(f, "C={c} gamma={gamma}"),
            Hyperparams::Knn { k } => write!(f, "k={k}"),
            Hyperparams::RandomForest {
                n_estimators,
                max_features,
            } => write!(f, "n_estimators={n_estimators} max_features={max_features}"),
            Hyperparams::Gbdt {
                n_estimators,
                learning_rate,
                max_depth,
            } => write!(
                f,
                "n_estimators={n_estimators} learning_rate={learning_rate} max_depth={max_depth}"
            ),
        }
    }
}

/// Fitted parameters of one family.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "family", content = "params", rename_all = "snake_case")]
pub enum Fitted {
    Gnb(GnbModel),
    SvmRbf(SvmModel),
    Knn(KnnModel),
    RandomForest(ForestModel),
    Gbdt(GbdtModel),
}

/// A fitted classifier with its training metadata.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClassifierModel {
    pub version: u32,
    pub hyperparams: Hyperparams,
    pub seed: u64,
    pub dim: usize,
    pub model: Fitted,
}

/// Reusable per-dataset precomputation shared across candidates.
#[derive(Default)]
pub struct FitCache {
    distances: std::sync::OnceLock<svm::SqDistances>,
}

impl FitCache {
    pub fn new() -> Self {
        Self::default()
    }

    fn distances(&self, data: &Dataset) -> &svm::SqDistances {
        self.distances.get_or_init(|| svm::SqDistances::compute(data.rows()))
    }
}

pub fn fit(data: &Dataset, hp: &Hyperparams, seed: u64) -> Result<ClassifierModel> {
    fit_cached(data, hp, seed, &FitCache::new())
}

/// Fits with a cache tied to `data`; callers must not share a cache across
/// datasets.
pub fn fit_cached(data: &Dataset, hp: &Hyperparams, seed: u64, cache: &FitCache) -> Result<ClassifierModel> {
    let model = match *hp {
        Hyperparams::Gnb { var_smoothing } => Fitted::Gnb(gnb::fit(data, var_smoothing)?),
        Hyperparams::SvmRbf { c, gamma } => {
            data.require_both_classes()?;
            Fitted::SvmRbf(svm::fit_with_distances(
                data,
                cache.distances(data),
                SvmParams::new(c, gamma),
            )?)
        }
        Hyperparams::Knn { k } => Fitted::Knn(knn::fit(data, k)?),
        Hyperparams::RandomForest {
            n_estimators,
            max_features,
        } => Fitted::RandomForest(forest::fit(
            data,
            ForestParams {
                n_estimators,
                max_features,
            },
            seed,
        )?),
        Hyperparams::Gbdt {
            n_estimators,
            learning_rate,
            max_depth,
        } => Fitted::Gbdt(gbdt::fit(
            data,
            GbdtParams {
                n_estimators,
                learning_rate,
                max_depth,
            },
        )?),
    };
    Ok(ClassifierModel {
        version: MODEL_FORMAT_VERSION,
        hyperparams: *hp,
        seed,
        dim: data.dim(),
        model,
    })
}

impl ClassifierModel {
    pub fn family(&self) -> Family {
        self.hyperparams.family()
    }

    /// Family-specific score; see the module table for ranges.
    pub fn score(&self, x: &Sample<'_>) -> Result<f64> {
        match &self.model {
            Fitted::Gnb(m) => m.score(x),
            Fitted::SvmRbf(m) => m.decision(x),
            Fitted::Knn(m) => m.score(x),
            Fitted::RandomForest(m) => m.score(x),
            Fitted::Gbdt(m) => m.score(x),
        }
    }

    pub fn predict(&self, x: &Sample<'_>) -> Result<Label> {
        match &self.model {
            Fitted::Gnb(m) => m.predict(x),
            Fitted::SvmRbf(m) => m.predict(x),
            Fitted::Knn(m) => m.predict(x),
            Fitted::RandomForest(m) => m.predict(x),
            Fitted::Gbdt(m) => m.predict(x),
        }
    }

    /// Predictions and scores for every row.
    pub fn predict_rows(&self, rows: &Rows) -> Result<Vec<(Label, f64)>> {
        use rayon::prelude::*;
        (0..rows.len())
            .into_par_iter()
            .map(|i| {
                let x = rows.get(i);
                Ok((self.predict(&x)?, self.score(&x)?))
            })
            .collect()
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string(self)?)
    }

    pub fn from_json(s: &str) -> Result<Self> {
        let m: Self = serde_json::from_str(s)?;
        if m.version != MODEL_FORMAT_VERSION {
            return Err(Error::Config(format!(
                "unsupported model version {} (expected {MODEL_FORMAT_VERSION})",
                m.version
            )));
        }
        Ok(m)
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        let path = path.as_ref();
        std::fs::write(path, self.to_json()?).map_err(|e| Error::io(path, e))
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let s = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::from_json(&s)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn data() -> Dataset {
        let rows: Vec<Vec<f64>> = (0..12).map(|i| vec![i as f64, (i % 3) as f64]).collect();
        let labels = (0..12).map(|i| Label::from(i >= 6)).collect();
        Dataset::dense(rows, labels).unwrap()
    }

    #[test]
    fn every_family_round_trips_through_json() {
        let d = data();
        for family in Family::ALL {
            let hp = match Hyperparams::default_for(family) {
                Hyperparams::RandomForest { max_features, .. } => Hyperparams::RandomForest {
                    n_estimators: 5,
                    max_features,
                },
                Hyperparams::Gbdt { learning_rate, max_depth, .. } => Hyperparams::Gbdt {
                    n_estimators: 5,
                    learning_rate,
                    max_depth,
                },
                other => other,
            };
            let m = fit(&d, &hp, 7).unwrap();
            assert_eq!(m.family(), family);
            let json = m.to_json().unwrap();
            assert!(json.contains(&format!("\"family\":\"{family}\"")));
            let back = ClassifierModel::from_json(&json).unwrap();
            for i in 0..d.len() {
                assert_eq!(back.predict(&d.row(i)).unwrap(), m.predict(&d.row(i)).unwrap());
                let p = m.predict(&d.row(i)).unwrap();
                assert!(p == Label::Suicidal || p == Label::NonSuicidal);
                let s = m.score(&d.row(i)).unwrap();
                if family != Family::SvmRbf {
                    assert!((0.0..=1.0).contains(&s));
                }
            }
        }
    }

    #[test]
    fn dimension_is_checked() {
        let m = fit(&data(), &Hyperparams::Knn { k: 1 }, 0).unwrap();
        assert!(matches!(
            m.predict(&Sample::Dense(&[1.0])),
            Err(Error::DimensionMismatch { expected: 2, got: 1 })
        ));
    }

    #[test]
    fn rejects_unknown_version() {
        let m = fit(&data(), &Hyperparams::Knn { k: 1 }, 0).unwrap();
        let json = m.to_json().unwrap().replace("\"version\":1", "\"version\":99");
        assert!(ClassifierModel::from_json(&json).is_err());
    }
}
