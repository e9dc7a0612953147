//! Random forest of Gini CART trees on bootstrap samples.

use std::fmt;
use std::str::FromStr;

use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::data::{check_dim, Dataset, Sample};
use super::tree::{Builder, Target, Tree, TreeConfig};
use crate::error::{Error, Result};
use crate::ingest::Label;
use crate::seed;

/// Rule for the number of candidate features per split, as a function of
/// the feature dimension `d`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum MaxFeatures {
    /// Same as `Sqrt`.
    Auto,
    Sqrt,
    Log2,
    All,
}

impl MaxFeatures {
    pub fn resolve(self, d: usize) -> usize {
        let k = match self {
            MaxFeatures::Auto | MaxFeatures::Sqrt => (d as f64).sqrt().floor() as usize,
            MaxFeatures::Log2 if d == 0 => 0,
            MaxFeatures::Log2 => (d as f64).log2().floor() as usize,
            MaxFeatures::All => d,
        };
        k.max(1)
    }

    pub fn as_str(self) -> &'static str {
        match self {
            MaxFeatures::Auto => "auto",
            MaxFeatures::Sqrt => "sqrt",
            MaxFeatures::Log2 => "log2",
            MaxFeatures::All => "all",
        }
    }
}

impl fmt::Display for MaxFeatures {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for MaxFeatures {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "auto" => Ok(MaxFeatures::Auto),
            "sqrt" => Ok(MaxFeatures::Sqrt),
            "log2" => Ok(MaxFeatures::Log2),
            "all" => Ok(MaxFeatures::All),
            other => Err(Error::InvalidArgument(format!("unknown max_features {other:?}"))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ForestParams {
    pub n_estimators: usize,
    pub max_features: MaxFeatures,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ForestModel {
    pub params: ForestParams,
    pub seed: u64,
    dim: usize,
    pub trees: Vec<Tree>,
}

pub fn fit(data: &Dataset, params: ForestParams, seed: u64) -> Result<ForestModel> {
    if params.n_estimators == 0 {
        return Err(Error::InvalidArgument("n_estimators must be at least 1".into()));
    }
    if data.len() < 2 {
        return Err(Error::InvalidArgument(format!(
            "random forest needs at least 2 samples, got {}",
            data.len()
        )));
    }
    let n = data.len();
    let k = params.max_features.resolve(data.dim());
    let trees = (0..params.n_estimators)
        .into_par_iter()
        .map(|t| {
            let mut rng = seed::rng(seed::derive(seed, &[t as u64]));
            let bag: Vec<usize> = (0..n).map(|_| rng.random_range(0..n)).collect();
            let config = TreeConfig {
                max_depth: None,
                max_features: Some(k),
            };
            Builder::new(data, Target::Gini, config).build(bag, &mut rng)
        })
        .collect();
    Ok(ForestModel {
        params,
        seed,
        dim: data.dim(),
        trees,
    })
}

impl ForestModel {
    pub fn dim(&self) -> usize {
        self.dim
    }

    /// Fraction of trees voting for class 1.
    pub fn score(&self, x: &Sample<'_>) -> Result<f64> {
        check_dim(self.dim, x)?;
        let votes = self.trees.iter().filter(|t| t.eval(x) > 0.5).count();
        Ok(votes as f64 / self.trees.len() as f64)
    }

    /// Majority vote; ties go to class 0.
    pub fn predict(&self, x: &Sample<'_>) -> Result<Label> {
        Ok(Label::from(self.score(x)? > 0.5))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn threshold_data() -> Dataset {
        let rows: Vec<Vec<f64>> = (0..20).map(|i| vec![i as f64]).collect();
        let labels = (0..20).map(|i| Label::from(i >= 10)).collect();
        Dataset::dense(rows, labels).unwrap()
    }

    #[test]
    fn max_features_rules() {
        assert_eq!(MaxFeatures::Sqrt.resolve(100), 10);
        assert_eq!(MaxFeatures::Auto.resolve(10), 3);
        assert_eq!(MaxFeatures::Log2.resolve(1000), 9);
        assert_eq!(MaxFeatures::Log2.resolve(1), 1);
        assert_eq!(MaxFeatures::Sqrt.resolve(0), 1);
    }

    #[test]
    fn pure_training_data() {
        let rows = vec![vec![0.0], vec![1.0], vec![2.0]];
        let d = Dataset::dense(rows, vec![Label::Suicidal; 3]).unwrap();
        let params = ForestParams {
            n_estimators: 5,
            max_features: MaxFeatures::Log2,
        };
        let m = fit(&d, params, 1).unwrap();
        for x in [-5.0, 0.5, 100.0] {
            assert_eq!(m.score(&Sample::Dense(&[x])).unwrap(), 1.0);
            assert_eq!(m.predict(&Sample::Dense(&[x])).unwrap(), Label::Suicidal);
        }
    }

    #[test]
    fn seeded_fits_are_identical() {
        let d = threshold_data();
        let params = ForestParams {
            n_estimators: 20,
            max_features: MaxFeatures::Sqrt,
        };
        assert_eq!(fit(&d, params, 9).unwrap(), fit(&d, params, 9).unwrap());
    }

    #[test]
    fn threshold_data_is_fit() {
        let d = threshold_data();
        let params = ForestParams {
            n_estimators: 100,
            max_features: MaxFeatures::Log2,
        };
        let m = fit(&d, params, 3).unwrap();
        for i in 0..d.len() {
            assert_eq!(m.predict(&d.row(i)).unwrap(), d.label(i));
        }
    }

    #[test]
    fn rejects_tiny_data() {
        let d = Dataset::dense(vec![vec![0.0]], vec![Label::Suicidal]).unwrap();
        let params = ForestParams {
            n_estimators: 1,
            max_features: MaxFeatures::Sqrt,
        };
        assert!(fit(&d, params, 0).is_err());
        let d = threshold_data();
        let params = ForestParams {
            n_estimators: 0,
            ..params
        };
        assert!(fit(&d, params, 0).is_err());
    }
}
