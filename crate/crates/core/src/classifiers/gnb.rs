//! Gaussian naive Bayes with a variance floor.
//!
//! Per-class variances are floored at `var_smoothing * max_j var(x_j)`, where
//! the maximum runs over the whole training set. Log-likelihoods are
//! evaluated sparsely: the all-zero row's log-likelihood is precomputed per
//! class and each non-zero entry adds a correction.

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use super::data::{check_dim, Dataset, Sample};
use crate::error::{Error, Result};
use crate::ingest::Label;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GnbModel {
    pub var_smoothing: f64,
    pub log_prior: [f64; 2],
    pub mean: [Vec<f64>; 2],
    pub var: [Vec<f64>; 2],
    /// Log-likelihood of the all-zero row per class.
    base: [f64; 2],
}

pub fn fit(data: &Dataset, var_smoothing: f64) -> Result<GnbModel> {
    if !(var_smoothing > 0.0) {
        return Err(Error::InvalidArgument(format!(
            "var_smoothing must be positive, got {var_smoothing}"
        )));
    }
    data.require_both_classes()?;
    let d = data.dim();
    let n = data.len();

    let mut count = [0usize; 2];
    let mut sum = [vec![0.0; d], vec![0.0; d]];
    let mut sum_all = vec![0.0; d];
    for i in 0..n {
        let c = data.label(i) as usize;
        count[c] += 1;
        data.row(i).for_each_nonzero(|j, x| {
            sum[c][j] += x;
            sum_all[j] += x;
        });
    }
    let mean: [Vec<f64>; 2] = [0, 1].map(|c| sum[c].iter().map(|s| s / count[c] as f64).collect());
    let mean_all: Vec<f64> = sum_all.iter().map(|s| s / n as f64).collect();

    // two-pass variances: sum of squared deviations over non-zeros, plus the
    // implicit zeros each contributing mean^2
    let mut ss = [vec![0.0; d], vec![0.0; d]];
    let mut nz = [vec![0usize; d], vec![0usize; d]];
    let mut ss_all = vec![0.0; d];
    for i in 0..n {
        let c = data.label(i) as usize;
        data.row(i).for_each_nonzero(|j, x| {
            ss[c][j] += (x - mean[c][j]).powi(2);
            nz[c][j] += 1;
            ss_all[j] += (x - mean_all[j]).powi(2);
        });
    }
    let mut max_var = 0.0f64;
    for j in 0..d {
        let nz_all = nz[0][j] + nz[1][j];
        let v = (ss_all[j] + (n - nz_all) as f64 * mean_all[j].powi(2)) / n as f64;
        max_var = max_var.max(v);
    }
    let floor = if max_var > 0.0 {
        var_smoothing * max_var
    } else {
        var_smoothing
    };
    let var: [Vec<f64>; 2] = [0, 1].map(|c| {
        (0..d)
            .map(|j| {
                let v = (ss[c][j] + (count[c] - nz[c][j]) as f64 * mean[c][j].powi(2)) / count[c] as f64;
                v.max(floor)
            })
            .collect()
    });

    let base = [0, 1].map(|c| {
        (0..d)
            .map(|j| -0.5 * (2.0 * PI * var[c][j]).ln() - mean[c][j].powi(2) / (2.0 * var[c][j]))
            .sum()
    });
    Ok(GnbModel {
        var_smoothing,
        log_prior: [0, 1].map(|c| (count[c] as f64 / n as f64).ln()),
        mean,
        var,
        base,
    })
}

impl GnbModel {
    pub fn dim(&self) -> usize {
        self.mean[0].len()
    }

    /// Joint log-probabilities `ln P(c) + ln P(x | c)` for both classes.
    pub fn joint_log_likelihood(&self, x: &Sample<'_>) -> Result<[f64; 2]> {
        check_dim(self.dim(), x)?;
        let mut jll = [0, 1].map(|c| self.log_prior[c] + self.base[c]);
        x.for_each_nonzero(|j, v| {
            for c in 0..2 {
                let (m, s2) = (self.mean[c][j], self.var[c][j]);
                jll[c] += (m * m - (v - m) * (v - m)) / (2.0 * s2);
            }
        });
        Ok(jll)
    }

    /// Posterior probability of class 1.
    pub fn score(&self, x: &Sample<'_>) -> Result<f64> {
        let [j0, j1] = self.joint_log_likelihood(x)?;
        let m = j0.max(j1);
        let lse = m + ((j0 - m).exp() + (j1 - m).exp()).ln();
        Ok((j1 - lse).exp())
    }

    /// Argmax posterior; ties go to class 0.
    pub fn predict(&self, x: &Sample<'_>) -> Result<Label> {
        let [j0, j1] = self.joint_log_likelihood(x)?;
        Ok(Label::from(j1 > j0))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::features::SparseVector;

    fn lab(v: &[u8]) -> Vec<Label> {
        v.iter().map(|&l| Label::try_from(l).unwrap()).collect()
    }

    #[test]
    fn one_dimensional_posterior() {
        let data = Dataset::dense(vec![vec![0.0], vec![1.0], vec![4.0], vec![5.0]], lab(&[0, 0, 1, 1])).unwrap();
        let m = fit(&data, 1e-9).unwrap();
        assert_eq!(m.predict(&Sample::Dense(&[2.0])).unwrap(), Label::NonSuicidal);
        // equal variances 0.25: 2.0 is 1.5 from 0.5 and 2.5 from 4.5
        let expected = 1.0 / (1.0 + ((2.5f64.powi(2) - 1.5f64.powi(2)) / 0.5).exp());
        assert!((m.score(&Sample::Dense(&[2.0])).unwrap() - expected).abs() < 1e-12);
    }

    #[test]
    fn query_at_class_mean() {
        let data = Dataset::dense(
            vec![vec![0.0], vec![1.0], vec![100.0], vec![101.0]],
            lab(&[0, 0, 1, 1]),
        )
        .unwrap();
        let m = fit(&data, 1e-9).unwrap();
        assert_eq!(m.predict(&Sample::Dense(&[100.5])).unwrap(), Label::Suicidal);
        assert!(m.score(&Sample::Dense(&[100.5])).unwrap() > 0.99);
    }

    #[test]
    fn symmetry_point_scores_half() {
        let data = Dataset::dense(
            vec![vec![-2.0], vec![-1.0], vec![1.0], vec![2.0]],
            lab(&[0, 0, 1, 1]),
        )
        .unwrap();
        let m = fit(&data, 1e-9).unwrap();
        let s = m.score(&Sample::Dense(&[0.0])).unwrap();
        assert!((s - 0.5).abs() < 1e-9);
        assert_eq!(m.predict(&Sample::Dense(&[0.0])).unwrap(), Label::NonSuicidal);
    }

    #[test]
    fn rejects_single_class_and_bad_smoothing() {
        let data = Dataset::dense(vec![vec![0.0], vec![1.0]], lab(&[1, 1])).unwrap();
        assert!(matches!(fit(&data, 1e-9), Err(Error::SingleClass)));
        let data = Dataset::dense(vec![vec![0.0], vec![1.0]], lab(&[0, 1])).unwrap();
        assert!(fit(&data, 0.0).is_err());
    }

    #[test]
    fn sparse_and_dense_inputs_agree() {
        let dense = vec![
            vec![0.0, 1.0, 0.0],
            vec![2.0, 0.0, 0.0],
            vec![0.0, 0.0, 3.0],
            vec![1.0, 1.0, 0.5],
        ];
        let labels = lab(&[0, 0, 1, 1]);
        let sparse: Vec<SparseVector> = dense.iter().map(|r| SparseVector::from_dense(r)).collect();
        let md = fit(&Dataset::dense(dense.clone(), labels.clone()).unwrap(), 1e-9).unwrap();
        let ms = fit(&Dataset::sparse(sparse, labels, 3).unwrap(), 1e-9).unwrap();
        let q = [0.5, 0.0, 1.0];
        let a = md.score(&Sample::Dense(&q)).unwrap();
        let b = ms.score(&Sample::Sparse(&SparseVector::from_dense(&q))).unwrap();
        assert_eq!(a, b);
        assert!(md.score(&Sample::Dense(&[1.0])).is_err());
    }
}
