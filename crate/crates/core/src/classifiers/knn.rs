//! Brute-force k-nearest neighbours under Euclidean distance.

use serde::{Deserialize, Serialize};

use super::data::{check_dim, Dataset, Rows, Sample};
use crate::error::{Error, Result};
use crate::ingest::Label;

/// Stores the training matrix verbatim.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct KnnModel {
    pub k: usize,
    dim: usize,
    rows: Rows,
    labels: Vec<Label>,
}

pub fn fit(data: &Dataset, k: usize) -> Result<KnnModel> {
    if k == 0 || k > data.len() {
        return Err(Error::InvalidArgument(format!(
            "k must be in 1..={}, got {k}",
            data.len()
        )));
    }
    Ok(KnnModel {
        k,
        dim: data.dim(),
        rows: data.rows().clone(),
        labels: data.labels().to_vec(),
    })
}

impl KnnModel {
    pub fn dim(&self) -> usize {
        self.dim
    }

    /// Indices of the k nearest rows; distance ties go to the lower index.
    pub fn neighbors(&self, x: &Sample<'_>) -> Result<Vec<usize>> {
        check_dim(self.dim, x)?;
        let mut d: Vec<(f64, usize)> = self.rows.iter().map(|r| r.sq_dist(x)).zip(0..).collect();
        let by_dist = |a: &(f64, usize), b: &(f64, usize)| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1));
        if self.k < d.len() {
            d.select_nth_unstable_by(self.k - 1, by_dist);
            d.truncate(self.k);
        }
        d.sort_by(by_dist);
        Ok(d.into_iter().map(|(_, i)| i).collect())
    }

    /// Fraction of the k neighbours labeled 1.
    pub fn score(&self, x: &Sample<'_>) -> Result<f64> {
        let votes = self.positive_votes(x)?;
        Ok(votes as f64 / self.k as f64)
    }

    /// Majority vote; a tied vote goes to class 0.
    pub fn predict(&self, x: &Sample<'_>) -> Result<Label> {
        let votes = self.positive_votes(x)?;
        Ok(Label::from(2 * votes > self.k))
    }

    fn positive_votes(&self, x: &Sample<'_>) -> Result<usize> {
        Ok(self
            .neighbors(x)?
            .into_iter()
            .filter(|&i| self.labels[i].is_positive())
            .count())
    }
}

/// Majority-vote prediction from raw training data.
pub fn predict(data: &Dataset, x: &Sample<'_>, k: usize) -> Result<Label> {
    fit(data, k)?.predict(x)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn data() -> Dataset {
        let rows = vec![vec![0.0], vec![1.0], vec![2.0], vec![3.0]];
        let labels = [1, 1, 0, 0].map(|l| Label::try_from(l).unwrap()).to_vec();
        Dataset::dense(rows, labels).unwrap()
    }

    #[test]
    fn k1_on_training_row() {
        let d = data();
        for i in 0..d.len() {
            assert_eq!(predict(&d, &d.row(i), 1).unwrap(), d.label(i));
        }
    }

    #[test]
    fn majority_and_vote_tie() {
        let d = data();
        // neighbours of 0.9: rows 1, 0, 2 -> {1,1,0}
        assert_eq!(predict(&d, &Sample::Dense(&[0.9]), 3).unwrap(), Label::Suicidal);
        // neighbours of 1.6: rows 2, 1 -> {0,1} tie
        assert_eq!(predict(&d, &Sample::Dense(&[1.6]), 2).unwrap(), Label::NonSuicidal);
    }

    #[test]
    fn distance_ties_prefer_lower_index() {
        let d = data();
        let m = fit(&d, 1).unwrap();
        // 1.5 is equidistant from rows 1 and 2
        assert_eq!(m.neighbors(&Sample::Dense(&[1.5])).unwrap(), vec![1]);
        assert_eq!(m.predict(&Sample::Dense(&[1.5])).unwrap(), Label::Suicidal);
    }

    #[test]
    fn k_out_of_range() {
        let d = data();
        assert!(fit(&d, 5).is_err());
        assert!(fit(&d, 0).is_err());
    }
}
