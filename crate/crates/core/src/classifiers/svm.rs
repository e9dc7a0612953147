//! Soft-margin SVM with an RBF kernel, trained by SMO.
//!
//! Working-set selection uses the maximal-violating pair with second-order
//! information for the second index, and the two-variable subproblem is
//! solved analytically with box clipping. Training stops when the KKT gap
//! `m(alpha) - M(alpha)` drops below the tolerance.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::data::{check_dim, Dataset, Rows, Sample};
use crate::error::{Error, Result};
use crate::ingest::Label;

const TAU: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SvmParams {
    pub c: f64,
    pub gamma: f64,
    #[serde(default = "default_tol")]
    pub tol: f64,
    /// Iteration cap, in multiples of the training-set size.
    #[serde(default = "default_max_passes")]
    pub max_passes: usize,
}

fn default_tol() -> f64 {
    1e-3
}

fn default_max_passes() -> usize {
    10_000
}

impl SvmParams {
    pub fn new(c: f64, gamma: f64) -> Self {
        Self {
            c,
            gamma,
            tol: default_tol(),
            max_passes: default_max_passes(),
        }
    }
}

/// Support vectors with their dual coefficients and the bias.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SvmModel {
    pub params: SvmParams,
    dim: usize,
    support: Rows,
    /// `alpha_i` of each support vector, in `(0, C]`.
    pub alpha: Vec<f64>,
    /// `+1` / `-1` per support vector.
    pub y: Vec<f64>,
    pub bias: f64,
    pub iterations: usize,
}

/// Pairwise squared distances of the training rows, row-major.
#[derive(Debug, Clone)]
pub struct SqDistances {
    n: usize,
    d: Vec<f64>,
}

impl SqDistances {
    pub fn compute(rows: &Rows) -> Self {
        let n = rows.len();
        let d: Vec<f64> = (0..n)
            .into_par_iter()
            .flat_map_iter(|i| {
                let xi = rows.get(i);
                (0..n).map(move |j| xi.sq_dist(&rows.get(j)))
            })
            .collect();
        Self { n, d }
    }

    pub fn len(&self) -> usize {
        self.n
    }

    pub fn is_empty(&self) -> bool {
        self.n == 0
    }
}

pub fn fit(data: &Dataset, params: SvmParams) -> Result<SvmModel> {
    let dist = SqDistances::compute(data.rows());
    fit_with_distances(data, &dist, params)
}

/// Like [`fit`] but reuses a precomputed distance matrix, which does not
/// depend on `gamma` or `C`.
pub fn fit_with_distances(data: &Dataset, dist: &SqDistances, params: SvmParams) -> Result<SvmModel> {
    if !(params.c > 0.0) || !(params.gamma > 0.0) {
        return Err(Error::InvalidArgument(format!(
            "C and gamma must be positive, got C={} gamma={}",
            params.c, params.gamma
        )));
    }
    if dist.len() != data.len() {
        return Err(Error::InvalidArgument("distance matrix does not match data".into()));
    }
    data.require_both_classes()?;

    let n = data.len();
    let y: Vec<f64> = data
        .labels()
        .iter()
        .map(|l| if l.is_positive() { 1.0 } else { -1.0 })
        .collect();
    let kernel: Vec<f64> = dist.d.par_iter().map(|d| (-params.gamma * d).exp()).collect();
    let k = |i: usize, j: usize| kernel[i * n + j];

    let c = params.c;
    let mut alpha = vec![0.0; n];
    // gradient of 1/2 a'Qa - e'a
    let mut grad = vec![-1.0; n];
    let max_iter = params.max_passes.saturating_mul(n.max(1));
    let mut iter = 0;
    let mut converged = false;

    while iter < max_iter {
        let Some((i, j)) = select_working_set(&alpha, &grad, &y, c, params.tol, &k) else {
            converged = true;
            break;
        };
        iter += 1;

        let (old_ai, old_aj) = (alpha[i], alpha[j]);
        let quad = {
            let q = k(i, i) + k(j, j) - 2.0 * k(i, j);
            if q > 0.0 {
                q
            } else {
                TAU
            }
        };
        if y[i] != y[j] {
            let delta = (-grad[i] - grad[j]) / quad;
            let diff = alpha[i] - alpha[j];
            alpha[i] += delta;
            alpha[j] += delta;
            if diff > 0.0 {
                if alpha[j] < 0.0 {
                    alpha[j] = 0.0;
                    alpha[i] = diff;
                }
            } else if alpha[i] < 0.0 {
                alpha[i] = 0.0;
                alpha[j] = -diff;
            }
            if diff > 0.0 {
                if alpha[i] > c {
                    alpha[i] = c;
                    alpha[j] = c - diff;
                }
            } else if alpha[j] > c {
                alpha[j] = c;
                alpha[i] = c + diff;
            }
        } else {
            let delta = (grad[i] - grad[j]) / quad;
            let sum = alpha[i] + alpha[j];
            alpha[i] -= delta;
            alpha[j] += delta;
            if sum > c {
                if alpha[i] > c {
                    alpha[i] = c;
                    alpha[j] = sum - c;
                }
                if alpha[j] > c {
                    alpha[j] = c;
                    alpha[i] = sum - c;
                }
            } else {
                if alpha[j] < 0.0 {
                    alpha[j] = 0.0;
                    alpha[i] = sum;
                }
                if alpha[i] < 0.0 {
                    alpha[i] = 0.0;
                    alpha[j] = sum;
                }
            }
        }

        let (dai, daj) = (alpha[i] - old_ai, alpha[j] - old_aj);
        for t in 0..n {
            grad[t] += y[t] * (y[i] * k(t, i) * dai + y[j] * k(t, j) * daj);
        }
    }

    let bias = -rho(&alpha, &grad, &y, c);
    let model = build_model(data, params, alpha, y, bias, iter);
    if !converged {
        return Err(Error::NotConverged {
            iterations: iter,
            best: Box::new(model),
        });
    }
    Ok(model)
}

fn is_upper(a: f64, c: f64) -> bool {
    a >= c
}

fn is_lower(a: f64) -> bool {
    a <= 0.0
}

/// Returns `None` once the maximal KKT violation is within `tol`.
fn select_working_set(
    alpha: &[f64],
    grad: &[f64],
    y: &[f64],
    c: f64,
    tol: f64,
    k: &impl Fn(usize, usize) -> f64,
) -> Option<(usize, usize)> {
    let n = alpha.len();
    let mut gmax = f64::NEG_INFINITY;
    let mut i_sel = None;
    for t in 0..n {
        let in_up = if y[t] > 0.0 { !is_upper(alpha[t], c) } else { !is_lower(alpha[t]) };
        if in_up && -y[t] * grad[t] > gmax {
            gmax = -y[t] * grad[t];
            i_sel = Some(t);
        }
    }
    let i = i_sel?;

    let mut gmin = f64::INFINITY;
    let mut best_obj = f64::INFINITY;
    let mut j_sel = None;
    for t in 0..n {
        let in_low = if y[t] > 0.0 { !is_lower(alpha[t]) } else { !is_upper(alpha[t], c) };
        if !in_low {
            continue;
        }
        let v = -y[t] * grad[t];
        gmin = gmin.min(v);
        let b = gmax - v;
        if b > 0.0 {
            let a = k(i, i) + k(t, t) - 2.0 * k(i, t);
            let a = if a > 0.0 { a } else { TAU };
            let obj = -(b * b) / a;
            if obj < best_obj {
                best_obj = obj;
                j_sel = Some(t);
            }
        }
    }
    if gmax - gmin < tol {
        return None;
    }
    j_sel.map(|j| (i, j))
}

fn rho(alpha: &[f64], grad: &[f64], y: &[f64], c: f64) -> f64 {
    let (mut ub, mut lb) = (f64::INFINITY, f64::NEG_INFINITY);
    let (mut sum_free, mut n_free) = (0.0, 0usize);
    for t in 0..alpha.len() {
        let yg = y[t] * grad[t];
        if is_upper(alpha[t], c) {
            if y[t] < 0.0 {
                ub = ub.min(yg);
            } else {
                lb = lb.max(yg);
            }
        } else if is_lower(alpha[t]) {
            if y[t] > 0.0 {
                ub = ub.min(yg);
            } else {
                lb = lb.max(yg);
            }
        } else {
            n_free += 1;
            sum_free += yg;
        }
    }
    if n_free > 0 {
        sum_free / n_free as f64
    } else {
        (ub + lb) / 2.0
    }
}

fn build_model(data: &Dataset, params: SvmParams, alpha: Vec<f64>, y: Vec<f64>, bias: f64, iterations: usize) -> SvmModel {
    let sv: Vec<usize> = (0..alpha.len()).filter(|&i| alpha[i] > 0.0).collect();
    SvmModel {
        params,
        dim: data.dim(),
        support: data.rows().select(&sv),
        alpha: sv.iter().map(|&i| alpha[i]).collect(),
        y: sv.iter().map(|&i| y[i]).collect(),
        bias,
        iterations,
    }
}

impl SvmModel {
    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn n_support(&self) -> usize {
        self.alpha.len()
    }

    /// `sum_i alpha_i y_i K(x_i, x) + b`; unbounded.
    pub fn decision(&self, x: &Sample<'_>) -> Result<f64> {
        check_dim(self.dim, x)?;
        let s: f64 = self
            .support
            .iter()
            .zip(self.alpha.iter().zip(&self.y))
            .map(|(sv, (a, y))| a * y * (-self.params.gamma * sv.sq_dist(x)).exp())
            .sum();
        Ok(s + self.bias)
    }

    /// Class 1 iff the decision value is strictly positive.
    pub fn predict(&self, x: &Sample<'_>) -> Result<Label> {
        Ok(Label::from(self.decision(x)? > 0.0))
    }

    /// `sum_i alpha_i y_i` over the support vectors; zero at a feasible point.
    pub fn equality_residual(&self) -> f64 {
        self.alpha.iter().zip(&self.y).map(|(a, y)| a * y).sum()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn lab(v: &[u8]) -> Vec<Label> {
        v.iter().map(|&l| Label::try_from(l).unwrap()).collect()
    }

    #[test]
    fn separable_pair() {
        let d = Dataset::dense(vec![vec![-1.0], vec![1.0]], lab(&[0, 1])).unwrap();
        let m = fit(&d, SvmParams::new(10.0, 1.0)).unwrap();
        assert_eq!(m.predict(&d.row(0)).unwrap(), Label::NonSuicidal);
        assert_eq!(m.predict(&d.row(1)).unwrap(), Label::Suicidal);
        assert!(m.equality_residual().abs() <= 1e-6);
    }

    #[test]
    fn xor_is_separated() {
        let d = Dataset::dense(
            vec![vec![0.0, 0.0], vec![1.0, 1.0], vec![0.0, 1.0], vec![1.0, 0.0]],
            lab(&[0, 0, 1, 1]),
        )
        .unwrap();
        let m = fit(&d, SvmParams::new(10.0, 1.0)).unwrap();
        for i in 0..4 {
            assert_eq!(m.predict(&d.row(i)).unwrap(), d.label(i));
        }
        assert!(m.alpha.iter().all(|&a| (0.0..=10.0).contains(&a)));
        assert!(m.equality_residual().abs() <= 1e-6);
    }

    #[test]
    fn invalid_params_and_single_class() {
        let d = Dataset::dense(vec![vec![-1.0], vec![1.0]], lab(&[0, 1])).unwrap();
        assert!(fit(&d, SvmParams::new(0.0, 1.0)).is_err());
        assert!(fit(&d, SvmParams::new(1.0, -1.0)).is_err());
        let d = Dataset::dense(vec![vec![-1.0], vec![1.0]], lab(&[1, 1])).unwrap();
        assert!(matches!(fit(&d, SvmParams::new(1.0, 1.0)), Err(Error::SingleClass)));
    }

    #[test]
    fn iteration_cap_returns_best_iterate() {
        let d = Dataset::dense(
            vec![vec![0.0, 0.0], vec![1.0, 1.0], vec![0.0, 1.0], vec![1.0, 0.0]],
            lab(&[0, 0, 1, 1]),
        )
        .unwrap();
        let params = SvmParams {
            max_passes: 0,
            ..SvmParams::new(10.0, 1.0)
        };
        match fit(&d, params) {
            Err(Error::NotConverged { iterations, best }) => {
                assert_eq!(iterations, 0);
                assert_eq!(best.n_support(), 0);
            }
            other => panic!("expected non-convergence, got {other:?}"),
        }
    }
}
