//! Binary decision trees over sparse or dense rows.
//!
//! Split search gathers only the non-zero entries of the node's samples and
//! treats the implicit zeros as one block, so a node costs time proportional
//! to its non-zero count rather than `samples * dimension`.

use rand::seq::index;
use rand::Rng;
use serde::{Deserialize, Serialize};

use super::data::{Dataset, Sample};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Node {
    Leaf {
        value: f64,
    },
    Split {
        feature: u32,
        threshold: f64,
        left: u32,
        right: u32,
    },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Tree {
    pub nodes: Vec<Node>,
}

impl Tree {
    /// Value of the leaf `x` falls into; `x[f] <= threshold` goes left.
    pub fn eval(&self, x: &Sample<'_>) -> f64 {
        let mut at = 0usize;
        loop {
            match &self.nodes[at] {
                Node::Leaf { value } => return *value,
                Node::Split {
                    feature,
                    threshold,
                    left,
                    right,
                } => {
                    at = if x.get(*feature as usize) <= *threshold {
                        *left as usize
                    } else {
                        *right as usize
                    };
                }
            }
        }
    }

    pub fn depth(&self) -> usize {
        fn go(nodes: &[Node], at: usize) -> usize {
            match &nodes[at] {
                Node::Leaf { .. } => 0,
                Node::Split { left, right, .. } => 1 + go(nodes, *left as usize).max(go(nodes, *right as usize)),
            }
        }
        go(&self.nodes, 0)
    }
}

/// What a tree is fitted to.
pub(crate) enum Target<'a> {
    /// Gini impurity over binary labels; leaf value = fraction of class 1.
    Gini,
    /// Squared error on `grad` with Newton leaf values `sum grad / sum hess`.
    Newton { grad: &'a [f64], hess: &'a [f64] },
}

pub(crate) struct TreeConfig {
    pub max_depth: Option<usize>,
    /// Features examined per split; `None` examines every feature.
    pub max_features: Option<usize>,
}

#[derive(Clone, Copy, Default)]
struct Stats {
    n: f64,
    /// class-1 count (Gini) or gradient sum (Newton)
    s: f64,
}

impl Stats {
    fn add(&mut self, o: Stats) {
        self.n += o.n;
        self.s += o.s;
    }

    fn sub(self, o: Stats) -> Stats {
        Stats {
            n: self.n - o.n,
            s: self.s - o.s,
        }
    }
}

struct Scratch {
    count: Vec<u32>,
    min: Vec<f64>,
    max: Vec<f64>,
    slot: Vec<u32>,
    touched: Vec<u32>,
}

const NO_SLOT: u32 = u32::MAX;

pub(crate) struct Builder<'a> {
    data: &'a Dataset,
    target: Target<'a>,
    config: TreeConfig,
    scratch: Scratch,
}

struct Candidate {
    gain: f64,
    feature: u32,
    threshold: f64,
}

impl<'a> Builder<'a> {
    pub fn new(data: &'a Dataset, target: Target<'a>, config: TreeConfig) -> Self {
        let d = data.dim();
        Self {
            data,
            target,
            config,
            scratch: Scratch {
                count: vec![0; d],
                min: vec![0.0; d],
                max: vec![0.0; d],
                slot: vec![NO_SLOT; d],
                touched: Vec::new(),
            },
        }
    }

    fn sample_stats(&self, s: usize) -> Stats {
        match self.target {
            Target::Gini => Stats {
                n: 1.0,
                s: if self.data.label(s).is_positive() { 1.0 } else { 0.0 },
            },
            Target::Newton { grad, .. } => Stats { n: 1.0, s: grad[s] },
        }
    }

    fn leaf_value(&self, samples: &[usize], total: Stats) -> f64 {
        match self.target {
            Target::Gini => total.s / total.n,
            Target::Newton { hess, .. } => {
                let h: f64 = samples.iter().map(|&s| hess[s]).sum();
                if h.abs() < 1e-150 {
                    0.0
                } else {
                    total.s / h
                }
            }
        }
    }

    /// Node impurity scaled by sample count; lower is better.
    fn cost(&self, st: Stats) -> f64 {
        if st.n <= 0.0 {
            return 0.0;
        }
        match self.target {
            Target::Gini => {
                let p = st.s / st.n;
                st.n * 2.0 * p * (1.0 - p)
            }
            Target::Newton { .. } => -(st.s * st.s) / st.n,
        }
    }

    fn is_pure(&self, total: Stats) -> bool {
        match self.target {
            Target::Gini => total.s == 0.0 || total.s == total.n,
            Target::Newton { .. } => false,
        }
    }

    /// Grows a tree on `samples` (row indices, repeats allowed).
    pub fn build<R: Rng>(mut self, samples: Vec<usize>, rng: &mut R) -> Tree {
        let mut nodes = vec![Node::Leaf { value: 0.0 }];
        let mut stack = vec![(0usize, samples, 0usize)];
        while let Some((at, samples, depth)) = stack.pop() {
            let mut total = Stats::default();
            for &s in &samples {
                total.add(self.sample_stats(s));
            }
            let can_split = samples.len() >= 2
                && !self.is_pure(total)
                && self.config.max_depth.is_none_or(|m| depth < m);
            let split = if can_split {
                self.best_split(&samples, total, rng)
            } else {
                None
            };
            let Some(c) = split else {
                nodes[at] = Node::Leaf {
                    value: self.leaf_value(&samples, total),
                };
                continue;
            };
            let (left, right): (Vec<usize>, Vec<usize>) = samples
                .iter()
                .partition(|&&s| self.data.row(s).get(c.feature as usize) <= c.threshold);
            let l = nodes.len() as u32;
            nodes.push(Node::Leaf { value: 0.0 });
            nodes.push(Node::Leaf { value: 0.0 });
            nodes[at] = Node::Split {
                feature: c.feature,
                threshold: c.threshold,
                left: l,
                right: l + 1,
            };
            // right first so the left subtree is built (and draws randomness) first
            stack.push((l as usize + 1, right, depth + 1));
            stack.push((l as usize, left, depth + 1));
        }
        Tree { nodes }
    }

    fn best_split<R: Rng>(&mut self, samples: &[usize], total: Stats, rng: &mut R) -> Option<Candidate> {
        let m = samples.len() as u32;
        let sc = &mut self.scratch;

        // pass 1: which features vary within the node
        for &s in samples {
            self.data.row(s).for_each_nonzero(|j, v| {
                if sc.count[j] == 0 {
                    sc.touched.push(j as u32);
                    sc.min[j] = v;
                    sc.max[j] = v;
                } else {
                    sc.min[j] = sc.min[j].min(v);
                    sc.max[j] = sc.max[j].max(v);
                }
                sc.count[j] += 1;
            });
        }
        let mut varying: Vec<u32> = sc
            .touched
            .iter()
            .copied()
            .filter(|&j| {
                let j = j as usize;
                sc.count[j] < m || sc.min[j] != sc.max[j]
            })
            .collect();
        for &j in &sc.touched {
            sc.count[j as usize] = 0;
        }
        sc.touched.clear();
        if varying.is_empty() {
            return None;
        }
        varying.sort_unstable();

        let chosen: Vec<u32> = match self.config.max_features {
            Some(k) if k < varying.len() => {
                let mut pick: Vec<u32> = index::sample(rng, varying.len(), k)
                    .into_iter()
                    .map(|p| varying[p])
                    .collect();
                pick.sort_unstable();
                pick
            }
            _ => varying,
        };

        // pass 2: bucket the chosen features' non-zero entries
        let mut buckets: Vec<Vec<(f64, usize)>> = vec![Vec::new(); chosen.len()];
        for (b, &f) in chosen.iter().enumerate() {
            sc.slot[f as usize] = b as u32;
        }
        for &s in samples {
            self.data.row(s).for_each_nonzero(|j, v| {
                let b = sc.slot[j];
                if b != NO_SLOT {
                    buckets[b as usize].push((v, s));
                }
            });
        }
        for &f in &chosen {
            sc.slot[f as usize] = NO_SLOT;
        }

        let parent = self.cost(total);
        let mut best: Option<Candidate> = None;
        for (f, mut entries) in chosen.into_iter().zip(buckets) {
            entries.sort_by(|a, b| a.0.total_cmp(&b.0));
            if let Some((gain, threshold)) = self.scan_feature(&entries, samples.len(), total, parent) {
                if best.as_ref().is_none_or(|b| gain > b.gain) {
                    best = Some(Candidate {
                        gain,
                        feature: f,
                        threshold,
                    });
                }
            }
        }
        match self.target {
            Target::Gini => best,
            Target::Newton { .. } => best.filter(|b| b.gain > 1e-12 * parent.abs().max(1.0)),
        }
    }

    /// Best threshold for one feature given its sorted non-zero entries.
    fn scan_feature(&self, entries: &[(f64, usize)], n_samples: usize, total: Stats, parent: f64) -> Option<(f64, f64)> {
        let mut nz_total = Stats::default();
        for &(_, s) in entries {
            nz_total.add(self.sample_stats(s));
        }
        let zeros = total.sub(nz_total);
        let n_zero = n_samples - entries.len();

        // distinct values in ascending order with per-value stats; the
        // implicit zeros enter as one block between negatives and positives
        let mut groups: Vec<(f64, Stats)> = Vec::new();
        let mut zero_done = n_zero == 0;
        for &(v, s) in entries {
            if !zero_done && v > 0.0 {
                groups.push((0.0, zeros));
                zero_done = true;
            }
            let st = self.sample_stats(s);
            match groups.last_mut() {
                Some((gv, gs)) if *gv == v => gs.add(st),
                _ => groups.push((v, st)),
            }
        }
        if !zero_done {
            groups.push((0.0, zeros));
        }

        let mut left = Stats::default();
        let mut best: Option<(f64, f64)> = None;
        for w in 0..groups.len().saturating_sub(1) {
            left.add(groups[w].1);
            let right = total.sub(left);
            let gain = parent - self.cost(left) - self.cost(right);
            if best.is_none_or(|(g, _)| gain > g) {
                let (a, b) = (groups[w].0, groups[w + 1].0);
                let mut t = a / 2.0 + b / 2.0;
                if t >= b {
                    t = a;
                }
                best = Some((gain, t));
            }
        }
        best
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::features::SparseVector;
    use crate::ingest::Label;
    use crate::seed;

    fn lab(v: &[u8]) -> Vec<Label> {
        v.iter().map(|&l| Label::try_from(l).unwrap()).collect()
    }

    fn gini_tree(data: &Dataset) -> Tree {
        let b = Builder::new(
            data,
            Target::Gini,
            TreeConfig {
                max_depth: None,
                max_features: None,
            },
        );
        b.build((0..data.len()).collect(), &mut seed::rng(0))
    }

    #[test]
    fn single_split_at_gap() {
        let d = Dataset::dense(
            vec![vec![1.0], vec![2.0], vec![3.0], vec![10.0], vec![11.0]],
            lab(&[0, 0, 0, 1, 1]),
        )
        .unwrap();
        let t = gini_tree(&d);
        assert_eq!(t.depth(), 1);
        match &t.nodes[0] {
            Node::Split { threshold, .. } => assert_eq!(*threshold, 6.5),
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn zero_block_splits_with_negative_values() {
        let rows = vec![
            SparseVector::from_dense(&[-2.0]),
            SparseVector::from_dense(&[0.0]),
            SparseVector::from_dense(&[0.0]),
            SparseVector::from_dense(&[3.0]),
        ];
        let d = Dataset::sparse(rows, lab(&[0, 1, 1, 0]), 1).unwrap();
        let t = gini_tree(&d);
        for i in 0..4 {
            assert_eq!(t.eval(&d.row(i)) > 0.5, d.label(i).is_positive());
        }
    }

    #[test]
    fn constant_features_make_a_leaf() {
        let d = Dataset::dense(vec![vec![1.0], vec![1.0]], lab(&[0, 1])).unwrap();
        let t = gini_tree(&d);
        assert_eq!(t.nodes, vec![Node::Leaf { value: 0.5 }]);
    }

    #[test]
    fn newton_leaves() {
        let d = Dataset::dense(vec![vec![0.0], vec![1.0]], lab(&[0, 1])).unwrap();
        let grad = [-0.5, 0.5];
        let hess = [0.25, 0.25];
        let b = Builder::new(
            &d,
            Target::Newton {
                grad: &grad,
                hess: &hess,
            },
            TreeConfig {
                max_depth: Some(1),
                max_features: None,
            },
        );
        let t = b.build(vec![0, 1], &mut seed::rng(0));
        assert_eq!(t.eval(&d.row(0)), -2.0);
        assert_eq!(t.eval(&d.row(1)), 2.0);
    }
}
