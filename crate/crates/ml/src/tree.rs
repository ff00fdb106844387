//! Binary CART grower shared by every tree-based family.
//!
//! Trees grow breadth-first. A node splits on the (feature, threshold)
//! pair with the largest impurity decrease, where thresholds are midpoints
//! between consecutive distinct values present in the node. Gain ties go to
//! the lowest feature index, then the lowest threshold. Because nodes are
//! visited level by level, a tree grown to depth `d` and read with
//! [`Tree::predict_truncated`] at depth `e < d` equals a tree grown to `e`.

use std::collections::VecDeque;

use rand::seq::index::sample;
use rand_chacha::ChaCha8Rng;

use crate::binned::Binned;
use crate::encoding::LabeledMatrix;
use crate::error::{MlError, Result};

const LEAF: u32 = u32::MAX;

#[derive(Debug, Clone, Copy, PartialEq)]
pub(crate) enum Criterion {
    /// Gini impurity; leaf value is the weighted positive fraction.
    Gini,
    /// Squared error on the targets; leaf value is one Newton step
    /// `Σ target / Σ hessian`.
    Newton,
}

#[derive(Debug, Clone, Copy)]
pub(crate) struct GrowParams {
    pub max_depth: usize,
    pub criterion: Criterion,
    /// Features considered per split; `None` means all.
    pub max_features: Option<usize>,
}

/// Per-row inputs indexed by row id: weight, target and hessian.
/// `hessian` may be empty for [`Criterion::Gini`].
pub(crate) struct RowData<'a> {
    pub weight: &'a [f64],
    pub target: &'a [f64],
    pub hessian: &'a [f64],
}

#[derive(Debug, Clone, Copy, Default)]
struct Stat {
    n: u32,
    w: f64,
    s: f64,
    h: f64,
}

impl Stat {
    fn add(&mut self, o: &Stat) {
        self.n += o.n;
        self.w += o.w;
        self.s += o.s;
        self.h += o.h;
    }

    fn minus(&self, o: &Stat) -> Stat {
        Stat {
            n: self.n - o.n,
            w: self.w - o.w,
            s: self.s - o.s,
            h: self.h - o.h,
        }
    }

    /// Impurity proxy; larger is purer. Gain is the children's proxy sum
    /// minus the parent's.
    fn proxy(&self, c: Criterion) -> f64 {
        if self.w <= 0.0 {
            return 0.0;
        }
        match c {
            Criterion::Gini => (self.s * self.s + (self.w - self.s) * (self.w - self.s)) / self.w,
            Criterion::Newton => self.s * self.s / self.w,
        }
    }

    fn value(&self, c: Criterion) -> f64 {
        match c {
            Criterion::Gini if self.w > 0.0 => self.s / self.w,
            Criterion::Newton if self.h.abs() >= 1e-150 => self.s / self.h,
            _ => 0.0,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
struct Node {
    feature: u32,
    threshold: f64,
    left: u32,
    right: u32,
    value: f64,
    depth: u32,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Tree {
    nodes: Vec<Node>,
}

impl Tree {
    pub fn node_count(&self) -> usize {
        self.nodes.len()
    }

    pub fn depth(&self) -> usize {
        self.nodes
            .iter()
            .map(|n| n.depth as usize)
            .max()
            .unwrap_or(0)
    }

    pub fn predict(&self, row: &[f64]) -> f64 {
        self.predict_truncated(row, usize::MAX)
    }

    /// Prediction as if the tree had been grown to at most `max_depth`.
    pub fn predict_truncated(&self, row: &[f64], max_depth: usize) -> f64 {
        let mut i = 0;
        loop {
            let n = &self.nodes[i];
            if n.feature == LEAF || n.depth as usize >= max_depth {
                return n.value;
            }
            i = if row[n.feature as usize] <= n.threshold {
                n.left
            } else {
                n.right
            } as usize;
        }
    }

    /// Value of node `id`; paired with the leaf assignment from [`grow`].
    pub(crate) fn node_value(&self, id: u32) -> f64 {
        self.nodes[id as usize].value
    }
}

/// Grows one tree on `rows` (ids into `b`). When `leaf_of` is given, each
/// row's leaf id is written at its row id.
pub(crate) fn grow(
    b: &Binned,
    rows: Vec<u32>,
    data: &RowData<'_>,
    params: &GrowParams,
    mut rng: Option<&mut ChaCha8Rng>,
    mut leaf_of: Option<&mut [u32]>,
) -> Tree {
    let crit = params.criterion;
    let m = b.features();
    let mut hist = vec![Stat::default(); b.total_bins()];
    let mut nodes = vec![Node {
        feature: LEAF,
        threshold: 0.0,
        left: 0,
        right: 0,
        value: 0.0,
        depth: 0,
    }];
    let mut queue = VecDeque::new();
    queue.push_back((0u32, rows));
    let all_features: Vec<usize> = (0..m).collect();

    while let Some((id, rows)) = queue.pop_front() {
        let depth = nodes[id as usize].depth as usize;
        let row_stat = |r: u32| {
            let r = r as usize;
            let w = data.weight[r];
            Stat {
                n: 1,
                w,
                s: w * data.target[r],
                h: if data.hessian.is_empty() {
                    0.0
                } else {
                    w * data.hessian[r]
                },
            }
        };
        let mut total = Stat::default();
        for &r in &rows {
            total.add(&row_stat(r));
        }
        nodes[id as usize].value = total.value(crit);

        let mut best: Option<(f64, usize, u32)> = None;
        if depth < params.max_depth && rows.len() >= 2 {
            let features = match (params.max_features, rng.as_deref_mut()) {
                (Some(k), Some(rng)) if k < m => {
                    let mut f = sample(rng, m, k).into_vec();
                    f.sort_unstable();
                    f
                }
                _ => all_features.clone(),
            };
            hist.iter_mut().for_each(|h| *h = Stat::default());
            for &r in &rows {
                let st = row_stat(r);
                for &(f, bin) in b.sparse_row(r as usize) {
                    hist[b.offset(f as usize) + bin as usize].add(&st);
                }
            }
            let parent = total.proxy(crit);
            let tol = 1e-12 * (total.w.abs() + parent.abs());
            for &f in &features {
                let off = b.offset(f);
                let nb = b.bin_count(f);
                if nb < 2 {
                    continue;
                }
                let def = off + b.default_bin(f) as usize;
                let mut rest = Stat::default();
                for (slot, h) in hist[off..off + nb].iter().enumerate() {
                    if off + slot != def {
                        rest.add(h);
                    }
                }
                hist[def] = total.minus(&rest);

                let mut left = Stat::default();
                let mut prev: Option<u32> = None;
                for bin in 0..nb as u32 {
                    let h = hist[off + bin as usize];
                    if h.n == 0 {
                        continue;
                    }
                    if let Some(p) = prev {
                        let right = total.minus(&left);
                        let gain = left.proxy(crit) + right.proxy(crit) - parent;
                        if gain > tol && best.is_none_or(|(g, _, _)| gain > g) {
                            best = Some((gain, f, p));
                        }
                    }
                    left.add(&h);
                    prev = Some(bin);
                }
            }
        }

        match best {
            None => {
                if let Some(leaf_of) = leaf_of.as_deref_mut() {
                    for &r in &rows {
                        leaf_of[r as usize] = id;
                    }
                }
            }
            Some((_, f, lo)) => {
                let (left, right): (Vec<u32>, Vec<u32>) =
                    rows.into_iter().partition(|&r| b.bin(r as usize, f) <= lo);
                let hi = right
                    .iter()
                    .map(|&r| b.bin(r as usize, f))
                    .min()
                    .expect("split has two non-empty sides");
                let l = nodes.len() as u32;
                for _ in 0..2 {
                    nodes.push(Node {
                        feature: LEAF,
                        threshold: 0.0,
                        left: 0,
                        right: 0,
                        value: 0.0,
                        depth: depth as u32 + 1,
                    });
                }
                let node = &mut nodes[id as usize];
                node.feature = f as u32;
                node.threshold = b.threshold(f, lo, hi);
                node.left = l;
                node.right = l + 1;
                queue.push_back((l, left));
                queue.push_back((l + 1, right));
            }
        }
    }
    Tree { nodes }
}

/// Gini classification tree with leaf score = positive fraction.
#[derive(Debug, Clone, PartialEq)]
pub struct DecisionTree {
    tree: Tree,
    max_depth: usize,
}

impl DecisionTree {
    pub fn fit(train: &LabeledMatrix, max_depth: usize) -> Result<Self> {
        check_training(train)?;
        let b = Binned::new(train);
        let rows = (0..train.rows() as u32).collect();
        Ok(Self::fit_rows(&b, train.labels(), rows, max_depth))
    }

    pub(crate) fn fit_rows(b: &Binned, labels: &[bool], rows: Vec<u32>, max_depth: usize) -> Self {
        let weight = vec![1.0; b.rows()];
        let target = targets(labels);
        let data = RowData {
            weight: &weight,
            target: &target,
            hessian: &[],
        };
        let params = GrowParams {
            max_depth,
            criterion: Criterion::Gini,
            max_features: None,
        };
        Self {
            tree: grow(b, rows, &data, &params, None, None),
            max_depth,
        }
    }

    pub fn max_depth(&self) -> usize {
        self.max_depth
    }

    pub fn tree(&self) -> &Tree {
        &self.tree
    }

    pub fn predict_scores(&self, m: &LabeledMatrix) -> Vec<f64> {
        (0..m.rows()).map(|i| self.tree.predict(m.row(i))).collect()
    }
}

pub(crate) fn targets(labels: &[bool]) -> Vec<f64> {
    labels.iter().map(|&y| if y { 1.0 } else { 0.0 }).collect()
}

pub(crate) fn check_training(train: &LabeledMatrix) -> Result<()> {
    if train.rows() == 0 {
        return Err(MlError::EmptyTraining);
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn matrix(rows: &[&[f64]], labels: &[u8]) -> LabeledMatrix {
        LabeledMatrix::new(
            rows.iter().map(|r| r.to_vec()).collect(),
            labels.iter().map(|&y| y == 1).collect(),
        )
        .unwrap()
    }

    fn train_accuracy(t: &DecisionTree, m: &LabeledMatrix) -> f64 {
        let s = t.predict_scores(m);
        let hits = s
            .iter()
            .zip(m.labels())
            .filter(|(s, &y)| (**s >= 0.5) == y)
            .count();
        hits as f64 / m.rows() as f64
    }

    #[test]
    fn pure_set_is_single_leaf() {
        let m = matrix(&[&[0.0], &[1.0], &[2.0]], &[1, 1, 1]);
        let t = DecisionTree::fit(&m, 3).unwrap();
        assert_eq!(t.tree().node_count(), 1);
        assert_eq!(t.predict_scores(&m), vec![1.0; 3]);
    }

    #[test]
    fn one_dimensional_threshold() {
        let m = matrix(&[&[0.0], &[1.0], &[2.0], &[3.0]], &[0, 0, 1, 1]);
        let t = DecisionTree::fit(&m, 1).unwrap();
        assert_eq!(t.tree().nodes[0].threshold, 1.5);
        assert_eq!(train_accuracy(&t, &m), 1.0);
    }

    #[test]
    fn xor_needs_depth_two() {
        let m = matrix(
            &[&[0.0, 0.0], &[0.0, 1.0], &[1.0, 0.0], &[1.0, 1.0]],
            &[0, 1, 1, 0],
        );
        // No single split decreases Gini on balanced XOR.
        assert!(train_accuracy(&DecisionTree::fit(&m, 1).unwrap(), &m) <= 0.75);
        let m = matrix(
            &[
                &[0.0, 0.0],
                &[0.0, 1.0],
                &[1.0, 0.0],
                &[1.0, 1.0],
                &[0.0, 0.0],
            ],
            &[0, 1, 1, 0, 0],
        );
        assert_eq!(train_accuracy(&DecisionTree::fit(&m, 2).unwrap(), &m), 1.0);
    }

    #[test]
    fn tie_goes_to_lowest_feature() {
        // Both features separate the labels perfectly.
        let m = matrix(&[&[0.0, 0.0], &[1.0, 1.0]], &[0, 1]);
        let t = DecisionTree::fit(&m, 1).unwrap();
        assert_eq!(t.tree().nodes[0].feature, 0);
    }

    #[test]
    fn truncation_matches_shallow_fit() {
        let rows: Vec<Vec<f64>> = (0..40)
            .map(|i| vec![(i % 7) as f64, (i % 5) as f64])
            .collect();
        let labels: Vec<bool> = (0..40).map(|i| (i * 7 + 3) % 11 < 5).collect();
        let m = LabeledMatrix::new(rows, labels).unwrap();
        let deep = DecisionTree::fit(&m, 6).unwrap();
        for d in 1..6 {
            let shallow = DecisionTree::fit(&m, d).unwrap();
            for i in 0..m.rows() {
                assert_eq!(
                    shallow.tree.predict(m.row(i)),
                    deep.tree.predict_truncated(m.row(i), d)
                );
            }
        }
    }

    #[test]
    fn empty_training_set() {
        let m = LabeledMatrix::new(vec![], vec![]).unwrap();
        assert!(matches!(
            DecisionTree::fit(&m, 2),
            Err(MlError::EmptyTraining)
        ));
    }
}
