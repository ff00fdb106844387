//! Random forest of Gini trees on bootstrap samples.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::binned::Binned;
use crate::encoding::LabeledMatrix;
use crate::error::{MlError, Result};
use crate::tree::{check_training, grow, targets, Criterion, GrowParams, RowData, Tree};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ForestParams {
    pub n_trees: usize,
    pub max_depth: usize,
    /// Draw each tree's rows with replacement; disabling it fits every
    /// tree on the whole training set.
    pub bootstrap: bool,
    /// Features considered per split; `None` means `⌈√m⌉`.
    pub max_features: Option<usize>,
}

impl ForestParams {
    pub fn new(n_trees: usize, max_depth: usize) -> Self {
        Self {
            n_trees,
            max_depth,
            bootstrap: true,
            max_features: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct RandomForest {
    trees: Vec<Tree>,
    max_depth: usize,
}

impl RandomForest {
    /// Tree `i` draws from its own generator seeded with `seed + i`, so
    /// the ensemble does not depend on how trees are scheduled.
    pub fn fit(train: &LabeledMatrix, params: ForestParams, seed: u64) -> Result<Self> {
        check_training(train)?;
        let b = Binned::new(train);
        let rows: Vec<u32> = (0..train.rows() as u32).collect();
        Self::fit_rows(&b, train.labels(), &rows, params, seed)
    }

    pub(crate) fn fit_rows(
        b: &Binned,
        labels: &[bool],
        rows: &[u32],
        params: ForestParams,
        seed: u64,
    ) -> Result<Self> {
        if params.n_trees == 0 {
            return Err(MlError::Hyperparameter("n_trees must be at least 1".into()));
        }
        let m = b.features();
        let max_features = params
            .max_features
            .unwrap_or_else(|| (m as f64).sqrt().ceil() as usize)
            .clamp(1, m.max(1));
        let target = targets(labels);
        let grow_params = GrowParams {
            max_depth: params.max_depth,
            criterion: Criterion::Gini,
            max_features: Some(max_features),
        };
        let trees = (0..params.n_trees)
            .into_par_iter()
            .map(|t| {
                let mut rng = ChaCha8Rng::seed_from_u64(seed.wrapping_add(t as u64));
                let mut weight = vec![0.0; b.rows()];
                if params.bootstrap {
                    for _ in 0..rows.len() {
                        weight[rows[rng.random_range(0..rows.len())] as usize] += 1.0;
                    }
                } else {
                    for &r in rows {
                        weight[r as usize] = 1.0;
                    }
                }
                let sample: Vec<u32> = rows
                    .iter()
                    .copied()
                    .filter(|&r| weight[r as usize] > 0.0)
                    .collect();
                let data = RowData {
                    weight: &weight,
                    target: &target,
                    hessian: &[],
                };
                grow(b, sample, &data, &grow_params, Some(&mut rng), None)
            })
            .collect();
        Ok(Self {
            trees,
            max_depth: params.max_depth,
        })
    }

    pub fn tree_count(&self) -> usize {
        self.trees.len()
    }

    pub fn predict_scores(&self, m: &LabeledMatrix) -> Vec<f64> {
        self.predict_truncated(m, self.max_depth)
    }

    /// Scores as if every tree had been grown to at most `max_depth`.
    pub fn predict_truncated(&self, m: &LabeledMatrix, max_depth: usize) -> Vec<f64> {
        (0..m.rows())
            .map(|i| {
                let row = m.row(i);
                let sum: f64 = self
                    .trees
                    .iter()
                    .map(|t| t.predict_truncated(row, max_depth))
                    .sum();
                sum / self.trees.len() as f64
            })
            .collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::tree::DecisionTree;

    fn data() -> LabeledMatrix {
        let rows: Vec<Vec<f64>> = (0..60)
            .map(|i| {
                vec![
                    (i % 7) as f64,
                    (i % 5) as f64,
                    (i % 3) as f64,
                    (i / 20) as f64,
                ]
            })
            .collect();
        let labels: Vec<bool> = (0..60).map(|i| (i % 7) + (i / 20) * 2 > 4).collect();
        LabeledMatrix::new(rows, labels).unwrap()
    }

    #[test]
    fn degenerate_forest_is_a_tree() {
        let m = data();
        let params = ForestParams {
            n_trees: 1,
            max_depth: 4,
            bootstrap: false,
            max_features: Some(m.cols()),
        };
        let f = RandomForest::fit(&m, params, 7).unwrap();
        let t = DecisionTree::fit(&m, 4).unwrap();
        assert_eq!(f.predict_scores(&m), t.predict_scores(&m));
    }

    #[test]
    fn seeded_fits_repeat() {
        let m = data();
        let a = RandomForest::fit(&m, ForestParams::new(10, 3), 42).unwrap();
        let b = RandomForest::fit(&m, ForestParams::new(10, 3), 42).unwrap();
        assert_eq!(a, b);
        let c = RandomForest::fit(&m, ForestParams::new(10, 3), 43).unwrap();
        assert_ne!(a, c);
    }

    #[test]
    fn truncation_matches_shallow_fit() {
        let m = data();
        let deep = RandomForest::fit(&m, ForestParams::new(8, 6), 5).unwrap();
        for d in 1..6 {
            let shallow = RandomForest::fit(&m, ForestParams::new(8, d), 5).unwrap();
            assert_eq!(shallow.predict_scores(&m), deep.predict_truncated(&m, d));
        }
    }

    #[test]
    fn zero_trees_rejected() {
        assert!(RandomForest::fit(&data(), ForestParams::new(0, 2), 1).is_err());
    }
}
