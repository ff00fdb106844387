//! Binary log-loss gradient boosting with Newton-step regression trees.

use crate::adaboost::sigmoid;
use crate::binned::Binned;
use crate::encoding::LabeledMatrix;
use crate::error::{MlError, Result};
use crate::tree::{check_training, grow, Criterion, GrowParams, RowData, Tree};

#[derive(Debug, Clone, PartialEq)]
pub struct GradientBoosting {
    init: f64,
    learning_rate: f64,
    trees: Vec<Tree>,
    train_loss: Vec<f64>,
}

impl GradientBoosting {
    pub fn fit(
        train: &LabeledMatrix,
        n_estimators: usize,
        learning_rate: f64,
        max_depth: usize,
    ) -> Result<Self> {
        check_training(train)?;
        let b = Binned::new(train);
        let rows: Vec<u32> = (0..train.rows() as u32).collect();
        Self::fit_rows(
            &b,
            train.labels(),
            &rows,
            n_estimators,
            learning_rate,
            max_depth,
        )
    }

    /// Starts from the training log-odds; every stage fits a squared-error
    /// tree to the residuals `y − σ(F)`, sets each leaf to
    /// `Σ residual / Σ p(1 − p)` and adds `learning_rate` times the tree.
    pub(crate) fn fit_rows(
        b: &Binned,
        labels: &[bool],
        rows: &[u32],
        n_estimators: usize,
        learning_rate: f64,
        max_depth: usize,
    ) -> Result<Self> {
        if !(learning_rate > 0.0 && learning_rate.is_finite()) {
            return Err(MlError::Hyperparameter(format!(
                "learning_rate must be positive, got {learning_rate}"
            )));
        }
        if max_depth == 0 {
            return Err(MlError::Hyperparameter(
                "max_depth must be at least 1".into(),
            ));
        }
        let positives = rows.iter().filter(|&&r| labels[r as usize]).count();
        if positives == 0 || positives == rows.len() {
            return Err(MlError::SingleClass);
        }
        let p0 = positives as f64 / rows.len() as f64;
        let init = (p0 / (1.0 - p0)).ln();

        let n = b.rows();
        let weight = vec![1.0; n];
        let mut f = vec![init; n];
        let mut residual = vec![0.0; n];
        let mut hessian = vec![0.0; n];
        let mut leaf_of = vec![0u32; n];
        let params = GrowParams {
            max_depth,
            criterion: Criterion::Newton,
            max_features: None,
        };
        let mut trees = Vec::with_capacity(n_estimators);
        let mut train_loss = Vec::with_capacity(n_estimators + 1);
        train_loss.push(mean_log_loss(labels, rows, &f));
        for _ in 0..n_estimators {
            for &r in rows {
                let r = r as usize;
                let p = sigmoid(f[r]);
                residual[r] = if labels[r] { 1.0 } else { 0.0 } - p;
                hessian[r] = p * (1.0 - p);
            }
            let data = RowData {
                weight: &weight,
                target: &residual,
                hessian: &hessian,
            };
            let tree = grow(b, rows.to_vec(), &data, &params, None, Some(&mut leaf_of));
            for &r in rows {
                let r = r as usize;
                f[r] += learning_rate * tree.node_value(leaf_of[r]);
            }
            train_loss.push(mean_log_loss(labels, rows, &f));
            trees.push(tree);
        }
        Ok(Self {
            init,
            learning_rate,
            trees,
            train_loss,
        })
    }

    pub fn stage_count(&self) -> usize {
        self.trees.len()
    }

    /// Mean training log-loss before any stage and after each stage.
    pub fn train_loss(&self) -> &[f64] {
        &self.train_loss
    }

    pub fn predict_scores(&self, m: &LabeledMatrix) -> Vec<f64> {
        self.staged_scores(m, &[self.trees.len()])
            .pop()
            .unwrap_or_default()
    }

    /// Scores using the first `c` stages, for each checkpoint `c`.
    pub fn staged_scores(&self, m: &LabeledMatrix, checkpoints: &[usize]) -> Vec<Vec<f64>> {
        let mut out = vec![Vec::with_capacity(m.rows()); checkpoints.len()];
        let mut sums = Vec::with_capacity(self.trees.len() + 1);
        for i in 0..m.rows() {
            let row = m.row(i);
            let mut f = self.init;
            sums.clear();
            sums.push(f);
            for t in &self.trees {
                f += self.learning_rate * t.predict(row);
                sums.push(f);
            }
            for (slot, &c) in out.iter_mut().zip(checkpoints) {
                slot.push(sigmoid(sums[c.min(self.trees.len())]));
            }
        }
        out
    }
}

/// `ln(1 + e^x)` without overflow.
fn softplus(x: f64) -> f64 {
    if x > 0.0 {
        x + (-x).exp().ln_1p()
    } else {
        x.exp().ln_1p()
    }
}

fn mean_log_loss(labels: &[bool], rows: &[u32], f: &[f64]) -> f64 {
    let total: f64 = rows
        .iter()
        .map(|&r| {
            let x = f[r as usize];
            if labels[r as usize] {
                softplus(-x)
            } else {
                softplus(x)
            }
        })
        .sum();
    total / rows.len() as f64
}
