//! Discrete two-class AdaBoost over decision stumps.

use crate::binned::Binned;
use crate::encoding::LabeledMatrix;
use crate::error::{MlError, Result};
use crate::tree::{check_training, grow, targets, Criterion, GrowParams, RowData, Tree};

/// Bound on a single stage weight; reached when a stump is perfect.
pub const ALPHA_CAP: f64 = 1e3;

#[derive(Debug, Clone, PartialEq)]
pub struct AdaBoost {
    stumps: Vec<Tree>,
    alphas: Vec<f64>,
}

impl AdaBoost {
    pub fn fit(train: &LabeledMatrix, n_estimators: usize, learning_rate: f64) -> Result<Self> {
        check_training(train)?;
        let b = Binned::new(train);
        let rows: Vec<u32> = (0..train.rows() as u32).collect();
        Self::fit_rows(&b, train.labels(), &rows, n_estimators, learning_rate)
    }

    /// Each round fits a stump on the current weights, takes
    /// `α = lr · ln((1 − ε) / ε)` from its weighted error `ε`, and
    /// multiplies the weight of every misclassified row by `e^α`.
    /// Boosting stops early once `ε ≥ 0.5` (stage dropped) or `ε = 0`
    /// (stage kept with the capped weight).
    pub(crate) fn fit_rows(
        b: &Binned,
        labels: &[bool],
        rows: &[u32],
        n_estimators: usize,
        learning_rate: f64,
    ) -> Result<Self> {
        if n_estimators == 0 {
            return Err(MlError::Hyperparameter(
                "n_estimators must be at least 1".into(),
            ));
        }
        if !(learning_rate > 0.0 && learning_rate.is_finite()) {
            return Err(MlError::Hyperparameter(format!(
                "learning_rate must be positive, got {learning_rate}"
            )));
        }
        let target = targets(labels);
        let mut weight = vec![0.0; b.rows()];
        for &r in rows {
            weight[r as usize] = 1.0 / rows.len() as f64;
        }
        let params = GrowParams {
            max_depth: 1,
            criterion: Criterion::Gini,
            max_features: None,
        };
        let mut leaf_of = vec![0u32; b.rows()];
        let (mut stumps, mut alphas) = (Vec::new(), Vec::new());
        for _ in 0..n_estimators {
            let data = RowData {
                weight: &weight,
                target: &target,
                hessian: &[],
            };
            let stump = grow(b, rows.to_vec(), &data, &params, None, Some(&mut leaf_of));
            let miss =
                |r: u32| (stump.node_value(leaf_of[r as usize]) >= 0.5) != labels[r as usize];
            let total: f64 = rows.iter().map(|&r| weight[r as usize]).sum();
            let err: f64 = rows
                .iter()
                .filter(|&&r| miss(r))
                .map(|&r| weight[r as usize])
                .sum::<f64>()
                / total;
            if err >= 0.5 {
                break;
            }
            if err <= 0.0 {
                stumps.push(stump);
                alphas.push(ALPHA_CAP);
                break;
            }
            let alpha = (learning_rate * ((1.0 - err) / err).ln()).min(ALPHA_CAP);
            let boost = alpha.exp();
            for &r in rows {
                if miss(r) {
                    weight[r as usize] *= boost;
                }
            }
            let total: f64 = rows.iter().map(|&r| weight[r as usize]).sum();
            for &r in rows {
                weight[r as usize] /= total;
            }
            stumps.push(stump);
            alphas.push(alpha);
        }
        Ok(Self { stumps, alphas })
    }

    pub fn stage_count(&self) -> usize {
        self.stumps.len()
    }

    pub fn alphas(&self) -> &[f64] {
        &self.alphas
    }

    pub fn predict_scores(&self, m: &LabeledMatrix) -> Vec<f64> {
        self.staged_scores(m, &[self.stumps.len()])
            .pop()
            .unwrap_or_default()
    }

    /// Scores `σ(Σ α·h)` with `h ∈ {−1, +1}` using the first `c` stages,
    /// for each checkpoint `c`.
    pub fn staged_scores(&self, m: &LabeledMatrix, checkpoints: &[usize]) -> Vec<Vec<f64>> {
        let mut out = vec![Vec::with_capacity(m.rows()); checkpoints.len()];
        for i in 0..m.rows() {
            let row = m.row(i);
            let mut f = 0.0;
            let mut done = 0;
            let mut stage_sums = Vec::with_capacity(self.stumps.len() + 1);
            stage_sums.push(0.0);
            for (s, a) in self.stumps.iter().zip(&self.alphas) {
                f += if s.predict(row) >= 0.5 { *a } else { -*a };
                stage_sums.push(f);
                done += 1;
            }
            for (slot, &c) in out.iter_mut().zip(checkpoints) {
                slot.push(sigmoid(stage_sums[c.min(done)]));
            }
        }
        out
    }
}

pub(crate) fn sigmoid(x: f64) -> f64 {
    if x >= 0.0 {
        1.0 / (1.0 + (-x).exp())
    } else {
        let e = x.exp();
        e / (1.0 + e)
    }
}
