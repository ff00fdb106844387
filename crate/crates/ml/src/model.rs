//! Model families, hyperparameters and a uniform fitted-model type.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::adaboost::AdaBoost;
use crate::encoding::LabeledMatrix;
use crate::error::{MlError, Result};
use crate::forest::{ForestParams, RandomForest};
use crate::gboost::GradientBoosting;
use crate::knn::Knn;
use crate::tree::DecisionTree;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Family {
    Knn,
    Tree,
    RandomForest,
    Adaboost,
    GradientBoosting,
}

impl Family {
    pub const ALL: [Family; 5] = [
        Family::Knn,
        Family::Tree,
        Family::RandomForest,
        Family::Adaboost,
        Family::GradientBoosting,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Family::Knn => "knn",
            Family::Tree => "tree",
            Family::RandomForest => "random_forest",
            Family::Adaboost => "adaboost",
            Family::GradientBoosting => "gradient_boosting",
        }
    }

    /// Ensembles of trees.
    pub fn is_ensemble(self) -> bool {
        matches!(
            self,
            Family::RandomForest | Family::Adaboost | Family::GradientBoosting
        )
    }
}

impl fmt::Display for Family {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Family {
    type Err = MlError;

    fn from_str(s: &str) -> Result<Self> {
        Ok(
            match s.trim().to_ascii_lowercase().replace('-', "_").as_str() {
                "knn" => Family::Knn,
                "tree" | "dt" | "decision_tree" => Family::Tree,
                "random_forest" | "rf" | "forest" => Family::RandomForest,
                "adaboost" | "ada" => Family::Adaboost,
                "gradient_boosting" | "gb" | "gboost" => Family::GradientBoosting,
                other => {
                    return Err(MlError::InvalidArgument(format!(
                        "unknown model family `{other}`"
                    )))
                }
            },
        )
    }
}

/// One grid point. Only the fields used by the family are set; fields
/// are declared in sorted name order, which is also the grid order.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct Hyperparams {
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub learning_rate: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub max_depth: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub n_estimators: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub n_trees: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub neighbors: Option<usize>,
}

impl fmt::Display for Hyperparams {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let mut parts = Vec::new();
        if let Some(v) = self.learning_rate {
            parts.push(format!("learning_rate={v}"));
        }
        if let Some(v) = self.max_depth {
            parts.push(format!("max_depth={v}"));
        }
        if let Some(v) = self.n_estimators {
            parts.push(format!("n_estimators={v}"));
        }
        if let Some(v) = self.n_trees {
            parts.push(format!("n_trees={v}"));
        }
        if let Some(v) = self.neighbors {
            parts.push(format!("neighbors={v}"));
        }
        f.write_str(&parts.join(","))
    }
}

fn required<T>(v: Option<T>, name: &str, family: Family) -> Result<T> {
    v.ok_or_else(|| MlError::Hyperparameter(format!("{family} requires {name}")))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ModelSpec {
    pub family: Family,
    pub params: Hyperparams,
    pub seed: u64,
}

#[derive(Debug, Clone, PartialEq)]
pub enum TrainedModel {
    Knn(Knn),
    Tree(DecisionTree),
    RandomForest(RandomForest),
    Adaboost(AdaBoost),
    GradientBoosting(GradientBoosting),
}

impl TrainedModel {
    pub fn family(&self) -> Family {
        match self {
            TrainedModel::Knn(_) => Family::Knn,
            TrainedModel::Tree(_) => Family::Tree,
            TrainedModel::RandomForest(_) => Family::RandomForest,
            TrainedModel::Adaboost(_) => Family::Adaboost,
            TrainedModel::GradientBoosting(_) => Family::GradientBoosting,
        }
    }

    /// Scores in `[0, 1]`; the predicted label is `score >= 0.5`.
    pub fn predict_scores(&self, m: &LabeledMatrix) -> Vec<f64> {
        match self {
            TrainedModel::Knn(k) => k.predict_scores(m),
            TrainedModel::Tree(t) => t.predict_scores(m),
            TrainedModel::RandomForest(f) => f.predict_scores(m),
            TrainedModel::Adaboost(a) => a.predict_scores(m),
            TrainedModel::GradientBoosting(g) => g.predict_scores(m),
        }
    }

    pub fn predict(&self, m: &LabeledMatrix) -> Vec<bool> {
        self.predict_scores(m)
            .into_iter()
            .map(|s| s >= 0.5)
            .collect()
    }
}

pub fn fit(spec: &ModelSpec, train: &LabeledMatrix) -> Result<TrainedModel> {
    let p = &spec.params;
    let fam = spec.family;
    Ok(match fam {
        Family::Knn => {
            TrainedModel::Knn(Knn::fit(train, required(p.neighbors, "neighbors", fam)?)?)
        }
        Family::Tree => {
            let depth = required(p.max_depth, "max_depth", fam)?;
            check_depth(depth)?;
            TrainedModel::Tree(DecisionTree::fit(train, depth)?)
        }
        Family::RandomForest => {
            let depth = required(p.max_depth, "max_depth", fam)?;
            check_depth(depth)?;
            let params = ForestParams::new(required(p.n_trees, "n_trees", fam)?, depth);
            TrainedModel::RandomForest(RandomForest::fit(train, params, spec.seed)?)
        }
        Family::Adaboost => TrainedModel::Adaboost(AdaBoost::fit(
            train,
            required(p.n_estimators, "n_estimators", fam)?,
            required(p.learning_rate, "learning_rate", fam)?,
        )?),
        Family::GradientBoosting => TrainedModel::GradientBoosting(GradientBoosting::fit(
            train,
            required(p.n_estimators, "n_estimators", fam)?,
            required(p.learning_rate, "learning_rate", fam)?,
            required(p.max_depth, "max_depth", fam)?,
        )?),
    })
}

pub(crate) fn check_depth(depth: usize) -> Result<()> {
    if depth == 0 {
        return Err(MlError::Hyperparameter(
            "max_depth must be at least 1".into(),
        ));
    }
    Ok(())
}
