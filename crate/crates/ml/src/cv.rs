//! Stratified k-fold grid search.
//!
//! Grid points are enumerated over the parameter names in sorted order
//! (`learning_rate`, `max_depth`, `n_estimators`, `n_trees`, `neighbors`),
//! each list in its given order, with the last name varying fastest. The
//! selection criterion is mean validation accuracy; ties keep the earliest
//! point.
//!
//! Points that differ only in a "prefix" parameter share one fit per fold:
//! kNN neighbour lists are computed once at the largest `neighbors`, trees
//! and forests are grown to the largest depth and read truncated, and
//! boosting is fitted to the largest stage count and read at each stage
//! count. Each shortcut reproduces the direct fit exactly.

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::adaboost::AdaBoost;
use crate::binned::Binned;
use crate::encoding::LabeledMatrix;
use crate::error::{MlError, Result};
use crate::forest::{ForestParams, RandomForest};
use crate::gboost::GradientBoosting;
use crate::knn::{check_neighbors, neighbour_lists, scores_from_lists, SparseRows};
use crate::model::{check_depth, fit, Family, Hyperparams, ModelSpec, TrainedModel};
use crate::tree::DecisionTree;

pub const DEFAULT_FOLDS: usize = 5;

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct ParamGrid {
    pub learning_rate: Vec<f64>,
    pub max_depth: Vec<usize>,
    pub n_estimators: Vec<usize>,
    pub n_trees: Vec<usize>,
    pub neighbors: Vec<usize>,
}

impl ParamGrid {
    /// The full search grids.
    pub fn full(family: Family) -> Self {
        match family {
            Family::Knn => Self {
                neighbors: (3..=50).collect(),
                ..Self::default()
            },
            Family::Tree => Self {
                max_depth: (2..=9).collect(),
                ..Self::default()
            },
            Family::RandomForest => Self {
                max_depth: (2..=9).collect(),
                n_trees: vec![100],
                ..Self::default()
            },
            Family::Adaboost => Self {
                learning_rate: vec![0.01, 0.1, 0.5, 1.0],
                n_estimators: vec![50, 100, 150],
                ..Self::default()
            },
            Family::GradientBoosting => Self {
                learning_rate: vec![0.01, 0.1, 0.5, 1.0],
                max_depth: vec![2, 4, 6, 8, 10],
                n_estimators: vec![50, 100, 150],
                ..Self::default()
            },
        }
    }

    /// Small grids for quick runs.
    pub fn reduced(family: Family) -> Self {
        match family {
            Family::Knn => Self {
                neighbors: vec![5, 10, 25, 50],
                ..Self::default()
            },
            Family::Tree => Self {
                max_depth: vec![2, 4],
                ..Self::default()
            },
            Family::RandomForest => Self {
                max_depth: vec![2, 4],
                n_trees: vec![100],
                ..Self::default()
            },
            Family::Adaboost => Self {
                learning_rate: vec![0.1],
                n_estimators: vec![50],
                ..Self::default()
            },
            Family::GradientBoosting => Self {
                learning_rate: vec![0.1],
                max_depth: vec![2, 4],
                n_estimators: vec![50],
                ..Self::default()
            },
        }
    }

    /// Grid points for `family` in enumeration order.
    pub fn points(&self, family: Family) -> Result<Vec<Hyperparams>> {
        fn axis<T: Copy>(used: bool, values: &[T]) -> Result<Vec<Option<T>>> {
            match (used, values.is_empty()) {
                (false, _) => Ok(vec![None]),
                (true, true) => Err(MlError::EmptyGrid),
                (true, false) => Ok(values.iter().map(|&v| Some(v)).collect()),
            }
        }
        let uses = |names: &[Family]| names.contains(&family);
        use Family::*;
        let lr = axis(uses(&[Adaboost, GradientBoosting]), &self.learning_rate)?;
        let depth = axis(
            uses(&[Tree, RandomForest, GradientBoosting]),
            &self.max_depth,
        )?;
        let est = axis(uses(&[Adaboost, GradientBoosting]), &self.n_estimators)?;
        let trees = axis(uses(&[RandomForest]), &self.n_trees)?;
        let nn = axis(uses(&[Knn]), &self.neighbors)?;
        let mut out = Vec::new();
        for &learning_rate in &lr {
            for &max_depth in &depth {
                for &n_estimators in &est {
                    for &n_trees in &trees {
                        for &neighbors in &nn {
                            out.push(Hyperparams {
                                learning_rate,
                                max_depth,
                                n_estimators,
                                n_trees,
                                neighbors,
                            });
                        }
                    }
                }
            }
        }
        Ok(out)
    }
}

/// Fold index of every row. Each label's rows are shuffled with the seeded
/// generator (negatives first) and dealt round-robin, so every fold holds
/// every label when each label has at least `folds` rows.
pub fn stratified_folds(labels: &[bool], folds: usize, seed: u64) -> Result<Vec<usize>> {
    if folds < 2 {
        return Err(MlError::InvalidArgument(format!(
            "need at least 2 folds, got {folds}"
        )));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut assignment = vec![0; labels.len()];
    for label in [false, true] {
        let mut idx: Vec<usize> = (0..labels.len()).filter(|&i| labels[i] == label).collect();
        if idx.len() < folds {
            return Err(MlError::InvalidArgument(format!(
                "label {label} has {} rows, fewer than {folds} folds",
                idx.len()
            )));
        }
        idx.shuffle(&mut rng);
        for (pos, i) in idx.into_iter().enumerate() {
            assignment[i] = pos % folds;
        }
    }
    Ok(assignment)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CvScore {
    pub params: Hyperparams,
    pub mean_accuracy: f64,
    pub fold_accuracy: Vec<f64>,
}

#[derive(Debug, Clone)]
pub struct GridSearchResult {
    pub spec: ModelSpec,
    pub best_score: f64,
    pub scores: Vec<CvScore>,
    /// Refitted on the whole training matrix with the winning point.
    pub model: TrainedModel,
}

pub fn grid_search_cv(
    family: Family,
    grid: &ParamGrid,
    train: &LabeledMatrix,
    folds: usize,
    seed: u64,
) -> Result<GridSearchResult> {
    if train.rows() == 0 {
        return Err(MlError::EmptyTraining);
    }
    let points = grid.points(family)?;
    let assignment = stratified_folds(train.labels(), folds, seed)?;
    let groups = group_points(family, &points);
    let binned = match family {
        Family::Knn => None,
        _ => Some(Binned::new(train)),
    };

    let tasks: Vec<(usize, usize)> = (0..groups.len())
        .flat_map(|g| (0..folds).map(move |f| (g, f)))
        .collect();
    let results: Vec<Vec<f64>> = tasks
        .par_iter()
        .map(|&(g, fold)| {
            let train_rows: Vec<usize> = (0..train.rows())
                .filter(|&i| assignment[i] != fold)
                .collect();
            let val_rows: Vec<usize> = (0..train.rows())
                .filter(|&i| assignment[i] == fold)
                .collect();
            let members: Vec<Hyperparams> = groups[g].iter().map(|&p| points[p]).collect();
            let scores = group_scores(
                family,
                &members,
                train,
                binned.as_ref(),
                &train_rows,
                &val_rows,
                seed,
            )?;
            let val = train.select_rows(&val_rows);
            Ok(scores.iter().map(|s| accuracy(s, val.labels())).collect())
        })
        .collect::<Result<_>>()?;

    let mut fold_accuracy = vec![vec![0.0; folds]; points.len()];
    for (&(g, fold), accs) in tasks.iter().zip(&results) {
        for (&p, &a) in groups[g].iter().zip(accs) {
            fold_accuracy[p][fold] = a;
        }
    }
    let scores: Vec<CvScore> = points
        .iter()
        .zip(fold_accuracy)
        .map(|(&params, fold_accuracy)| CvScore {
            params,
            mean_accuracy: fold_accuracy.iter().sum::<f64>() / folds as f64,
            fold_accuracy,
        })
        .collect();
    let mut best = 0;
    for (i, s) in scores.iter().enumerate() {
        if s.mean_accuracy > scores[best].mean_accuracy {
            best = i;
        }
    }
    let spec = ModelSpec {
        family,
        params: scores[best].params,
        seed,
    };
    let model = fit(&spec, train)?;
    Ok(GridSearchResult {
        spec,
        best_score: scores[best].mean_accuracy,
        scores,
        model,
    })
}

/// Indices of points that can share one fit, in first-appearance order.
fn group_points(family: Family, points: &[Hyperparams]) -> Vec<Vec<usize>> {
    let key = |p: &Hyperparams| -> (u64, usize) {
        let lr = p.learning_rate.map_or(0, f64::to_bits);
        match family {
            Family::Knn | Family::Tree => (0, 0),
            Family::RandomForest => (0, p.n_trees.unwrap_or(0)),
            Family::Adaboost => (lr, 0),
            Family::GradientBoosting => (lr, p.max_depth.unwrap_or(0)),
        }
    };
    let mut keys: Vec<(u64, usize)> = Vec::new();
    let mut groups: Vec<Vec<usize>> = Vec::new();
    for (i, p) in points.iter().enumerate() {
        let k = key(p);
        match keys.iter().position(|&x| x == k) {
            Some(g) => groups[g].push(i),
            None => {
                keys.push(k);
                groups.push(vec![i]);
            }
        }
    }
    groups
}

/// Validation scores of every member of one group on one fold.
fn group_scores(
    family: Family,
    members: &[Hyperparams],
    train: &LabeledMatrix,
    binned: Option<&Binned>,
    train_rows: &[usize],
    val_rows: &[usize],
    seed: u64,
) -> Result<Vec<Vec<f64>>> {
    let val = train.select_rows(val_rows);
    let rows32: Vec<u32> = train_rows.iter().map(|&r| r as u32).collect();
    let max_of =
        |f: fn(&Hyperparams) -> Option<usize>| members.iter().filter_map(f).max().unwrap_or(0);
    let first = &members[0];
    Ok(match family {
        Family::Knn => {
            let kmax = max_of(|p| p.neighbors);
            for p in members {
                check_neighbors(p.neighbors.unwrap_or(0), train_rows.len())?;
            }
            let all_val: Vec<usize> = (0..val.rows()).collect();
            let lists = neighbour_lists(
                &SparseRows::new(train, train_rows),
                &SparseRows::new(&val, &all_val),
                kmax,
            );
            let labels: Vec<bool> = train_rows.iter().map(|&r| train.labels()[r]).collect();
            members
                .iter()
                .map(|p| scores_from_lists(&lists, &labels, p.neighbors.unwrap_or(0)))
                .collect()
        }
        Family::Tree => {
            let b = binned.expect("binned matrix");
            let dmax = max_of(|p| p.max_depth);
            check_depth(
                members
                    .iter()
                    .filter_map(|p| p.max_depth)
                    .min()
                    .unwrap_or(0),
            )?;
            let t = DecisionTree::fit_rows(b, train.labels(), rows32, dmax);
            members
                .iter()
                .map(|p| {
                    let d = p.max_depth.unwrap_or(0);
                    (0..val.rows())
                        .map(|i| t.tree().predict_truncated(val.row(i), d))
                        .collect()
                })
                .collect()
        }
        Family::RandomForest => {
            let b = binned.expect("binned matrix");
            let dmax = max_of(|p| p.max_depth);
            check_depth(
                members
                    .iter()
                    .filter_map(|p| p.max_depth)
                    .min()
                    .unwrap_or(0),
            )?;
            let params = ForestParams::new(first.n_trees.unwrap_or(0), dmax);
            let f = RandomForest::fit_rows(b, train.labels(), &rows32, params, seed)?;
            members
                .iter()
                .map(|p| f.predict_truncated(&val, p.max_depth.unwrap_or(0)))
                .collect()
        }
        Family::Adaboost => {
            let b = binned.expect("binned matrix");
            let nmax = max_of(|p| p.n_estimators);
            let lr = first.learning_rate.unwrap_or(0.0);
            let a = AdaBoost::fit_rows(b, train.labels(), &rows32, nmax, lr)?;
            let cps: Vec<usize> = members
                .iter()
                .map(|p| p.n_estimators.unwrap_or(0))
                .collect();
            a.staged_scores(&val, &cps)
        }
        Family::GradientBoosting => {
            let b = binned.expect("binned matrix");
            let nmax = max_of(|p| p.n_estimators);
            let lr = first.learning_rate.unwrap_or(0.0);
            let depth = first.max_depth.unwrap_or(0);
            let g = GradientBoosting::fit_rows(b, train.labels(), &rows32, nmax, lr, depth)?;
            let cps: Vec<usize> = members
                .iter()
                .map(|p| p.n_estimators.unwrap_or(0))
                .collect();
            g.staged_scores(&val, &cps)
        }
    })
}

fn accuracy(scores: &[f64], labels: &[bool]) -> f64 {
    let hits = scores
        .iter()
        .zip(labels)
        .filter(|(s, &y)| (**s >= 0.5) == y)
        .count();
    hits as f64 / labels.len() as f64
}
