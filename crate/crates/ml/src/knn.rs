//! k-nearest-neighbour scoring under Euclidean distance.

use std::cmp::Ordering;
use std::collections::BinaryHeap;

use rayon::prelude::*;

use crate::encoding::LabeledMatrix;
use crate::error::{MlError, Result};

/// Row-compressed non-zero cells.
#[derive(Debug, Clone, PartialEq)]
pub(crate) struct SparseRows {
    ptr: Vec<usize>,
    cols: Vec<u32>,
    vals: Vec<f64>,
}

impl SparseRows {
    pub fn new(m: &LabeledMatrix, rows: &[usize]) -> Self {
        let mut ptr = Vec::with_capacity(rows.len() + 1);
        let (mut cols, mut vals) = (Vec::new(), Vec::new());
        ptr.push(0);
        for &i in rows {
            for (j, &v) in m.row(i).iter().enumerate() {
                if v != 0.0 {
                    cols.push(j as u32);
                    vals.push(v);
                }
            }
            ptr.push(cols.len());
        }
        Self { ptr, cols, vals }
    }

    pub fn len(&self) -> usize {
        self.ptr.len() - 1
    }

    fn row(&self, i: usize) -> (&[u32], &[f64]) {
        let r = self.ptr[i]..self.ptr[i + 1];
        (&self.cols[r.clone()], &self.vals[r])
    }
}

/// Squared Euclidean distance by merging two sorted sparse rows.
fn squared_distance(a: (&[u32], &[f64]), b: (&[u32], &[f64])) -> f64 {
    let (mut i, mut j, mut acc) = (0, 0, 0.0);
    while i < a.0.len() && j < b.0.len() {
        match a.0[i].cmp(&b.0[j]) {
            Ordering::Less => {
                acc += a.1[i] * a.1[i];
                i += 1;
            }
            Ordering::Greater => {
                acc += b.1[j] * b.1[j];
                j += 1;
            }
            Ordering::Equal => {
                let d = a.1[i] - b.1[j];
                acc += d * d;
                i += 1;
                j += 1;
            }
        }
    }
    acc += a.1[i..].iter().map(|v| v * v).sum::<f64>();
    acc += b.1[j..].iter().map(|v| v * v).sum::<f64>();
    acc
}

#[derive(PartialEq)]
struct Candidate(f64, u32);

impl Eq for Candidate {}

impl PartialOrd for Candidate {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for Candidate {
    fn cmp(&self, other: &Self) -> Ordering {
        self.0.total_cmp(&other.0).then(self.1.cmp(&other.1))
    }
}

/// Indices of the `k` nearest rows of `train` to `query`, nearest first,
/// distance ties broken by lower index.
fn nearest(train: &SparseRows, query: (&[u32], &[f64]), k: usize) -> Vec<u32> {
    let mut heap: BinaryHeap<Candidate> = BinaryHeap::with_capacity(k + 1);
    for i in 0..train.len() {
        let d = squared_distance(train.row(i), query);
        if heap.len() < k {
            heap.push(Candidate(d, i as u32));
        } else if d < heap.peek().map_or(f64::INFINITY, |c| c.0) {
            // Rows arrive in index order, so an equal distance never wins.
            heap.pop();
            heap.push(Candidate(d, i as u32));
        }
    }
    heap.into_sorted_vec().into_iter().map(|c| c.1).collect()
}

/// Neighbour lists of every query row, computed in parallel.
pub(crate) fn neighbour_lists(train: &SparseRows, queries: &SparseRows, k: usize) -> Vec<Vec<u32>> {
    (0..queries.len())
        .into_par_iter()
        .map(|q| nearest(train, queries.row(q), k))
        .collect()
}

/// Positive fraction among the first `k` entries of each list.
pub(crate) fn scores_from_lists(lists: &[Vec<u32>], labels: &[bool], k: usize) -> Vec<f64> {
    lists
        .iter()
        .map(|l| l[..k].iter().filter(|&&i| labels[i as usize]).count() as f64 / k as f64)
        .collect()
}

#[derive(Debug, Clone, PartialEq)]
pub struct Knn {
    neighbors: usize,
    train: SparseRows,
    labels: Vec<bool>,
}

impl Knn {
    pub fn fit(train: &LabeledMatrix, neighbors: usize) -> Result<Self> {
        if train.rows() == 0 {
            return Err(MlError::EmptyTraining);
        }
        check_neighbors(neighbors, train.rows())?;
        let all: Vec<usize> = (0..train.rows()).collect();
        Ok(Self {
            neighbors,
            train: SparseRows::new(train, &all),
            labels: train.labels().to_vec(),
        })
    }

    pub fn neighbors(&self) -> usize {
        self.neighbors
    }

    pub fn predict_scores(&self, m: &LabeledMatrix) -> Vec<f64> {
        let all: Vec<usize> = (0..m.rows()).collect();
        let lists = neighbour_lists(&self.train, &SparseRows::new(m, &all), self.neighbors);
        scores_from_lists(&lists, &self.labels, self.neighbors)
    }
}

pub(crate) fn check_neighbors(k: usize, n: usize) -> Result<()> {
    if k == 0 || k > n {
        return Err(MlError::Hyperparameter(format!(
            "neighbors must be in 1..={n}, got {k}"
        )));
    }
    Ok(())
}
