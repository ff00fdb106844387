//! Utility metrics for anonymized releases and binary classifiers.

use std::io::Write;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::partition::Partition;

/// Average equivalence class size metric `|released| / (k · |classes|)`.
/// Equals 1 when every class has exactly `k` members.
pub fn avg_class_size_metric(record_count: usize, k: usize, class_count: usize) -> Result<f64> {
    if class_count == 0 {
        return Err(Error::EmptyPartition);
    }
    if k == 0 {
        return Err(Error::InvalidArgument("k must be at least 1".into()));
    }
    Ok(record_count as f64 / (k as f64 * class_count as f64))
}

/// Classification metric: the fraction of the `original_count` rows that
/// were suppressed or carry a non-majority label within their class.
///
/// When several labels tie for the majority the penalty is the same
/// whichever one is chosen.
pub fn classification_metric(original_count: usize, p: &Partition) -> Result<f64> {
    if original_count == 0 {
        return Err(Error::EmptyDataset);
    }
    let covered = p.record_count() + p.suppressed_count();
    if covered > original_count {
        return Err(Error::InvalidArgument(format!(
            "partition covers {covered} rows but the original table has {original_count}"
        )));
    }
    let minority: usize = p.classes.iter().map(|c| c.size() - c.modal_count()).sum();
    Ok((p.suppressed_count() + minority) as f64 / original_count as f64)
}

pub fn accuracy(labels: &[bool], predictions: &[bool]) -> Result<f64> {
    if labels.len() != predictions.len() {
        return Err(Error::LengthMismatch(labels.len(), predictions.len()));
    }
    if labels.is_empty() {
        return Err(Error::EmptyDataset);
    }
    let hits = labels
        .iter()
        .zip(predictions)
        .filter(|(a, b)| a == b)
        .count();
    Ok(hits as f64 / labels.len() as f64)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RocCurve {
    /// `(false positive rate, true positive rate)` from `(0,0)` to `(1,1)`.
    pub points: Vec<(f64, f64)>,
    pub auc: f64,
    pub positives: usize,
    pub negatives: usize,
}

/// ROC curve from a descending sweep over distinct scores (tied scores form
/// one step) and its trapezoidal area.
pub fn roc_auc(labels: &[bool], scores: &[f64]) -> Result<RocCurve> {
    if labels.len() != scores.len() {
        return Err(Error::LengthMismatch(labels.len(), scores.len()));
    }
    let positives = labels.iter().filter(|&&l| l).count();
    let negatives = labels.len() - positives;
    if positives == 0 || negatives == 0 {
        return Err(Error::SingleClass);
    }
    let mut order: Vec<usize> = (0..labels.len()).collect();
    order.sort_by(|&a, &b| scores[b].total_cmp(&scores[a]));

    let mut points = vec![(0.0, 0.0)];
    let (mut tp, mut fp) = (0usize, 0usize);
    let mut i = 0;
    while i < order.len() {
        let threshold = scores[order[i]];
        while i < order.len() && scores[order[i]] == threshold {
            if labels[order[i]] {
                tp += 1;
            } else {
                fp += 1;
            }
            i += 1;
        }
        points.push((fp as f64 / negatives as f64, tp as f64 / positives as f64));
    }
    Ok(RocCurve {
        auc: trapezoid(&points),
        points,
        positives,
        negatives,
    })
}

pub fn trapezoid(points: &[(f64, f64)]) -> f64 {
    points
        .windows(2)
        .map(|w| (w[1].0 - w[0].0) * (w[0].1 + w[1].1) / 2.0)
        .sum()
}

/// Test-set quality of one classifier.
///
/// `accuracy`, `auc` and `roc_points` use the hard predictions
/// (`score >= 0.5`), so the curve has a single interior point;
/// `score_auc` ranks by the raw scores instead.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvalReport {
    pub accuracy: f64,
    pub auc: f64,
    pub score_auc: f64,
    pub positives: usize,
    pub negatives: usize,
    pub roc_points: Vec<(f64, f64)>,
}

impl EvalReport {
    pub fn from_scores(labels: &[bool], scores: &[f64]) -> Result<Self> {
        let predictions: Vec<bool> = scores.iter().map(|&s| s >= 0.5).collect();
        let hard: Vec<f64> = predictions
            .iter()
            .map(|&p| if p { 1.0 } else { 0.0 })
            .collect();
        let roc = roc_auc(labels, &hard)?;
        let ranked = roc_auc(labels, scores)?;
        Ok(Self {
            accuracy: accuracy(labels, &predictions)?,
            auc: roc.auc,
            score_auc: ranked.auc,
            positives: roc.positives,
            negatives: roc.negatives,
            roc_points: roc.points,
        })
    }
}

/// Writes ROC points as `fpr,tpr` lines under a header.
pub fn write_roc_points<W: Write>(mut out: W, points: &[(f64, f64)]) -> Result<()> {
    writeln!(out, "fpr,tpr")?;
    for (x, y) in points {
        writeln!(out, "{x},{y}")?;
    }
    Ok(())
}
