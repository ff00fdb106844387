//! Feature encoding of (generalized) tables.
//!
//! Quasi-identifiers become features and the sensitive attribute becomes
//! the binary label. Every category, including interval labels and the
//! suppression token, is one-hot encoded over the training vocabulary, so
//! no order is imposed on intervals of mixed width.

use std::collections::HashMap;

use anonlab_core::data::{Dataset, Kind, Role};
use anonlab_core::privacy::ordered_support;

use crate::error::{MlError, Result};

/// Dense row-major feature matrix with binary labels.
#[derive(Debug, Clone, PartialEq)]
pub struct LabeledMatrix {
    rows: usize,
    cols: usize,
    features: Vec<f64>,
    labels: Vec<bool>,
    feature_names: Vec<String>,
}

impl LabeledMatrix {
    pub fn new(features: Vec<Vec<f64>>, labels: Vec<bool>) -> Result<Self> {
        let cols = features.first().map_or(0, Vec::len);
        let names = (0..cols).map(|j| format!("x{j}")).collect();
        Self::with_names(features, labels, names)
    }

    pub fn with_names(
        features: Vec<Vec<f64>>,
        labels: Vec<bool>,
        feature_names: Vec<String>,
    ) -> Result<Self> {
        if features.len() != labels.len() {
            return Err(MlError::InvalidArgument(format!(
                "{} feature rows but {} labels",
                features.len(),
                labels.len()
            )));
        }
        let cols = feature_names.len();
        if let Some(bad) = features.iter().position(|r| r.len() != cols) {
            return Err(MlError::InvalidArgument(format!(
                "row {bad} has {} features, expected {cols}",
                features[bad].len()
            )));
        }
        Ok(Self {
            rows: features.len(),
            cols,
            features: features.into_iter().flatten().collect(),
            labels,
            feature_names,
        })
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.features[i * self.cols..(i + 1) * self.cols]
    }

    pub fn value(&self, i: usize, j: usize) -> f64 {
        self.features[i * self.cols + j]
    }

    pub fn labels(&self) -> &[bool] {
        &self.labels
    }

    pub fn feature_names(&self) -> &[String] {
        &self.feature_names
    }

    pub fn positives(&self) -> usize {
        self.labels.iter().filter(|&&y| y).count()
    }

    pub fn select_rows(&self, indices: &[usize]) -> LabeledMatrix {
        let mut features = Vec::with_capacity(indices.len() * self.cols);
        for &i in indices {
            features.extend_from_slice(self.row(i));
        }
        LabeledMatrix {
            rows: indices.len(),
            cols: self.cols,
            features,
            labels: indices.iter().map(|&i| self.labels[i]).collect(),
            feature_names: self.feature_names.clone(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Strategy {
    /// One indicator column per training category; unseen categories
    /// encode as all zeros.
    OneHot,
    /// A single column holding the category rank in the training
    /// vocabulary; unseen categories get the rank one past the end.
    Ordinal,
}

#[derive(Debug, Clone, PartialEq)]
struct ColumnEncoding {
    attribute: String,
    column: usize,
    strategy: Strategy,
    vocabulary: Vec<String>,
    index: HashMap<String, usize>,
}

impl ColumnEncoding {
    fn width(&self) -> usize {
        match self.strategy {
            Strategy::OneHot => self.vocabulary.len(),
            Strategy::Ordinal => 1,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct EncoderState {
    columns: Vec<ColumnEncoding>,
    label_column: usize,
    positive_label: String,
}

impl EncoderState {
    pub fn positive_label(&self) -> &str {
        &self.positive_label
    }

    pub fn width(&self) -> usize {
        self.columns.iter().map(ColumnEncoding::width).sum()
    }

    pub fn feature_names(&self) -> Vec<String> {
        let mut names = Vec::with_capacity(self.width());
        for c in &self.columns {
            match c.strategy {
                Strategy::OneHot => names.extend(
                    c.vocabulary
                        .iter()
                        .map(|v| format!("{}={}", c.attribute, v)),
                ),
                Strategy::Ordinal => names.push(c.attribute.clone()),
            }
        }
        names
    }

    /// Source columns used as features.
    pub fn feature_columns(&self) -> Vec<usize> {
        self.columns.iter().map(|c| c.column).collect()
    }

    pub fn label_column(&self) -> usize {
        self.label_column
    }
}

/// One-hot encoder over every quasi-identifier.
pub fn fit_encoder(train: &Dataset) -> Result<EncoderState> {
    fit_encoder_with(train, |_| Strategy::OneHot)
}

/// Learns vocabularies from `train`. The positive label is the schema's
/// declared one, or else the largest label value seen in training.
pub fn fit_encoder_with<F>(train: &Dataset, strategy: F) -> Result<EncoderState>
where
    F: Fn(&anonlab_core::AttributeSchema) -> Strategy,
{
    if train.row_count() == 0 {
        return Err(MlError::EmptyTraining);
    }
    let schema = train.schema();
    let columns = schema
        .attributes()
        .iter()
        .enumerate()
        .filter(|(_, a)| a.role == Role::QuasiIdentifier)
        .map(|(col, a)| {
            let vocabulary = ordered_support(train.column(col), a.kind);
            let index = vocabulary
                .iter()
                .enumerate()
                .map(|(i, v)| (v.clone(), i))
                .collect();
            ColumnEncoding {
                attribute: a.name.clone(),
                column: col,
                strategy: strategy(a),
                vocabulary,
                index,
            }
        })
        .collect();
    let label_column = schema.sensitive();
    let positive_label = match schema.positive_label() {
        Some(p) => p.to_string(),
        None => ordered_support(train.column(label_column), Kind::Categorical)
            .pop()
            .expect("non-empty training set"),
    };
    Ok(EncoderState {
        columns,
        label_column,
        positive_label,
    })
}

pub fn encode(e: &EncoderState, d: &Dataset) -> Result<LabeledMatrix> {
    let cols = e.width();
    let mut features = vec![0.0; d.row_count() * cols];
    for (i, row) in d.rows().iter().enumerate() {
        let out = &mut features[i * cols..(i + 1) * cols];
        let mut offset = 0;
        for c in &e.columns {
            let value = &row[c.column];
            match c.strategy {
                Strategy::OneHot => {
                    if let Some(&k) = c.index.get(value) {
                        out[offset + k] = 1.0;
                    }
                }
                Strategy::Ordinal => {
                    out[offset] = c.index.get(value).copied().unwrap_or(c.vocabulary.len()) as f64;
                }
            }
            offset += c.width();
        }
    }
    Ok(LabeledMatrix {
        rows: d.row_count(),
        cols,
        features,
        labels: d
            .column(e.label_column)
            .map(|v| v == e.positive_label)
            .collect(),
        feature_names: e.feature_names(),
    })
}
