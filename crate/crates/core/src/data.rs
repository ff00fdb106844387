//! Tabular datasets, attribute roles and stratified splitting.
//!
//! A [`Dataset`] is a rectangular table of text cells whose columns follow
//! the order of its [`Schema`]. Missing source values are kept as the
//! literal `?` and behave like any other categorical value.

use std::collections::{BTreeMap, BTreeSet, HashMap};
use std::io::{Read, Write};
use std::path::Path;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Role {
    Identifier,
    QuasiIdentifier,
    Sensitive,
    Insensitive,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Kind {
    #[default]
    Categorical,
    NumericOrdinal,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct AttributeSchema {
    pub name: String,
    pub role: Role,
    #[serde(default)]
    pub kind: Kind,
}

impl AttributeSchema {
    pub fn new(name: impl Into<String>, role: Role, kind: Kind) -> Self {
        Self {
            name: name.into(),
            role,
            kind,
        }
    }
}

/// Ordered attribute list plus the label value treated as positive by the
/// evaluation harness.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Schema {
    #[serde(rename = "attribute")]
    attributes: Vec<AttributeSchema>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    positive_label: Option<String>,
}

impl Schema {
    /// Builds a schema, checking that names are unique and that exactly one
    /// attribute is sensitive.
    pub fn new(attributes: Vec<AttributeSchema>) -> Result<Self> {
        let schema = Self {
            attributes,
            positive_label: None,
        };
        schema.validate()?;
        Ok(schema)
    }

    pub fn with_positive_label(mut self, label: impl Into<String>) -> Self {
        self.positive_label = Some(label.into());
        self
    }

    /// Parses the TOML schema format:
    ///
    /// ```toml
    /// positive_label = ">50K"
    ///
    /// [[attribute]]
    /// name = "age"
    /// role = "quasi_identifier"   # identifier | quasi_identifier | sensitive | insensitive
    /// kind = "numeric_ordinal"    # categorical (default) | numeric_ordinal
    /// ```
    pub fn from_toml(text: &str) -> Result<Self> {
        let schema: Schema = toml::from_str(text).map_err(|e| Error::Schema(e.to_string()))?;
        schema.validate()?;
        Ok(schema)
    }

    pub fn from_path(path: impl AsRef<Path>) -> Result<Self> {
        Self::from_toml(&std::fs::read_to_string(path)?)
    }

    fn validate(&self) -> Result<()> {
        let mut seen = BTreeSet::new();
        for attr in &self.attributes {
            if !seen.insert(attr.name.as_str()) {
                return Err(Error::Schema(format!(
                    "duplicate attribute {:?}",
                    attr.name
                )));
            }
        }
        let sensitive = self
            .attributes
            .iter()
            .filter(|a| a.role == Role::Sensitive)
            .count();
        if sensitive != 1 {
            return Err(Error::Schema(format!(
                "expected exactly one sensitive attribute, found {sensitive}"
            )));
        }
        Ok(())
    }

    pub fn attributes(&self) -> &[AttributeSchema] {
        &self.attributes
    }

    pub fn len(&self) -> usize {
        self.attributes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.attributes.is_empty()
    }

    pub fn positive_label(&self) -> Option<&str> {
        self.positive_label.as_deref()
    }

    pub fn index_of(&self, name: &str) -> Option<usize> {
        self.attributes.iter().position(|a| a.name == name)
    }

    /// Column indices of the quasi-identifiers, in schema order.
    pub fn quasi_identifiers(&self) -> Vec<usize> {
        self.indices_with_role(Role::QuasiIdentifier)
    }

    pub fn sensitive(&self) -> usize {
        self.attributes
            .iter()
            .position(|a| a.role == Role::Sensitive)
            .expect("validated schema has a sensitive attribute")
    }

    fn indices_with_role(&self, role: Role) -> Vec<usize> {
        self.attributes
            .iter()
            .enumerate()
            .filter(|(_, a)| a.role == role)
            .map(|(i, _)| i)
            .collect()
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Dataset {
    schema: Schema,
    rows: Vec<Vec<String>>,
}

impl Dataset {
    /// Builds a dataset from rows already in schema order.
    pub fn new(schema: Schema, rows: Vec<Vec<String>>) -> Result<Self> {
        for (i, row) in rows.iter().enumerate() {
            if row.len() != schema.len() {
                return Err(Error::RaggedRow {
                    row: i,
                    expected: schema.len(),
                    found: row.len(),
                });
            }
        }
        Ok(Self { schema, rows })
    }

    pub fn schema(&self) -> &Schema {
        &self.schema
    }

    pub fn rows(&self) -> &[Vec<String>] {
        &self.rows
    }

    pub fn row_count(&self) -> usize {
        self.rows.len()
    }

    pub fn cell(&self, row: usize, col: usize) -> &str {
        &self.rows[row][col]
    }

    pub fn column(&self, col: usize) -> impl Iterator<Item = &str> + '_ {
        self.rows.iter().map(move |r| r[col].as_str())
    }

    pub fn column_by_name(&self, name: &str) -> Result<impl Iterator<Item = &str> + '_> {
        let col = self
            .schema
            .index_of(name)
            .ok_or_else(|| Error::UnknownAttribute(name.to_string()))?;
        Ok(self.column(col))
    }

    /// Sensitive-attribute value of every row.
    pub fn labels(&self) -> impl Iterator<Item = &str> + '_ {
        self.column(self.schema.sensitive())
    }

    /// New dataset holding the given rows, in the given order.
    pub fn select_rows(&self, indices: &[usize]) -> Dataset {
        Dataset {
            schema: self.schema.clone(),
            rows: indices.iter().map(|&i| self.rows[i].clone()).collect(),
        }
    }

    pub(crate) fn with_rows(&self, rows: Vec<Vec<String>>) -> Dataset {
        Dataset {
            schema: self.schema.clone(),
            rows,
        }
    }

    /// Checks that every `numeric_ordinal` cell parses as an integer.
    /// Only meaningful for ungeneralized data.
    pub fn check_numeric(&self) -> Result<()> {
        for (col, attr) in self.schema.attributes().iter().enumerate() {
            if attr.kind != Kind::NumericOrdinal {
                continue;
            }
            for (row, value) in self.column(col).enumerate() {
                if value.parse::<i64>().is_err() {
                    return Err(Error::NotNumeric {
                        attribute: attr.name.clone(),
                        row,
                        value: value.to_string(),
                    });
                }
            }
        }
        Ok(())
    }

    /// Writes the table as comma-separated text with a header row.
    pub fn write_csv<W: Write>(&self, writer: W) -> Result<()> {
        let mut out = csv::WriterBuilder::new()
            .terminator(csv::Terminator::Any(b'\n'))
            .from_writer(writer);
        out.write_record(self.schema.attributes().iter().map(|a| a.name.as_str()))?;
        for row in &self.rows {
            out.write_record(row)?;
        }
        out.flush()?;
        Ok(())
    }

    pub fn to_csv_string(&self) -> String {
        let mut buf = Vec::new();
        self.write_csv(&mut buf)
            .expect("writing to memory cannot fail");
        String::from_utf8(buf).expect("cells are utf-8")
    }
}

/// Reads a comma-separated table with a header row and reorders its columns
/// into schema order. Cells are trimmed of surrounding whitespace.
pub fn load_dataset<R: Read>(source: R, schema: &Schema) -> Result<Dataset> {
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(true)
        .flexible(true)
        .trim(csv::Trim::All)
        .from_reader(source);

    let header: Vec<String> = reader.headers()?.iter().map(str::to_string).collect();
    let mut position: HashMap<&str, usize> = HashMap::new();
    for (i, name) in header.iter().enumerate() {
        position.insert(name.as_str(), i);
    }
    let wanted: BTreeSet<&str> = schema
        .attributes()
        .iter()
        .map(|a| a.name.as_str())
        .collect();
    let present: BTreeSet<&str> = header.iter().map(String::as_str).collect();
    if wanted != present || header.len() != present.len() {
        let missing = wanted.difference(&present).map(|s| s.to_string()).collect();
        let mut extra: Vec<String> = present.difference(&wanted).map(|s| s.to_string()).collect();
        if header.len() != present.len() {
            extra.push("<duplicate column>".to_string());
        }
        return Err(Error::HeaderMismatch { missing, extra });
    }
    let order: Vec<usize> = schema
        .attributes()
        .iter()
        .map(|a| position[a.name.as_str()])
        .collect();

    let mut rows = Vec::new();
    for (i, record) in reader.records().enumerate() {
        let record = record?;
        if record.len() != header.len() {
            return Err(Error::RaggedRow {
                row: i,
                expected: header.len(),
                found: record.len(),
            });
        }
        rows.push(order.iter().map(|&c| record[c].to_string()).collect());
    }
    Ok(Dataset {
        schema: schema.clone(),
        rows,
    })
}

pub fn load_dataset_path(path: impl AsRef<Path>, schema: &Schema) -> Result<Dataset> {
    load_dataset(std::fs::File::open(path)?, schema)
}

/// Removes every identifier column; row order is preserved.
pub fn drop_identifiers(d: &Dataset) -> Dataset {
    let keep: Vec<usize> = d
        .schema
        .attributes()
        .iter()
        .enumerate()
        .filter(|(_, a)| a.role != Role::Identifier)
        .map(|(i, _)| i)
        .collect();
    if keep.len() == d.schema.len() {
        return d.clone();
    }
    let schema = Schema {
        attributes: keep
            .iter()
            .map(|&i| d.schema.attributes[i].clone())
            .collect(),
        positive_label: d.schema.positive_label.clone(),
    };
    let rows = d
        .rows
        .iter()
        .map(|row| keep.iter().map(|&i| row[i].clone()).collect())
        .collect();
    Dataset { schema, rows }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SplitPair {
    pub train: Dataset,
    pub test: Dataset,
    pub seed: u64,
    /// Source row indices of `train` and `test`, ascending.
    pub train_rows: Vec<usize>,
    pub test_rows: Vec<usize>,
}

/// Row indices per sensitive value, values ascending.
pub(crate) fn label_groups(d: &Dataset) -> BTreeMap<&str, Vec<usize>> {
    let mut groups: BTreeMap<&str, Vec<usize>> = BTreeMap::new();
    for (i, label) in d.labels().enumerate() {
        groups.entry(label).or_default().push(i);
    }
    groups
}

/// Number of training rows per group so that the total is
/// `round(n * fraction)` and each group gets `floor(n_v * fraction)` or one
/// more. Extra rows go to the largest remainders, ties to the earlier group.
pub fn stratified_allocation(group_sizes: &[usize], fraction: f64) -> Vec<usize> {
    let total: usize = group_sizes.iter().sum();
    let target = (total as f64 * fraction).round() as usize;
    let mut alloc: Vec<usize> = group_sizes
        .iter()
        .map(|&n| (n as f64 * fraction).floor() as usize)
        .collect();
    let mut order: Vec<usize> = (0..group_sizes.len()).collect();
    let remainder = |i: usize| group_sizes[i] as f64 * fraction - alloc[i] as f64;
    order.sort_by(|&a, &b| remainder(b).total_cmp(&remainder(a)).then(a.cmp(&b)));
    let deficit = target.saturating_sub(alloc.iter().sum());
    for &i in order.iter().take(deficit) {
        alloc[i] += 1;
    }
    alloc
}

/// Stratified train/test split on the sensitive attribute.
///
/// Each label group is shuffled (Fisher–Yates driven by a ChaCha8 stream
/// seeded with `seed`, groups visited in ascending label order) and its
/// first allocated rows go to training. Both halves keep source row order.
pub fn split_stratified(d: &Dataset, train_fraction: f64, seed: u64) -> Result<SplitPair> {
    if !(train_fraction > 0.0 && train_fraction < 1.0) {
        return Err(Error::InvalidArgument(format!(
            "train fraction {train_fraction} not in (0, 1)"
        )));
    }
    let groups = label_groups(d);
    if let Some((label, _)) = groups.iter().find(|(_, rows)| rows.len() < 2) {
        return Err(Error::SingletonLabel(label.to_string()));
    }
    let sizes: Vec<usize> = groups.values().map(Vec::len).collect();
    let alloc = stratified_allocation(&sizes, train_fraction);

    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut train_rows = Vec::new();
    let mut test_rows = Vec::new();
    for (rows, take) in groups.into_values().zip(alloc) {
        let mut rows = rows;
        rows.shuffle(&mut rng);
        train_rows.extend_from_slice(&rows[..take]);
        test_rows.extend_from_slice(&rows[take..]);
    }
    train_rows.sort_unstable();
    test_rows.sort_unstable();
    Ok(SplitPair {
        train: d.select_rows(&train_rows),
        test: d.select_rows(&test_rows),
        seed,
        train_rows,
        test_rows,
    })
}
