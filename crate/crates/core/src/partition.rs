//! Global recoding and equivalence-class grouping.

use std::collections::{BTreeMap, HashMap};

use crate::data::Dataset;
use crate::error::{Error, Result};
use crate::hierarchy::{GeneralizationVector, HierarchySet};

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct EquivalenceClass {
    /// Generalized quasi-identifier values shared by every member.
    pub signature: Vec<String>,
    /// Row indices into the source dataset, ascending.
    pub members: Vec<usize>,
    pub sa_counts: BTreeMap<String, usize>,
}

impl EquivalenceClass {
    pub fn size(&self) -> usize {
        self.members.len()
    }

    /// Number of distinct sensitive values present.
    pub fn distinct_sensitive(&self) -> usize {
        self.sa_counts.values().filter(|&&c| c > 0).count()
    }

    pub fn modal_count(&self) -> usize {
        self.sa_counts.values().copied().max().unwrap_or(0)
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Partition {
    /// Sorted by ascending signature.
    pub classes: Vec<EquivalenceClass>,
    /// Suppressed row indices, ascending.
    pub suppressed: Vec<usize>,
    pub source_count: usize,
}

impl Partition {
    /// Builds a partition from unordered classes, sorting them by signature.
    pub fn new(
        mut classes: Vec<EquivalenceClass>,
        mut suppressed: Vec<usize>,
        source_count: usize,
    ) -> Self {
        classes.sort_by(|a, b| a.signature.cmp(&b.signature));
        suppressed.sort_unstable();
        Self {
            classes,
            suppressed,
            source_count,
        }
    }

    pub fn class_count(&self) -> usize {
        self.classes.len()
    }

    /// Rows that survive suppression.
    pub fn record_count(&self) -> usize {
        self.classes.iter().map(EquivalenceClass::size).sum()
    }

    pub fn suppressed_count(&self) -> usize {
        self.suppressed.len()
    }

    /// Sensitive-value counts over the surviving rows.
    pub fn sensitive_counts(&self) -> BTreeMap<String, usize> {
        let mut total: BTreeMap<String, usize> = BTreeMap::new();
        for class in &self.classes {
            for (value, &count) in &class.sa_counts {
                *total.entry(value.clone()).or_default() += count;
            }
        }
        total
    }

    /// Moves every class for which `drop` holds into the suppressed set.
    pub fn suppress_where<F>(mut self, mut drop: F) -> Partition
    where
        F: FnMut(&EquivalenceClass) -> bool,
    {
        let mut kept = Vec::with_capacity(self.classes.len());
        let mut moved = false;
        for class in self.classes {
            if drop(&class) {
                self.suppressed.extend_from_slice(&class.members);
                moved = true;
            } else {
                kept.push(class);
            }
        }
        if moved {
            self.suppressed.sort_unstable();
        }
        self.classes = kept;
        self
    }

    /// Surviving source rows, ascending.
    pub fn surviving_rows(&self) -> Vec<usize> {
        let mut rows: Vec<usize> = self
            .classes
            .iter()
            .flat_map(|c| c.members.iter().copied())
            .collect();
        rows.sort_unstable();
        rows
    }

    /// Checks the structural invariants: classes and suppressed rows are
    /// disjoint and cover `0..source_count`, signatures are unique and
    /// sorted, and class tallies add up.
    pub fn validate(&self) -> std::result::Result<(), String> {
        let mut seen = vec![false; self.source_count];
        let mut mark = |row: usize| -> std::result::Result<(), String> {
            match seen.get_mut(row) {
                None => Err(format!("row {row} out of range")),
                Some(true) => Err(format!("row {row} appears twice")),
                Some(slot) => {
                    *slot = true;
                    Ok(())
                }
            }
        };
        for class in &self.classes {
            if class.members.is_empty() {
                return Err("empty class".into());
            }
            if class.sa_counts.values().sum::<usize>() != class.members.len() {
                return Err(format!("class {:?} tally mismatch", class.signature));
            }
            for &row in &class.members {
                mark(row)?;
            }
        }
        for &row in &self.suppressed {
            mark(row)?;
        }
        if let Some(row) = seen.iter().position(|s| !s) {
            return Err(format!("row {row} not covered"));
        }
        if self
            .classes
            .windows(2)
            .any(|w| w[0].signature >= w[1].signature)
        {
            return Err("signatures not strictly ascending".into());
        }
        Ok(())
    }
}

/// Replaces every quasi-identifier cell by its level-`g[i]` generalization.
pub fn apply_generalization(
    d: &Dataset,
    hs: &HierarchySet,
    g: &GeneralizationVector,
) -> Result<Dataset> {
    hs.check_vector(g)?;
    let qis = d.schema().quasi_identifiers();
    if qis.len() != hs.len() {
        return Err(Error::InvalidArgument(format!(
            "{} hierarchies for {} quasi-identifiers",
            hs.len(),
            qis.len()
        )));
    }
    let mut rows = Vec::with_capacity(d.row_count());
    for row in d.rows() {
        let mut out = row.clone();
        for ((&col, h), &level) in qis.iter().zip(hs.hierarchies()).zip(g.levels()) {
            if level > 0 {
                out[col] = h.generalize_value(&row[col], level)?.to_string();
            } else if !h.contains(&row[col]) {
                return Err(Error::UnknownValue {
                    attribute: h.attribute().to_string(),
                    value: row[col].clone(),
                });
            }
        }
        rows.push(out);
    }
    Ok(d.with_rows(rows))
}

/// Groups rows by exact equality on the quasi-identifier columns.
pub fn partition_classes(d: &Dataset) -> Result<Partition> {
    let qis = d.schema().quasi_identifiers();
    if qis.is_empty() {
        return Err(Error::Schema("no quasi-identifier attributes".into()));
    }
    let sa = d.schema().sensitive();
    let mut index: HashMap<Vec<&str>, usize> = HashMap::new();
    let mut classes: Vec<EquivalenceClass> = Vec::new();
    for (i, row) in d.rows().iter().enumerate() {
        let key: Vec<&str> = qis.iter().map(|&c| row[c].as_str()).collect();
        let slot = *index.entry(key).or_insert_with(|| {
            classes.push(EquivalenceClass {
                signature: qis.iter().map(|&c| row[c].clone()).collect(),
                members: Vec::new(),
                sa_counts: BTreeMap::new(),
            });
            classes.len() - 1
        });
        let class = &mut classes[slot];
        class.members.push(i);
        *class.sa_counts.entry(row[sa].clone()).or_default() += 1;
    }
    Ok(Partition::new(classes, Vec::new(), d.row_count()))
}

/// Suppresses every class with fewer than `k` members.
pub fn suppress_small_classes(p: Partition, k: usize) -> Partition {
    p.suppress_where(|c| c.size() < k)
}
