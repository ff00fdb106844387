//! Value generalization hierarchies.
//!
//! A hierarchy is fully materialized: one row per raw value, column `j`
//! holding its level-`j` generalization. Files are semicolon-delimited with
//! no header, the format used by common anonymization tools:
//!
//! ```text
//! 17;[15, 20);[10, 20);[0, 20);[0, 40);[0, 80);*
//! ```

use std::collections::{BTreeMap, BTreeSet, HashMap};
use std::fmt;
use std::io::Read;
use std::path::Path;

use crate::data::{Dataset, Role, Schema};
use crate::error::{Error, Result};

/// Token for a fully suppressed value.
pub const SUPPRESSED: &str = "*";

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Hierarchy {
    attribute: String,
    height: usize,
    paths: BTreeMap<String, Vec<String>>,
    /// Implicit identity hierarchies accept any value at level 0.
    implicit: bool,
}

impl Hierarchy {
    /// Height-0 hierarchy for attributes that are never generalized.
    pub fn identity(attribute: impl Into<String>) -> Self {
        Self {
            attribute: attribute.into(),
            height: 0,
            paths: BTreeMap::new(),
            implicit: true,
        }
    }

    /// Builds a hierarchy from explicit paths (`path[0]` is the raw value).
    pub fn from_paths<I>(attribute: impl Into<String>, rows: I) -> Result<Self>
    where
        I: IntoIterator<Item = Vec<String>>,
    {
        let attribute = attribute.into();
        let mut paths: BTreeMap<String, Vec<String>> = BTreeMap::new();
        let mut width = None;
        for (i, row) in rows.into_iter().enumerate() {
            if row.is_empty() {
                return Err(Error::RaggedRow {
                    row: i,
                    expected: width.unwrap_or(1),
                    found: 0,
                });
            }
            match width {
                None => width = Some(row.len()),
                Some(w) if w != row.len() => {
                    return Err(Error::RaggedRow {
                        row: i,
                        expected: w,
                        found: row.len(),
                    })
                }
                _ => {}
            }
            match paths.get(&row[0]) {
                Some(existing) if *existing != row => {
                    return Err(Error::ConflictingPath {
                        attribute,
                        value: row[0].clone(),
                    })
                }
                Some(_) => {}
                None => {
                    paths.insert(row[0].clone(), row);
                }
            }
        }
        Ok(Self {
            attribute,
            height: width.map_or(0, |w| w - 1),
            paths,
            implicit: false,
        })
    }

    pub fn attribute(&self) -> &str {
        &self.attribute
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn contains(&self, value: &str) -> bool {
        self.implicit || self.paths.contains_key(value)
    }

    /// Raw values with an explicit path, ascending.
    pub fn keys(&self) -> impl Iterator<Item = &str> + '_ {
        self.paths.keys().map(String::as_str)
    }

    pub fn path(&self, value: &str) -> Option<&[String]> {
        self.paths.get(value).map(Vec::as_slice)
    }

    /// Level-`level` generalization of `value`; level 0 is the value itself.
    pub fn generalize_value<'a>(&'a self, value: &'a str, level: usize) -> Result<&'a str> {
        if level > self.height {
            return Err(Error::LevelOutOfRange {
                attribute: self.attribute.clone(),
                level,
                height: self.height,
            });
        }
        if self.implicit {
            return Ok(value);
        }
        match self.paths.get(value) {
            Some(path) => Ok(&path[level]),
            None => Err(Error::UnknownValue {
                attribute: self.attribute.clone(),
                value: value.to_string(),
            }),
        }
    }

    /// True when every level is a coarsening of the one below it.
    pub fn is_monotone(&self) -> bool {
        (1..self.height).all(|level| {
            let mut up: HashMap<&str, &str> = HashMap::new();
            self.paths.values().all(|p| {
                let parent = up.entry(p[level].as_str()).or_insert(p[level + 1].as_str());
                *parent == p[level + 1]
            })
        })
    }
}

/// Reads a semicolon-delimited hierarchy. Column 0 values become keys;
/// repeated keys must carry identical paths.
pub fn load_hierarchy<R: Read>(source: R, attribute: &str) -> Result<Hierarchy> {
    let mut reader = csv::ReaderBuilder::new()
        .delimiter(b';')
        .has_headers(false)
        .flexible(true)
        .trim(csv::Trim::All)
        .from_reader(source);
    let mut rows = Vec::new();
    for record in reader.records() {
        rows.push(record?.iter().map(str::to_string).collect::<Vec<_>>());
    }
    Hierarchy::from_paths(attribute, rows)
}

/// Distinct values of `attribute` in `d` that `h` does not cover, ascending.
pub fn validate_hierarchy(h: &Hierarchy, d: &Dataset, attribute: &str) -> Result<Vec<String>> {
    let values: BTreeSet<&str> = d.column_by_name(attribute)?.collect();
    Ok(values
        .into_iter()
        .filter(|v| !h.contains(v))
        .map(str::to_string)
        .collect())
}

/// A point in the generalization lattice: one level per quasi-identifier,
/// in schema order.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct GeneralizationVector(pub Vec<usize>);

impl GeneralizationVector {
    pub fn zeros(len: usize) -> Self {
        Self(vec![0; len])
    }

    pub fn levels(&self) -> &[usize] {
        &self.0
    }

    pub fn level_sum(&self) -> usize {
        self.0.iter().sum()
    }

    /// Componentwise `self <= other`.
    pub fn le(&self, other: &Self) -> bool {
        self.0.len() == other.0.len() && self.0.iter().zip(&other.0).all(|(a, b)| a <= b)
    }
}

impl fmt::Display for GeneralizationVector {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "(")?;
        for (i, l) in self.0.iter().enumerate() {
            if i > 0 {
                write!(f, ",")?;
            }
            write!(f, "{l}")?;
        }
        write!(f, ")")
    }
}

/// Hierarchies for the quasi-identifiers of a schema, in schema order.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct HierarchySet {
    hierarchies: Vec<Hierarchy>,
}

impl HierarchySet {
    /// Pairs each quasi-identifier with a hierarchy from `by_name`, or an
    /// implicit identity hierarchy when none is given.
    pub fn for_schema(schema: &Schema, mut by_name: BTreeMap<String, Hierarchy>) -> Self {
        let hierarchies = schema
            .attributes()
            .iter()
            .filter(|a| a.role == Role::QuasiIdentifier)
            .map(|a| {
                by_name
                    .remove(&a.name)
                    .unwrap_or_else(|| Hierarchy::identity(a.name.clone()))
            })
            .collect();
        Self { hierarchies }
    }

    /// Loads `<dir>/<attribute>.csv` for every quasi-identifier that has one.
    pub fn load_dir(dir: impl AsRef<Path>, schema: &Schema) -> Result<Self> {
        let dir = dir.as_ref();
        let mut found = BTreeMap::new();
        for attr in schema.attributes() {
            if attr.role != Role::QuasiIdentifier {
                continue;
            }
            let path = dir.join(format!("{}.csv", attr.name));
            if path.exists() {
                let h = load_hierarchy(std::fs::File::open(&path)?, &attr.name)?;
                found.insert(attr.name.clone(), h);
            }
        }
        Ok(Self::for_schema(schema, found))
    }

    pub fn hierarchies(&self) -> &[Hierarchy] {
        &self.hierarchies
    }

    pub fn get(&self, attribute: &str) -> Option<&Hierarchy> {
        self.hierarchies.iter().find(|h| h.attribute == attribute)
    }

    pub fn heights(&self) -> Vec<usize> {
        self.hierarchies.iter().map(Hierarchy::height).collect()
    }

    pub fn len(&self) -> usize {
        self.hierarchies.len()
    }

    pub fn is_empty(&self) -> bool {
        self.hierarchies.is_empty()
    }

    /// Uncovered values per attribute, omitting fully covered ones.
    pub fn uncovered(&self, d: &Dataset) -> Result<BTreeMap<String, Vec<String>>> {
        let mut out = BTreeMap::new();
        for h in &self.hierarchies {
            let missing = validate_hierarchy(h, d, &h.attribute)?;
            if !missing.is_empty() {
                out.insert(h.attribute.clone(), missing);
            }
        }
        Ok(out)
    }

    pub fn check_vector(&self, g: &GeneralizationVector) -> Result<()> {
        if g.0.len() != self.hierarchies.len() {
            return Err(Error::InvalidArgument(format!(
                "generalization vector {g} has {} levels, expected {}",
                g.0.len(),
                self.hierarchies.len()
            )));
        }
        for (h, &level) in self.hierarchies.iter().zip(&g.0) {
            if level > h.height {
                return Err(Error::LevelOutOfRange {
                    attribute: h.attribute.clone(),
                    level,
                    height: h.height,
                });
            }
        }
        Ok(())
    }
}
