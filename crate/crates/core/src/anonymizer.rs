//! Optimal global-recoding search over the generalization lattice.
//!
//! Every node of the lattice assigns one hierarchy level to each
//! quasi-identifier. A node is evaluated by generalizing, grouping, and
//! suppressing the classes that cannot be released:
//!
//! 1. classes smaller than `k`;
//! 2. classes with fewer than `ℓ` distinct sensitive values;
//! 3. classes too far from the whole-table distribution (`t`) or with a
//!    log-ratio at or above `δ`, repeated until stable because the
//!    whole-table distribution is recomputed over the survivors.
//!
//! The node satisfies the configuration when some class survives and the
//! number of suppressed rows is within the budget. Among satisfying nodes
//! the search returns the one with the smallest [`Cost`].

use std::cmp::Ordering;
use std::collections::{BTreeMap, HashMap};

use rayon::prelude::*;
use serde::Serialize;

use crate::data::{Dataset, Kind};
use crate::error::{Error, Result};
use crate::hierarchy::{GeneralizationVector, HierarchySet};
use crate::partition::{apply_generalization, EquivalenceClass, Partition};
use crate::privacy::{
    audit_partition, delta_within, satisfies, t_within, PrivacyAudit, PrivacyRequirement,
    SensitiveProfile,
};

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SearchConfig {
    /// Largest fraction of input rows that may be suppressed.
    pub suppression_limit: f64,
    pub requirement: PrivacyRequirement,
}

impl SearchConfig {
    pub fn new(requirement: PrivacyRequirement, suppression_limit: f64) -> Self {
        Self {
            suppression_limit,
            requirement,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(0.0..=1.0).contains(&self.suppression_limit) {
            return Err(Error::InvalidArgument(format!(
                "suppression limit {} not in [0, 1]",
                self.suppression_limit
            )));
        }
        self.requirement.validate()
    }

    /// Maximum number of suppressible rows out of `rows`.
    pub fn budget(&self, rows: usize) -> usize {
        (self.suppression_limit * rows as f64 + 1e-9).floor() as usize
    }
}

/// Ordering key of a lattice node: normalized level sum, then suppressed
/// rows, then the node itself.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Cost {
    /// `Σ level_i / height_i` over attributes with non-zero height.
    pub normalized_level_sum: f64,
    pub suppressed: usize,
    #[serde(skip)]
    scaled_level_sum: u128,
}

impl Cost {
    pub fn new(heights: &[usize], g: &GeneralizationVector, suppressed: usize) -> Result<Self> {
        let scale = level_scale(heights)?;
        Ok(Self {
            normalized_level_sum: normalized_level_sum(heights, g),
            suppressed,
            scaled_level_sum: scaled_level_sum(heights, g, scale),
        })
    }

    fn key(&self) -> (u128, usize) {
        (self.scaled_level_sum, self.suppressed)
    }
}

fn gcd(a: u128, b: u128) -> u128 {
    if b == 0 {
        a
    } else {
        gcd(b, a % b)
    }
}

/// Least common multiple of the non-zero heights; normalized level sums
/// scaled by it are exact integers.
fn level_scale(heights: &[usize]) -> Result<u128> {
    heights
        .iter()
        .filter(|&&h| h > 0)
        .try_fold(1u128, |acc, &h| {
            let h = h as u128;
            (acc / gcd(acc, h)).checked_mul(h)
        })
        .ok_or_else(|| Error::InvalidArgument("hierarchy heights overflow the cost scale".into()))
}

fn scaled_level_sum(heights: &[usize], g: &GeneralizationVector, scale: u128) -> u128 {
    heights
        .iter()
        .zip(g.levels())
        .filter(|(&h, _)| h > 0)
        .map(|(&h, &l)| l as u128 * (scale / h as u128))
        .sum()
}

pub fn normalized_level_sum(heights: &[usize], g: &GeneralizationVector) -> f64 {
    heights
        .iter()
        .zip(g.levels())
        .filter(|(&h, _)| h > 0)
        .map(|(&h, &l)| l as f64 / h as f64)
        .sum()
}

/// All lattice nodes, by ascending level sum and lexicographically within a
/// level sum.
pub fn lattice_nodes(heights: &[usize]) -> Vec<GeneralizationVector> {
    let mut nodes = vec![Vec::with_capacity(heights.len())];
    for &h in heights {
        nodes = nodes
            .into_iter()
            .flat_map(|prefix| {
                (0..=h).map(move |l| {
                    let mut v = prefix.clone();
                    v.push(l);
                    v
                })
            })
            .collect();
    }
    let mut nodes: Vec<GeneralizationVector> =
        nodes.into_iter().map(GeneralizationVector).collect();
    nodes.sort_by(|a, b| a.level_sum().cmp(&b.level_sum()).then_with(|| a.cmp(b)));
    nodes
}

#[derive(Debug, Clone)]
pub struct NodeEvaluation {
    pub node: GeneralizationVector,
    pub satisfies: bool,
    pub suppressed: usize,
    /// Partition after suppression.
    pub partition: Partition,
}

#[derive(Debug, Clone)]
pub struct AnonymizationResult {
    pub node: GeneralizationVector,
    /// Generalized table with suppressed rows removed, source order kept.
    pub output: Dataset,
    pub suppressed_count: usize,
    pub audit: PrivacyAudit,
    pub cost: Cost,
    /// Surviving source rows, aligned with `output`.
    pub kept_rows: Vec<usize>,
}

/// Dictionary-encoded view of a dataset for fast repeated regrouping.
struct EncodedTable {
    heights: Vec<usize>,
    /// Per quasi-identifier: raw value id of every row.
    raw_ids: Vec<Vec<u32>>,
    /// Per quasi-identifier and level: raw id -> generalized id.
    level_maps: Vec<Vec<Vec<u32>>>,
    /// Per quasi-identifier and level: generalized id -> text.
    level_labels: Vec<Vec<Vec<String>>>,
    sa_ids: Vec<u32>,
    sa_values: Vec<String>,
    kind: Kind,
}

fn intern<'s>(table: &mut HashMap<&'s str, u32>, labels: &mut Vec<String>, value: &'s str) -> u32 {
    *table.entry(value).or_insert_with(|| {
        labels.push(value.to_string());
        (labels.len() - 1) as u32
    })
}

impl EncodedTable {
    fn new(d: &Dataset, hs: &HierarchySet) -> Result<Self> {
        let qis = d.schema().quasi_identifiers();
        if qis.is_empty() {
            return Err(Error::Schema("no quasi-identifier attributes".into()));
        }
        if qis.len() != hs.len() {
            return Err(Error::InvalidArgument(format!(
                "{} hierarchies for {} quasi-identifiers",
                hs.len(),
                qis.len()
            )));
        }
        let mut raw_ids = Vec::with_capacity(qis.len());
        let mut level_maps = Vec::with_capacity(qis.len());
        let mut level_labels = Vec::with_capacity(qis.len());
        for (&col, h) in qis.iter().zip(hs.hierarchies()) {
            let mut raw_table = HashMap::new();
            let mut raw_values = Vec::new();
            let ids: Vec<u32> = d
                .column(col)
                .map(|v| intern(&mut raw_table, &mut raw_values, v))
                .collect();
            let mut maps = Vec::with_capacity(h.height() + 1);
            let mut labels = Vec::with_capacity(h.height() + 1);
            for level in 0..=h.height() {
                let mut table = HashMap::new();
                let mut names = Vec::new();
                let mut map = Vec::with_capacity(raw_values.len());
                for raw in &raw_values {
                    let general = h.generalize_value(raw, level)?;
                    map.push(intern(&mut table, &mut names, general));
                }
                maps.push(map);
                labels.push(names);
            }
            raw_ids.push(ids);
            level_maps.push(maps);
            level_labels.push(labels);
        }
        let sa = d.schema().sensitive();
        let mut sa_table = HashMap::new();
        let mut sa_values = Vec::new();
        let sa_ids = d
            .column(sa)
            .map(|v| intern(&mut sa_table, &mut sa_values, v))
            .collect();
        Ok(Self {
            heights: hs.heights(),
            raw_ids,
            level_maps,
            level_labels,
            sa_ids,
            sa_values,
            kind: d.schema().attributes()[sa].kind,
        })
    }

    fn rows(&self) -> usize {
        self.sa_ids.len()
    }

    /// Equivalence classes of the table generalized at `g`, equal to
    /// `partition_classes(apply_generalization(d, hs, g))`.
    fn partition(&self, g: &GeneralizationVector) -> Partition {
        let n = self.rows();
        let mut group = vec![0u32; n];
        let mut groups = if n == 0 { 0 } else { 1 };
        for (q, &level) in g.levels().iter().enumerate() {
            let map = &self.level_maps[q][level];
            let ids = &self.raw_ids[q];
            let mut renumber: HashMap<u64, u32> = HashMap::with_capacity(groups);
            for (slot, &raw) in group.iter_mut().zip(ids) {
                let key = (u64::from(*slot) << 32) | u64::from(map[raw as usize]);
                let next = renumber.len() as u32;
                *slot = *renumber.entry(key).or_insert(next);
            }
            groups = renumber.len();
        }

        let mut members: Vec<Vec<usize>> = vec![Vec::new(); groups];
        let mut counts: Vec<Vec<usize>> = vec![vec![0; self.sa_values.len()]; groups];
        for (row, &gid) in group.iter().enumerate() {
            members[gid as usize].push(row);
            counts[gid as usize][self.sa_ids[row] as usize] += 1;
        }
        let classes = members
            .into_iter()
            .zip(counts)
            .map(|(members, counts)| {
                let first = members[0];
                let signature = g
                    .levels()
                    .iter()
                    .enumerate()
                    .map(|(q, &level)| {
                        let gid = self.level_maps[q][level][self.raw_ids[q][first] as usize];
                        self.level_labels[q][level][gid as usize].clone()
                    })
                    .collect();
                let sa_counts: BTreeMap<String, usize> = counts
                    .into_iter()
                    .enumerate()
                    .filter(|(_, c)| *c > 0)
                    .map(|(s, c)| (self.sa_values[s].clone(), c))
                    .collect();
                EquivalenceClass {
                    signature,
                    members,
                    sa_counts,
                }
            })
            .collect();
        Partition::new(classes, Vec::new(), n)
    }

    fn evaluate(&self, g: &GeneralizationVector, cfg: &SearchConfig) -> NodeEvaluation {
        let partition = suppress_for(self.partition(g), &cfg.requirement, self.kind);
        let suppressed = partition.suppressed_count();
        let ok = partition.class_count() > 0
            && suppressed <= cfg.budget(self.rows())
            && satisfies(&partition, &cfg.requirement, self.kind);
        NodeEvaluation {
            node: g.clone(),
            satisfies: ok,
            suppressed,
            partition,
        }
    }
}

/// Suppresses every class that prevents `r` from holding on the release.
pub fn suppress_for(p: Partition, r: &PrivacyRequirement, kind: Kind) -> Partition {
    let mut p = p.suppress_where(|c| c.size() < r.k);
    if let Some(l) = r.l {
        p = p.suppress_where(|c| c.distinct_sensitive() < l);
    }
    if r.t.is_none() && r.delta.is_none() {
        return p;
    }
    loop {
        if p.classes.is_empty() {
            return p;
        }
        let before = p.class_count();
        let profile = SensitiveProfile::new(&p, kind);
        p = p.suppress_where(|c| {
            r.t.is_some_and(|t| !t_within(profile.class_distance(c), t))
                || r.delta
                    .is_some_and(|d| !delta_within(profile.class_delta(c), d))
        });
        if p.class_count() == before {
            return p;
        }
    }
}

/// Whether the k-anonymity part of `cfg` alone holds at `g`: after removing
/// classes below `k`, something survives within the suppression budget.
/// Monotone under coarsening.
pub fn satisfies_k_component(
    d: &Dataset,
    hs: &HierarchySet,
    g: &GeneralizationVector,
    cfg: &SearchConfig,
) -> Result<bool> {
    hs.check_vector(g)?;
    let table = EncodedTable::new(d, hs)?;
    let p = table
        .partition(g)
        .suppress_where(|c| c.size() < cfg.requirement.k);
    Ok(p.class_count() > 0 && p.suppressed_count() <= cfg.budget(d.row_count()))
}

/// Evaluates one lattice node against `cfg`.
pub fn evaluate_node(
    d: &Dataset,
    hs: &HierarchySet,
    g: &GeneralizationVector,
    cfg: &SearchConfig,
) -> Result<NodeEvaluation> {
    cfg.validate()?;
    hs.check_vector(g)?;
    Ok(EncodedTable::new(d, hs)?.evaluate(g, cfg))
}

/// Finds the cheapest lattice node satisfying `cfg`.
///
/// Nodes are visited in strata of equal normalized level sum, cheapest
/// first. Every node of a stratum is evaluated (concurrently) and the
/// search stops after the first stratum that contains a satisfying node,
/// picking the fewest suppressed rows and then the lexicographically
/// smallest node.
pub fn anonymize(
    d: &Dataset,
    hs: &HierarchySet,
    cfg: &SearchConfig,
) -> Result<AnonymizationResult> {
    cfg.validate()?;
    let table = EncodedTable::new(d, hs)?;
    let heights = table.heights.clone();
    let scale = level_scale(&heights)?;

    let mut nodes: Vec<(u128, GeneralizationVector)> = lattice_nodes(&heights)
        .into_iter()
        .map(|g| (scaled_level_sum(&heights, &g, scale), g))
        .collect();
    nodes.sort_by(|a, b| a.0.cmp(&b.0).then_with(|| a.1.cmp(&b.1)));

    let mut fallback: Option<NodeEvaluation> = None;
    let mut start = 0;
    while start < nodes.len() {
        let level = nodes[start].0;
        let end = start
            + nodes[start..]
                .iter()
                .take_while(|(s, _)| *s == level)
                .count();
        let evaluations: Vec<NodeEvaluation> = nodes[start..end]
            .par_iter()
            .map(|(_, g)| table.evaluate(g, cfg))
            .collect();
        let best = evaluations.iter().filter(|e| e.satisfies).min_by(|a, b| {
            a.suppressed
                .cmp(&b.suppressed)
                .then_with(|| a.node.cmp(&b.node))
        });
        if let Some(best) = best {
            return finish(d, hs, &heights, best.clone(), table.kind);
        }
        for e in evaluations {
            if e.partition.class_count() == 0 {
                continue;
            }
            let better = match &fallback {
                None => true,
                Some(f) => e.suppressed < f.suppressed,
            };
            if better {
                fallback = Some(e);
            }
        }
        start = end;
    }
    let best = fallback
        .and_then(|e| audit_partition(&e.partition, table.kind).ok())
        .map(Box::new);
    Err(Error::Unsatisfiable { best })
}

fn finish(
    d: &Dataset,
    hs: &HierarchySet,
    heights: &[usize],
    best: NodeEvaluation,
    kind: Kind,
) -> Result<AnonymizationResult> {
    let kept_rows = best.partition.surviving_rows();
    let output = apply_generalization(&d.select_rows(&kept_rows), hs, &best.node)?;
    let audit = audit_partition(&best.partition, kind)?;
    let cost = Cost::new(heights, &best.node, best.suppressed)?;
    Ok(AnonymizationResult {
        node: best.node,
        output,
        suppressed_count: best.suppressed,
        audit,
        cost,
        kept_rows,
    })
}

/// Total order used to pick among satisfying nodes.
pub fn compare_cost(
    a: (&Cost, &GeneralizationVector),
    b: (&Cost, &GeneralizationVector),
) -> Ordering {
    a.0.key().cmp(&b.0.key()).then_with(|| a.1.cmp(b.1))
}
