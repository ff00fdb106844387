//! Privacy models over a partition: k-anonymity, distinct ℓ-diversity,
//! t-closeness and δ-disclosure privacy.
//!
//! The whole-table sensitive distribution is always taken over the rows
//! that survive suppression, since that is what gets released.

use std::collections::{BTreeMap, BTreeSet};

use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::data::{Dataset, Kind};
use crate::error::{Error, Result};
use crate::partition::{partition_classes, EquivalenceClass, Partition};

/// Absolute tolerance for threshold comparisons. Ties resolve to the exact
/// answer: `t` is met at equality, `δ` is not.
pub const TOLERANCE: f64 = 1e-9;

#[derive(Debug, Clone, PartialEq)]
pub struct Distribution {
    pub support: Vec<String>,
    pub mass: Vec<f64>,
}

impl Distribution {
    /// Normalized counts over `support`; values missing from `counts` get
    /// zero mass.
    pub fn from_counts(support: &[String], counts: &BTreeMap<String, usize>) -> Self {
        let total: usize = support
            .iter()
            .map(|s| counts.get(s).copied().unwrap_or(0))
            .sum();
        let mass = support
            .iter()
            .map(|s| {
                let c = counts.get(s).copied().unwrap_or(0);
                if total == 0 {
                    0.0
                } else {
                    c as f64 / total as f64
                }
            })
            .collect();
        Self {
            support: support.to_vec(),
            mass,
        }
    }

    fn check_same_support(&self, other: &Distribution) -> Result<()> {
        if self.support != other.support || self.mass.len() != other.mass.len() {
            return Err(Error::SupportMismatch);
        }
        Ok(())
    }
}

/// Sorts sensitive values: numerically for ordinal attributes (values that
/// fail to parse sort after the numbers), lexicographically otherwise.
pub fn ordered_support<'a, I>(values: I, kind: Kind) -> Vec<String>
where
    I: IntoIterator<Item = &'a str>,
{
    let set: BTreeSet<&str> = values.into_iter().collect();
    let mut support: Vec<String> = set.into_iter().map(str::to_string).collect();
    if kind == Kind::NumericOrdinal {
        support.sort_by(|a, b| match (a.parse::<i64>(), b.parse::<i64>()) {
            (Ok(x), Ok(y)) => x.cmp(&y),
            (Ok(_), Err(_)) => std::cmp::Ordering::Less,
            (Err(_), Ok(_)) => std::cmp::Ordering::Greater,
            (Err(_), Err(_)) => a.cmp(b),
        });
    }
    support
}

/// Equal (total variation) distance: half the L1 distance.
pub fn dist_equal(p: &Distribution, q: &Distribution) -> Result<f64> {
    p.check_same_support(q)?;
    let sum: f64 = p.mass.iter().zip(&q.mass).map(|(a, b)| (a - b).abs()).sum();
    Ok(0.5 * sum)
}

/// Earth mover's distance with the ordered ground distance `|i-j|/(m-1)`:
/// the sum of absolute cumulative differences divided by `m - 1`.
pub fn emd_ordered(p: &Distribution, q: &Distribution) -> Result<f64> {
    p.check_same_support(q)?;
    let m = p.mass.len();
    if m < 2 {
        return Ok(0.0);
    }
    let mut carried = 0.0;
    let mut total = 0.0;
    for (a, b) in p.mass.iter().zip(&q.mass) {
        carried += a - b;
        total += carried.abs();
    }
    Ok(total / (m - 1) as f64)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PrivacyRequirement {
    pub k: usize,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub l: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub t: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub delta: Option<f64>,
}

impl PrivacyRequirement {
    pub fn k_anonymity(k: usize) -> Self {
        Self {
            k,
            l: None,
            t: None,
            delta: None,
        }
    }

    pub fn with_l(mut self, l: usize) -> Self {
        self.l = Some(l);
        self
    }

    pub fn with_t(mut self, t: f64) -> Self {
        self.t = Some(t);
        self
    }

    pub fn with_delta(mut self, delta: f64) -> Self {
        self.delta = Some(delta);
        self
    }

    pub fn validate(&self) -> Result<()> {
        if self.k == 0 {
            return Err(Error::InvalidArgument("k must be at least 1".into()));
        }
        if self.l == Some(0) {
            return Err(Error::InvalidArgument("l must be at least 1".into()));
        }
        if let Some(t) = self.t {
            if !(0.0..=1.0).contains(&t) {
                return Err(Error::InvalidArgument(format!("t = {t} not in [0, 1]")));
            }
        }
        if let Some(delta) = self.delta {
            if delta.is_nan() || delta <= 0.0 {
                return Err(Error::InvalidArgument(format!(
                    "delta = {delta} must be positive"
                )));
            }
        }
        Ok(())
    }

    pub fn has_secondary(&self) -> bool {
        self.l.is_some() || self.t.is_some() || self.delta.is_some()
    }
}

/// Achieved privacy levels of a released table.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PrivacyAudit {
    pub k: usize,
    pub l: usize,
    pub t: f64,
    #[serde(serialize_with = "ser_extended", deserialize_with = "de_extended")]
    pub delta: f64,
    pub classes: usize,
    pub records: usize,
    pub suppressed: usize,
}

fn ser_extended<S: Serializer>(v: &f64, s: S) -> std::result::Result<S::Ok, S::Error> {
    if v.is_infinite() {
        s.serialize_str("inf")
    } else {
        s.serialize_f64(*v)
    }
}

fn de_extended<'de, D: Deserializer<'de>>(d: D) -> std::result::Result<f64, D::Error> {
    #[derive(Deserialize)]
    #[serde(untagged)]
    enum Num {
        F(f64),
        S(String),
    }
    match Num::deserialize(d)? {
        Num::F(v) => Ok(v),
        Num::S(s) if s == "inf" => Ok(f64::INFINITY),
        Num::S(s) => Err(serde::de::Error::custom(format!("bad number {s:?}"))),
    }
}

/// Whole-table sensitive distribution of a partition, shared by the
/// per-class t and δ computations.
#[derive(Debug, Clone)]
pub struct SensitiveProfile {
    kind: Kind,
    global: Distribution,
}

impl SensitiveProfile {
    pub fn new(p: &Partition, kind: Kind) -> Self {
        let counts = p.sensitive_counts();
        let support = ordered_support(counts.keys().map(String::as_str), kind);
        Self {
            kind,
            global: Distribution::from_counts(&support, &counts),
        }
    }

    pub fn global(&self) -> &Distribution {
        &self.global
    }

    /// Distance between the class distribution and the whole table.
    pub fn class_distance(&self, class: &EquivalenceClass) -> f64 {
        let dist = Distribution::from_counts(&self.global.support, &class.sa_counts);
        let d = match self.kind {
            Kind::NumericOrdinal => emd_ordered(&dist, &self.global),
            Kind::Categorical => dist_equal(&dist, &self.global),
        };
        d.expect("same support by construction")
    }

    /// Largest `|ln(p(EC,s) / p(DB,s))|` over values present in the class.
    pub fn class_delta(&self, class: &EquivalenceClass) -> f64 {
        let dist = Distribution::from_counts(&self.global.support, &class.sa_counts);
        dist.mass
            .iter()
            .zip(&self.global.mass)
            .filter(|(pc, pg)| **pc > 0.0 && **pg > 0.0)
            .map(|(pc, pg)| (pc / pg).ln().abs())
            .fold(0.0, f64::max)
    }
}

fn nonempty(p: &Partition) -> Result<()> {
    if p.classes.is_empty() {
        Err(Error::EmptyPartition)
    } else {
        Ok(())
    }
}

pub fn achieved_k(p: &Partition) -> Result<usize> {
    nonempty(p)?;
    Ok(p.classes
        .iter()
        .map(EquivalenceClass::size)
        .min()
        .unwrap_or(0))
}

pub fn achieved_l(p: &Partition) -> Result<usize> {
    nonempty(p)?;
    Ok(p.classes
        .iter()
        .map(EquivalenceClass::distinct_sensitive)
        .min()
        .unwrap_or(0))
}

/// Largest class-to-table distance: ordered EMD for ordinal sensitive
/// attributes, equal distance for categorical ones.
pub fn achieved_t(p: &Partition, kind: Kind) -> Result<f64> {
    nonempty(p)?;
    let profile = SensitiveProfile::new(p, kind);
    Ok(p.classes
        .iter()
        .map(|c| profile.class_distance(c))
        .fold(0.0, f64::max))
}

/// Largest `|ln(p(EC,s)/p(DB,s))|`. Pairs where the class lacks `s` are
/// skipped, so the result is finite.
pub fn achieved_delta(p: &Partition) -> Result<f64> {
    nonempty(p)?;
    let profile = SensitiveProfile::new(p, Kind::Categorical);
    Ok(p.classes
        .iter()
        .map(|c| profile.class_delta(c))
        .fold(0.0, f64::max))
}

/// Audit of a partition; `records` and `suppressed` come from it directly.
pub fn audit_partition(p: &Partition, kind: Kind) -> Result<PrivacyAudit> {
    let k = achieved_k(p)?;
    Ok(PrivacyAudit {
        k,
        l: achieved_l(p)?,
        t: achieved_t(p, kind)?,
        delta: achieved_delta(p)?,
        classes: p.class_count(),
        records: p.record_count(),
        suppressed: p.suppressed_count(),
    })
}

/// Partitions a released table and measures all four models.
pub fn audit(d: &Dataset, suppressed_count: usize) -> Result<PrivacyAudit> {
    if d.row_count() == 0 {
        return Err(Error::EmptyDataset);
    }
    let kind = d.schema().attributes()[d.schema().sensitive()].kind;
    let p = partition_classes(d)?;
    let mut out = audit_partition(&p, kind)?;
    out.suppressed = suppressed_count;
    Ok(out)
}

pub fn t_within(achieved: f64, bound: f64) -> bool {
    achieved <= bound + TOLERANCE
}

pub fn delta_within(achieved: f64, bound: f64) -> bool {
    achieved < bound - TOLERANCE
}

/// True when the audit meets every requested bound.
pub fn audit_satisfies(a: &PrivacyAudit, r: &PrivacyRequirement) -> bool {
    a.classes > 0
        && a.k >= r.k
        && r.l.is_none_or(|l| a.l >= l)
        && r.t.is_none_or(|t| t_within(a.t, t))
        && r.delta.is_none_or(|d| delta_within(a.delta, d))
}

/// True when the partition meets every requested bound. A partition without
/// classes never does.
pub fn satisfies(p: &Partition, r: &PrivacyRequirement, kind: Kind) -> bool {
    match audit_partition(p, kind) {
        Ok(a) => audit_satisfies(&a, r),
        Err(_) => false,
    }
}
