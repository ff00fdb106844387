//! Tabular anonymization with value generalization hierarchies.
//!
//! The crate covers the path from a raw table to an audited release:
//! [`data`] loads tables and their attribute roles, [`hierarchy`] holds the
//! per-attribute taxonomies, [`partition`] applies a lattice node and groups
//! records into equivalence classes, [`privacy`] measures k-anonymity,
//! ℓ-diversity, t-closeness and δ-disclosure, [`anonymizer`] searches the
//! lattice for the cheapest satisfying node, and [`metrics`] scores the
//! utility of the result.

pub mod anonymizer;
pub mod data;
pub mod error;
pub mod hierarchy;
pub mod metrics;
pub mod partition;
pub mod privacy;

pub use anonymizer::{
    anonymize, evaluate_node, lattice_nodes, AnonymizationResult, Cost, SearchConfig,
};
pub use data::{
    drop_identifiers, load_dataset, split_stratified, AttributeSchema, Dataset, Kind, Role, Schema,
    SplitPair,
};
pub use error::{Error, Result};
pub use hierarchy::{load_hierarchy, GeneralizationVector, Hierarchy, HierarchySet};
pub use partition::{
    apply_generalization, partition_classes, suppress_small_classes, EquivalenceClass, Partition,
};
pub use privacy::{audit, PrivacyAudit, PrivacyRequirement};
