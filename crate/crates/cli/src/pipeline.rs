//! Pipeline steps shared by the subcommands: loading, anonymizing,
//! evaluating and the two experiment sweeps.

use std::fs;
use std::path::{Path, PathBuf};

use anonlab_core::metrics::{
    avg_class_size_metric, classification_metric, write_roc_points, EvalReport,
};
use anonlab_core::{
    anonymize, drop_identifiers, load_dataset, partition_classes, split_stratified,
    AnonymizationResult, Dataset, HierarchySet, PrivacyAudit, PrivacyRequirement, Schema,
    SearchConfig,
};
use anonlab_ml::{encode, fit_encoder, grid_search_cv, Family, Hyperparams, ParamGrid};
use anyhow::{bail, Context, Result};
use serde::Serialize;

/// Reads the table and drops identifier columns.
pub fn load_table(data: &Path, schema: &Path) -> Result<Dataset> {
    let schema = Schema::from_path(schema)
        .with_context(|| format!("reading schema {}", schema.display()))?;
    let file = fs::File::open(data).with_context(|| format!("opening {}", data.display()))?;
    let d = load_dataset(file, &schema).with_context(|| format!("loading {}", data.display()))?;
    Ok(drop_identifiers(&d))
}

pub fn load_hierarchies(dir: &Path, d: &Dataset) -> Result<HierarchySet> {
    let hs = HierarchySet::load_dir(dir, d.schema())
        .with_context(|| format!("loading hierarchies from {}", dir.display()))?;
    let uncovered = hs.uncovered(d)?;
    if let Some((attr, values)) = uncovered.iter().next() {
        bail!(
            "hierarchy for {attr} does not cover {} value(s), e.g. {:?}",
            values.len(),
            values[0]
        );
    }
    Ok(hs)
}

pub fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<()> {
    let mut text = serde_json::to_string_pretty(value)?;
    text.push('\n');
    fs::write(path, text).with_context(|| format!("writing {}", path.display()))
}

pub fn create_dir(path: &Path) -> Result<()> {
    fs::create_dir_all(path).with_context(|| format!("creating {}", path.display()))
}

/// Per-attribute level of the chosen lattice node.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct NodeLevel {
    pub attribute: String,
    pub level: usize,
    pub height: usize,
}

pub fn node_levels(hs: &HierarchySet, node: &[usize]) -> Vec<NodeLevel> {
    hs.hierarchies()
        .iter()
        .zip(node)
        .map(|(h, &level)| NodeLevel {
            attribute: h.attribute().to_string(),
            level,
            height: h.height(),
        })
        .collect()
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct AnonymizeSummary {
    /// `ok` or `unsatisfiable`.
    pub status: String,
    pub requirement: PrivacyRequirement,
    pub suppression_limit: f64,
    pub input_rows: usize,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub node: Option<Vec<NodeLevel>>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub normalized_level_sum: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub suppressed: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub records: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub classes: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub cavg: Option<f64>,
    /// Achieved levels of the release, or of the best node found when the
    /// requirement is unsatisfiable.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub audit: Option<PrivacyAudit>,
}

pub enum Anonymized {
    Done(Box<AnonymizationResult>, AnonymizeSummary),
    Unsatisfiable(AnonymizeSummary),
}

pub fn run_anonymize(d: &Dataset, hs: &HierarchySet, cfg: &SearchConfig) -> Result<Anonymized> {
    let mut summary = AnonymizeSummary {
        status: "ok".into(),
        requirement: cfg.requirement.clone(),
        suppression_limit: cfg.suppression_limit,
        input_rows: d.row_count(),
        node: None,
        normalized_level_sum: None,
        suppressed: None,
        records: None,
        classes: None,
        cavg: None,
        audit: None,
    };
    match anonymize(d, hs, cfg) {
        Ok(r) => {
            summary.node = Some(node_levels(hs, r.node.levels()));
            summary.normalized_level_sum = Some(r.cost.normalized_level_sum);
            summary.suppressed = Some(r.suppressed_count);
            summary.records = Some(r.output.row_count());
            summary.classes = Some(r.audit.classes);
            summary.cavg = Some(avg_class_size_metric(
                r.output.row_count(),
                cfg.requirement.k,
                r.audit.classes,
            )?);
            summary.audit = Some(r.audit.clone());
            Ok(Anonymized::Done(Box::new(r), summary))
        }
        Err(anonlab_core::Error::Unsatisfiable { best }) => {
            summary.status = "unsatisfiable".into();
            summary.audit = best.map(|b| *b);
            Ok(Anonymized::Unsatisfiable(summary))
        }
        Err(e) => Err(e.into()),
    }
}

/// Writes `anonymized.csv`, `audit.json` and `summary.json` into `dir`.
pub fn write_anonymized(
    dir: &Path,
    result: &AnonymizationResult,
    summary: &AnonymizeSummary,
) -> Result<()> {
    create_dir(dir)?;
    let path = dir.join("anonymized.csv");
    let file = fs::File::create(&path).with_context(|| format!("writing {}", path.display()))?;
    result.output.write_csv(file)?;
    write_json(&dir.join("audit.json"), &result.audit)?;
    write_json(&dir.join("summary.json"), summary)
}

/// Utility metrics of a released table whose source had `original_count`
/// rows; rows missing from the release count as suppressed.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TableMetrics {
    pub k: usize,
    pub original_count: usize,
    pub records: usize,
    pub suppressed: usize,
    pub classes: usize,
    pub cavg: f64,
    pub cm: f64,
}

pub fn table_metrics(d: &Dataset, k: usize, original_count: usize) -> Result<TableMetrics> {
    if original_count < d.row_count() {
        bail!(
            "original count {original_count} is smaller than the {} released rows",
            d.row_count()
        );
    }
    let mut p = partition_classes(d)?;
    p.suppressed = (d.row_count()..original_count).collect();
    p.source_count = original_count;
    Ok(TableMetrics {
        k,
        original_count,
        records: d.row_count(),
        suppressed: p.suppressed_count(),
        classes: p.class_count(),
        cavg: avg_class_size_metric(d.row_count(), k, p.class_count())?,
        cm: classification_metric(original_count, &p)?,
    })
}

#[derive(Debug, Clone, PartialEq)]
pub struct EvalOptions {
    pub families: Vec<Family>,
    pub reduced_grid: bool,
    pub split: f64,
    pub seed: u64,
    pub folds: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct FamilyReport {
    pub family: Family,
    pub params: Hyperparams,
    pub cv_accuracy: f64,
    pub train_rows: usize,
    pub test_rows: usize,
    pub seed: u64,
    #[serde(flatten)]
    pub eval: EvalReport,
}

/// Stratified split, grid search per family on the training part, and
/// test-set scores of each refitted winner.
pub fn evaluate_table(d: &Dataset, opts: &EvalOptions) -> Result<Vec<FamilyReport>> {
    let split = split_stratified(d, opts.split, opts.seed)?;
    let encoder = fit_encoder(&split.train)?;
    let train = encode(&encoder, &split.train)?;
    let test = encode(&encoder, &split.test)?;
    if train.positives() == 0 || train.positives() == train.rows() {
        bail!("the table has a single label; nothing to classify");
    }
    let mut reports = Vec::with_capacity(opts.families.len());
    for &family in &opts.families {
        let grid = if opts.reduced_grid {
            ParamGrid::reduced(family)
        } else {
            ParamGrid::full(family)
        };
        let search = grid_search_cv(family, &grid, &train, opts.folds, opts.seed)
            .with_context(|| format!("grid search for {family}"))?;
        let scores = search.model.predict_scores(&test);
        reports.push(FamilyReport {
            family,
            params: search.spec.params,
            cv_accuracy: search.best_score,
            train_rows: train.rows(),
            test_rows: test.rows(),
            seed: opts.seed,
            eval: EvalReport::from_scores(test.labels(), &scores)?,
        });
    }
    Ok(reports)
}

/// Writes `<dir>/<family>/report.json` and `roc.csv` per family.
pub fn write_family_reports(dir: &Path, reports: &[FamilyReport]) -> Result<()> {
    for r in reports {
        let sub = dir.join(r.family.name());
        create_dir(&sub)?;
        write_json(&sub.join("report.json"), r)?;
        let roc = sub.join("roc.csv");
        let file = fs::File::create(&roc).with_context(|| format!("writing {}", roc.display()))?;
        write_roc_points(std::io::BufWriter::new(file), &r.eval.roc_points)?;
    }
    Ok(())
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ModelScore {
    pub family: Family,
    pub accuracy: f64,
    pub auc: f64,
}

/// One configuration of a sweep.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SweepRow {
    pub label: String,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub requirement: Option<PrivacyRequirement>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub node: Option<Vec<usize>>,
    pub records: usize,
    pub suppressed: usize,
    pub classes: usize,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub cavg: Option<f64>,
    pub cm: f64,
    pub audit: PrivacyAudit,
    pub models: Vec<ModelScore>,
}

/// Anonymizes (unless `requirement` is `None`), evaluates and writes the
/// configuration's artefacts under `dir`.
pub fn run_configuration(
    label: &str,
    d: &Dataset,
    hs: &HierarchySet,
    requirement: Option<PrivacyRequirement>,
    suppression_limit: f64,
    opts: &EvalOptions,
    dir: &Path,
) -> Result<SweepRow> {
    create_dir(dir)?;
    let (table, node, cavg) = match &requirement {
        None => (d.clone(), None, None),
        Some(r) => {
            let cfg = SearchConfig::new(r.clone(), suppression_limit);
            match run_anonymize(d, hs, &cfg)? {
                Anonymized::Done(result, summary) => {
                    write_anonymized(dir, &result, &summary)?;
                    (
                        result.output.clone(),
                        Some(result.node.0.clone()),
                        summary.cavg,
                    )
                }
                Anonymized::Unsatisfiable(summary) => {
                    write_json(&dir.join("summary.json"), &summary)?;
                    bail!("configuration {label}: requirement is unsatisfiable");
                }
            }
        }
    };
    let metrics = table_metrics(
        &table,
        requirement.as_ref().map_or(1, |r| r.k),
        d.row_count(),
    )?;
    let audit = anonlab_core::audit(&table, d.row_count() - table.row_count())?;
    let reports = evaluate_table(&table, opts).with_context(|| format!("evaluating {label}"))?;
    write_family_reports(dir, &reports)?;
    Ok(SweepRow {
        label: label.to_string(),
        requirement,
        node,
        records: metrics.records,
        suppressed: metrics.suppressed,
        classes: metrics.classes,
        cavg,
        cm: metrics.cm,
        audit,
        models: reports
            .iter()
            .map(|r| ModelScore {
                family: r.family,
                accuracy: r.eval.accuracy,
                auc: r.eval.auc,
            })
            .collect(),
    })
}

/// Flat table of sweep rows, one model's accuracy and AUC per column pair.
pub fn write_sweep_csv(path: &Path, rows: &[SweepRow]) -> Result<()> {
    let mut w =
        csv::Writer::from_path(path).with_context(|| format!("writing {}", path.display()))?;
    let families: Vec<Family> = rows
        .first()
        .map(|r| r.models.iter().map(|m| m.family).collect())
        .unwrap_or_default();
    let mut header: Vec<String> = [
        "label",
        "k",
        "l",
        "t",
        "delta",
        "records",
        "suppressed",
        "classes",
        "cavg",
        "cm",
    ]
    .iter()
    .map(|s| s.to_string())
    .collect();
    for f in &families {
        header.push(format!("{f}_accuracy"));
        header.push(format!("{f}_auc"));
    }
    w.write_record(&header)?;
    let opt = |v: Option<String>| v.unwrap_or_default();
    for r in rows {
        let req = r.requirement.as_ref();
        let mut rec = vec![
            r.label.clone(),
            opt(req.map(|q| q.k.to_string())),
            opt(req.and_then(|q| q.l).map(|v| v.to_string())),
            opt(req.and_then(|q| q.t).map(|v| v.to_string())),
            opt(req.and_then(|q| q.delta).map(|v| v.to_string())),
            r.records.to_string(),
            r.suppressed.to_string(),
            r.classes.to_string(),
            opt(r.cavg.map(|v| v.to_string())),
            r.cm.to_string(),
        ];
        for m in &r.models {
            rec.push(m.accuracy.to_string());
            rec.push(m.auc.to_string());
        }
        w.write_record(&rec)?;
    }
    w.flush()?;
    Ok(())
}

/// Accuracy of one ensemble family at the smallest and largest k of a sweep.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Trend {
    pub family: Family,
    pub k_low: usize,
    pub k_high: usize,
    pub accuracy_low: f64,
    pub accuracy_high: f64,
    /// Accuracy at the largest k does not exceed the smallest k's by more
    /// than 0.01.
    pub non_increasing: bool,
}

pub fn accuracy_trends(rows: &[SweepRow]) -> Vec<Trend> {
    let k_of = |r: &SweepRow| r.requirement.as_ref().map_or(1, |q| q.k);
    let (Some(low), Some(high)) = (
        rows.iter().min_by_key(|r| k_of(r)),
        rows.iter().max_by_key(|r| k_of(r)),
    ) else {
        return Vec::new();
    };
    if k_of(low) == k_of(high) {
        return Vec::new();
    }
    low.models
        .iter()
        .filter(|m| m.family.is_ensemble())
        .filter_map(|lm| {
            let hm = high.models.iter().find(|m| m.family == lm.family)?;
            Some(Trend {
                family: lm.family,
                k_low: k_of(low),
                k_high: k_of(high),
                accuracy_low: lm.accuracy,
                accuracy_high: hm.accuracy,
                non_increasing: hm.accuracy <= lm.accuracy + 0.01,
            })
        })
        .collect()
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SweepReport {
    pub rows: Vec<SweepRow>,
    #[serde(skip_serializing_if = "Vec::is_empty")]
    pub trends: Vec<Trend>,
    /// Label of the anonymized configuration with the largest CM.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub largest_cm: Option<String>,
}

pub fn k_sweep(
    d: &Dataset,
    hs: &HierarchySet,
    ks: &[usize],
    suppression_limit: f64,
    opts: &EvalOptions,
    out: &Path,
) -> Result<SweepReport> {
    create_dir(out)?;
    let mut rows = Vec::with_capacity(ks.len());
    for &k in ks {
        let label = format!("k={k}");
        let dir = out.join(format!("k_{k}"));
        rows.push(run_configuration(
            &label,
            d,
            hs,
            Some(PrivacyRequirement::k_anonymity(k)),
            suppression_limit,
            opts,
            &dir,
        )?);
    }
    let report = SweepReport {
        trends: accuracy_trends(&rows),
        rows,
        largest_cm: None,
    };
    write_json(&out.join("sweep_k.json"), &report)?;
    write_sweep_csv(&out.join("sweep_k.csv"), &report.rows)?;
    Ok(report)
}

/// The raw table plus k, k+ℓ, k+t and k+δ.
pub fn technique_configs(
    k: usize,
    l: usize,
    t: f64,
    delta: f64,
) -> Vec<(String, Option<PrivacyRequirement>)> {
    let base = PrivacyRequirement::k_anonymity(k);
    vec![
        ("raw".to_string(), None),
        (format!("k={k}"), Some(base.clone())),
        (format!("k={k},l={l}"), Some(base.clone().with_l(l))),
        (format!("k={k},t={t}"), Some(base.clone().with_t(t))),
        (format!("k={k},delta={delta}"), Some(base.with_delta(delta))),
    ]
}

pub fn technique_sweep(
    d: &Dataset,
    hs: &HierarchySet,
    configs: &[(String, Option<PrivacyRequirement>)],
    suppression_limit: f64,
    opts: &EvalOptions,
    out: &Path,
) -> Result<SweepReport> {
    create_dir(out)?;
    let mut rows = Vec::with_capacity(configs.len());
    for (label, req) in configs {
        let dir: PathBuf = out.join(label.replace([',', '='], "_"));
        rows.push(run_configuration(
            label,
            d,
            hs,
            req.clone(),
            suppression_limit,
            opts,
            &dir,
        )?);
    }
    let largest_cm = rows
        .iter()
        .filter(|r| r.requirement.is_some())
        .fold(None::<&SweepRow>, |best, r| match best {
            Some(b) if b.cm >= r.cm => Some(b),
            _ => Some(r),
        })
        .map(|r| r.label.clone());
    let report = SweepReport {
        rows,
        trends: Vec::new(),
        largest_cm,
    };
    write_json(&out.join("sweep_techniques.json"), &report)?;
    write_sweep_csv(&out.join("sweep_techniques.csv"), &report.rows)?;
    Ok(report)
}
