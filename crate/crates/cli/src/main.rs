use std::path::PathBuf;
use std::process::ExitCode;

use anonlab_cli::pipeline::{
    self, evaluate_table, k_sweep, load_hierarchies, load_table, run_anonymize, table_metrics,
    technique_configs, technique_sweep, write_anonymized, write_family_reports, write_json,
    Anonymized, EvalOptions,
};
use anonlab_core::{audit, PrivacyRequirement, SearchConfig};
use anonlab_ml::{Family, DEFAULT_FOLDS};
use anyhow::{Context, Result};
use clap::{Args, Parser, Subcommand};
use serde::Serialize;

/// Exit status when the requested privacy requirement cannot be met.
const EXIT_UNSATISFIABLE: u8 = 2;

#[derive(Parser)]
#[command(
    name = "anonlab",
    version,
    about = "Anonymize tabular data and measure what it costs"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Find the least generalized release meeting a privacy requirement.
    Anonymize(AnonymizeArgs),
    /// Report the achieved k, l, t and delta of a table.
    Audit(AuditArgs),
    /// Average class size and classification metric of a released table.
    Metrics(MetricsArgs),
    /// Grid-search, refit and score each model family on a table.
    Evaluate(EvaluateArgs),
    /// Anonymize and evaluate for each k in a list.
    SweepK(SweepKArgs),
    /// Compare the raw table with k, k+l, k+t and k+delta releases.
    SweepTechniques(SweepTechniquesArgs),
}

#[derive(Args)]
struct Input {
    /// Comma-separated table with a header row.
    #[arg(long)]
    data: PathBuf,
    /// TOML schema with attribute roles and kinds.
    #[arg(long)]
    schema: PathBuf,
}

#[derive(Args)]
struct Secondary {
    /// Distinct l-diversity.
    #[arg(long)]
    l: Option<usize>,
    /// t-closeness bound.
    #[arg(long)]
    t: Option<f64>,
    /// delta-disclosure bound.
    #[arg(long)]
    delta: Option<f64>,
    /// Largest fraction of rows that may be suppressed.
    #[arg(long, default_value_t = 1.0)]
    suppression_limit: f64,
}

#[derive(Args)]
struct Evaluation {
    /// Model families (knn, tree, random_forest, adaboost, gradient_boosting).
    #[arg(long, value_delimiter = ',', default_values_t = Family::ALL.map(|f| f.name().to_string()))]
    models: Vec<String>,
    /// Use the small grids instead of the full ones.
    #[arg(long)]
    reduced_grid: bool,
    /// Training fraction of the stratified split.
    #[arg(long, default_value_t = 0.75)]
    split: f64,
    /// Seed for the split, the folds and the forests.
    #[arg(long, default_value_t = 42)]
    seed: u64,
    /// Cross-validation folds.
    #[arg(long, default_value_t = DEFAULT_FOLDS)]
    folds: usize,
}

impl Evaluation {
    fn options(&self) -> Result<EvalOptions> {
        let families = self
            .models
            .iter()
            .map(|m| m.parse::<Family>())
            .collect::<Result<Vec<_>, _>>()?;
        Ok(EvalOptions {
            families,
            reduced_grid: self.reduced_grid,
            split: self.split,
            seed: self.seed,
            folds: self.folds,
        })
    }
}

#[derive(Args)]
struct AnonymizeArgs {
    #[command(flatten)]
    input: Input,
    /// Directory of `<attribute>.csv` hierarchies.
    #[arg(long)]
    hierarchies: PathBuf,
    #[arg(long)]
    k: usize,
    #[command(flatten)]
    secondary: Secondary,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args)]
struct AuditArgs {
    #[command(flatten)]
    input: Input,
    /// Rows removed before release, reported as-is.
    #[arg(long, default_value_t = 0)]
    suppressed: usize,
    /// Also write the report to this file.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct MetricsArgs {
    #[command(flatten)]
    input: Input,
    #[arg(long)]
    k: usize,
    /// Rows of the table before anonymization; defaults to the released count.
    #[arg(long)]
    original_count: Option<usize>,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct EvaluateArgs {
    #[command(flatten)]
    input: Input,
    #[command(flatten)]
    evaluation: Evaluation,
    /// Rows of the original table for the classification metric.
    #[arg(long)]
    original_count: Option<usize>,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args)]
struct SweepKArgs {
    #[command(flatten)]
    input: Input,
    #[arg(long)]
    hierarchies: PathBuf,
    #[arg(long, value_delimiter = ',', default_values_t = [2usize, 5, 10, 25, 50, 75, 100])]
    k: Vec<usize>,
    #[arg(long, default_value_t = 1.0)]
    suppression_limit: f64,
    #[command(flatten)]
    evaluation: Evaluation,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args)]
struct SweepTechniquesArgs {
    #[command(flatten)]
    input: Input,
    #[arg(long)]
    hierarchies: PathBuf,
    #[arg(long, default_value_t = 5)]
    k: usize,
    #[arg(long, default_value_t = 2)]
    l: usize,
    #[arg(long, default_value_t = 0.7)]
    t: f64,
    #[arg(long, default_value_t = 1.5)]
    delta: f64,
    #[arg(long, default_value_t = 1.0)]
    suppression_limit: f64,
    #[command(flatten)]
    evaluation: Evaluation,
    #[arg(long)]
    out: PathBuf,
}

fn print_json<T: Serialize>(value: &T) -> Result<()> {
    println!("{}", serde_json::to_string_pretty(value)?);
    Ok(())
}

fn anonymize_cmd(a: AnonymizeArgs) -> Result<ExitCode> {
    let d = load_table(&a.input.data, &a.input.schema)?;
    let hs = load_hierarchies(&a.hierarchies, &d)?;
    let requirement = PrivacyRequirement {
        k: a.k,
        l: a.secondary.l,
        t: a.secondary.t,
        delta: a.secondary.delta,
    };
    let cfg = SearchConfig::new(requirement, a.secondary.suppression_limit);
    match run_anonymize(&d, &hs, &cfg)? {
        Anonymized::Done(result, summary) => {
            write_anonymized(&a.out, &result, &summary)?;
            print_json(&summary)?;
            Ok(ExitCode::SUCCESS)
        }
        Anonymized::Unsatisfiable(summary) => {
            pipeline::create_dir(&a.out)?;
            write_json(&a.out.join("summary.json"), &summary)?;
            print_json(&summary)?;
            eprintln!(
                "error: no generalization satisfies the requirement within the suppression limit"
            );
            Ok(ExitCode::from(EXIT_UNSATISFIABLE))
        }
    }
}

fn audit_cmd(a: AuditArgs) -> Result<ExitCode> {
    let d = load_table(&a.input.data, &a.input.schema)?;
    let report = audit(&d, a.suppressed).context("auditing table")?;
    if let Some(out) = &a.out {
        write_json(out, &report)?;
    }
    print_json(&report)?;
    Ok(ExitCode::SUCCESS)
}

fn metrics_cmd(a: MetricsArgs) -> Result<ExitCode> {
    let d = load_table(&a.input.data, &a.input.schema)?;
    let m = table_metrics(&d, a.k, a.original_count.unwrap_or(d.row_count()))?;
    if let Some(out) = &a.out {
        write_json(out, &m)?;
    }
    print_json(&m)?;
    Ok(ExitCode::SUCCESS)
}

#[derive(Serialize)]
struct EvaluationSummary<'a> {
    rows: usize,
    original_count: usize,
    cm: f64,
    models: &'a [pipeline::FamilyReport],
}

fn evaluate_cmd(a: EvaluateArgs) -> Result<ExitCode> {
    let d = load_table(&a.input.data, &a.input.schema)?;
    let opts = a.evaluation.options()?;
    let original = a.original_count.unwrap_or(d.row_count());
    let metrics = table_metrics(&d, 1, original)?;
    let reports = evaluate_table(&d, &opts)?;
    pipeline::create_dir(&a.out)?;
    write_family_reports(&a.out, &reports)?;
    let summary = EvaluationSummary {
        rows: d.row_count(),
        original_count: original,
        cm: metrics.cm,
        models: &reports,
    };
    write_json(&a.out.join("evaluation.json"), &summary)?;
    print_json(&summary)?;
    Ok(ExitCode::SUCCESS)
}

fn sweep_k_cmd(a: SweepKArgs) -> Result<ExitCode> {
    let d = load_table(&a.input.data, &a.input.schema)?;
    let hs = load_hierarchies(&a.hierarchies, &d)?;
    let report = k_sweep(
        &d,
        &hs,
        &a.k,
        a.suppression_limit,
        &a.evaluation.options()?,
        &a.out,
    )?;
    print_json(&report)?;
    Ok(ExitCode::SUCCESS)
}

fn sweep_techniques_cmd(a: SweepTechniquesArgs) -> Result<ExitCode> {
    let d = load_table(&a.input.data, &a.input.schema)?;
    let hs = load_hierarchies(&a.hierarchies, &d)?;
    let configs = technique_configs(a.k, a.l, a.t, a.delta);
    let opts = a.evaluation.options()?;
    let report = technique_sweep(&d, &hs, &configs, a.suppression_limit, &opts, &a.out)?;
    print_json(&report)?;
    Ok(ExitCode::SUCCESS)
}

fn run(cli: Cli) -> Result<ExitCode> {
    match cli.command {
        Command::Anonymize(a) => anonymize_cmd(a),
        Command::Audit(a) => audit_cmd(a),
        Command::Metrics(a) => metrics_cmd(a),
        Command::Evaluate(a) => evaluate_cmd(a),
        Command::SweepK(a) => sweep_k_cmd(a),
        Command::SweepTechniques(a) => sweep_techniques_cmd(a),
    }
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::FAILURE
        }
    }
}
