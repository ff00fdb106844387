//! Acceptance suite. Prints one PASS / FAIL / WARN line per criterion and
//! exits non-zero if any criterion fails. WARN marks directional checks on
//! real data that are reported rather than enforced.

use std::collections::{BTreeMap, HashMap};
use std::path::{Path, PathBuf};
use std::process::{Command, ExitCode};
use std::time::{Duration, Instant};

use anonlab_cli::pipeline::{
    evaluate_table, k_sweep, load_hierarchies, load_table, technique_configs, technique_sweep,
    EvalOptions,
};
use anonlab_core::anonymizer::{compare_cost, Cost};
use anonlab_core::metrics::{avg_class_size_metric, classification_metric, roc_auc};
use anonlab_core::privacy::{dist_equal, emd_ordered, satisfies, Distribution};
use anonlab_core::{
    anonymize, audit, evaluate_node, lattice_nodes, partition_classes, AttributeSchema, Dataset,
    Error, Hierarchy, HierarchySet, Kind, PrivacyRequirement, Role, Schema, SearchConfig,
};
use anonlab_ml::{
    fit, Family, GradientBoosting, Hyperparams, Knn, LabeledMatrix, ModelSpec, ParamGrid,
};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

#[derive(Debug, Clone, Copy, PartialEq)]
enum Status {
    Pass,
    Warn,
    Fail,
}

struct Outcome {
    status: Status,
    detail: String,
}

impl Outcome {
    fn check(ok: bool, detail: impl Into<String>) -> Self {
        let status = if ok { Status::Pass } else { Status::Fail };
        Self {
            status,
            detail: detail.into(),
        }
    }

    fn warn_unless(ok: bool, detail: impl Into<String>) -> Self {
        let status = if ok { Status::Pass } else { Status::Warn };
        Self {
            status,
            detail: detail.into(),
        }
    }
}

fn data_dir() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../../data")
}

// ---------------------------------------------------------------------------
// Random corpus shared by criteria 1-3.

struct Instance {
    data: Dataset,
    hierarchies: HierarchySet,
}

/// Hierarchy of height `h` over values `0..card` (at most 6^3 = 216
/// lattice nodes for three attributes): level `i` maps `v` to
/// `v >> i`, the top level to `*`.
fn shift_hierarchy(name: &str, card: u32, h: usize) -> Hierarchy {
    let paths = (0..card).map(|v| {
        let mut p: Vec<String> = (0..h)
            .map(|i| {
                if i == 0 {
                    v.to_string()
                } else {
                    format!("g{i}_{}", v >> i)
                }
            })
            .collect();
        p.push("*".into());
        p
    });
    Hierarchy::from_paths(name, paths).unwrap()
}

fn random_instance(rng: &mut ChaCha8Rng) -> Instance {
    let qis = rng.random_range(1..=3);
    let rows = rng.random_range(1..=200);
    let mut attrs: Vec<AttributeSchema> = (0..qis)
        .map(|i| AttributeSchema::new(format!("q{i}"), Role::QuasiIdentifier, Kind::Categorical))
        .collect();
    attrs.push(AttributeSchema::new(
        "y",
        Role::Sensitive,
        Kind::Categorical,
    ));
    let schema = Schema::new(attrs).unwrap();

    let cards: Vec<u32> = (0..qis).map(|_| rng.random_range(1..=12)).collect();
    let bias: f64 = rng.random_range(0.05..0.95);
    let table: Vec<Vec<String>> = (0..rows)
        .map(|_| {
            let mut r: Vec<String> = cards
                .iter()
                .map(|&c| rng.random_range(0..c).to_string())
                .collect();
            r.push(if rng.random_bool(bias) { "1" } else { "0" }.to_string());
            r
        })
        .collect();
    let data = Dataset::new(schema.clone(), table).unwrap();

    let mut by_name = BTreeMap::new();
    for (i, &c) in cards.iter().enumerate() {
        let name = format!("q{i}");
        by_name.insert(
            name.clone(),
            shift_hierarchy(&name, c, rng.random_range(1..=5)),
        );
    }
    Instance {
        data,
        hierarchies: HierarchySet::for_schema(&schema, by_name),
    }
}

fn random_requirement(rng: &mut ChaCha8Rng) -> PrivacyRequirement {
    let mut r = PrivacyRequirement::k_anonymity(rng.random_range(1..=10));
    if rng.random_bool(0.5) {
        r = r.with_l(2);
    }
    if rng.random_bool(0.4) {
        r = r.with_t([0.3, 0.5, 0.7][rng.random_range(0..3)]);
    }
    if rng.random_bool(0.4) {
        r = r.with_delta([1.0, 1.5, 3.0][rng.random_range(0..3)]);
    }
    r
}

fn random_limit(rng: &mut ChaCha8Rng) -> f64 {
    [0.0, 0.02, 0.1, 0.3, 1.0][rng.random_range(0..5)]
}

/// Brute-force audit: group raw rows by their quasi-identifier tuple.
fn oracle_audit(d: &Dataset) -> (usize, usize, f64, f64) {
    let qis = d.schema().quasi_identifiers();
    let sa = d.schema().sensitive();
    let mut classes: HashMap<Vec<&str>, Vec<&str>> = HashMap::new();
    for r in d.rows() {
        classes
            .entry(qis.iter().map(|&c| r[c].as_str()).collect())
            .or_default()
            .push(r[sa].as_str());
    }
    let n = d.row_count() as f64;
    let global = |v: &str| d.rows().iter().filter(|r| r[sa] == v).count() as f64 / n;
    let (g0, g1) = (global("0"), global("1"));
    let (mut k, mut l, mut t, mut delta) = (usize::MAX, usize::MAX, 0.0f64, 0.0f64);
    for labels in classes.values() {
        let m = labels.len() as f64;
        let p1 = labels.iter().filter(|&&v| v == "1").count() as f64 / m;
        let p0 = 1.0 - p1;
        k = k.min(labels.len());
        l = l.min(usize::from(p0 > 0.0) + usize::from(p1 > 0.0));
        t = t.max(0.5 * ((p0 - g0).abs() + (p1 - g1).abs()));
        for (p, g) in [(p0, g0), (p1, g1)] {
            if p > 0.0 && g > 0.0 {
                delta = delta.max((p / g).ln().abs());
            }
        }
    }
    (k, l, t, delta)
}

fn criterion_1() -> Outcome {
    let start = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    let mut mismatches = Vec::new();
    for i in 0..200 {
        let inst = random_instance(&mut rng);
        let got = audit(&inst.data, 0).unwrap();
        let (k, l, t, delta) = oracle_audit(&inst.data);
        if got.k != k || got.l != l || (got.t - t).abs() > 1e-9 || (got.delta - delta).abs() > 1e-9
        {
            mismatches.push(i);
        }
    }
    let elapsed = start.elapsed();
    Outcome::check(
        mismatches.is_empty() && elapsed < Duration::from_secs(10),
        format!("200 datasets, mismatches {mismatches:?}, {:.2?}", elapsed),
    )
}

fn criterion_2() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(2);
    let (mut ok, mut unsat, mut bad) = (0, 0, Vec::new());
    for i in 0..200 {
        let inst = random_instance(&mut rng);
        let cfg = SearchConfig::new(random_requirement(&mut rng), random_limit(&mut rng));
        match anonymize(&inst.data, &inst.hierarchies, &cfg) {
            Ok(res) => {
                let re = audit(&res.output, res.suppressed_count).unwrap();
                let sound = anonlab_core::privacy::audit_satisfies(&re, &cfg.requirement)
                    && res.suppressed_count <= cfg.budget(inst.data.row_count())
                    && res.output.row_count() + res.suppressed_count == inst.data.row_count()
                    && re == res.audit;
                if sound {
                    ok += 1;
                } else {
                    bad.push(i);
                }
            }
            Err(Error::Unsatisfiable { .. }) => unsat += 1,
            Err(e) => {
                bad.push(i);
                eprintln!("instance {i}: {e}");
            }
        }
    }
    Outcome::check(
        bad.is_empty(),
        format!("{ok} sound releases, {unsat} unsatisfiable, violations {bad:?}"),
    )
}

fn criterion_3() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let (mut matched, mut bad, mut largest) = (0, Vec::new(), 0);
    for i in 0..50 {
        let inst = random_instance(&mut rng);
        let cfg = SearchConfig::new(random_requirement(&mut rng), random_limit(&mut rng));
        let heights = inst.hierarchies.heights();
        let kind = Kind::Categorical;
        let nodes = lattice_nodes(&heights);
        largest = largest.max(nodes.len());
        let budget = cfg.budget(inst.data.row_count());

        let mut best: Option<(Cost, anonlab_core::GeneralizationVector)> = None;
        for g in nodes {
            let e = evaluate_node(&inst.data, &inst.hierarchies, &g, &cfg).unwrap();
            // Cross-check the node verdict against a fresh audit.
            let verdict = satisfies(&e.partition, &cfg.requirement, kind) && e.suppressed <= budget;
            if verdict != e.satisfies {
                bad.push(i);
            }
            if !verdict {
                continue;
            }
            let cost = Cost::new(&heights, &g, e.suppressed).unwrap();
            let better = match &best {
                None => true,
                Some((bc, bg)) => compare_cost((&cost, &g), (bc, bg)).is_lt(),
            };
            if better {
                best = Some((cost, g));
            }
        }
        let chosen = anonymize(&inst.data, &inst.hierarchies, &cfg);
        let same = match (&best, &chosen) {
            (None, Err(Error::Unsatisfiable { .. })) => true,
            (Some((cost, g)), Ok(r)) => r.node == *g && r.cost == *cost,
            _ => false,
        };
        if same {
            matched += 1;
        } else {
            bad.push(i);
        }
    }
    bad.dedup();
    Outcome::check(
        bad.is_empty(),
        format!("{matched}/50 match exhaustive search (largest lattice {largest} nodes), mismatches {bad:?}"),
    )
}

fn pairwise_auc(labels: &[bool], scores: &[f64]) -> f64 {
    let (mut num, mut pairs) = (0.0, 0.0);
    for (i, &yi) in labels.iter().enumerate() {
        for (j, &yj) in labels.iter().enumerate() {
            if yi && !yj {
                pairs += 1.0;
                num += match scores[i].partial_cmp(&scores[j]).unwrap() {
                    std::cmp::Ordering::Greater => 1.0,
                    std::cmp::Ordering::Equal => 0.5,
                    std::cmp::Ordering::Less => 0.0,
                };
            }
        }
    }
    num / pairs
}

fn single_qi(rows: &[(&str, &str)]) -> Dataset {
    let schema = Schema::new(vec![
        AttributeSchema::new("q", Role::QuasiIdentifier, Kind::Categorical),
        AttributeSchema::new("y", Role::Sensitive, Kind::Categorical),
    ])
    .unwrap();
    Dataset::new(
        schema,
        rows.iter()
            .map(|(q, y)| vec![q.to_string(), y.to_string()])
            .collect(),
    )
    .unwrap()
}

fn criterion_4() -> Outcome {
    // Three classes of exactly four rows, released at k = 4.
    let rows: Vec<(&str, &str)> = ["a", "b", "c"]
        .iter()
        .flat_map(|&q| [(q, "0"), (q, "1"), (q, "1"), (q, "0")])
        .collect();
    let p = partition_classes(&single_qi(&rows)).unwrap();
    let cavg = avg_class_size_metric(p.record_count(), 4, p.class_count()).unwrap();

    // One class {1, 1, 0} plus one suppressed row out of four: (1 + 1) / 4.
    let p = partition_classes(&single_qi(&[
        ("a", "1"),
        ("a", "1"),
        ("a", "0"),
        ("b", "0"),
    ]))
    .unwrap();
    let p = p.suppress_where(|c| c.size() < 2);
    let cm = classification_metric(4, &p).unwrap();

    let mut rng = ChaCha8Rng::seed_from_u64(4);
    let mut worst = 0.0f64;
    for _ in 0..100 {
        let n = rng.random_range(2..80);
        let mut labels: Vec<bool> = (0..n).map(|_| rng.random_bool(0.4)).collect();
        labels[0] = true;
        labels[1] = false;
        // Coarse scores so that ties are common.
        let steps = rng.random_range(1..12);
        let scores: Vec<f64> = (0..n)
            .map(|_| rng.random_range(0..=steps) as f64 / steps as f64)
            .collect();
        let got = roc_auc(&labels, &scores).unwrap().auc;
        worst = worst.max((got - pairwise_auc(&labels, &scores)).abs());
    }
    Outcome::check(
        cavg == 1.0 && cm == 0.5 && worst <= 1e-9,
        format!("C_avg {cavg}, CM {cm}, max AUC deviation {worst:.2e} over 100 instances"),
    )
}

fn dist(mass: &[f64]) -> Distribution {
    Distribution {
        support: (0..mass.len()).map(|i| i.to_string()).collect(),
        mass: mass.to_vec(),
    }
}

fn criterion_5() -> Outcome {
    // (p, q, equal, ordered) worked by hand.
    let cases: [(&[f64], &[f64], f64, f64); 5] = [
        (&[0.5, 0.5], &[0.5, 0.5], 0.0, 0.0),
        (&[1.0, 0.0, 0.0], &[0.0, 0.0, 1.0], 1.0, 1.0),
        (&[1.0, 0.0, 0.0], &[0.0, 1.0, 0.0], 1.0, 0.5),
        (&[0.5, 0.5, 0.0], &[0.0, 0.5, 0.5], 0.5, 0.5),
        (&[0.25, 0.25, 0.25, 0.25], &[1.0, 0.0, 0.0, 0.0], 0.75, 0.5),
    ];
    let mut hand_ok = true;
    for (p, q, eq, ord) in cases {
        let (p, q) = (dist(p), dist(q));
        hand_ok &= (dist_equal(&p, &q).unwrap() - eq).abs() <= 1e-12;
        hand_ok &= (emd_ordered(&p, &q).unwrap() - ord).abs() <= 1e-12;
    }
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let mut worst = 0.0f64;
    for _ in 0..1000 {
        let (a, b): (f64, f64) = (rng.random(), rng.random());
        let (p, q) = (dist(&[a, 1.0 - a]), dist(&[b, 1.0 - b]));
        let e = dist_equal(&p, &q).unwrap();
        worst = worst
            .max((e - emd_ordered(&p, &q).unwrap()).abs())
            .max((e - (a - b).abs()).abs());
    }
    Outcome::check(
        hand_ok && worst <= 1e-12,
        format!(
            "hand examples {}, max m=2 gap {worst:.2e} over 1000 pairs",
            if hand_ok { "match" } else { "differ" }
        ),
    )
}

fn toy() -> LabeledMatrix {
    let rows: Vec<Vec<f64>> = (0..40)
        .map(|i| vec![(i % 20) as f64, ((i * 7) % 13) as f64, ((i * 3) % 5) as f64])
        .collect();
    let labels = rows.iter().map(|r| r[0] >= 10.0).collect();
    LabeledMatrix::new(rows, labels).unwrap()
}

fn train_accuracy(scores: &[f64], labels: &[bool]) -> f64 {
    scores
        .iter()
        .zip(labels)
        .filter(|(s, &y)| (**s >= 0.5) == y)
        .count() as f64
        / labels.len() as f64
}

fn criterion_6() -> Outcome {
    let m = toy();
    let mut parts = Vec::new();
    let mut ok = true;
    for family in Family::ALL {
        let g = ParamGrid::full(family);
        let params = match family {
            Family::Knn => Hyperparams {
                neighbors: Some(1),
                ..Default::default()
            },
            _ => Hyperparams {
                learning_rate: g.learning_rate.iter().copied().reduce(f64::max),
                max_depth: g.max_depth.iter().copied().max(),
                n_estimators: g.n_estimators.iter().copied().max(),
                n_trees: g.n_trees.iter().copied().max(),
                neighbors: None,
            },
        };
        let model = fit(
            &ModelSpec {
                family,
                params,
                seed: 0,
            },
            &m,
        )
        .unwrap();
        let acc = train_accuracy(&model.predict_scores(&m), m.labels());
        ok &= acc == 1.0;
        parts.push(format!("{family} {acc}"));
    }
    let one_nn = Knn::fit(&m, 1).unwrap().predict_scores(&m);
    let nn_errors = one_nn
        .iter()
        .zip(m.labels())
        .filter(|(s, &y)| (**s >= 0.5) != y)
        .count();
    let gb = GradientBoosting::fit(&m, 50, 0.1, 3).unwrap();
    let monotone = gb.train_loss().windows(2).all(|w| w[1] <= w[0]);
    Outcome::check(
        ok && nn_errors == 0 && monotone && gb.train_loss().len() == 51,
        format!(
            "{}; 1-NN errors {nn_errors}; GB loss {:.4} -> {:.4} non-increasing {monotone}",
            parts.join(", "),
            gb.train_loss()[0],
            gb.train_loss()[50],
        ),
    )
}

fn adult() -> Dataset {
    let dir = data_dir();
    load_table(&dir.join("adult.csv"), &dir.join("adult-schema.toml")).unwrap()
}

fn options(families: Vec<Family>, reduced_grid: bool) -> EvalOptions {
    EvalOptions {
        families,
        reduced_grid,
        split: 0.75,
        seed: 42,
        folds: 5,
    }
}

fn criterion_7() -> Outcome {
    let d = adult();
    let start = Instant::now();
    let reduced = evaluate_table(&d, &options(Family::ALL.to_vec(), true)).unwrap();
    let reduced_time = start.elapsed();

    let start = Instant::now();
    let full = evaluate_table(&d, &options(Family::ALL.to_vec(), false)).unwrap();
    let full_time = start.elapsed();

    let gb = full
        .iter()
        .find(|r| r.family == Family::GradientBoosting)
        .unwrap();
    let (acc, auc) = (gb.eval.accuracy, gb.eval.auc);
    let others: Vec<String> = full
        .iter()
        .map(|r| format!("{} {:.4}", r.family, r.eval.accuracy))
        .collect();
    let red_gb = reduced
        .iter()
        .find(|r| r.family == Family::GradientBoosting)
        .unwrap();
    Outcome::check(
        (acc - 0.8352).abs() <= 0.02
            && (auc - 0.7437).abs() <= 0.04
            && full_time <= Duration::from_secs(30 * 60)
            && reduced_time <= Duration::from_secs(3 * 60),
        format!(
            "GB accuracy {acc:.4} AUC {auc:.4} ({}); full grid {full_time:.0?} [{}]; reduced grid {reduced_time:.0?} (GB {:.4})",
            gb.params,
            others.join(", "),
            red_gb.eval.accuracy,
        ),
    )
}

fn criterion_8() -> Outcome {
    let d = adult();
    let hs = load_hierarchies(&data_dir().join("hierarchies/adult"), &d).unwrap();
    let tmp = tempfile::tempdir().unwrap();
    let ensembles: Vec<Family> = Family::ALL
        .into_iter()
        .filter(|f| f.is_ensemble())
        .collect();

    let sweep = k_sweep(
        &d,
        &hs,
        &[2, 100],
        1.0,
        &options(ensembles, true),
        &tmp.path().join("k"),
    )
    .unwrap();
    let trends: Vec<String> = sweep
        .trends
        .iter()
        .map(|t| format!("{} {:.4}->{:.4}", t.family, t.accuracy_low, t.accuracy_high))
        .collect();
    let trend_ok = !sweep.trends.is_empty() && sweep.trends.iter().all(|t| t.non_increasing);

    let configs = technique_configs(5, 2, 0.7, 1.5);
    let tech = technique_sweep(
        &d,
        &hs,
        &configs,
        1.0,
        &options(Vec::new(), true),
        &tmp.path().join("t"),
    )
    .unwrap();
    let cms: Vec<String> = tech
        .rows
        .iter()
        .filter(|r| r.requirement.is_some())
        .map(|r| format!("{} {:.4}", r.label, r.cm))
        .collect();
    let cm_ok = tech.largest_cm.as_deref() == Some("k=5,delta=1.5");

    Outcome::warn_unless(
        trend_ok && cm_ok,
        format!(
            "k=2 vs k=100: {} ({}); CM: {} (largest {})",
            trends.join(", "),
            if trend_ok {
                "non-increasing"
            } else {
                "accuracy rises"
            },
            cms.join(", "),
            tech.largest_cm.as_deref().unwrap_or("none"),
        ),
    )
}

/// Every file under `root`, keyed by relative path.
fn snapshot(root: &Path) -> BTreeMap<PathBuf, Vec<u8>> {
    fn walk(root: &Path, dir: &Path, out: &mut BTreeMap<PathBuf, Vec<u8>>) {
        for entry in std::fs::read_dir(dir).unwrap() {
            let path = entry.unwrap().path();
            if path.is_dir() {
                walk(root, &path, out);
            } else {
                out.insert(
                    path.strip_prefix(root).unwrap().to_path_buf(),
                    std::fs::read(&path).unwrap(),
                );
            }
        }
    }
    let mut out = BTreeMap::new();
    walk(root, root, &mut out);
    out
}

/// Runs every subcommand on an adult sample with `threads` workers and
/// returns all files written plus each command's stdout.
fn run_all(sample: &Path, threads: usize, out: &Path) -> BTreeMap<PathBuf, Vec<u8>> {
    let dir = data_dir();
    let schema = dir.join("adult-schema.toml");
    let hier = dir.join("hierarchies/adult");
    let (data, schema, hier) = (
        sample.to_str().unwrap(),
        schema.to_str().unwrap(),
        hier.to_str().unwrap(),
    );
    let o = |s: &str| out.join(s).to_str().unwrap().to_string();
    let anonymized = o("anon/anonymized.csv");
    let commands: Vec<(&str, Vec<String>)> = vec![
        (
            "anonymize",
            vec![
                "--hierarchies",
                hier,
                "--k",
                "5",
                "--l",
                "2",
                "--suppression-limit",
                "0.1",
            ]
            .into_iter()
            .map(String::from)
            .chain(["--out".into(), o("anon")])
            .collect(),
        ),
        ("audit", vec!["--out".into(), o("audit.json")]),
        (
            "metrics",
            vec![
                "--k".into(),
                "5".into(),
                "--original-count".into(),
                "1500".into(),
                "--out".into(),
                o("metrics.json"),
            ],
        ),
        (
            "evaluate",
            vec!["--reduced-grid".into(), "--out".into(), o("eval")],
        ),
        (
            "sweep-k",
            vec![
                "--hierarchies".into(),
                hier.into(),
                "--k".into(),
                "2,10".into(),
                "--suppression-limit".into(),
                "0.3".into(),
                "--reduced-grid".into(),
                "--models".into(),
                "random_forest,gradient_boosting".into(),
                "--out".into(),
                o("sweep_k"),
            ],
        ),
        (
            "sweep-techniques",
            vec![
                "--hierarchies".into(),
                hier.into(),
                "--suppression-limit".into(),
                "0.3".into(),
                "--reduced-grid".into(),
                "--models".into(),
                "knn,adaboost".into(),
                "--out".into(),
                o("sweep_t"),
            ],
        ),
    ];
    let mut stdout = BTreeMap::new();
    for (name, extra) in commands {
        let input = if matches!(name, "audit" | "metrics") {
            anonymized.as_str()
        } else {
            data
        };
        let res = Command::new(env!("CARGO_BIN_EXE_anonlab"))
            .arg(name)
            .args(["--data", input, "--schema", schema])
            .args(&extra)
            .env("RAYON_NUM_THREADS", threads.to_string())
            .output()
            .unwrap();
        assert!(
            res.status.success(),
            "{name}: {}",
            String::from_utf8_lossy(&res.stderr)
        );
        // Reports must not embed the output location.
        let text = String::from_utf8(res.stdout)
            .unwrap()
            .replace(out.to_str().unwrap(), "<out>");
        stdout.insert(PathBuf::from(format!("<stdout {name}>")), text.into_bytes());
    }
    let mut files = snapshot(out);
    files.extend(stdout);
    files
}

fn criterion_9() -> Outcome {
    let tmp = tempfile::tempdir().unwrap();
    let sample = tmp.path().join("sample.csv");
    let text = std::fs::read_to_string(data_dir().join("adult.csv")).unwrap();
    let head: Vec<&str> = text.lines().take(1501).collect();
    std::fs::write(&sample, head.join("\n") + "\n").unwrap();

    let start = Instant::now();
    let runs: Vec<BTreeMap<PathBuf, Vec<u8>>> = [(1, "a"), (1, "b"), (4, "c")]
        .iter()
        .map(|&(threads, name)| run_all(&sample, threads, &tmp.path().join(name)))
        .collect();
    let differing: Vec<String> = runs[0]
        .iter()
        .filter(|(path, bytes)| runs[1..].iter().any(|r| r.get(*path) != Some(*bytes)))
        .map(|(path, _)| path.display().to_string())
        .collect();
    let same_keys = runs.iter().all(|r| r.len() == runs[0].len());
    Outcome::check(
        same_keys && differing.is_empty(),
        format!(
            "6 commands x 3 runs (1, 1 and 4 workers), {} artefacts compared, differing {differing:?}, {:.0?}",
            runs[0].len(),
            start.elapsed()
        ),
    )
}

type Check = fn() -> Outcome;

fn main() -> ExitCode {
    // The adult checks dominate; everything else finishes in seconds.
    let criteria: [(&str, Check); 9] = [
        ("audit matches brute-force oracle", criterion_1),
        ("anonymizer soundness", criterion_2),
        ("anonymizer optimality", criterion_3),
        ("metric exactness", criterion_4),
        ("distance formulas", criterion_5),
        ("classifier sanity", criterion_6),
        ("raw adult gradient boosting", criterion_7),
        ("directional trends on adult", criterion_8),
        ("determinism across runs and workers", criterion_9),
    ];
    let mut failed = false;
    for (i, (name, check)) in criteria.iter().enumerate() {
        let outcome = std::panic::catch_unwind(check).unwrap_or_else(|e| {
            let msg = e
                .downcast_ref::<String>()
                .cloned()
                .or_else(|| e.downcast_ref::<&str>().map(|s| s.to_string()))
                .unwrap_or_default();
            Outcome::check(false, format!("panicked: {msg}"))
        });
        let tag = match outcome.status {
            Status::Pass => "PASS",
            Status::Warn => "WARN",
            Status::Fail => "FAIL",
        };
        failed |= outcome.status == Status::Fail;
        println!("criterion {}: {tag} {name}: {}", i + 1, outcome.detail);
    }
    if failed {
        ExitCode::FAILURE
    } else {
        ExitCode::SUCCESS
    }
}
