use anonlab_core::{load_dataset, split_stratified, AttributeSchema, Kind, Role, Schema};
use anonlab_ml::{
    encode, fit, fit_encoder, grid_search_cv, Family, GradientBoosting, Hyperparams, Knn,
    LabeledMatrix, ModelSpec, ParamGrid,
};

/// 40 rows, three features, label `x0 >= 10`.
fn toy() -> LabeledMatrix {
    let rows: Vec<Vec<f64>> = (0..40)
        .map(|i| vec![(i % 20) as f64, ((i * 7) % 13) as f64, ((i * 3) % 5) as f64])
        .collect();
    let labels = rows.iter().map(|r| r[0] >= 10.0).collect();
    LabeledMatrix::new(rows, labels).unwrap()
}

fn accuracy(scores: &[f64], labels: &[bool]) -> f64 {
    let hits = scores
        .iter()
        .zip(labels)
        .filter(|(s, &y)| (**s >= 0.5) == y)
        .count();
    hits as f64 / labels.len() as f64
}

fn largest(family: Family) -> Hyperparams {
    let g = ParamGrid::full(family);
    Hyperparams {
        learning_rate: g.learning_rate.iter().copied().reduce(f64::max),
        max_depth: g.max_depth.iter().copied().max(),
        n_estimators: g.n_estimators.iter().copied().max(),
        n_trees: g.n_trees.iter().copied().max(),
        neighbors: None,
    }
}

#[test]
fn every_family_fits_the_separable_toy() {
    let m = toy();
    for family in Family::ALL {
        let params = match family {
            Family::Knn => Hyperparams {
                neighbors: Some(1),
                ..Default::default()
            },
            Family::Tree => Hyperparams {
                max_depth: Some(2),
                ..Default::default()
            },
            _ => largest(family),
        };
        let model = fit(
            &ModelSpec {
                family,
                params,
                seed: 7,
            },
            &m,
        )
        .unwrap();
        assert_eq!(
            accuracy(&model.predict_scores(&m), m.labels()),
            1.0,
            "{family}"
        );
    }
}

#[test]
fn one_nn_reproduces_training_labels() {
    let m = toy();
    let scores = Knn::fit(&m, 1).unwrap().predict_scores(&m);
    assert_eq!(accuracy(&scores, m.labels()), 1.0);
    assert!(scores.iter().all(|&s| s == 0.0 || s == 1.0));
}

#[test]
fn boosting_loss_never_increases() {
    let m = toy();
    for lr in [0.01, 0.1, 0.5] {
        let g = GradientBoosting::fit(&m, 50, lr, 2).unwrap();
        assert!(
            g.train_loss().windows(2).all(|w| w[1] <= w[0] + 1e-15),
            "lr {lr}"
        );
    }
}

#[test]
fn cv_prefers_one_neighbour_on_clusters() {
    let xs = [0.0, 1.0, 2.0, 3.0, 4.0, 100.0, 101.0, 102.0, 103.0, 104.0];
    let m = LabeledMatrix::new(
        xs.iter().map(|&x| vec![x]).collect(),
        xs.iter().map(|&x| x < 50.0).collect(),
    )
    .unwrap();
    // Each fold trains on 8 rows; 8-NN is a 4/4 vote.
    let grid = ParamGrid {
        neighbors: vec![8, 1],
        ..Default::default()
    };
    let r = grid_search_cv(Family::Knn, &grid, &m, 5, 3).unwrap();
    assert_eq!(r.spec.params.neighbors, Some(1));
    assert_eq!(r.best_score, 1.0);
    assert_eq!(r.scores[0].mean_accuracy, 0.5);
}

#[test]
fn single_point_grid_and_determinism() {
    let m = toy();
    let grid = ParamGrid {
        max_depth: vec![3],
        n_trees: vec![10],
        ..Default::default()
    };
    let a = grid_search_cv(Family::RandomForest, &grid, &m, 5, 11).unwrap();
    let b = grid_search_cv(Family::RandomForest, &grid, &m, 5, 11).unwrap();
    assert_eq!(a.spec.params.max_depth, Some(3));
    assert_eq!(a.scores, b.scores);
    assert_eq!(a.model, b.model);
}

#[test]
fn shared_fits_match_direct_cv() {
    // Grid search shares one fit per group; scoring each point alone must
    // give the same fold accuracies.
    let m = toy();
    for family in [
        Family::Tree,
        Family::Adaboost,
        Family::GradientBoosting,
        Family::Knn,
    ] {
        let grid = ParamGrid {
            learning_rate: vec![0.5],
            max_depth: vec![1, 3],
            n_estimators: vec![2, 5],
            neighbors: vec![1, 3, 5],
            ..Default::default()
        };
        let joint = grid_search_cv(family, &grid, &m, 4, 5).unwrap();
        for s in &joint.scores {
            let single = ParamGrid {
                learning_rate: s.params.learning_rate.into_iter().collect(),
                max_depth: s.params.max_depth.into_iter().collect(),
                n_estimators: s.params.n_estimators.into_iter().collect(),
                neighbors: s.params.neighbors.into_iter().collect(),
                ..Default::default()
            };
            let alone = grid_search_cv(family, &single, &m, 4, 5).unwrap();
            assert_eq!(
                alone.scores[0].fold_accuracy, s.fold_accuracy,
                "{family} {}",
                s.params
            );
        }
    }
}

#[test]
fn forest_ignores_thread_count() {
    let m = toy();
    let spec = ModelSpec {
        family: Family::RandomForest,
        params: Hyperparams {
            max_depth: Some(4),
            n_trees: Some(20),
            ..Default::default()
        },
        seed: 99,
    };
    let run = |threads| {
        rayon::ThreadPoolBuilder::new()
            .num_threads(threads)
            .build()
            .unwrap()
            .install(|| fit(&spec, &m).unwrap().predict_scores(&m))
    };
    assert_eq!(run(1), run(3));
}

#[test]
fn adult_encoding_width_and_labels() {
    let root = concat!(env!("CARGO_MANIFEST_DIR"), "/../../data");
    let schema = Schema::from_path(format!("{root}/adult-schema.toml")).unwrap();
    let d = anonlab_core::data::load_dataset_path(format!("{root}/adult.csv"), &schema).unwrap();
    let s = split_stratified(&d, 0.75, 0).unwrap();
    let e = fit_encoder(&s.train).unwrap();
    let train = encode(&e, &s.train).unwrap();

    let expected: usize = d
        .schema()
        .quasi_identifiers()
        .iter()
        .map(|&c| {
            let mut v: Vec<&str> = s.train.column(c).collect();
            v.sort_unstable();
            v.dedup();
            v.len()
        })
        .sum();
    assert_eq!(train.cols(), expected);
    assert!(!e.feature_columns().contains(&d.schema().sensitive()));
    let positives = s.train.labels().filter(|&y| y == ">50K").count();
    assert_eq!(train.positives(), positives);
    // Every row has exactly one active category per attribute.
    for i in 0..train.rows() {
        assert_eq!(train.row(i).iter().sum::<f64>(), 6.0);
    }
}

#[test]
fn suppression_token_is_a_category() {
    let schema = Schema::new(vec![
        AttributeSchema::new("q", Role::QuasiIdentifier, Kind::Categorical),
        AttributeSchema::new("y", Role::Sensitive, Kind::Categorical),
    ])
    .unwrap()
    .with_positive_label("1");
    let d = load_dataset("q,y\n*,1\n\"[0, 5)\",0\n*,0\n".as_bytes(), &schema).unwrap();
    let m = encode(&fit_encoder(&d).unwrap(), &d).unwrap();
    assert_eq!(m.feature_names(), &["q=*", "q=[0, 5)"]);
    assert_eq!(m.labels(), &[true, false, false]);
}
