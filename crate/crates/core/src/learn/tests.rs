use proptest::prelude::*;
use rand::Rng;
use rand_distr::{Distribution, Normal};

use super::gbdt::{log_loss, train_gbdt_traced};
use super::*;
use crate::rng::stream;

fn table_from(rows: Vec<Vec<f64>>, labels: Vec<u8>) -> FeatureTable {
    let p = rows.first().map_or(0, Vec::len);
    FeatureTable::new(
        (0..p).map(|j| format!("f{j}")).collect(),
        (0..rows.len()).map(|i| format!("s{i:02}")).collect(),
        labels,
        rows,
    )
    .unwrap()
}

fn two_clusters(n: usize, seed: u64) -> FeatureTable {
    let mut rng = stream(seed, &[]);
    let noise = Normal::new(0.0, 0.5).unwrap();
    let mut rows = Vec::new();
    let mut labels = Vec::new();
    for i in 0..n {
        let l = (i % 2) as u8;
        let c = if l == 1 { 3.0 } else { -3.0 };
        rows.push(vec![c + noise.sample(&mut rng), c + noise.sample(&mut rng)]);
        labels.push(l);
    }
    table_from(rows, labels)
}

fn noise_table(n: usize, p: usize, seed: u64) -> FeatureTable {
    let mut rng = stream(seed, &[]);
    let rows = (0..n)
        .map(|_| (0..p).map(|_| rng.random::<f64>()).collect())
        .collect();
    let labels = (0..n).map(|i| (i % 2) as u8).collect();
    table_from(rows, labels)
}

fn accuracy(model: &TrainedModel, t: &FeatureTable) -> f64 {
    let p = model.predict(t).unwrap();
    p.labels
        .iter()
        .zip(&t.labels)
        .filter(|(a, b)| a == b)
        .count() as f64
        / t.n_rows() as f64
}

fn xor() -> FeatureTable {
    table_from(
        vec![
            vec![0.0, 0.0],
            vec![1.0, 1.0],
            vec![0.0, 1.0],
            vec![1.0, 0.0],
        ],
        vec![0, 0, 1, 1],
    )
}

#[test]
fn single_tree_purity() {
    let t = noise_table(30, 3, 1);
    let spec = ModelSpec::RandomForest(ForestParams {
        n_trees: 1,
        bootstrap: false,
        ..ForestParams::default()
    });
    assert_eq!(accuracy(&spec.train(&t, 5).unwrap(), &t), 1.0);
}

#[test]
fn forest_single_label() {
    let t = table_from(vec![vec![0.0], vec![1.0], vec![2.0]], vec![1, 1, 1]);
    let m = ModelSpec::default_for(ModelKind::RandomForest)
        .train(&t, 1)
        .unwrap();
    let p = m.predict(&t).unwrap();
    assert_eq!(p.labels, vec![1, 1, 1]);
    assert_eq!(p.scores, vec![1.0, 1.0, 1.0]);
}

#[test]
fn forest_two_clusters() {
    let t = two_clusters(40, 3);
    let spec = ModelSpec::RandomForest(ForestParams {
        n_trees: 25,
        ..ForestParams::default()
    });
    assert_eq!(accuracy(&spec.train(&t, 11).unwrap(), &t), 1.0);
}

#[test]
fn forest_degenerate_params() {
    let t = two_clusters(10, 3);
    for p in [
        ForestParams {
            n_trees: 0,
            ..ForestParams::default()
        },
        ForestParams {
            max_depth: Some(0),
            ..ForestParams::default()
        },
        ForestParams {
            mtry: Mtry::Count(0),
            ..ForestParams::default()
        },
    ] {
        assert!(ModelSpec::RandomForest(p).train(&t, 0).is_err());
    }
}

#[test]
fn mtry_resolution() {
    assert_eq!(Mtry::Sqrt.resolve(1), 1);
    assert_eq!(Mtry::Sqrt.resolve(8), 2);
    assert_eq!(Mtry::Sqrt.resolve(9), 3);
    assert_eq!(Mtry::Count(50).resolve(4), 4);
}

#[test]
fn svm_xor() {
    let spec = ModelSpec::SvmRbf(SvmParams {
        c: 10.0,
        gamma: 1.0,
        ..SvmParams::default()
    });
    let t = xor();
    let m = spec.train(&t, 0).unwrap();
    assert_eq!(accuracy(&m, &t), 1.0);
    let ModelState::SvmRbf(s) = &m.state else {
        panic!()
    };
    assert!(s.converged);
}

#[test]
fn svm_separated_pair() {
    let t = table_from(vec![vec![-1.0, 0.0], vec![1.0, 0.0]], vec![0, 1]);
    let m = ModelSpec::default_for(ModelKind::SvmRbf)
        .train(&t, 0)
        .unwrap();
    let p = m.predict(&t).unwrap();
    assert!(p.scores[0] < 0.0 && p.scores[1] > 0.0);
    assert_eq!(p.labels, vec![0, 1]);
}

#[test]
fn svm_duplicates_keep_predictions() {
    let t = two_clusters(20, 8);
    let spec = ModelSpec::SvmRbf(SvmParams::default());
    let base = spec.train(&t, 0).unwrap().predict(&t).unwrap();
    let idx: Vec<usize> = (0..t.n_rows()).chain(0..t.n_rows()).collect();
    let mut doubled = t.subset_rows(&idx);
    doubled.subject_ids = (0..idx.len()).map(|i| format!("d{i}")).collect();
    let again = spec.train(&doubled, 0).unwrap().predict(&t).unwrap();
    assert_eq!(base.labels, again.labels);

    let xor2 = xor().subset_rows(&[0, 1, 2, 3, 0, 1, 2, 3]);
    let spec = ModelSpec::SvmRbf(SvmParams {
        c: 10.0,
        gamma: 1.0,
        ..SvmParams::default()
    });
    assert_eq!(
        spec.train(&xor2, 0)
            .unwrap()
            .predict(&xor())
            .unwrap()
            .labels,
        vec![0, 0, 1, 1]
    );
}

#[test]
fn svm_max_iter_returns_iterate() {
    let t = two_clusters(20, 8);
    let spec = ModelSpec::SvmRbf(SvmParams {
        max_iter: 1,
        ..SvmParams::default()
    });
    let m = spec.train(&t, 0).unwrap();
    let ModelState::SvmRbf(s) = &m.state else {
        panic!()
    };
    assert!(!s.converged);
    assert_eq!(s.iterations, 1);
}

#[test]
fn svm_single_class_is_error() {
    let t = table_from(vec![vec![0.0], vec![1.0]], vec![1, 1]);
    assert!(ModelSpec::default_for(ModelKind::SvmRbf)
        .train(&t, 0)
        .is_err());
}

#[test]
fn gbdt_binary_feature() {
    let labels: Vec<u8> = (0..20).map(|i| (i % 2) as u8).collect();
    let rows = labels.iter().map(|&l| vec![l as f64]).collect();
    let t = table_from(rows, labels);
    let spec = ModelSpec::Gbdt(GbdtParams {
        n_trees: 100,
        ..GbdtParams::default()
    });
    assert_eq!(accuracy(&spec.train(&t, 0).unwrap(), &t), 1.0);
}

#[test]
fn gbdt_zero_learning_rate_is_prior() {
    let t = noise_table(10, 2, 4).subset_rows(&[0, 1, 2, 3, 4, 5, 6, 8]);
    let spec = ModelSpec::Gbdt(GbdtParams {
        learning_rate: 0.0,
        n_trees: 20,
        ..GbdtParams::default()
    });
    let p = spec.train(&t, 0).unwrap().predict(&t).unwrap();
    let prior = t.labels.iter().filter(|&&l| l == 1).count() as f64 / t.n_rows() as f64;
    for s in p.scores {
        assert!((s - prior).abs() < 1e-12);
    }
}

#[test]
fn gbdt_loss_non_increasing() {
    let t = noise_table(40, 10, 9);
    let params = GbdtParams {
        n_trees: 300,
        ..GbdtParams::default()
    };
    let (state, trace) = train_gbdt_traced(&t, &params).unwrap();
    let y = t.label_values();
    let init = log_loss(&y, &vec![state.init_score; y.len()]);
    let mut prev = init;
    for &l in &trace {
        assert!(l <= prev + 1e-12, "{l} > {prev}");
        prev = l;
    }
    assert!(trace.last().unwrap() < &init);
}

#[test]
fn gbdt_learns_leaf_wise_trees() {
    let t = noise_table(64, 4, 2);
    let (state, _) = train_gbdt_traced(
        &t,
        &GbdtParams {
            n_trees: 5,
            min_samples_leaf: 1,
            ..GbdtParams::default()
        },
    )
    .unwrap();
    for tree in &state.trees {
        assert!(tree.n_leaves() <= 31);
        assert!(tree.n_leaves() > 2);
    }
}

#[test]
fn split_importance_examples() {
    let labels: Vec<u8> = (0..20).map(|i| (i % 2) as u8).collect();
    let rows = labels
        .iter()
        .enumerate()
        .map(|(i, &l)| vec![l as f64 + 0.01 * i as f64, 5.0])
        .collect();
    let t = table_from(rows, labels);
    let m = ModelSpec::Gbdt(GbdtParams {
        n_trees: 50,
        ..GbdtParams::default()
    })
    .train(&t, 0)
    .unwrap();
    let imp = split_importance(&m).unwrap();
    assert!(imp["f0"] >= 1);
    assert_eq!(imp["f1"], 0);
    assert_eq!(select_by_importance(&m, 1).unwrap(), vec!["f0"]);

    let empty = ModelSpec::Gbdt(GbdtParams {
        n_trees: 0,
        ..GbdtParams::default()
    })
    .train(&t, 0)
    .unwrap();
    assert!(split_importance(&empty).unwrap().values().all(|&c| c == 0));
    assert!(select_by_importance(&empty, 1).unwrap().is_empty());

    let rf = ModelSpec::default_for(ModelKind::RandomForest)
        .train(&t, 0)
        .unwrap();
    assert!(split_importance(&rf).is_err());
}

#[test]
fn predict_contract() {
    let t = two_clusters(20, 5);
    for kind in ModelKind::ALL {
        let mut spec = ModelSpec::default_for(kind);
        if let ModelSpec::Gbdt(p) = &mut spec {
            p.n_trees = 50;
        }
        let m = spec.train(&t, 3).unwrap();
        let empty = t.subset_rows(&[]);
        assert_eq!(m.predict(&empty).unwrap(), Prediction::default());

        let full = m.predict(&t).unwrap();
        let perm: Vec<usize> = (0..t.n_rows()).rev().collect();
        let p = m.predict(&t.subset_rows(&perm)).unwrap();
        for (k, &i) in perm.iter().enumerate() {
            assert_eq!(p.labels[k], full.labels[i]);
            assert_eq!(p.scores[k], full.scores[i]);
        }

        let renamed = FeatureTable {
            feature_names: vec!["f1".into(), "f0".into()],
            ..t.clone()
        };
        assert!(matches!(
            m.predict(&renamed),
            Err(crate::Error::SchemaMismatch(_))
        ));

        let back = TrainedModel::from_json(&m.to_json().unwrap()).unwrap();
        assert_eq!(back.predict(&t).unwrap(), full);
        assert_eq!(back.kind(), kind);
    }
}

#[test]
fn trainers_are_deterministic() {
    let t = noise_table(30, 6, 12);
    for kind in ModelKind::ALL {
        let mut spec = ModelSpec::default_for(kind);
        if let ModelSpec::Gbdt(p) = &mut spec {
            p.n_trees = 30;
        }
        assert_eq!(spec.train(&t, 77).unwrap(), spec.train(&t, 77).unwrap());
    }
    let rf = ModelSpec::default_for(ModelKind::RandomForest);
    assert_ne!(rf.train(&t, 1).unwrap(), rf.train(&t, 2).unwrap());
}

#[test]
fn model_schema_version_checked() {
    let t = two_clusters(10, 5);
    let m = ModelSpec::default_for(ModelKind::SvmRbf)
        .train(&t, 0)
        .unwrap();
    let json = m
        .to_json()
        .unwrap()
        .replacen("\"schema_version\": 1", "\"schema_version\": 99", 1);
    assert!(TrainedModel::from_json(&json).is_err());
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(16))]

    #[test]
    fn monotone_transform_keeps_tree_predictions(seed in 0u64..1000, kind in 0usize..2) {
        let t = noise_table(24, 3, seed);
        let mut warped = t.clone();
        for r in &mut warped.rows {
            r[0] = r[0].exp() * 3.0;
            r[1] = r[1].powi(3) - 2.0;
            r[2] = (r[2] + 1.0).ln();
        }
        // Out-of-bag rows can fall between warped midpoints, so bootstrap is off.
        let spec = if kind == 0 {
            ModelSpec::RandomForest(ForestParams { n_trees: 10, bootstrap: false, ..ForestParams::default() })
        } else {
            ModelSpec::Gbdt(GbdtParams { n_trees: 40, ..GbdtParams::default() })
        };
        let a = spec.train(&t, seed).unwrap().predict(&t).unwrap();
        let b = spec.train(&warped, seed).unwrap().predict(&warped).unwrap();
        prop_assert_eq!(a.labels, b.labels);
        for (x, y) in a.scores.iter().zip(&b.scores) {
            prop_assert!((x - y).abs() < 1e-12);
        }
    }
}

#[test]
fn planted_table_layout() {
    let layout = PlantedTable::default();
    let t = layout.generate(3).unwrap();
    assert_eq!((t.n_rows(), t.n_features()), (40, 60));
    assert_eq!(t.class_counts(), [20, 20]);
    assert_eq!(t, layout.generate(3).unwrap());
    for (j, name) in layout.planted_names().iter().enumerate() {
        assert_eq!(&t.feature_names[j], name);
        let col = t.column(j);
        let positives_high = t
            .labels
            .iter()
            .zip(&col)
            .filter(|(&l, _)| l == 1)
            .all(|(_, &v)| v >= layout.shift);
        assert!(positives_high);
        let sole_low = (0..t.n_rows()).filter(|&i| {
            let low: Vec<bool> = (0..3).map(|k| t.rows[i][k] < layout.shift).collect();
            low[j] && low.iter().filter(|&&b| b).count() == 1
        });
        assert!(sole_low.count() >= 2, "planted{j} is redundant");
    }
    assert!(t.column(59).iter().all(|&v| v == 6.0));
    assert!(PlantedTable {
        n_planted: 0,
        ..layout.clone()
    }
    .generate(0)
    .is_err());
    assert!(PlantedTable {
        shift: 0.0,
        ..layout
    }
    .generate(0)
    .is_err());
}
