use qotplan::gbt::{fit, Dataset, GbtModel, Hyperparams, Node};
use qotplan::Error;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn linear_data(n: usize, seed: u64) -> Dataset {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut d = Dataset::new(25);
    for _ in 0..n {
        let x: Vec<f64> = (0..25).map(|_| rng.gen_range(-1.0..1.0)).collect();
        d.push(&x, 3.0 * x[0]).unwrap();
    }
    d
}

fn hp(n_trees: usize, max_depth: usize) -> Hyperparams {
    Hyperparams {
        n_trees,
        max_depth,
        patience: 0,
        ..Default::default()
    }
}

fn std(v: &[f64]) -> f64 {
    let m = v.iter().sum::<f64>() / v.len() as f64;
    (v.iter().map(|x| (x - m) * (x - m)).sum::<f64>() / v.len() as f64).sqrt()
}

/// Walks the JSON dump directly, independent of the crate's own traversal.
fn reference_predict(json: &serde_json::Value, x: &[f64]) -> f64 {
    let mut s = 0.0;
    for tree in json["trees"].as_array().unwrap() {
        let nodes = tree["nodes"].as_array().unwrap();
        let mut i = 0;
        loop {
            let n = &nodes[i];
            if n["type"] == "leaf" {
                s += n["value"].as_f64().unwrap();
                break;
            }
            let f = n["feature"].as_u64().unwrap() as usize;
            let go_left = x[f] < n["threshold"].as_f64().unwrap();
            i = n[if go_left { "left" } else { "right" }].as_u64().unwrap() as usize;
        }
    }
    json["base_score"].as_f64().unwrap() + json["learning_rate"].as_f64().unwrap() * s
}

#[test]
fn linear_target_is_fitted_and_explained_by_feature_zero() {
    let d = linear_data(1000, 1);
    let (model, _) = fit(&d, None, &hp(200, 4), 5).unwrap();
    let sq: f64 = (0..d.len())
        .map(|i| (model.predict(d.row(i)).unwrap() - d.y[i]).powi(2))
        .sum();
    let rmse = (sq / d.len() as f64).sqrt();
    assert!(rmse < 0.05 * std(&d.y), "rmse {rmse}");
    let imp = model.importance();
    let total: f64 = imp.iter().sum();
    assert!(imp.iter().all(|g| *g >= 0.0));
    assert!(imp[0] / total > 0.95, "feature 0 share {}", imp[0] / total);
}

#[test]
fn same_seed_gives_identical_model_file() {
    let d = linear_data(400, 2);
    let h = Hyperparams {
        n_trees: 30,
        feature_subsample: 0.5,
        row_subsample: 0.7,
        ..Default::default()
    };
    let a = fit(&d, None, &h, 9).unwrap().0.to_json();
    let b = fit(&d, None, &h, 9).unwrap().0.to_json();
    assert_eq!(a, b);
    let c = fit(&d, None, &h, 10).unwrap().0.to_json();
    assert_ne!(a, c);
}

#[test]
fn predict_matches_reference_interpreter() {
    let d = linear_data(500, 3);
    let (model, _) = fit(&d, None, &hp(40, 5), 1).unwrap();
    let json: serde_json::Value = serde_json::from_str(&model.to_json()).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(4);
    for _ in 0..1000 {
        let x: Vec<f64> = (0..25).map(|_| rng.gen_range(-1.5..1.5)).collect();
        let a = model.predict(&x).unwrap();
        let b = reference_predict(&json, &x);
        assert!((a - b).abs() <= 1e-12 * b.abs().max(1.0), "{a} vs {b}");
    }
}

#[test]
fn save_load_is_bit_exact() {
    let d = linear_data(500, 5);
    let (model, _) = fit(&d, None, &hp(50, 4), 2).unwrap();
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("m.json");
    model.save(&path).unwrap();
    let back = GbtModel::load(&path).unwrap();
    assert_eq!(back, model);
    let mut rng = ChaCha8Rng::seed_from_u64(6);
    for _ in 0..1000 {
        let x: Vec<f64> = (0..25).map(|_| rng.gen_range(-2.0..2.0)).collect();
        assert_eq!(model.predict(&x).unwrap().to_bits(), back.predict(&x).unwrap().to_bits());
    }
}

#[test]
fn truncated_and_foreign_files_are_rejected() {
    let (model, _) = fit(&linear_data(200, 7), None, &hp(5, 3), 1).unwrap();
    let text = model.to_json();
    assert!(GbtModel::from_json(&text[..text.len() / 2]).is_err());
    let other = text.replace("qotplan-gbt/1", "qotplan-gbt/9");
    assert!(matches!(GbtModel::from_json(&other), Err(Error::Version { .. })));
}

#[test]
fn empty_ensemble_and_width_checks() {
    let m = GbtModel::constant(25, -31.5);
    assert_eq!(m.predict(&[0.3; 25]).unwrap(), -31.5);
    assert!(m.importance().iter().all(|g| *g == 0.0));
    assert!(matches!(m.predict(&[0.0; 24]), Err(Error::Width { expected: 25, got: 24 })));
}

#[test]
fn order_preserving_transform_keeps_tree_shape() {
    let d = linear_data(300, 8);
    let mut t = d.clone();
    for i in 0..t.len() {
        let v = t.x[i * 25 + 3];
        t.x[i * 25 + 3] = v.exp() * 10.0 + 2.0;
    }
    let h = hp(20, 4);
    let (a, _) = fit(&d, None, &h, 3).unwrap();
    let (b, _) = fit(&t, None, &h, 3).unwrap();
    let shape = |m: &GbtModel| -> Vec<Vec<Option<usize>>> {
        m.trees
            .iter()
            .map(|tr| {
                tr.nodes
                    .iter()
                    .map(|n| match n {
                        Node::Split { feature, .. } => Some(*feature),
                        Node::Leaf { .. } => None,
                    })
                    .collect()
            })
            .collect()
    };
    assert_eq!(shape(&a), shape(&b));
}

#[test]
fn shuffled_irrelevant_feature_gets_little_gain() {
    let d = linear_data(800, 9);
    let mut p = d.clone();
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    for i in (1..p.len()).rev() {
        let j = rng.gen_range(0..=i);
        let (a, b) = (p.x[i * 25 + 7], p.x[j * 25 + 7]);
        p.x[i * 25 + 7] = b;
        p.x[j * 25 + 7] = a;
    }
    let h = hp(60, 4);
    for data in [&d, &p] {
        let imp = fit(data, None, &h, 4).unwrap().0.importance();
        let total: f64 = imp.iter().sum();
        assert!(imp[7] / total < 0.01, "share {}", imp[7] / total);
    }
}

#[test]
fn early_stopping_never_keeps_a_worse_round() {
    let train = linear_data(600, 10);
    let val = linear_data(200, 11);
    let h = Hyperparams {
        n_trees: 150,
        patience: 10,
        learning_rate: 0.3,
        ..Default::default()
    };
    let (model, report) = fit(&train, Some(&val), &h, 1).unwrap();
    assert_eq!(model.trees.len(), report.best_round);
    let best = report.val_loss[report.best_round - 1];
    assert!(report.val_loss[report.best_round..].iter().all(|v| *v >= best));
    assert!(report.train_loss.windows(2).all(|w| w[1] <= w[0] + 1e-12));
}
