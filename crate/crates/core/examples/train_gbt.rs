//! Boosted trees on a synthetic function, then a save/load round trip.

use qotplan::gbt::{fit, Dataset, GbtModel, Hyperparams};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn target(x: &[f64]) -> f64 {
    (3.0 * x[0]).sin() + x[1] * x[1] - 0.5 * x[2]
}

fn sample(n: usize, rng: &mut ChaCha8Rng) -> Dataset {
    let mut d = Dataset::new(4);
    for _ in 0..n {
        let x: Vec<f64> = (0..4).map(|_| rng.gen_range(-1.0..1.0)).collect();
        d.push(&x, target(&x)).unwrap();
    }
    d
}

fn main() -> qotplan::Result<()> {
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let (train, val, test) = (sample(2000, &mut rng), sample(400, &mut rng), sample(400, &mut rng));
    let hp = Hyperparams {
        n_trees: 300,
        max_depth: 4,
        ..Default::default()
    };
    let (model, report) = fit(&train, Some(&val), &hp, 11)?;
    let mse = (0..test.len())
        .map(|i| (model.predict_unchecked(test.row(i)) - test.y[i]).powi(2))
        .sum::<f64>()
        / test.len() as f64;
    println!("{} trees kept, test MSE {mse:.5}", report.best_round);
    println!("split-gain importance: {:?}", model.importance().iter().map(|v| (v * 1000.0).round() / 1000.0).collect::<Vec<_>>());

    let path = std::env::temp_dir().join("qotplan_synthetic_model.json");
    model.save(&path)?;
    let back = GbtModel::load(&path)?;
    let same = (0..test.len()).all(|i| {
        back.predict_unchecked(test.row(i)).to_bits() == model.predict_unchecked(test.row(i)).to_bits()
    });
    println!("reloaded from {}: predictions bit-identical = {same}", path.display());
    Ok(())
}
