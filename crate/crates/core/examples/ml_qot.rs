//! The split QoT estimator end to end: label a small dataset, train the
//! ensemble on SCI features, then compare it with the closed-form GN on a
//! fresh scenario, both against the numerical integral.
//!
//! ```text
//! cargo run --release --example ml_qot
//! ```

use qotplan::datagen::{build_dataset, sample_scenario, to_dataset, DatagenConfig};
use qotplan::gbt::{fit, Hyperparams};
use qotplan::phys::{ase_variance, gn_oracle_all, Quadrature};
use qotplan::qot::{snr_from_nli, GnPce, MlPce, Pce, SciCache};

fn main() -> qotplan::Result<()> {
    let cfg = DatagenConfig {
        n_scenarios: 16,
        max_spans: 20,
        ..Default::default()
    };
    let rows = build_dataset(&cfg).rows;
    let (model, report) = fit(&to_dataset(&rows), None, &Hyperparams { n_trees: 150, ..Default::default() }, 11)?;
    println!("trained on {} channels, {} trees", rows.len(), report.best_round);

    let sc = sample_scenario(&cfg, 10_000);
    let truth = gn_oracle_all(&sc.link, &sc.spectrum, &Quadrature::default())?;
    let mut ml = MlPce::new(model, SciCache::default())?;
    let mut gn = GnPce::new();
    let ml_snr = ml.evaluate(0, &sc.link, &sc.spectrum)?;
    let gn_snr = gn.evaluate(0, &sc.link, &sc.spectrum)?;
    let (mut e_ml, mut e_gn) = (0.0, 0.0);
    for (i, ch) in sc.spectrum.iter().enumerate() {
        let p = ch.launch_power_w();
        let t = snr_from_nli(p, ase_variance(&sc.link, ch.symbol_rate_hz()), truth[i].nli_w())?;
        e_ml += (ml_snr[i] - t).abs();
        e_gn += (gn_snr[i] - t).abs();
    }
    let n = sc.spectrum.len() as f64;
    println!(
        "{} channels over {} x {:.0} km: SNR MAE ml {:.3} dB, gn {:.3} dB",
        sc.spectrum.len(),
        sc.link.n_spans,
        sc.link.span_length_km,
        e_ml / n,
        e_gn / n
    );
    println!("SCI cache holds {} entries", ml.cache.len());
    Ok(())
}
