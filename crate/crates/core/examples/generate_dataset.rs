//! Samples a handful of scenarios, labels every channel with the numerical GN
//! integral and writes the rows as CSV.
//!
//! ```text
//! cargo run --release --example generate_dataset -- 6 /tmp/rows.csv
//! ```

use std::fs::File;

use qotplan::datagen::{build_dataset, split_dataset, write_rows, DatagenConfig};

fn main() -> qotplan::Result<()> {
    let mut args = std::env::args().skip(1);
    let n: usize = args.next().and_then(|a| a.parse().ok()).unwrap_or(4);
    let out = args.next().unwrap_or_else(|| {
        std::env::temp_dir().join("qotplan_rows.csv").display().to_string()
    });
    let cfg = DatagenConfig {
        n_scenarios: n,
        ..Default::default()
    };
    let built = build_dataset(&cfg);
    for (id, msg) in &built.skipped {
        eprintln!("scenario {id} skipped: {msg}");
    }
    for (id, d) in &built.spot_checks {
        println!("scenario {id}: labels move at most {d:.4} dB on doubling the quadrature");
    }
    let (train, val, test) = split_dataset(&built.rows, 7);
    println!(
        "{} rows from {n} scenarios; split {}/{}/{}",
        built.rows.len(),
        train.len(),
        val.len(),
        test.len()
    );
    let f = File::create(&out).map_err(|e| qotplan::Error::Data(format!("{out}: {e}")))?;
    write_rows(f, &built.rows, &[format!("scenarios = {n}")])?;
    println!("wrote {out}");
    Ok(())
}
