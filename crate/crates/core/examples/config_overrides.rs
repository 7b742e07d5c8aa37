//! Configuration from TOML plus `QOTPLAN_*` environment overrides.

use qotplan::config::Config;

fn main() -> qotplan::Result<()> {
    let text = "[gbt]\nn_trees = 200\n\n[planner]\nk_paths = 2\n";
    let env = [
        ("QOTPLAN_GBT__MAX_DEPTH".to_string(), "4".to_string()),
        ("QOTPLAN_PLANNER__THRESHOLDS__QPSK".to_string(), "10.0".to_string()),
    ];
    let cfg = Config::from_sources(text, env)?;
    println!(
        "trees {}, depth {}, k {}, QPSK threshold {} dB",
        cfg.gbt.n_trees, cfg.gbt.max_depth, cfg.planner.k_paths, cfg.planner.thresholds.qpsk
    );
    for line in cfg.echo_lines().iter().take(12) {
        println!("# {line}");
    }
    Ok(())
}
