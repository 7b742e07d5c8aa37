//! Random link/spectrum scenarios and the labelled NLI dataset built from them.

use std::collections::BTreeSet;
use std::io::{Read, Write};

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::gbt::Dataset;
use crate::grid::{ChannelConfig, FlexGrid, LightpathId, DEFAULT_SLOTS};
use crate::phys::{
    gn_closed_eta, gn_oracle_all, launch_power_for, transceiver_menu, EtaNli, FiberLink,
    MenuConfig, Quadrature,
};
use crate::qot::{feature_names, features_for, label_quadrature, SciCache, FEATURE_WIDTH};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct DatagenConfig {
    pub n_scenarios: usize,
    pub seed: u64,
    pub span_lengths_km: Vec<f64>,
    pub max_spans: u32,
    pub fill_min: f64,
    pub fill_max: f64,
    pub n_slots: usize,
    pub quadrature: Quadrature,
    /// Fraction of scenarios relabelled at doubled resolution as a convergence check.
    pub spot_check_fraction: f64,
    pub menu: MenuConfig,
    pub fiber: FiberLink,
}

impl Default for DatagenConfig {
    fn default() -> Self {
        DatagenConfig {
            n_scenarios: 200,
            seed: 1,
            span_lengths_km: vec![60.0, 80.0, 100.0, 120.0],
            max_spans: 50,
            fill_min: 0.75,
            fill_max: 0.95,
            n_slots: DEFAULT_SLOTS,
            quadrature: label_quadrature(),
            spot_check_fraction: 0.01,
            menu: MenuConfig::default(),
            fiber: FiberLink::default(),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Scenario {
    pub id: u64,
    pub link: FiberLink,
    pub spectrum: Vec<ChannelConfig>,
    /// Occupied slots over total slots.
    pub fill_ratio: f64,
}

/// One CUT of one scenario.
#[derive(Debug, Clone, PartialEq)]
pub struct LabeledRow {
    pub scenario_id: u64,
    pub cut_index: usize,
    pub features: [f64; FEATURE_WIDTH],
    /// Oracle total NLI coefficient, dB.
    pub label: f64,
    pub symbol_rate_gbd: f64,
    /// Closed-form GN NLI coefficient for the same channel, dB.
    pub gn_eta_db: f64,
}

/// Independent random stream of scenario `id`.
pub fn scenario_rng(seed: u64, id: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(id);
    rng
}

pub fn sample_scenario(cfg: &DatagenConfig, id: u64) -> Scenario {
    let mut rng = scenario_rng(cfg.seed, id);
    let span = *cfg.span_lengths_km.choose(&mut rng).expect("span length list is empty");
    let n_spans = rng.gen_range(1..=cfg.max_spans);
    let link = FiberLink {
        span_length_km: span,
        n_spans,
        ..cfg.fiber
    };
    let menu = transceiver_menu(&cfg.menu);
    let target = rng.gen_range(cfg.fill_min..=cfg.fill_max);
    let cap = (cfg.fill_max * cfg.n_slots as f64).floor() as usize;
    let mut grid = FlexGrid::new(cfg.n_slots);
    let mut spectrum = Vec::new();
    while (grid.occupied() as f64) < target * cfg.n_slots as f64 {
        let room = cap.saturating_sub(grid.occupied());
        let mut mode = *menu.choose(&mut rng).expect("empty transceiver menu");
        if mode.slots > room {
            let fitting: Vec<_> = menu.iter().filter(|m| m.slots <= room).collect();
            match fitting.choose(&mut rng) {
                Some(m) => mode = **m,
                None => break,
            }
        }
        let Some(range) = grid.first_fit(mode.slots) else { break };
        grid.place(range, LightpathId(spectrum.len() as u32))
            .expect("first fit returned a free range");
        spectrum.push(ChannelConfig {
            center_hz: grid.center_frequency(range),
            symbol_rate_gbd: mode.symbol_rate_gbd,
            modulation: mode.modulation,
            data_rate_gbps: mode.data_rate_gbps,
            launch_power_dbm: launch_power_for(mode.symbol_rate_gbd),
        });
    }
    Scenario {
        id,
        link,
        fill_ratio: grid.occupied() as f64 / cfg.n_slots as f64,
        spectrum,
    }
}

/// Labels every channel of a scenario. SCI features share one cache.
pub fn label_scenario(sc: &Scenario, quad: &Quadrature) -> Result<Vec<LabeledRow>> {
    let oracle = gn_oracle_all(&sc.link, &sc.spectrum, quad)?;
    let mut cache = SciCache::new(*quad);
    let mut rows = Vec::with_capacity(sc.spectrum.len());
    for (i, out) in oracle.iter().enumerate() {
        let c = &sc.spectrum[i];
        let f = features_for(sc.id, &sc.link, &sc.spectrum, i, &mut cache)?;
        let gn = gn_closed_eta(&sc.link, &sc.spectrum, i)?;
        let p = c.launch_power_w();
        rows.push(LabeledRow {
            scenario_id: sc.id,
            cut_index: i,
            features: f.0,
            label: EtaNli::from_power(out.nli_w(), p).db(),
            symbol_rate_gbd: c.symbol_rate_gbd,
            gn_eta_db: EtaNli::from_power(gn.nli_w(), p).db(),
        });
    }
    Ok(rows)
}

/// Result of a dataset build.
#[derive(Debug, Clone, Default)]
pub struct BuildOutput {
    pub rows: Vec<LabeledRow>,
    /// Scenarios dropped because labelling failed.
    pub skipped: Vec<(u64, String)>,
    /// (scenario id, largest label change in dB on doubling the resolution).
    pub spot_checks: Vec<(u64, f64)>,
}

fn is_spot_checked(cfg: &DatagenConfig, id: u64) -> bool {
    if cfg.spot_check_fraction <= 0.0 {
        return false;
    }
    let every = (1.0 / cfg.spot_check_fraction).round().max(1.0) as u64;
    id % every == 0
}

pub fn build_dataset(cfg: &DatagenConfig) -> BuildOutput {
    let results: Vec<_> = (0..cfg.n_scenarios as u64)
        .into_par_iter()
        .map(|id| {
            let sc = sample_scenario(cfg, id);
            let rows = label_scenario(&sc, &cfg.quadrature);
            let check = match (&rows, is_spot_checked(cfg, id)) {
                (Ok(rows), true) => Some(spot_check(&sc, rows, &cfg.quadrature)),
                _ => None,
            };
            (id, rows, check)
        })
        .collect();
    let mut out = BuildOutput::default();
    for (id, rows, check) in results {
        match rows {
            Ok(rows) => out.rows.extend(rows),
            Err(e) => {
                log::warn!("scenario {id} skipped: {e}");
                out.skipped.push((id, e.to_string()));
            }
        }
        match check {
            Some(Ok(delta)) => out.spot_checks.push((id, delta)),
            Some(Err(e)) => log::warn!("spot check of scenario {id} failed: {e}"),
            None => {}
        }
    }
    out
}

fn spot_check(sc: &Scenario, rows: &[LabeledRow], quad: &Quadrature) -> Result<f64> {
    let fine = gn_oracle_all(&sc.link, &sc.spectrum, &quad.doubled().unchecked())?;
    let mut worst: f64 = 0.0;
    for (r, f) in rows.iter().zip(&fine) {
        let p = sc.spectrum[r.cut_index].launch_power_w();
        worst = worst.max((EtaNli::from_power(f.nli_w(), p).db() - r.label).abs());
    }
    Ok(worst)
}

/// Scenario-level 70/10/20 split.
pub fn split_dataset(
    rows: &[LabeledRow],
    seed: u64,
) -> (Vec<LabeledRow>, Vec<LabeledRow>, Vec<LabeledRow>) {
    let ids: BTreeSet<u64> = rows.iter().map(|r| r.scenario_id).collect();
    let mut ids: Vec<u64> = ids.into_iter().collect();
    ids.shuffle(&mut ChaCha8Rng::seed_from_u64(seed));
    let n = ids.len();
    let n_train = (0.7 * n as f64).round() as usize;
    let n_val = (0.1 * n as f64).round() as usize;
    let part = |lo: usize, hi: usize| -> BTreeSet<u64> { ids[lo..hi.min(n)].iter().copied().collect() };
    let (tr, va) = (part(0, n_train), part(n_train, n_train + n_val));
    let (mut a, mut b, mut c) = (Vec::new(), Vec::new(), Vec::new());
    for r in rows {
        if tr.contains(&r.scenario_id) {
            a.push(r.clone());
        } else if va.contains(&r.scenario_id) {
            b.push(r.clone());
        } else {
            c.push(r.clone());
        }
    }
    (a, b, c)
}

/// Feature matrix and labels for the learner.
pub fn to_dataset(rows: &[LabeledRow]) -> Dataset {
    let mut d = Dataset::new(FEATURE_WIDTH);
    for r in rows {
        d.push(&r.features, r.label).expect("fixed width");
    }
    d
}

fn header() -> Vec<String> {
    let mut h = vec!["scenario_id".to_string(), "cut_index".to_string()];
    h.extend(feature_names());
    h.extend(["eta_db", "symbol_rate_gbd", "gn_eta_db"].map(String::from));
    h
}

/// Writes rows as CSV; `comments` become leading `# ` lines.
pub fn write_rows<W: Write>(mut writer: W, rows: &[LabeledRow], comments: &[String]) -> Result<()> {
    for c in comments {
        writeln!(writer, "# {c}").map_err(|e| Error::io("<dataset>", e))?;
    }
    let mut w = csv::Writer::from_writer(writer);
    w.write_record(header())?;
    for r in rows {
        let mut rec = vec![r.scenario_id.to_string(), r.cut_index.to_string()];
        rec.extend(r.features.iter().map(|v| v.to_string()));
        rec.push(r.label.to_string());
        rec.push(r.symbol_rate_gbd.to_string());
        rec.push(r.gn_eta_db.to_string());
        w.write_record(&rec)?;
    }
    w.flush().map_err(|e| Error::io("<dataset>", e))?;
    Ok(())
}

pub fn read_rows<R: Read>(reader: R, location: &str) -> Result<Vec<LabeledRow>> {
    let mut rdr = csv::ReaderBuilder::new().comment(Some(b'#')).from_reader(reader);
    let expected = header();
    let got: Vec<String> = rdr.headers()?.iter().map(String::from).collect();
    if got != expected {
        return Err(Error::parse(
            location,
            format!("expected {} columns {:?}, got {:?}", expected.len(), expected, got),
        ));
    }
    let mut out = Vec::new();
    for (i, rec) in rdr.records().enumerate() {
        let rec = rec?;
        let loc = || format!("{location}: record {}", i + 1);
        let num = |j: usize| -> Result<f64> {
            rec[j]
                .parse::<f64>()
                .map_err(|e| Error::parse(loc(), format!("column {}: {e}", expected[j])))
        };
        let int = |j: usize| -> Result<u64> {
            rec[j]
                .parse::<u64>()
                .map_err(|e| Error::parse(loc(), format!("column {}: {e}", expected[j])))
        };
        let mut features = [0.0; FEATURE_WIDTH];
        for (k, f) in features.iter_mut().enumerate() {
            *f = num(2 + k)?;
        }
        out.push(LabeledRow {
            scenario_id: int(0)?,
            cut_index: int(1)? as usize,
            features,
            label: num(2 + FEATURE_WIDTH)?,
            symbol_rate_gbd: num(3 + FEATURE_WIDTH)?,
            gn_eta_db: num(4 + FEATURE_WIDTH)?,
        });
    }
    Ok(out)
}
