//! Error statistics of NLI estimators on labelled rows, expressed in SNR.

use std::io::Write;

use serde::Serialize;

use crate::datagen::LabeledRow;
use crate::error::{Error, Result};
use crate::gbt::GbtModel;
use crate::grid::dbm_to_w;
use crate::phys::{ase_variance, EtaNli, FiberLink};
use crate::qot::{snr_from_nli, NliFeatureVector as F};

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ErrorStats {
    pub n: usize,
    pub mean: f64,
    pub std: f64,
    pub mae: f64,
    pub p1: f64,
    pub p99: f64,
    pub p99_abs: f64,
    pub max_abs: f64,
}

/// Linear-interpolated quantile of sorted data, `q` in [0, 1].
pub fn percentile(sorted: &[f64], q: f64) -> f64 {
    if sorted.is_empty() {
        return f64::NAN;
    }
    let pos = q.clamp(0.0, 1.0) * (sorted.len() - 1) as f64;
    let lo = pos.floor() as usize;
    let hi = pos.ceil() as usize;
    sorted[lo] + (sorted[hi] - sorted[lo]) * (pos - lo as f64)
}

fn sorted(v: &[f64]) -> Vec<f64> {
    let mut s = v.to_vec();
    s.sort_by(f64::total_cmp);
    s
}

pub fn error_stats(errors: &[f64]) -> ErrorStats {
    let n = errors.len();
    let nf = n.max(1) as f64;
    let mean = errors.iter().sum::<f64>() / nf;
    let var = errors.iter().map(|e| (e - mean) * (e - mean)).sum::<f64>() / nf;
    let abs: Vec<f64> = errors.iter().map(|e| e.abs()).collect();
    let s = sorted(errors);
    let sa = sorted(&abs);
    ErrorStats {
        n,
        mean,
        std: var.sqrt(),
        mae: abs.iter().sum::<f64>() / nf,
        p1: percentile(&s, 0.01),
        p99: percentile(&s, 0.99),
        p99_abs: percentile(&sa, 0.99),
        max_abs: sa.last().copied().unwrap_or(f64::NAN),
    }
}

/// Empirical CDF sampled at `points` evenly spaced probabilities.
pub fn cdf_table(errors: &[f64], points: usize) -> Vec<(f64, f64)> {
    let s = sorted(errors);
    if s.is_empty() || points < 2 {
        return Vec::new();
    }
    (0..points)
        .map(|i| {
            let q = i as f64 / (points - 1) as f64;
            (percentile(&s, q), q)
        })
        .collect()
}

/// Counts in bins of `width` aligned at zero: `(lower edge, upper edge, count)`.
pub fn histogram(errors: &[f64], width: f64) -> Vec<(f64, f64, usize)> {
    if errors.is_empty() {
        return Vec::new();
    }
    let idx = |e: f64| (e / width).floor() as i64;
    let lo = errors.iter().map(|&e| idx(e)).min().unwrap();
    let hi = errors.iter().map(|&e| idx(e)).max().unwrap();
    let mut counts = vec![0usize; (hi - lo + 1) as usize];
    for &e in errors {
        counts[(idx(e) - lo) as usize] += 1;
    }
    counts
        .into_iter()
        .enumerate()
        .map(|(k, c)| {
            let b = lo + k as i64;
            (b as f64 * width, (b + 1) as f64 * width, c)
        })
        .collect()
}

/// SNR (dB) of a row's CUT for a given NLI coefficient.
pub fn row_snr(row: &LabeledRow, eta_db: f64, fiber: &FiberLink) -> Result<f64> {
    let link = FiberLink {
        span_length_km: row.features[F::L_SPAN],
        n_spans: row.features[F::N_SPAN] as u32,
        ..*fiber
    };
    let p = dbm_to_w(row.features[F::LAUNCH_POWER]);
    let ase = ase_variance(&link, row.symbol_rate_gbd * 1e9);
    snr_from_nli(p, ase, EtaNli(eta_db).nli_power(p))
}

/// Signed SNR errors (estimate minus oracle) of the model and of the closed form.
pub fn snr_errors(rows: &[LabeledRow], model: &GbtModel, fiber: &FiberLink) -> Result<(Vec<f64>, Vec<f64>)> {
    let mut ml = Vec::with_capacity(rows.len());
    let mut gn = Vec::with_capacity(rows.len());
    for r in rows {
        let truth = row_snr(r, r.label, fiber)?;
        ml.push(row_snr(r, model.predict(&r.features)?, fiber)? - truth);
        gn.push(row_snr(r, r.gn_eta_db, fiber)? - truth);
    }
    Ok((ml, gn))
}

pub fn write_stats<W: Write>(mut writer: W, named: &[(&str, ErrorStats)], comments: &[String]) -> Result<()> {
    for c in comments {
        writeln!(writer, "# {c}").map_err(|e| Error::io("<stats>", e))?;
    }
    let mut w = csv::Writer::from_writer(writer);
    w.write_record(["estimator", "n", "mean", "std", "mae", "p1", "p99", "p99_abs", "max_abs"])?;
    for (name, s) in named {
        let mut rec = vec![name.to_string(), s.n.to_string()];
        rec.extend([s.mean, s.std, s.mae, s.p1, s.p99, s.p99_abs, s.max_abs].map(|v| v.to_string()));
        w.write_record(&rec)?;
    }
    w.flush().map_err(|e| Error::io("<stats>", e))?;
    Ok(())
}

/// CDF of several error series side by side: `probability,<name>...`.
pub fn write_cdf<W: Write>(writer: W, named: &[(&str, &[f64])], points: usize) -> Result<()> {
    let mut w = csv::Writer::from_writer(writer);
    let mut header = vec!["probability".to_string()];
    header.extend(named.iter().map(|(n, _)| format!("{n}_error_db")));
    w.write_record(&header)?;
    let tables: Vec<_> = named.iter().map(|(_, e)| cdf_table(e, points)).collect();
    for i in 0..points {
        let mut rec = vec![(i as f64 / (points - 1) as f64).to_string()];
        rec.extend(tables.iter().map(|t| t.get(i).map(|x| x.0.to_string()).unwrap_or_default()));
        w.write_record(&rec)?;
    }
    w.flush().map_err(|e| Error::io("<cdf>", e))?;
    Ok(())
}

pub fn write_histogram<W: Write>(writer: W, name: &str, errors: &[f64], width: f64) -> Result<()> {
    let mut w = csv::Writer::from_writer(writer);
    w.write_record(["estimator", "lower_db", "upper_db", "count"])?;
    for (lo, hi, c) in histogram(errors, width) {
        w.write_record([name.to_string(), lo.to_string(), hi.to_string(), c.to_string()])?;
    }
    w.flush().map_err(|e| Error::io("<histogram>", e))?;
    Ok(())
}
