//! Command-line front end: `gen-data`, `train`, `eval`, `plan`, `compare`.

use std::ffi::OsString;
use std::fs::File;
use std::io::{BufReader, BufWriter};
use std::path::{Path, PathBuf};

use clap::{Parser, Subcommand, ValueEnum};

use crate::config::Config;
use crate::datagen::{build_dataset, read_rows, split_dataset, to_dataset, write_rows};
use crate::error::{Error, Result};
use crate::eval::{error_stats, snr_errors, write_cdf, write_histogram, write_stats};
use crate::gbt::{fit, GbtModel};
use crate::netmodel::{load_demands, load_topology};
use crate::planner::{read_report, run_study, write_report, write_timing, PeriodReport, Rcsa};
use crate::qot::{GnPce, MlPce, Pce, SciCache};

#[derive(Parser, Debug)]
#[command(name = "qotplan", version, about = "Flex-grid planning with an ML QoT estimator")]
pub struct Cli {
    /// TOML configuration; QOTPLAN_<SECTION>__<KEY> variables override it.
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Subcommand, Debug)]
pub enum Command {
    /// Sample scenarios, label them with the integral model and write a dataset CSV.
    GenData {
        #[arg(long)]
        scenarios: Option<usize>,
        #[arg(long)]
        seed: Option<u64>,
        #[arg(long)]
        out: PathBuf,
    },
    /// Fit the tree ensemble on the training split of a dataset.
    Train {
        #[arg(long)]
        data: PathBuf,
        #[arg(long)]
        out: PathBuf,
        /// Per-round losses; defaults to `<out>.report.csv`.
        #[arg(long)]
        report: Option<PathBuf>,
    },
    /// SNR error statistics of the model and the closed form on the test split.
    Eval {
        #[arg(long)]
        model: PathBuf,
        #[arg(long)]
        data: PathBuf,
        #[arg(long)]
        out: PathBuf,
        /// Evaluate every row instead of the test split.
        #[arg(long)]
        all: bool,
    },
    /// Run a multi-period planning study.
    Plan {
        #[arg(long)]
        topology: PathBuf,
        #[arg(long)]
        demands: PathBuf,
        #[arg(long, value_enum)]
        rcsa: RcsaArg,
        #[arg(long, value_enum)]
        pce: PceArg,
        #[arg(long)]
        periods: usize,
        #[arg(long)]
        out: PathBuf,
        /// Trained model, required with `--pce ml`.
        #[arg(long)]
        model: Option<PathBuf>,
        /// SCI cache CSV, read if present and rewritten after the study.
        #[arg(long)]
        sci_cache: Option<PathBuf>,
    },
    /// Period-by-period differences between two plan reports.
    Compare {
        a: PathBuf,
        b: PathBuf,
        #[arg(long)]
        out: PathBuf,
    },
}

#[derive(Debug, Clone, Copy, ValueEnum)]
pub enum RcsaArg {
    Eol,
    Yearly,
    Monthly,
}

impl From<RcsaArg> for Rcsa {
    fn from(r: RcsaArg) -> Self {
        match r {
            RcsaArg::Eol => Rcsa::Eol,
            RcsaArg::Yearly => Rcsa::Yearly,
            RcsaArg::Monthly => Rcsa::Monthly,
        }
    }
}

#[derive(Debug, Clone, Copy, ValueEnum)]
pub enum PceArg {
    Gn,
    Ml,
}

fn create(path: &Path) -> Result<BufWriter<File>> {
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        std::fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    }
    File::create(path)
        .map(BufWriter::new)
        .map_err(|e| Error::io(path, e))
}

fn open(path: &Path) -> Result<BufReader<File>> {
    File::open(path)
        .map(BufReader::new)
        .map_err(|e| Error::io(path, e))
}

/// `dir/stem.csv` -> `dir/stem.<suffix>.csv`
fn sibling(path: &Path, suffix: &str) -> PathBuf {
    let stem = path.file_stem().and_then(|s| s.to_str()).unwrap_or("out");
    path.with_file_name(format!("{stem}.{suffix}.csv"))
}

/// Parses `args` and runs the command; returns the process exit code.
pub fn dispatch<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { 2 } else { 0 };
            let _ = e.print();
            return code;
        }
    };
    match run(cli) {
        Ok(()) => 0,
        Err(e) => {
            eprintln!("error: {e}");
            1
        }
    }
}

pub fn run(cli: Cli) -> Result<()> {
    let mut cfg = Config::load(cli.config.as_deref())?;
    match cli.command {
        Command::GenData { scenarios, seed, out } => {
            if let Some(n) = scenarios {
                cfg.datagen.n_scenarios = n;
            }
            if let Some(s) = seed {
                cfg.datagen.seed = s;
            }
            if cfg.datagen.n_scenarios == 0 {
                return Err(Error::Config("--scenarios must be at least 1".into()));
            }
            let built = build_dataset(&cfg.datagen);
            let (tr, va, te) = split_dataset(&built.rows, cfg.split.seed);
            log::info!(
                "{} rows, {} skipped scenarios, split {}/{}/{} rows",
                built.rows.len(),
                built.skipped.len(),
                tr.len(),
                va.len(),
                te.len()
            );
            for (id, d) in &built.spot_checks {
                log::info!("spot check scenario {id}: {d:.4} dB on doubling");
            }
            write_rows(create(&out)?, &built.rows, &cfg.echo_lines())?;
            println!("wrote {} rows to {}", built.rows.len(), out.display());
        }
        Command::Train { data, out, report } => {
            let rows = read_rows(open(&data)?, &data.display().to_string())?;
            let (tr, va, _) = split_dataset(&rows, cfg.split.seed);
            let val = to_dataset(&va);
            let val = (!val.is_empty()).then_some(&val);
            let (model, rep) = fit(&to_dataset(&tr), val, &cfg.gbt, cfg.split.train_seed)?;
            model.save(&out)?;
            let report = report.unwrap_or_else(|| sibling(&out, "report"));
            rep.write_csv(create(&report)?)?;
            println!(
                "kept {} trees; train mse {:.5}; wrote {}",
                rep.best_round,
                rep.train_loss.get(rep.best_round.saturating_sub(1)).copied().unwrap_or(f64::NAN),
                out.display()
            );
        }
        Command::Eval { model, data, out, all } => {
            let model = GbtModel::load(&model)?;
            let rows = read_rows(open(&data)?, &data.display().to_string())?;
            let rows = if all { rows } else { split_dataset(&rows, cfg.split.seed).2 };
            if rows.is_empty() {
                return Err(Error::Data("no rows to evaluate".into()));
            }
            let (ml, gn) = snr_errors(&rows, &model, &cfg.datagen.fiber)?;
            let named = [("ml", error_stats(&ml)), ("gn", error_stats(&gn))];
            write_stats(create(&out)?, &named, &cfg.echo_lines())?;
            write_cdf(create(&sibling(&out, "cdf"))?, &[("ml", &ml), ("gn", &gn)], 101)?;
            write_histogram(create(&sibling(&out, "hist"))?, "ml", &ml, 0.02)?;
            for (n, s) in &named {
                println!(
                    "{n}: n={} mean={:+.4} std={:.4} mae={:.4} p99|e|={:.4} dB",
                    s.n, s.mean, s.std, s.mae, s.p99_abs
                );
            }
        }
        Command::Plan {
            topology,
            demands,
            rcsa,
            pce,
            periods,
            out,
            model,
            sci_cache,
        } => {
            let topo = load_topology(&topology)?;
            let dem = load_demands(&demands, &topo)?;
            let mut gn = GnPce::new();
            let mut ml = match pce {
                PceArg::Gn => None,
                PceArg::Ml => {
                    let path = model.ok_or_else(|| Error::Config("--pce ml needs --model".into()))?;
                    let mut cache = SciCache::new(cfg.datagen.quadrature);
                    if let Some(c) = sci_cache.as_ref().filter(|c| c.exists()) {
                        cache.read_csv(open(c)?)?;
                    }
                    Some(MlPce::new(GbtModel::load(&path)?, cache)?)
                }
            };
            let pce: &mut dyn Pce = match ml.as_mut() {
                Some(m) => m,
                None => &mut gn,
            };
            let study = run_study(&topo, &dem, rcsa.into(), pce, periods, &cfg.planner)?;
            if !study.unroutable.is_empty() {
                log::warn!("{} demands have no path", study.unroutable.len());
            }
            let mut header = vec![format!(
                "topology = {}, rcsa = {}, pce = {}, periods = {periods}",
                topo.name,
                Rcsa::from(rcsa).name(),
                pce.name()
            )];
            header.extend(cfg.echo_lines());
            write_report(create(&out)?, &study.reports, &header)?;
            write_timing(create(&sibling(&out, "timing"))?, &study.reports)?;
            if let (Some(c), Some(ml)) = (sci_cache, ml.as_ref()) {
                ml.cache.write_csv(create(&c)?)?;
            }
            if let Some(last) = study.reports.last() {
                println!(
                    "period {}: ART {:.0} Gb/s, throughput {:.0} Gb/s, {} lightpaths, UP {:.4}",
                    last.period, last.art_gbps, last.throughput_gbps, last.n_lightpaths, last.up
                );
            }
        }
        Command::Compare { a, b, out } => {
            let ra = read_report(open(&a)?)?;
            let rb = read_report(open(&b)?)?;
            write_comparison(create(&out)?, &ra, &rb)?;
        }
    }
    Ok(())
}

fn rel_pct(a: f64, b: f64) -> f64 {
    if a == b {
        0.0
    } else if a == 0.0 {
        f64::NAN
    } else {
        100.0 * (b - a) / a
    }
}

/// Per period: relative differences (B over A, percent) of throughput and
/// lightpath count, absolute differences of UP and mean SNR.
pub fn write_comparison<W: std::io::Write>(writer: W, a: &[PeriodReport], b: &[PeriodReport]) -> Result<()> {
    let mut w = csv::Writer::from_writer(writer);
    w.write_record([
        "period",
        "throughput_diff_pct",
        "n_lightpaths_diff_pct",
        "up_diff",
        "mean_snr_diff_db",
        "pce_calls_diff_pct",
    ])?;
    for (x, y) in a.iter().zip(b) {
        if x.period != y.period {
            return Err(Error::Data(format!("period mismatch {} vs {}", x.period, y.period)));
        }
        let snr = if x.mean_snr_db == y.mean_snr_db || (x.mean_snr_db.is_nan() && y.mean_snr_db.is_nan()) {
            0.0
        } else {
            y.mean_snr_db - x.mean_snr_db
        };
        w.write_record([
            x.period.to_string(),
            rel_pct(x.throughput_gbps, y.throughput_gbps).to_string(),
            rel_pct(x.n_lightpaths as f64, y.n_lightpaths as f64).to_string(),
            (y.up - x.up).to_string(),
            snr.to_string(),
            rel_pct(x.pce_calls as f64, y.pce_calls as f64).to_string(),
        ])?;
    }
    w.flush().map_err(|e| Error::io("<comparison>", e))?;
    Ok(())
}
