//! Divide-and-conquer QoT estimation.
//!
//! The SCI of every channel is computed once with the integral model and kept
//! in a [`SciCache`]; a channel's total NLI is then predicted by a tree ensemble
//! from its own SCI and those of its ten nearest neighbors. [`MlPce`] and
//! [`GnPce`] expose the ML estimator and the closed-form baseline behind the
//! same [`Pce`] trait.

use std::collections::HashMap;
use std::io::{Read, Write};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::gbt::GbtModel;
use crate::grid::{neighbors_by_distance, w_to_dbm, ChannelConfig, NEIGHBOR_COUNT};
use crate::phys::{
    ase_variance, check_spectrum, combine_snr, gn_closed_eta, oracle_sci_power, EtaNli, FiberLink,
    NoiseBreakdown, Quadrature,
};

pub const FEATURE_WIDTH: usize = 25;

/// Column names of the feature vector, in order.
pub fn feature_names() -> Vec<String> {
    let mut out = vec!["sci_cut_dbm".to_string()];
    out.extend((1..=NEIGHBOR_COUNT).map(|k| format!("sci_n{k}_dbm")));
    out.extend((1..=NEIGHBOR_COUNT).map(|k| format!("df_n{k}_ghz")));
    out.extend(["p_tx_dbm", "n_ch", "l_span_km", "n_span"].map(String::from));
    out
}

/// Model input of one channel:
///
/// | index  | content                                         |
/// |--------|-------------------------------------------------|
/// | 0      | SCI power of the CUT, dBm                       |
/// | 1..=10 | SCI power of the neighbors, nearest first, dBm  |
/// | 11..=20| distance of those neighbors to the CUT, GHz     |
/// | 21     | CUT launch power, dBm                           |
/// | 22     | number of channels on the link                  |
/// | 23     | span length, km                                 |
/// | 24     | number of spans                                 |
///
/// Missing neighbors have SCI and distance zero.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NliFeatureVector(pub [f64; FEATURE_WIDTH]);

impl NliFeatureVector {
    pub const CUT_SCI: usize = 0;
    pub const NEIGHBOR_SCI: usize = 1;
    pub const NEIGHBOR_DF: usize = 1 + NEIGHBOR_COUNT;
    pub const LAUNCH_POWER: usize = 1 + 2 * NEIGHBOR_COUNT;
    pub const N_CH: usize = Self::LAUNCH_POWER + 1;
    pub const L_SPAN: usize = Self::LAUNCH_POWER + 2;
    pub const N_SPAN: usize = Self::LAUNCH_POWER + 3;

    pub fn as_slice(&self) -> &[f64] {
        &self.0
    }
}

/// Exact-bits key of one channel on one link.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct SciKey {
    pub link_id: u64,
    center_bits: u64,
    rate_bits: u64,
    power_bits: u64,
}

impl SciKey {
    pub fn new(link_id: u64, ch: &ChannelConfig) -> Self {
        SciKey {
            link_id,
            center_bits: ch.center_hz.to_bits(),
            rate_bits: ch.symbol_rate_gbd.to_bits(),
            power_bits: ch.launch_power_dbm.to_bits(),
        }
    }
}

#[derive(Serialize, Deserialize)]
struct SciRow {
    link_id: u64,
    center_hz: f64,
    symbol_rate_gbd: f64,
    launch_power_dbm: f64,
    sci_dbm: f64,
}

/// SCI powers (dBm, whole link) by link and channel identity.
///
/// SCI does not depend on the centre frequency or on other channels, so a
/// miss is served from an internal memo when a channel with the same rate and
/// power was already computed on a physically identical link.
#[derive(Debug, Clone)]
pub struct SciCache {
    entries: HashMap<SciKey, f64>,
    memo: HashMap<([u64; 6], u64, u64), f64>,
    quad: Quadrature,
    compute: bool,
    misses: u64,
    oracle_calls: u64,
}

impl Default for SciCache {
    fn default() -> Self {
        SciCache::new(label_quadrature())
    }
}

/// Quadrature used for labels and SCI features: single pass, no doubling.
pub fn label_quadrature() -> Quadrature {
    Quadrature::default().unchecked()
}

fn link_bits(link: &FiberLink) -> [u64; 6] {
    [
        link.span_length_km.to_bits(),
        link.n_spans as u64,
        link.alpha_db_per_km.to_bits(),
        link.beta2_ps2_per_km.to_bits(),
        link.gamma_per_w_km.to_bits(),
        link.noise_figure_db.to_bits(),
    ]
}

impl SciCache {
    pub fn new(quad: Quadrature) -> Self {
        SciCache {
            entries: HashMap::new(),
            memo: HashMap::new(),
            quad,
            compute: true,
            misses: 0,
            oracle_calls: 0,
        }
    }

    /// A cache that errors on a miss instead of computing.
    pub fn read_only(mut self) -> Self {
        self.compute = false;
        self
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    /// Lookups that found no entry.
    pub fn misses(&self) -> u64 {
        self.misses
    }

    /// Integral evaluations actually performed.
    pub fn oracle_calls(&self) -> u64 {
        self.oracle_calls
    }

    pub fn get(&self, link_id: u64, ch: &ChannelConfig) -> Option<f64> {
        self.entries.get(&SciKey::new(link_id, ch)).copied()
    }

    pub fn insert(&mut self, link_id: u64, ch: &ChannelConfig, sci_dbm: f64) {
        self.entries.entry(SciKey::new(link_id, ch)).or_insert(sci_dbm);
    }

    pub fn get_or_compute(&mut self, link_id: u64, link: &FiberLink, ch: &ChannelConfig) -> Result<f64> {
        let key = SciKey::new(link_id, ch);
        if let Some(&v) = self.entries.get(&key) {
            return Ok(v);
        }
        self.misses += 1;
        if !self.compute {
            return Err(Error::CacheMiss(format!(
                "link {link_id}, {:.6} THz, {} GBd, {} dBm",
                ch.center_hz / 1e12,
                ch.symbol_rate_gbd,
                ch.launch_power_dbm
            )));
        }
        let mkey = (link_bits(link), key.rate_bits, key.power_bits);
        let v = match self.memo.get(&mkey) {
            Some(&v) => v,
            None => {
                self.oracle_calls += 1;
                let v = w_to_dbm(oracle_sci_power(link, ch, &self.quad)?);
                self.memo.insert(mkey, v);
                v
            }
        };
        self.entries.insert(key, v);
        Ok(v)
    }

    pub fn write_csv<W: Write>(&self, writer: W) -> Result<()> {
        let mut keys: Vec<_> = self.entries.keys().copied().collect();
        keys.sort();
        let mut w = csv::Writer::from_writer(writer);
        for k in keys {
            w.serialize(SciRow {
                link_id: k.link_id,
                center_hz: f64::from_bits(k.center_bits),
                symbol_rate_gbd: f64::from_bits(k.rate_bits),
                launch_power_dbm: f64::from_bits(k.power_bits),
                sci_dbm: self.entries[&k],
            })?;
        }
        w.flush().map_err(|e| Error::io("<sci cache>", e))?;
        Ok(())
    }

    /// Adds every row of a cache CSV; existing entries win.
    pub fn read_csv<R: Read>(&mut self, reader: R) -> Result<usize> {
        let mut rdr = csv::Reader::from_reader(reader);
        let mut n = 0;
        for row in rdr.deserialize::<SciRow>() {
            let row = row?;
            let ch = ChannelConfig {
                center_hz: row.center_hz,
                symbol_rate_gbd: row.symbol_rate_gbd,
                modulation: crate::grid::Modulation::Qpsk,
                data_rate_gbps: 0,
                launch_power_dbm: row.launch_power_dbm,
            };
            self.insert(row.link_id, &ch, row.sci_dbm);
            n += 1;
        }
        Ok(n)
    }
}

/// Assembles the feature vector of `spectrum[cut]`, filling the cache as needed.
pub fn features_for(
    link_id: u64,
    link: &FiberLink,
    spectrum: &[ChannelConfig],
    cut: usize,
    sci: &mut SciCache,
) -> Result<NliFeatureVector> {
    check_spectrum(spectrum, cut)?;
    features_unchecked(link_id, link, spectrum, cut, sci)
}

fn features_unchecked(
    link_id: u64,
    link: &FiberLink,
    spectrum: &[ChannelConfig],
    cut: usize,
    sci: &mut SciCache,
) -> Result<NliFeatureVector> {
    type F = NliFeatureVector;
    let mut f = [0.0; FEATURE_WIDTH];
    let c = &spectrum[cut];
    f[F::CUT_SCI] = sci.get_or_compute(link_id, link, c)?;
    for (k, &j) in neighbors_by_distance(spectrum, cut).iter().enumerate() {
        f[F::NEIGHBOR_SCI + k] = sci.get_or_compute(link_id, link, &spectrum[j])?;
        f[F::NEIGHBOR_DF + k] = (spectrum[j].center_hz - c.center_hz).abs() / 1e9;
    }
    f[F::LAUNCH_POWER] = c.launch_power_dbm;
    f[F::N_CH] = spectrum.len() as f64;
    f[F::L_SPAN] = link.span_length_km;
    f[F::N_SPAN] = link.n_spans as f64;
    Ok(NliFeatureVector(f))
}

/// SNR (dB) from launch power, ASE and a total NLI power.
pub fn snr_from_nli(p_tx_w: f64, ase_w: f64, nli_w: f64) -> Result<f64> {
    combine_snr(
        p_tx_w,
        &NoiseBreakdown {
            ase_w,
            sci_w: nli_w,
            xci_w: 0.0,
        },
    )
}

/// Per-channel SNR with NLI predicted by `model`.
pub fn pce_ml(
    link_id: u64,
    link: &FiberLink,
    spectrum: &[ChannelConfig],
    model: &GbtModel,
    sci: &mut SciCache,
) -> Result<Vec<f64>> {
    if spectrum.is_empty() {
        return Ok(Vec::new());
    }
    check_spectrum(spectrum, 0)?;
    (0..spectrum.len())
        .map(|i| ml_channel(link_id, link, spectrum, i, model, sci))
        .collect()
}

fn ml_channel(
    link_id: u64,
    link: &FiberLink,
    spectrum: &[ChannelConfig],
    cut: usize,
    model: &GbtModel,
    sci: &mut SciCache,
) -> Result<f64> {
    let f = features_unchecked(link_id, link, spectrum, cut, sci)?;
    let eta = EtaNli(model.predict(f.as_slice())?);
    let c = &spectrum[cut];
    let p = c.launch_power_w();
    snr_from_nli(p, ase_variance(link, c.symbol_rate_hz()), eta.nli_power(p))
}

/// Per-channel SNR with the closed-form GN model.
pub fn pce_gn(link: &FiberLink, spectrum: &[ChannelConfig]) -> Result<Vec<f64>> {
    (0..spectrum.len()).map(|i| gn_channel(link, spectrum, i)).collect()
}

fn gn_channel(link: &FiberLink, spectrum: &[ChannelConfig], cut: usize) -> Result<f64> {
    let c = &spectrum[cut];
    let nb = NoiseBreakdown {
        ase_w: ase_variance(link, c.symbol_rate_hz()),
        ..gn_closed_eta(link, spectrum, cut)?
    };
    combine_snr(c.launch_power_w(), &nb)
}

/// QoT estimator consulted by the planner, one link at a time.
pub trait Pce {
    fn name(&self) -> &'static str;

    /// SNR (dB) of every channel of `spectrum` on one link.
    fn evaluate(&mut self, link_id: u64, link: &FiberLink, spectrum: &[ChannelConfig]) -> Result<Vec<f64>>;

    /// SNR (dB) of `spectrum[cut]` only.
    fn evaluate_one(
        &mut self,
        link_id: u64,
        link: &FiberLink,
        spectrum: &[ChannelConfig],
        cut: usize,
    ) -> Result<f64>;

    /// Number of evaluate/evaluate_one calls so far.
    fn calls(&self) -> u64;
}

#[derive(Debug, Default, Clone)]
pub struct GnPce {
    calls: u64,
}

impl GnPce {
    pub fn new() -> Self {
        GnPce::default()
    }
}

impl Pce for GnPce {
    fn name(&self) -> &'static str {
        "gn"
    }

    fn evaluate(&mut self, _link_id: u64, link: &FiberLink, spectrum: &[ChannelConfig]) -> Result<Vec<f64>> {
        self.calls += 1;
        pce_gn(link, spectrum)
    }

    fn evaluate_one(
        &mut self,
        _link_id: u64,
        link: &FiberLink,
        spectrum: &[ChannelConfig],
        cut: usize,
    ) -> Result<f64> {
        self.calls += 1;
        gn_channel(link, spectrum, cut)
    }

    fn calls(&self) -> u64 {
        self.calls
    }
}

#[derive(Debug, Clone)]
pub struct MlPce {
    pub model: GbtModel,
    pub cache: SciCache,
    calls: u64,
}

impl MlPce {
    pub fn new(model: GbtModel, cache: SciCache) -> Result<Self> {
        if model.n_features != FEATURE_WIDTH {
            return Err(Error::Width {
                expected: FEATURE_WIDTH,
                got: model.n_features,
            });
        }
        Ok(MlPce {
            model,
            cache,
            calls: 0,
        })
    }
}

impl Pce for MlPce {
    fn name(&self) -> &'static str {
        "ml"
    }

    fn evaluate(&mut self, link_id: u64, link: &FiberLink, spectrum: &[ChannelConfig]) -> Result<Vec<f64>> {
        self.calls += 1;
        pce_ml(link_id, link, spectrum, &self.model, &mut self.cache)
    }

    fn evaluate_one(
        &mut self,
        link_id: u64,
        link: &FiberLink,
        spectrum: &[ChannelConfig],
        cut: usize,
    ) -> Result<f64> {
        self.calls += 1;
        check_spectrum(spectrum, cut)?;
        ml_channel(link_id, link, spectrum, cut, &self.model, &mut self.cache)
    }

    fn calls(&self) -> u64 {
        self.calls
    }
}
