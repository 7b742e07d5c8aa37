//! Multi-period routing, configuration and spectrum assignment.
//!
//! Each period the demands grow, every unmet gap is covered with new
//! lightpaths on one of the k shortest paths (first-fit, spectrum continuous),
//! and, except in end-of-life planning, the whole network is re-evaluated with
//! the PCE and infeasible lightpaths are downgraded or removed.

mod ksp;

use std::collections::hash_map::Entry;
use std::collections::HashMap;
use std::io::Write;
use std::time::Instant;

use serde::{Deserialize, Serialize};

pub use ksp::{k_shortest_paths, Path};

use crate::error::{Error, Result};
use crate::grid::{first_fit_common, ChannelConfig, FlexGrid, LightpathId, SlotRange, SLOT_WIDTH_HZ};
use crate::netmodel::{expand_spans_with, grow_demands, Demand, Granularity, Topology};
use crate::phys::{
    ase_variance, launch_power_for, path_snr_db, transceiver_menu, FiberLink, MenuConfig,
    SnrThresholds, TransceiverMode,
};
use crate::grid::Modulation;
use crate::qot::Pce;

/// Planning strategy.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Rcsa {
    /// Configurations judged against a fully loaded band; no re-evaluation.
    Eol,
    /// Linear-SNR selection, yearly periods, downgrade pass.
    Yearly,
    /// As yearly with monthly periods.
    Monthly,
}

impl Rcsa {
    pub fn granularity(self) -> Granularity {
        match self {
            Rcsa::Monthly => Granularity::Monthly,
            _ => Granularity::Yearly,
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            Rcsa::Eol => "eol",
            Rcsa::Yearly => "yearly",
            Rcsa::Monthly => "monthly",
        }
    }
}

impl std::str::FromStr for Rcsa {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "eol" => Ok(Rcsa::Eol),
            "yearly" => Ok(Rcsa::Yearly),
            "monthly" => Ok(Rcsa::Monthly),
            other => Err(Error::Config(format!("unknown RCSA {other:?}"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct PlannerConfig {
    pub k_paths: usize,
    pub target_span_km: f64,
    pub n_slots: usize,
    pub annual_growth: f64,
    /// Channel spacing of the synthetic full band used by end-of-life planning.
    pub eol_spacing_ghz: f64,
    pub eol_symbol_rate_gbd: f64,
    pub menu: MenuConfig,
    pub thresholds: SnrThresholds,
    pub fiber: FiberLink,
}

impl Default for PlannerConfig {
    fn default() -> Self {
        PlannerConfig {
            k_paths: 3,
            target_span_km: 80.0,
            n_slots: crate::grid::DEFAULT_SLOTS,
            annual_growth: 0.30,
            eol_spacing_ghz: 50.0,
            eol_symbol_rate_gbd: 35.0,
            menu: MenuConfig::default(),
            thresholds: SnrThresholds::default(),
            fiber: FiberLink::default(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum LightpathStatus {
    Active,
    Downgraded,
    Removed,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Lightpath {
    pub id: LightpathId,
    pub demand: usize,
    pub nodes: Vec<usize>,
    pub links: Vec<usize>,
    /// Same range on every link of the path.
    pub slots: SlotRange,
    pub config: ChannelConfig,
    pub status: LightpathStatus,
    /// End-to-end SNR at the last evaluation, dB.
    pub snr_db: f64,
}

impl Lightpath {
    pub fn is_live(&self) -> bool {
        self.status != LightpathStatus::Removed
    }
}

/// Network state carried from period to period.
#[derive(Debug, Clone)]
pub struct PlanState {
    pub fibers: Vec<FiberLink>,
    pub grids: Vec<FlexGrid>,
    pub lightpaths: Vec<Lightpath>,
    pub period: usize,
}

impl PlanState {
    pub fn new(topology: &Topology, cfg: &PlannerConfig) -> Self {
        PlanState {
            fibers: topology
                .links
                .iter()
                .map(|l| expand_spans_with(&cfg.fiber, l.length_km, cfg.target_span_km))
                .collect(),
            grids: vec![FlexGrid::new(cfg.n_slots); topology.n_links()],
            lightpaths: Vec::new(),
            period: 0,
        }
    }

    pub fn live(&self) -> impl Iterator<Item = &Lightpath> {
        self.lightpaths.iter().filter(|l| l.is_live())
    }

    /// Provisioned rate per demand.
    pub fn provisioned(&self, n_demands: usize) -> Vec<f64> {
        let mut out = vec![0.0; n_demands];
        for lp in self.live() {
            out[lp.demand] += lp.config.data_rate_gbps as f64;
        }
        out
    }

    /// Channels on `link` ordered by slot, with the lightpath index of each.
    pub fn link_spectrum(&self, link: usize) -> (Vec<ChannelConfig>, Vec<usize>) {
        let mut spec = Vec::new();
        let mut owners = Vec::new();
        for (id, _) in self.grids[link].claims() {
            // ids are handed out as indices into `lightpaths`
            let i = id.0 as usize;
            spec.push(self.lightpaths[i].config);
            owners.push(i);
        }
        (spec, owners)
    }

    fn place(&mut self, demand: usize, path: &Path, mode: &TransceiverMode, range: SlotRange) -> Result<()> {
        let id = LightpathId(self.lightpaths.len() as u32);
        for &l in &path.links {
            self.grids[l].place(range, id)?;
        }
        let config = ChannelConfig {
            center_hz: self.grids[path.links[0]].center_frequency(range),
            symbol_rate_gbd: mode.symbol_rate_gbd,
            modulation: mode.modulation,
            data_rate_gbps: mode.data_rate_gbps,
            launch_power_dbm: launch_power_for(mode.symbol_rate_gbd),
        };
        self.lightpaths.push(Lightpath {
            id,
            demand,
            nodes: path.nodes.clone(),
            links: path.links.clone(),
            slots: range,
            config,
            status: LightpathStatus::Active,
            snr_db: f64::NAN,
        });
        Ok(())
    }

    fn remove(&mut self, i: usize) {
        let lp = &mut self.lightpaths[i];
        for &l in &lp.links {
            self.grids[l].release(lp.id);
        }
        lp.status = LightpathStatus::Removed;
    }

    /// Checks that grids and lightpaths agree slot by slot, in both directions.
    pub fn audit(&self, topology: &Topology) -> Result<()> {
        let fail = |m: String| Err(Error::Domain(format!("plan audit: {m}")));
        let mut expected: Vec<HashMap<LightpathId, SlotRange>> = vec![HashMap::new(); self.grids.len()];
        for lp in self.live() {
            if lp.links.len() + 1 != lp.nodes.len() {
                return fail(format!("lightpath {} has inconsistent path", lp.id));
            }
            for (w, &l) in lp.nodes.windows(2).zip(&lp.links) {
                if topology.link_between(w[0], w[1]) != Some(l) {
                    return fail(format!("lightpath {} uses a non-adjacent hop", lp.id));
                }
                expected[l].insert(lp.id, lp.slots);
            }
            let b_hz = lp.config.symbol_rate_hz();
            if b_hz > lp.slots.len as f64 * SLOT_WIDTH_HZ + 1.0 {
                return fail(format!("lightpath {} is wider than its slots", lp.id));
            }
        }
        for (l, g) in self.grids.iter().enumerate() {
            let claims = g.claims();
            if claims.len() != expected[l].len() {
                return fail(format!("link {l} holds {} claims, expected {}", claims.len(), expected[l].len()));
            }
            for (id, r) in claims {
                if expected[l].get(&id) != Some(&r) {
                    return fail(format!("link {l}: lightpath {id} occupies {r:?}"));
                }
            }
        }
        Ok(())
    }
}

/// Demands sorted by first-shortest-path length (longest first), then rate
/// (largest first), then id. Demands without a path are returned separately.
pub fn order_demands(
    demands: &[Demand],
    rates: &[f64],
    shortest_km: &[Option<f64>],
) -> (Vec<usize>, Vec<usize>) {
    let mut routable: Vec<usize> = (0..demands.len()).filter(|&d| shortest_km[d].is_some()).collect();
    let unroutable = (0..demands.len()).filter(|&d| shortest_km[d].is_none()).collect();
    routable.sort_by(|&a, &b| {
        shortest_km[b]
            .unwrap()
            .total_cmp(&shortest_km[a].unwrap())
            .then(rates[b].total_cmp(&rates[a]))
            .then(demands[a].id.cmp(&demands[b].id))
    });
    (routable, unroutable)
}

/// Preferred mode for a rate: fewest slots, then lowest SNR threshold.
fn best_mode_for_rate<'a>(
    feasible: &'a [TransceiverMode],
    rate: u32,
    thr: &SnrThresholds,
) -> Option<&'a TransceiverMode> {
    feasible.iter().filter(|m| m.data_rate_gbps == rate).min_by(|a, b| {
        a.slots
            .cmp(&b.slots)
            .then(thr.required_snr(a.modulation).total_cmp(&thr.required_snr(b.modulation)))
    })
}

/// Lightpaths covering `gap_gbps` with the feasible `modes`: the fewest
/// lightpaths at the highest feasible rate, the last one at the cheapest
/// (fewest slots, then lowest rate) mode that closes the gap.
pub fn select_candidates(
    gap_gbps: f64,
    feasible: &[TransceiverMode],
    thr: &SnrThresholds,
) -> Vec<TransceiverMode> {
    let Some(r_max) = feasible.iter().map(|m| m.data_rate_gbps).max() else {
        return Vec::new();
    };
    if !(gap_gbps > 0.0) {
        return Vec::new();
    }
    let n = (gap_gbps / r_max as f64 - 1e-9).ceil().max(1.0) as usize;
    let top = *best_mode_for_rate(feasible, r_max, thr).unwrap();
    let rem = gap_gbps - (n - 1) as f64 * r_max as f64;
    let last = feasible
        .iter()
        .filter(|m| m.data_rate_gbps as f64 >= rem - 1e-9)
        .min_by(|a, b| {
            a.slots
                .cmp(&b.slots)
                .then(a.data_rate_gbps.cmp(&b.data_rate_gbps))
                .then(thr.required_snr(a.modulation).total_cmp(&thr.required_snr(b.modulation)))
        })
        .copied()
        .unwrap_or(top);
    let mut out = vec![top; n - 1];
    out.push(last);
    out
}

/// Underprovisioning ratio: unmet rate of short demands over total requested.
pub fn up_ratio(requested: &[f64], provisioned: &[f64]) -> f64 {
    let total: f64 = requested.iter().sum();
    if total <= 0.0 {
        return 0.0;
    }
    let short: f64 = requested
        .iter()
        .zip(provisioned)
        .map(|(r, p)| (r - p).max(0.0))
        .sum();
    short / total
}

/// One row of a study report.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PeriodReport {
    pub period: usize,
    pub art_gbps: f64,
    pub throughput_gbps: f64,
    pub n_lightpaths: usize,
    pub up: f64,
    pub mean_snr_db: f64,
    pub pce_calls: u64,
    #[serde(skip)]
    pub wall_time_s: f64,
}

/// Writes the deterministic report columns (wall time excluded).
pub fn write_report<W: Write>(mut writer: W, reports: &[PeriodReport], comments: &[String]) -> Result<()> {
    for c in comments {
        writeln!(writer, "# {c}").map_err(|e| Error::io("<report>", e))?;
    }
    let mut w = csv::Writer::from_writer(writer);
    for r in reports {
        w.serialize(r)?;
    }
    w.flush().map_err(|e| Error::io("<report>", e))?;
    Ok(())
}

pub fn write_timing<W: Write>(writer: W, reports: &[PeriodReport]) -> Result<()> {
    let mut w = csv::Writer::from_writer(writer);
    w.write_record(["period", "wall_time_s"])?;
    for r in reports {
        w.write_record([r.period.to_string(), format!("{:.6}", r.wall_time_s)])?;
    }
    w.flush().map_err(|e| Error::io("<timing>", e))?;
    Ok(())
}

pub fn read_report<R: std::io::Read>(reader: R) -> Result<Vec<PeriodReport>> {
    let mut rdr = csv::ReaderBuilder::new().comment(Some(b'#')).from_reader(reader);
    let mut out = Vec::new();
    for r in rdr.deserialize() {
        out.push(r?);
    }
    Ok(out)
}

/// Counts from one downgrade pass.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct DowngradeStats {
    pub rounds: usize,
    pub downgraded: usize,
    pub removed: usize,
}

/// Planning context: topology, configuration and per-study caches.
pub struct Planner<'a> {
    pub topology: &'a Topology,
    pub cfg: &'a PlannerConfig,
    menu: Vec<TransceiverMode>,
    eol_cache: HashMap<(usize, u64, u64), f64>,
}

impl<'a> Planner<'a> {
    pub fn new(topology: &'a Topology, cfg: &'a PlannerConfig) -> Self {
        Planner {
            topology,
            cfg,
            menu: transceiver_menu(&cfg.menu),
            eol_cache: HashMap::new(),
        }
    }

    pub fn menu(&self) -> &[TransceiverMode] {
        &self.menu
    }

    fn threshold(&self, m: Modulation) -> f64 {
        self.cfg.thresholds.required_snr(m)
    }

    /// SNR of `mode` on one link against the synthetic fully loaded band.
    fn eol_link_snr(
        &mut self,
        state: &PlanState,
        link: usize,
        mode: &TransceiverMode,
        pce: &mut dyn Pce,
    ) -> Result<f64> {
        let key = (
            link,
            mode.symbol_rate_gbd.to_bits(),
            launch_power_for(mode.symbol_rate_gbd).to_bits(),
        );
        if let Some(&v) = self.eol_cache.get(&key) {
            return Ok(v);
        }
        let grid = &state.grids[link];
        let lo = grid.anchor_hz();
        let hi = lo + grid.n_slots() as f64 * grid.slot_width_hz();
        let center = 0.5 * (lo + hi);
        let cut = ChannelConfig {
            center_hz: center,
            symbol_rate_gbd: mode.symbol_rate_gbd,
            modulation: mode.modulation,
            data_rate_gbps: mode.data_rate_gbps,
            launch_power_dbm: launch_power_for(mode.symbol_rate_gbd),
        };
        let b = self.cfg.eol_symbol_rate_gbd;
        let spacing = self.cfg.eol_spacing_ghz * 1e9;
        let mut spectrum = vec![cut];
        let mut f = lo + spacing / 2.0;
        while f + b * 1e9 / 2.0 <= hi {
            let comb = ChannelConfig {
                center_hz: f,
                symbol_rate_gbd: b,
                modulation: Modulation::Qpsk,
                data_rate_gbps: 100,
                launch_power_dbm: launch_power_for(b),
            };
            if !comb.overlaps(&cut) {
                spectrum.push(comb);
            }
            f += spacing;
        }
        let snr = pce.evaluate_one(link as u64, &state.fibers[link], &spectrum, 0)?;
        self.eol_cache.insert(key, snr);
        Ok(snr)
    }

    /// Modes whose selection-time SNR on `path` meets their threshold.
    pub fn feasible_modes(
        &mut self,
        state: &PlanState,
        path: &Path,
        rcsa: Rcsa,
        pce: &mut dyn Pce,
    ) -> Result<Vec<TransceiverMode>> {
        let menu = self.menu.clone();
        let mut out = Vec::new();
        for mode in &menu {
            let mut snrs = Vec::with_capacity(path.links.len());
            for &l in &path.links {
                let s = match rcsa {
                    Rcsa::Eol => self.eol_link_snr(state, l, mode, pce)?,
                    Rcsa::Yearly | Rcsa::Monthly => {
                        let b = mode.symbol_rate_gbd * 1e9;
                        let p = crate::grid::dbm_to_w(launch_power_for(mode.symbol_rate_gbd));
                        10.0 * (p / ase_variance(&state.fibers[l], b)).log10()
                    }
                };
                snrs.push(s);
            }
            if path_snr_db(&snrs) >= self.threshold(mode.modulation) {
                out.push(*mode);
            }
        }
        Ok(out)
    }

    /// Per-lightpath end-to-end SNR of every live lightpath (NaN for removed ones).
    pub fn evaluate_all(&self, state: &PlanState, pce: &mut dyn Pce) -> Result<Vec<f64>> {
        let mut per_lp: Vec<Vec<f64>> = vec![Vec::new(); state.lightpaths.len()];
        for l in 0..state.grids.len() {
            let (spec, owners) = state.link_spectrum(l);
            if spec.is_empty() {
                continue;
            }
            let snr = pce.evaluate(l as u64, &state.fibers[l], &spec)?;
            for (s, o) in snr.into_iter().zip(owners) {
                per_lp[o].push(s);
            }
        }
        Ok(state
            .lightpaths
            .iter()
            .zip(per_lp)
            .map(|(lp, s)| if lp.is_live() { path_snr_db(&s) } else { f64::NAN })
            .collect())
    }

    fn lightpath_snr(&self, state: &PlanState, i: usize, pce: &mut dyn Pce) -> Result<f64> {
        let lp = &state.lightpaths[i];
        let mut snrs = Vec::with_capacity(lp.links.len());
        for &l in &lp.links {
            let (spec, owners) = state.link_spectrum(l);
            let cut = owners.iter().position(|&o| o == i).expect("lightpath on its link");
            snrs.push(pce.evaluate_one(l as u64, &state.fibers[l], &spec, cut)?);
        }
        Ok(path_snr_db(&snrs))
    }

    /// Downgrades or removes lightpaths until every live one meets its threshold.
    pub fn downgrade_pass(&self, state: &mut PlanState, pce: &mut dyn Pce) -> Result<DowngradeStats> {
        let mut stats = DowngradeStats::default();
        loop {
            stats.rounds += 1;
            let snr = self.evaluate_all(state, pce)?;
            let bad: Vec<usize> = (0..state.lightpaths.len())
                .filter(|&i| {
                    let lp = &state.lightpaths[i];
                    lp.is_live() && snr[i] < self.threshold(lp.config.modulation)
                })
                .collect();
            if bad.is_empty() {
                for (lp, s) in state.lightpaths.iter_mut().zip(snr) {
                    lp.snr_db = s;
                }
                return Ok(stats);
            }
            for i in bad {
                if self.lightpath_snr(state, i, pce)? >= self.threshold(state.lightpaths[i].config.modulation) {
                    continue;
                }
                let current = state.lightpaths[i].config;
                let cur_thr = self.threshold(current.modulation);
                let mut options: Vec<&TransceiverMode> = self
                    .menu
                    .iter()
                    .filter(|m| m.slots <= state.lightpaths[i].slots.len)
                    .filter(|m| {
                        m.data_rate_gbps < current.data_rate_gbps
                            || (m.data_rate_gbps == current.data_rate_gbps
                                && self.threshold(m.modulation) < cur_thr)
                    })
                    .collect();
                options.sort_by(|a, b| {
                    b.data_rate_gbps
                        .cmp(&a.data_rate_gbps)
                        .then(self.threshold(a.modulation).total_cmp(&self.threshold(b.modulation)))
                        .then(a.slots.cmp(&b.slots))
                });
                let mut fixed = false;
                for m in options {
                    state.lightpaths[i].config = ChannelConfig {
                        symbol_rate_gbd: m.symbol_rate_gbd,
                        modulation: m.modulation,
                        data_rate_gbps: m.data_rate_gbps,
                        launch_power_dbm: launch_power_for(m.symbol_rate_gbd),
                        ..current
                    };
                    if self.lightpath_snr(state, i, pce)? >= self.threshold(m.modulation) {
                        fixed = true;
                        break;
                    }
                }
                if fixed {
                    state.lightpaths[i].status = LightpathStatus::Downgraded;
                    stats.downgraded += 1;
                } else {
                    state.lightpaths[i].config = current;
                    state.remove(i);
                    stats.removed += 1;
                }
            }
        }
    }

    /// Adds lightpaths for `demand` until `target` is met or nothing fits.
    fn provision(
        &mut self,
        state: &mut PlanState,
        demand: usize,
        target: f64,
        paths: &[Path],
        rcsa: Rcsa,
        pce: &mut dyn Pce,
        feasible_cache: &mut HashMap<usize, Vec<TransceiverMode>>,
    ) -> Result<()> {
        loop {
            let have: f64 = state
                .live()
                .filter(|l| l.demand == demand)
                .map(|l| l.config.data_rate_gbps as f64)
                .sum();
            let gap = target - have;
            if gap <= 1e-9 {
                return Ok(());
            }
            let mut options = Vec::new();
            for (pi, path) in paths.iter().enumerate() {
                if let Entry::Vacant(e) = feasible_cache.entry(pi) {
                    e.insert(self.feasible_modes(state, path, rcsa, pce)?);
                }
                let cands = select_candidates(gap, &feasible_cache[&pi], &self.cfg.thresholds);
                if !cands.is_empty() {
                    options.push((cands.len(), pi, cands));
                }
            }
            options.sort_by_key(|o| (o.0, o.1));
            let mut placed = false;
            'paths: for (_, pi, cands) in &options {
                let path = &paths[*pi];
                let mut tried = Vec::new();
                for c in cands {
                    if tried.contains(c) {
                        continue;
                    }
                    tried.push(*c);
                    let grids = path.links.iter().map(|&l| &state.grids[l]);
                    if let Some(range) = first_fit_common(grids, c.slots) {
                        state.place(demand, path, c, range)?;
                        placed = true;
                        break 'paths;
                    }
                }
            }
            if !placed {
                return Ok(());
            }
        }
    }
}

/// Everything a study produces.
#[derive(Debug, Clone)]
pub struct StudyOutput {
    pub reports: Vec<PeriodReport>,
    pub state: PlanState,
    pub unroutable: Vec<usize>,
}

/// Runs `periods` planning periods of one RCSA with one PCE.
pub fn run_study(
    topology: &Topology,
    demands: &[Demand],
    rcsa: Rcsa,
    pce: &mut dyn Pce,
    periods: usize,
    cfg: &PlannerConfig,
) -> Result<StudyOutput> {
    let mut planner = Planner::new(topology, cfg);
    let mut state = PlanState::new(topology, cfg);
    let rates = grow_demands(demands, cfg.annual_growth, periods, rcsa.granularity());
    let paths: Vec<Vec<Path>> = demands
        .iter()
        .map(|d| k_shortest_paths(topology, d.src, d.dst, cfg.k_paths))
        .collect();
    let shortest: Vec<Option<f64>> = paths.iter().map(|p| p.first().map(|p| p.length_km)).collect();
    let mut reports = Vec::with_capacity(periods);
    let mut unroutable = Vec::new();
    for (period, requested) in rates.iter().enumerate() {
        let t0 = Instant::now();
        let calls0 = pce.calls();
        state.period = period;
        let (order, unr) = order_demands(demands, requested, &shortest);
        unroutable = unr;
        for d in order {
            let mut feasible = HashMap::new();
            planner.provision(&mut state, d, requested[d], &paths[d], rcsa, pce, &mut feasible)?;
        }
        match rcsa {
            Rcsa::Eol => {
                let snr = planner.evaluate_all(&state, pce)?;
                for (lp, s) in state.lightpaths.iter_mut().zip(snr) {
                    lp.snr_db = s;
                }
            }
            Rcsa::Yearly | Rcsa::Monthly => {
                let s = planner.downgrade_pass(&mut state, pce)?;
                log::debug!("period {period}: {s:?}");
            }
        }
        state.audit(topology)?;
        let provisioned = state.provisioned(demands.len());
        let live: Vec<&Lightpath> = state.live().collect();
        let mean_snr = if live.is_empty() {
            f64::NAN
        } else {
            live.iter().map(|l| l.snr_db).sum::<f64>() / live.len() as f64
        };
        reports.push(PeriodReport {
            period,
            art_gbps: requested.iter().sum(),
            throughput_gbps: provisioned.iter().sum(),
            n_lightpaths: live.len(),
            up: up_ratio(requested, &provisioned),
            mean_snr_db: mean_snr,
            pce_calls: pce.calls() - calls0,
            wall_time_s: t0.elapsed().as_secs_f64(),
        });
    }
    Ok(StudyOutput {
        reports,
        state,
        unroutable,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::netmodel::Link;
    use crate::qot::GnPce;

    fn menu_600() -> Vec<TransceiverMode> {
        transceiver_menu(&MenuConfig {
            clip_to_cap: true,
            ..Default::default()
        })
    }

    #[test]
    fn candidates_minimize_count_then_maximize_rate() {
        let thr = SnrThresholds::default();
        let menu = menu_600();
        let rates = |v: Vec<TransceiverMode>| v.iter().map(|m| m.data_rate_gbps).collect::<Vec<_>>();
        assert_eq!(rates(select_candidates(550.0, &menu, &thr)), vec![550]);
        assert_eq!(rates(select_candidates(700.0, &menu, &thr)), vec![600, 100]);
        let qpsk: Vec<_> = transceiver_menu(&MenuConfig::default())
            .into_iter()
            .filter(|m| m.modulation == Modulation::Qpsk)
            .collect();
        let c = select_candidates(350.0, &qpsk, &thr);
        assert!(c.iter().all(|m| m.modulation == Modulation::Qpsk));
        assert_eq!(rates(c), vec![150, 150, 100]);
        assert!(select_candidates(100.0, &[], &thr).is_empty());
    }

    #[test]
    fn up_ratio_examples() {
        assert_eq!(up_ratio(&[100.0, 200.0], &[100.0, 250.0]), 0.0);
        assert_eq!(up_ratio(&[200.0, 200.0], &[150.0, 200.0]), 0.125);
        assert_eq!(up_ratio(&[200.0, 200.0], &[150.0, 400.0]), 0.125);
    }

    fn line(n: usize, km: f64) -> Topology {
        let nodes = (0..n).map(|i| format!("n{i}")).collect();
        let links = (0..n - 1).map(|i| Link { a: i, b: i + 1, length_km: km }).collect();
        Topology::new("line", nodes, links).unwrap()
    }

    #[test]
    fn ordering_is_total() {
        let d = |id, s, t| Demand { id, src: s, dst: t, rate_gbps: 1.0 };
        let demands = vec![d(0, 0, 1), d(1, 0, 2), d(2, 1, 2)];
        let rates = [100.0, 100.0, 200.0];
        let sp = [Some(420.0), Some(610.0), Some(420.0)];
        assert_eq!(order_demands(&demands, &rates, &sp).0, vec![1, 2, 0]);
        let sp2 = [Some(1.0), None, Some(2.0)];
        let (o, u) = order_demands(&demands, &rates, &sp2);
        assert_eq!((o, u), (vec![2, 0], vec![1]));
    }

    #[test]
    fn empty_network_places_at_slot_zero() {
        let topo = line(3, 160.0);
        let cfg = PlannerConfig::default();
        let demands = vec![Demand { id: 0, src: 0, dst: 2, rate_gbps: 100.0 }];
        let out = run_study(&topo, &demands, Rcsa::Yearly, &mut GnPce::new(), 1, &cfg).unwrap();
        let lp = &out.state.lightpaths[0];
        assert_eq!(lp.slots, SlotRange::new(0, lp.slots.len));
        assert_eq!(out.reports[0].up, 0.0);
        for l in 0..2 {
            assert_eq!(out.state.grids[l].owner(0), Some(lp.id));
        }
    }

    #[test]
    fn zero_periods() {
        let topo = line(2, 100.0);
        let demands = vec![Demand { id: 0, src: 0, dst: 1, rate_gbps: 100.0 }];
        let out = run_study(&topo, &demands, Rcsa::Eol, &mut GnPce::new(), 0, &PlannerConfig::default())
            .unwrap();
        assert!(out.reports.is_empty());
    }

    #[test]
    fn blocked_when_no_common_run() {
        let topo = line(3, 100.0);
        let cfg = PlannerConfig { n_slots: 8, ..Default::default() };
        let mut state = PlanState::new(&topo, &cfg);
        // link 0 free in 0..5, link 1 free in 3..8: common free run is 3..5
        state.grids[0].place(SlotRange::new(5, 3), LightpathId(90)).unwrap();
        state.grids[1].place(SlotRange::new(0, 3), LightpathId(91)).unwrap();
        assert_eq!(first_fit_common([&state.grids[0], &state.grids[1]], 2), Some(SlotRange::new(3, 2)));
        assert_eq!(first_fit_common([&state.grids[0], &state.grids[1]], 3), None);
    }
}
