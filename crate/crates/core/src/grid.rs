//! Flex-grid spectrum bookkeeping.
//!
//! The C-band is divided into fixed-width frequency slots. A lightpath claims a
//! contiguous run of slots and its carrier sits at the centre of that run.

use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Width of one flex-grid slot.
pub const SLOT_WIDTH_HZ: f64 = 12.5e9;
/// Slots available on a C-band fibre.
pub const DEFAULT_SLOTS: usize = 400;
/// Lower edge of slot 0.
pub const DEFAULT_ANCHOR_HZ: f64 = 191.325e12;
/// Number of WDM neighbours that feed the NLI model.
pub const NEIGHBOR_COUNT: usize = 10;

/// Modulation formats supported by the bandwidth-variable transceivers.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum Modulation {
    #[serde(rename = "QPSK")]
    Qpsk,
    #[serde(rename = "16QAM")]
    Qam16,
    #[serde(rename = "32QAM")]
    Qam32,
    #[serde(rename = "64QAM")]
    Qam64,
}

impl Modulation {
    pub const ALL: [Modulation; 4] = [
        Modulation::Qpsk,
        Modulation::Qam16,
        Modulation::Qam32,
        Modulation::Qam64,
    ];

    pub fn bits_per_symbol(self) -> u32 {
        match self {
            Modulation::Qpsk => 2,
            Modulation::Qam16 => 4,
            Modulation::Qam32 => 5,
            Modulation::Qam64 => 6,
        }
    }

    /// Constellation size M.
    pub fn order(self) -> u32 {
        1 << self.bits_per_symbol()
    }

    pub fn name(self) -> &'static str {
        match self {
            Modulation::Qpsk => "QPSK",
            Modulation::Qam16 => "16QAM",
            Modulation::Qam32 => "32QAM",
            Modulation::Qam64 => "64QAM",
        }
    }
}

impl fmt::Display for Modulation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl std::str::FromStr for Modulation {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_uppercase().as_str() {
            "QPSK" => Ok(Modulation::Qpsk),
            "16QAM" => Ok(Modulation::Qam16),
            "32QAM" => Ok(Modulation::Qam32),
            "64QAM" => Ok(Modulation::Qam64),
            other => Err(Error::Domain(format!("unknown modulation {other:?}"))),
        }
    }
}

/// One carrier's transceiver settings.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ChannelConfig {
    pub center_hz: f64,
    pub symbol_rate_gbd: f64,
    pub modulation: Modulation,
    pub data_rate_gbps: u32,
    pub launch_power_dbm: f64,
}

impl ChannelConfig {
    pub fn symbol_rate_hz(&self) -> f64 {
        self.symbol_rate_gbd * 1e9
    }

    pub fn launch_power_w(&self) -> f64 {
        dbm_to_w(self.launch_power_dbm)
    }

    pub fn lower_edge_hz(&self) -> f64 {
        self.center_hz - self.symbol_rate_hz() / 2.0
    }

    pub fn upper_edge_hz(&self) -> f64 {
        self.center_hz + self.symbol_rate_hz() / 2.0
    }

    /// True if the two carriers' occupied bands intersect.
    pub fn overlaps(&self, other: &ChannelConfig) -> bool {
        let gap = (self.center_hz - other.center_hz).abs();
        gap < (self.symbol_rate_hz() + other.symbol_rate_hz()) / 2.0 - 1.0
    }
}

pub fn dbm_to_w(dbm: f64) -> f64 {
    1e-3 * 10f64.powf(dbm / 10.0)
}

pub fn w_to_dbm(w: f64) -> f64 {
    10.0 * (w / 1e-3).log10()
}

/// Identifier of a lightpath holding slots.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct LightpathId(pub u32);

impl fmt::Display for LightpathId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "lp{}", self.0)
    }
}

/// Half-open run of slots `[start, start + len)`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct SlotRange {
    pub start: usize,
    pub len: usize,
}

impl SlotRange {
    pub fn new(start: usize, len: usize) -> Self {
        SlotRange { start, len }
    }

    pub fn end(&self) -> usize {
        self.start + self.len
    }

    pub fn iter(&self) -> std::ops::Range<usize> {
        self.start..self.end()
    }
}

/// Number of slots a carrier of symbol rate `symbol_rate_gbd` needs with `guard_ghz` of guard band.
pub fn slots_needed(symbol_rate_gbd: f64, guard_ghz: f64) -> usize {
    let width = (symbol_rate_gbd + guard_ghz) / (SLOT_WIDTH_HZ / 1e9);
    // absorb representation noise such as 62.5000000001 / 12.5
    (width - 1e-9).ceil().max(1.0) as usize
}

/// Slot occupancy of one fibre.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FlexGrid {
    slot_width_hz: f64,
    anchor_hz: f64,
    occupancy: Vec<Option<LightpathId>>,
}

impl Default for FlexGrid {
    fn default() -> Self {
        FlexGrid::new(DEFAULT_SLOTS)
    }
}

impl FlexGrid {
    pub fn new(n_slots: usize) -> Self {
        FlexGrid::with_anchor(n_slots, DEFAULT_ANCHOR_HZ)
    }

    pub fn with_anchor(n_slots: usize, anchor_hz: f64) -> Self {
        FlexGrid {
            slot_width_hz: SLOT_WIDTH_HZ,
            anchor_hz,
            occupancy: vec![None; n_slots],
        }
    }

    pub fn n_slots(&self) -> usize {
        self.occupancy.len()
    }

    pub fn slot_width_hz(&self) -> f64 {
        self.slot_width_hz
    }

    pub fn anchor_hz(&self) -> f64 {
        self.anchor_hz
    }

    pub fn occupied(&self) -> usize {
        self.occupancy.iter().filter(|s| s.is_some()).count()
    }

    pub fn owner(&self, slot: usize) -> Option<LightpathId> {
        self.occupancy.get(slot).copied().flatten()
    }

    pub fn is_free(&self, range: SlotRange) -> bool {
        range.end() <= self.n_slots() && range.iter().all(|s| self.occupancy[s].is_none())
    }

    /// Occupancy as a boolean mask, `true` meaning taken.
    pub fn busy_mask(&self) -> Vec<bool> {
        self.occupancy.iter().map(Option::is_some).collect()
    }

    /// Lowest-index free run of `n` slots. The grid is not modified.
    pub fn first_fit(&self, n: usize) -> Option<SlotRange> {
        first_fit_mask(&self.busy_mask(), n)
    }

    pub fn place(&mut self, range: SlotRange, id: LightpathId) -> Result<()> {
        if range.len == 0 || !self.is_free(range) {
            return Err(Error::Domain(format!(
                "slots {}..{} are not free for {id}",
                range.start,
                range.end()
            )));
        }
        for s in range.iter() {
            self.occupancy[s] = Some(id);
        }
        Ok(())
    }

    /// Frees every slot held by `id`, returning how many were released.
    pub fn release(&mut self, id: LightpathId) -> usize {
        let mut n = 0;
        for slot in self.occupancy.iter_mut() {
            if *slot == Some(id) {
                *slot = None;
                n += 1;
            }
        }
        n
    }

    /// Frees the given slots if owned by `id`.
    pub fn release_range(&mut self, range: SlotRange, id: LightpathId) -> usize {
        let mut n = 0;
        for s in range.iter() {
            if self.occupancy[s] == Some(id) {
                self.occupancy[s] = None;
                n += 1;
            }
        }
        n
    }

    /// Contiguous claims per lightpath, in slot order. A lightpath appearing
    /// twice here holds a non-contiguous set of slots.
    pub fn claims(&self) -> Vec<(LightpathId, SlotRange)> {
        let mut out: Vec<(LightpathId, SlotRange)> = Vec::new();
        for (s, slot) in self.occupancy.iter().enumerate() {
            let Some(id) = *slot else { continue };
            match out.last_mut() {
                Some((last, r)) if *last == id && r.end() == s => r.len += 1,
                _ => out.push((id, SlotRange::new(s, 1))),
            }
        }
        out
    }

    /// Carrier frequency for a channel allocated on `range`.
    pub fn center_frequency(&self, range: SlotRange) -> f64 {
        self.anchor_hz + (range.start as f64 + range.len as f64 / 2.0) * self.slot_width_hz
    }
}

/// First fit over a busy mask (`true` = occupied).
pub fn first_fit_mask(busy: &[bool], n: usize) -> Option<SlotRange> {
    if n == 0 {
        return None;
    }
    let mut run = 0;
    for (s, &b) in busy.iter().enumerate() {
        if b {
            run = 0;
        } else {
            run += 1;
            if run == n {
                return Some(SlotRange::new(s + 1 - n, n));
            }
        }
    }
    None
}

/// First fit on the union of several grids (spectrum continuity along a path).
pub fn first_fit_common<'a, I>(grids: I, n: usize) -> Option<SlotRange>
where
    I: IntoIterator<Item = &'a FlexGrid>,
{
    let mut busy: Option<Vec<bool>> = None;
    for g in grids {
        match busy.as_mut() {
            None => busy = Some(g.busy_mask()),
            Some(b) => {
                for (acc, occ) in b.iter_mut().zip(&g.occupancy) {
                    *acc |= occ.is_some();
                }
            }
        }
    }
    first_fit_mask(&busy?, n)
}

/// Indices of the (at most ten) channels closest to the CUT, nearest first.
/// Equal distances resolve to the lower-frequency channel first.
pub fn neighbors_by_distance(spectrum: &[ChannelConfig], cut_index: usize) -> Vec<usize> {
    let cut = spectrum[cut_index].center_hz;
    let mut others: Vec<usize> = (0..spectrum.len()).filter(|&i| i != cut_index).collect();
    others.sort_by(|&a, &b| {
        let da = (spectrum[a].center_hz - cut).abs();
        let db = (spectrum[b].center_hz - cut).abs();
        da.total_cmp(&db)
            .then(spectrum[a].center_hz.total_cmp(&spectrum[b].center_hz))
            .then(a.cmp(&b))
    });
    others.truncate(NEIGHBOR_COUNT);
    others
}
