use serde::{Deserialize, Serialize};
use statrs::function::erf::erfc;

use crate::error::{Error, Result};
use crate::grid::{slots_needed, Modulation};

/// Parameters of the transceiver configuration menu.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct MenuConfig {
    pub min_symbol_rate_gbd: f64,
    pub max_symbol_rate_gbd: f64,
    /// Admit a configuration slightly above the cap by clipping it to the cap.
    pub clip_to_cap: bool,
    /// How far above the cap a clipped configuration may originally lie.
    pub clip_margin_gbd: f64,
    pub min_rate_gbps: u32,
    pub max_rate_gbps: u32,
    pub rate_step_gbps: u32,
    pub guard_ghz: f64,
}

impl Default for MenuConfig {
    fn default() -> Self {
        MenuConfig {
            min_symbol_rate_gbd: 35.0,
            max_symbol_rate_gbd: 69.0,
            clip_to_cap: false,
            clip_margin_gbd: 1.0,
            min_rate_gbps: 100,
            max_rate_gbps: 600,
            rate_step_gbps: 50,
            guard_ghz: 0.0,
        }
    }
}

/// Symbol rate at which 100G QPSK runs; fixes the overhead-inclusive code rate.
const REFERENCE_RATE_GBPS: f64 = 100.0;
const REFERENCE_SYMBOL_RATE_GBD: f64 = 35.0;
const REFERENCE_BITS: f64 = 2.0;

/// Effective code rate such that 100G QPSK occupies 35 GBd (dual polarisation).
pub fn code_rate() -> f64 {
    REFERENCE_RATE_GBPS / (2.0 * REFERENCE_BITS * REFERENCE_SYMBOL_RATE_GBD)
}

/// One (modulation, data rate) operating point of the transceiver.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TransceiverMode {
    pub modulation: Modulation,
    pub data_rate_gbps: u32,
    pub symbol_rate_gbd: f64,
    pub slots: usize,
}

/// All admissible operating points, ordered by modulation then rate.
pub fn transceiver_menu(cfg: &MenuConfig) -> Vec<TransceiverMode> {
    let mut out = Vec::new();
    for m in Modulation::ALL {
        let mut rate = cfg.min_rate_gbps;
        while rate <= cfg.max_rate_gbps {
            // B = R / (2·m·r_code), evaluated in a form exact for the reference point
            let b = REFERENCE_SYMBOL_RATE_GBD * REFERENCE_BITS * rate as f64
                / (REFERENCE_RATE_GBPS * m.bits_per_symbol() as f64);
            let eps = 1e-9;
            let symbol_rate = if b < cfg.min_symbol_rate_gbd - eps {
                None
            } else if b <= cfg.max_symbol_rate_gbd + eps {
                Some(b)
            } else if cfg.clip_to_cap && b <= cfg.max_symbol_rate_gbd + cfg.clip_margin_gbd + eps {
                Some(cfg.max_symbol_rate_gbd)
            } else {
                None
            };
            if let Some(b) = symbol_rate {
                out.push(TransceiverMode {
                    modulation: m,
                    data_rate_gbps: rate,
                    symbol_rate_gbd: b,
                    slots: slots_needed(b, cfg.guard_ghz),
                });
            }
            rate += cfg.rate_step_gbps.max(1);
        }
    }
    out
}

/// Launch power for PSD equalisation relative to 0 dBm at 35 GBd.
pub fn launch_power_for(symbol_rate_gbd: f64) -> f64 {
    10.0 * (symbol_rate_gbd / REFERENCE_SYMBOL_RATE_GBD).log10()
}

/// Gray-coded M-QAM bit error rate on AWGN at linear SNR `snr` (Es/N0).
pub fn qam_ber(modulation: Modulation, snr: f64) -> f64 {
    let m = modulation.order() as f64;
    let k = modulation.bits_per_symbol() as f64;
    let q = |x: f64| 0.5 * erfc(x / std::f64::consts::SQRT_2);
    (4.0 / k) * (1.0 - 1.0 / m.sqrt()) * q((3.0 * snr / (m - 1.0)).sqrt())
}

/// SNR (dB) at which [`qam_ber`] reaches `target_ber`, by bisection.
pub fn required_snr_awgn(modulation: Modulation, target_ber: f64) -> f64 {
    let (mut lo, mut hi) = (-10.0f64, 40.0f64);
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if qam_ber(modulation, 10f64.powf(mid / 10.0)) > target_ber {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    0.5 * (lo + hi)
}

/// Minimum receiver SNR per modulation format, dB.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SnrThresholds {
    #[serde(rename = "QPSK")]
    pub qpsk: f64,
    #[serde(rename = "16QAM")]
    pub qam16: f64,
    #[serde(rename = "32QAM")]
    pub qam32: f64,
    #[serde(rename = "64QAM")]
    pub qam64: f64,
}

/// Pre-FEC BER the thresholds are derived for.
pub const PRE_FEC_BER: f64 = 2e-2;
/// Implementation margin added on top of the AWGN requirement.
pub const IMPLEMENTATION_MARGIN_DB: f64 = 2.0;

impl SnrThresholds {
    /// AWGN requirement at [`PRE_FEC_BER`] plus [`IMPLEMENTATION_MARGIN_DB`].
    pub fn derived() -> Self {
        let t = |m| required_snr_awgn(m, PRE_FEC_BER) + IMPLEMENTATION_MARGIN_DB;
        SnrThresholds {
            qpsk: t(Modulation::Qpsk),
            qam16: t(Modulation::Qam16),
            qam32: t(Modulation::Qam32),
            qam64: t(Modulation::Qam64),
        }
    }

    pub fn required_snr(&self, modulation: Modulation) -> f64 {
        match modulation {
            Modulation::Qpsk => self.qpsk,
            Modulation::Qam16 => self.qam16,
            Modulation::Qam32 => self.qam32,
            Modulation::Qam64 => self.qam64,
        }
    }

    /// Lookup by format name, e.g. `"16QAM"`.
    pub fn required_snr_named(&self, name: &str) -> Result<f64> {
        let m: Modulation = name.parse()?;
        Ok(self.required_snr(m))
    }

    pub fn validate(&self) -> Result<()> {
        let v = [self.qpsk, self.qam16, self.qam32, self.qam64];
        if v.iter().all(|x| x.is_finite()) {
            Ok(())
        } else {
            Err(Error::Config(format!("non-finite SNR threshold in {self:?}")))
        }
    }
}

impl Default for SnrThresholds {
    fn default() -> Self {
        SnrThresholds::derived()
    }
}
