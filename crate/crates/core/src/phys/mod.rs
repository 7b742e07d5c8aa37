//! Physical-layer models: ASE noise, the closed-form GN baseline, the GN
//! integral oracle, SNR composition and transceiver feasibility.

mod closed;
pub(crate) mod oracle;
mod transceiver;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub use closed::gn_closed_eta;
pub use oracle::{
    gn_oracle_all, gn_oracle_eta, oracle_sci_power, OracleMode, OracleOutput, Quadrature,
};
pub use transceiver::{
    code_rate, launch_power_for, qam_ber, required_snr_awgn, transceiver_menu, MenuConfig, SnrThresholds,
    TransceiverMode,
};

/// Planck constant, J·s.
pub const PLANCK: f64 = 6.626_070_15e-34;
/// Optical reference frequency for ASE photon energy.
pub const REFERENCE_FREQUENCY_HZ: f64 = 193.4e12;

/// A homogeneous-span fibre link with per-span amplifiers compensating the span loss.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct FiberLink {
    pub span_length_km: f64,
    pub n_spans: u32,
    /// Power attenuation, dB/km.
    pub alpha_db_per_km: f64,
    /// Group-velocity dispersion, ps²/km.
    pub beta2_ps2_per_km: f64,
    /// Nonlinear coefficient, 1/(W·km).
    pub gamma_per_w_km: f64,
    pub noise_figure_db: f64,
}

impl Default for FiberLink {
    fn default() -> Self {
        FiberLink {
            span_length_km: 80.0,
            n_spans: 1,
            alpha_db_per_km: 0.2,
            beta2_ps2_per_km: -21.3,
            gamma_per_w_km: 1.3,
            noise_figure_db: 5.0,
        }
    }
}

impl FiberLink {
    /// SSMF link with the default coefficients.
    pub fn ssmf(span_length_km: f64, n_spans: u32) -> Self {
        FiberLink {
            span_length_km,
            n_spans,
            ..FiberLink::default()
        }
    }

    pub fn span_length_m(&self) -> f64 {
        self.span_length_km * 1e3
    }

    /// Field attenuation in nepers per metre.
    pub fn alpha_field_per_m(&self) -> f64 {
        self.alpha_db_per_km * std::f64::consts::LN_10 / 20.0 / 1e3
    }

    pub fn beta2_s2_per_m(&self) -> f64 {
        self.beta2_ps2_per_km * 1e-24 / 1e3
    }

    pub fn gamma_per_w_m(&self) -> f64 {
        self.gamma_per_w_km / 1e3
    }

    /// Effective length of one span, metres.
    pub fn effective_length_m(&self) -> f64 {
        let a2 = 2.0 * self.alpha_field_per_m();
        (1.0 - (-a2 * self.span_length_m()).exp()) / a2
    }

    /// Asymptotic effective length 1/(2α), metres.
    pub fn asymptotic_effective_length_m(&self) -> f64 {
        1.0 / (2.0 * self.alpha_field_per_m())
    }

    pub fn span_gain_linear(&self) -> f64 {
        10f64.powf(self.alpha_db_per_km * self.span_length_km / 10.0)
    }

    pub fn total_length_km(&self) -> f64 {
        self.span_length_km * self.n_spans as f64
    }

    pub(crate) fn validate(&self) -> Result<()> {
        let ok = self.span_length_km > 0.0
            && self.alpha_db_per_km > 0.0
            && self.beta2_ps2_per_km < 0.0
            && self.gamma_per_w_km > 0.0
            && self.span_length_km.is_finite();
        if ok {
            Ok(())
        } else {
            Err(Error::Domain(format!("invalid fibre parameters {self:?}")))
        }
    }
}

/// Noise variances referred to the CUT bandwidth, in watts.
#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
pub struct NoiseBreakdown {
    pub ase_w: f64,
    pub sci_w: f64,
    pub xci_w: f64,
}

impl NoiseBreakdown {
    pub fn nli_w(&self) -> f64 {
        self.sci_w + self.xci_w
    }

    pub fn total_w(&self) -> f64 {
        self.ase_w + self.sci_w + self.xci_w
    }
}

/// NLI coefficient: total NLI power over transmit power cubed, in dB re 1/W².
#[derive(Debug, Clone, Copy, PartialEq, PartialOrd, Serialize, Deserialize)]
pub struct EtaNli(pub f64);

impl EtaNli {
    pub fn from_power(p_nli_w: f64, p_tx_w: f64) -> Self {
        EtaNli(10.0 * (p_nli_w / p_tx_w.powi(3)).log10())
    }

    pub fn db(self) -> f64 {
        self.0
    }

    pub fn nli_power(self, p_tx_w: f64) -> f64 {
        10f64.powf(self.0 / 10.0) * p_tx_w.powi(3)
    }
}

/// ASE variance accumulated over all spans within `b_ref_hz`.
pub fn ase_variance(link: &FiberLink, b_ref_hz: f64) -> f64 {
    let g = link.span_gain_linear();
    let f = 10f64.powf(link.noise_figure_db / 10.0);
    link.n_spans as f64 * (g * f - 1.0) * PLANCK * REFERENCE_FREQUENCY_HZ * b_ref_hz
}

/// SNR in dB with MCI neglected: `P_tx / (σ²_ASE + σ²_SCI + σ²_XCI)`.
pub fn combine_snr(p_tx_w: f64, nb: &NoiseBreakdown) -> Result<f64> {
    let noise = nb.total_w();
    if !(noise > 0.0) || nb.ase_w < 0.0 || nb.sci_w < 0.0 || nb.xci_w < 0.0 {
        return Err(Error::Domain(format!(
            "noise variances must be nonnegative with a positive sum, got {nb:?}"
        )));
    }
    Ok(10.0 * (p_tx_w / noise).log10())
}

/// Composes per-link SNRs (dB) of a transparent path by inverse-SNR addition.
pub fn path_snr_db(link_snrs_db: &[f64]) -> f64 {
    let inv: f64 = link_snrs_db.iter().map(|s| 10f64.powf(-s / 10.0)).sum();
    -10.0 * inv.log10()
}

pub(crate) fn check_spectrum(spectrum: &[crate::grid::ChannelConfig], cut: usize) -> Result<()> {
    if cut >= spectrum.len() {
        return Err(Error::Domain(format!(
            "CUT index {cut} out of range for {} channels",
            spectrum.len()
        )));
    }
    let mut order: Vec<usize> = (0..spectrum.len()).collect();
    order.sort_by(|&a, &b| spectrum[a].center_hz.total_cmp(&spectrum[b].center_hz));
    for w in order.windows(2) {
        if spectrum[w[0]].overlaps(&spectrum[w[1]]) {
            return Err(Error::Domain(format!(
                "channels at {:.4} THz and {:.4} THz overlap",
                spectrum[w[0]].center_hz / 1e12,
                spectrum[w[1]].center_hz / 1e12
            )));
        }
    }
    for c in spectrum {
        if !(c.symbol_rate_gbd > 0.0) || !c.launch_power_dbm.is_finite() {
            return Err(Error::Domain(format!("invalid channel {c:?}")));
        }
    }
    Ok(())
}
