use std::f64::consts::PI;

use super::{check_spectrum, FiberLink, NoiseBreakdown};
use crate::error::Result;
use crate::grid::ChannelConfig;

/// Closed-form GN estimate of the SCI and XCI variances of `spectrum[cut]`.
///
/// Spans accumulate incoherently. The XCI coefficient is 8/27, which is the
/// far-field limit of the two cross-phase islands of the GN double integral
/// with its 16/27 prefactor. The returned breakdown has a zero ASE term.
pub fn gn_closed_eta(
    link: &FiberLink,
    spectrum: &[ChannelConfig],
    cut: usize,
) -> Result<NoiseBreakdown> {
    link.validate()?;
    check_spectrum(spectrum, cut)?;

    let gamma = link.gamma_per_w_m();
    let beta2 = link.beta2_s2_per_m().abs();
    let l_eff = link.effective_length_m();
    let l_eff_a = link.asymptotic_effective_length_m();
    let spans = link.n_spans as f64;
    let common = gamma * gamma * l_eff * l_eff / (PI * beta2 * l_eff_a);

    let c = &spectrum[cut];
    let p_i = c.launch_power_w();
    let b_i = c.symbol_rate_hz();
    let sci = (8.0 / 27.0) * common * p_i.powi(3)
        * (0.5 * PI * PI * beta2 * l_eff_a * b_i * b_i).asinh()
        / (b_i * b_i);

    let mut xci = 0.0;
    for (k, other) in spectrum.iter().enumerate() {
        if k == cut {
            continue;
        }
        let p_k = other.launch_power_w();
        let b_k = other.symbol_rate_hz();
        let df = (other.center_hz - c.center_hz).abs();
        let log = ((df + b_k / 2.0) / (df - b_k / 2.0)).ln();
        xci += (8.0 / 27.0) * common * p_k * p_k * p_i * log / (b_k * b_k);
    }

    Ok(NoiseBreakdown {
        ase_w: 0.0,
        sci_w: spans * sci,
        xci_w: spans * xci,
    })
}
