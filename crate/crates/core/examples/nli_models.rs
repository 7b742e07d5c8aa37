//! Closed-form GN against the numerical GN integral on a five-channel comb.

use qotplan::grid::{ChannelConfig, Modulation};
use qotplan::phys::{
    ase_variance, combine_snr, gn_closed_eta, gn_oracle_eta, EtaNli, FiberLink, OracleMode,
    Quadrature,
};

fn main() -> qotplan::Result<()> {
    let link = FiberLink::ssmf(100.0, 10);
    let spectrum: Vec<ChannelConfig> = (0..5)
        .map(|i| ChannelConfig {
            center_hz: 193.4e12 + (i as f64 - 2.0) * 50e9,
            symbol_rate_gbd: 35.0,
            modulation: Modulation::Qpsk,
            data_rate_gbps: 100,
            launch_power_dbm: 0.0,
        })
        .collect();
    let quad = Quadrature::default();
    println!("{:>3} {:>12} {:>12} {:>12} {:>9}", "ch", "closed dB", "oracle dB", "sci-only dB", "SNR dB");
    for cut in 0..spectrum.len() {
        let p = spectrum[cut].launch_power_w();
        let closed = gn_closed_eta(&link, &spectrum, cut)?;
        let closed_eta = EtaNli::from_power(closed.nli_w(), p);
        let total = gn_oracle_eta(&link, &spectrum, cut, OracleMode::Total, &quad)?;
        let sci = gn_oracle_eta(&link, &spectrum, cut, OracleMode::SciOnly, &quad)?;
        let mut nb = closed;
        nb.ase_w = ase_variance(&link, spectrum[cut].symbol_rate_hz());
        nb.sci_w = 0.0;
        nb.xci_w = total.nli_power(p);
        println!(
            "{cut:>3} {:>12.3} {:>12.3} {:>12.3} {:>9.2}",
            closed_eta.db(),
            total.db(),
            sci.db(),
            combine_snr(p, &nb)?
        );
    }
    Ok(())
}
