//! The transceiver menu and the SNR thresholds derived from the QAM BER curves.

use qotplan::grid::Modulation;
use qotplan::phys::{
    launch_power_for, required_snr_awgn, transceiver_menu, MenuConfig, SnrThresholds,
};

fn main() {
    let thr = SnrThresholds::derived();
    for m in Modulation::ALL {
        println!(
            "{:>6}: AWGN SNR at BER 2e-2 {:>6.2} dB, threshold {:>6.2} dB",
            m.name(),
            required_snr_awgn(m, 2e-2),
            thr.required_snr(m)
        );
    }
    println!();
    for mode in transceiver_menu(&MenuConfig::default()) {
        println!(
            "{:>6} {:>4} Gb/s  {:>5.1} GBd  {} slots  {:+.2} dBm",
            mode.modulation.name(),
            mode.data_rate_gbps,
            mode.symbol_rate_gbd,
            mode.slots,
            launch_power_for(mode.symbol_rate_gbd)
        );
    }
}
