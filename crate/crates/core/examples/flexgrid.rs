//! First-fit placement on a 400-slot flex grid and neighbour lookup.

use qotplan::grid::{
    first_fit_common, neighbors_by_distance, slots_needed, ChannelConfig, FlexGrid, LightpathId,
    Modulation, SlotRange,
};

fn main() -> qotplan::Result<()> {
    let mut grid = FlexGrid::new(400);
    for (id, gbd) in [35.0, 69.0, 52.5, 35.0].into_iter().enumerate() {
        let n = slots_needed(gbd, 0.0);
        let range = grid.first_fit(n).expect("empty grid");
        grid.place(range, LightpathId(id as u32))?;
        println!(
            "lightpath {id}: {gbd:>5} GBd -> {n} slots at {}..{} ({:.4} THz)",
            range.start,
            range.end() - 1,
            grid.center_frequency(range) / 1e12
        );
    }

    // Free a hole in the middle and watch first-fit reuse it.
    grid.release(LightpathId(1));
    let hole = grid.first_fit(3).unwrap();
    println!("after releasing lightpath 1, a 3-slot request lands at {}", hole.start);

    // Spectrum continuity: the common free run over two links.
    let mut other = FlexGrid::new(400);
    other.place(SlotRange::new(0, 5), LightpathId(9))?;
    let common = first_fit_common([&grid, &other], 4).unwrap();
    println!("4 slots free on both links from slot {}", common.start);

    let spectrum: Vec<ChannelConfig> = (0..12)
        .map(|i| ChannelConfig {
            center_hz: 193.0e12 + i as f64 * 50e9,
            symbol_rate_gbd: 35.0,
            modulation: Modulation::Qpsk,
            data_rate_gbps: 100,
            launch_power_dbm: 0.0,
        })
        .collect();
    let order = neighbors_by_distance(&spectrum, 6);
    println!("neighbours of channel 6 by distance: {order:?}");
    Ok(())
}
