//! Loads a shipped topology and demand matrix, prints the summary statistics,
//! the span layout of each link and a few years of traffic growth.

use qotplan::netmodel::{expand_spans, grow_demands, load_demands, load_topology, Granularity};

fn main() -> qotplan::Result<()> {
    let dir = concat!(env!("CARGO_MANIFEST_DIR"), "/fixtures");
    let topo = load_topology(format!("{dir}/germany.json"))?;
    let demands = load_demands(format!("{dir}/germany_demands.csv"), &topo)?;
    println!(
        "{}: {} nodes, {} links, {} demands, degree {:.2}, mean shortest path {:.0} km",
        topo.name,
        topo.n_nodes(),
        topo.n_links(),
        demands.len(),
        topo.average_degree(),
        topo.average_shortest_path_km()
    );
    for l in topo.links.iter().take(5) {
        let f = expand_spans(l.length_km, 80.0);
        println!(
            "  {:>11} - {:<11} {:>6.1} km = {} x {:.1} km",
            topo.nodes[l.a], topo.nodes[l.b], l.length_km, f.n_spans, f.span_length_km
        );
    }
    let yearly = grow_demands(&demands, 0.30, 4, Granularity::Yearly);
    for (t, rates) in yearly.iter().enumerate() {
        println!("year {t}: {:.0} Gb/s requested", rates.iter().sum::<f64>());
    }
    Ok(())
}
