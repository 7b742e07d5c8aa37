use qotplan::netmodel::load_topology;
use qotplan::planner::k_shortest_paths;

fn main() -> qotplan::Result<()> {
    let topo = load_topology(concat!(env!("CARGO_MANIFEST_DIR"), "/fixtures/germany.json"))?;
    let (s, d) = (topo.node_index("Norden").unwrap(), topo.node_index("Muenchen").unwrap());
    for (i, p) in k_shortest_paths(&topo, s, d, 3).iter().enumerate() {
        let names: Vec<&str> = p.nodes.iter().map(|&n| topo.nodes[n].as_str()).collect();
        println!("{}: {:.1} km  {}", i + 1, p.length_km, names.join(" - "));
    }
    Ok(())
}
