//! The three planning strategies on the small stressed network, closed-form
//! GN as the QoT estimator.

use qotplan::netmodel::{load_demands, load_topology};
use qotplan::planner::{run_study, PlannerConfig, Rcsa};
use qotplan::qot::GnPce;

fn main() -> qotplan::Result<()> {
    let dir = concat!(env!("CARGO_MANIFEST_DIR"), "/fixtures");
    let topo = load_topology(format!("{dir}/stressed.json"))?;
    let demands = load_demands(format!("{dir}/stressed_demands.csv"), &topo)?;
    let cfg = PlannerConfig::default();
    let years = 8;
    for rcsa in [Rcsa::Eol, Rcsa::Yearly, Rcsa::Monthly] {
        let periods = match rcsa {
            Rcsa::Monthly => 12 * (years - 1) + 1,
            _ => years,
        };
        let out = run_study(&topo, &demands, rcsa, &mut GnPce::new(), periods, &cfg)?;
        print!("{:>8}:", rcsa.name());
        for r in out.reports.iter().filter(|r| rcsa != Rcsa::Monthly || r.period % 12 == 0) {
            print!(" {:>4} lp/{:.3}", r.n_lightpaths, r.up);
        }
        println!();
    }
    println!("(per year: live lightpaths / underprovisioning ratio)");
    Ok(())
}
