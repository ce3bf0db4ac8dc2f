//! Union workspace of connector C over all A and B placements, at the default
//! 5° resolution and at half that resolution.

use modur::workspace::{FeasibilityConfig, SweepConfig};

fn main() {
    let fine = SweepConfig::default();
    for (label, cfg) in [("5°", fine.clone()), ("10°", fine.coarsened())] {
        let m = cfg.run().expect("valid sweep config");
        println!("{label:>4} grid: WS = {:.2}%", 100.0 * m.ws);
    }
    let open = SweepConfig {
        feasibility: FeasibilityConfig {
            require_enclosure: false,
            ..FeasibilityConfig::default()
        },
        ..fine.coarsened()
    };
    let m = open.run().expect("valid sweep config");
    println!("without the enclosure condition (10°): WS = {:.2}%", 100.0 * m.ws);
}
