//! A module moving from one neighbour to another: checks, the five-action
//! plan, and the geometry at the moment of connection.

use modur::reconfig::TransitionScene;
use modur::slg::TABLE1;

fn main() {
    let scene = TransitionScene::canonical(TABLE1.slg_radius);
    let asm = &scene.assembly;
    let report = asm.check_transition("mc", "mp", "mr").unwrap();
    for b in &report.bullets {
        println!("({:>3}) {}  {}", b.id, if b.ok { "ok    " } else { "FAILED" }, b.detail);
    }
    let script = asm.plan_transition("mc", "mp", "mr").expect("canonical scene is reachable");
    let (after, steps) = asm.execute(&script).unwrap();
    for snap in &steps {
        let c = &snap.centers;
        let side = |a: &str, b: &str| (c[a] - c[b]).norm() / TABLE1.slg_radius;
        println!(
            "{}. {:<40} |mc-mp| {:.3} L  |mc-mr| {:.3} L",
            snap.step,
            snap.action,
            side("mc", "mp"),
            side("mc", "mr")
        );
    }
    println!("mc now hangs from {:?}", after.parent_of("mc"));

    let far = TransitionScene::with_separation(TABLE1.slg_radius, 3.0);
    if let Err(e) = far.assembly.plan_transition("mc", "mp", "mr") {
        println!("\nreceiver at 3 L: {e}");
    }
}
