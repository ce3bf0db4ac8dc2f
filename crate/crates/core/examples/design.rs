//! Linkage synthesis from the prototype's design inputs, next to the
//! reference values that were actually built.

use modur::slg::{synthesize, sweep, validate, TABLE1};

fn main() {
    let input = TABLE1.design_input();
    let d = synthesize(&input).expect("reference inputs are valid");
    println!("collision angle {:>6.2} deg", d.delta_col);
    println!("rod length      {:>6.2} mm   (built: {} mm)", d.l, TABLE1.l);
    println!("module radius   {:>6.2} mm   (built: {} mm)", d.slg_radius, TABLE1.slg_radius);
    println!("connector R     {:>6.2} mm   (built: {} mm)", d.connector_r, TABLE1.connector_r);
    println!("validation issues: {:?}", validate(&d));

    println!("\nalpha sweep at delta_min = 60:");
    for row in sweep(&input, &[10.0, 15.0, 20.0, 25.0], &[60.0]).expect("valid sweep") {
        println!("  alpha {:>4}  l {:>4} mm  L {:>7.2} mm", row.input.alpha, row.l, row.slg_radius);
    }
}
