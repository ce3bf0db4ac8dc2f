//! Staged control of connector C alone, driving only the three linkages that
//! touch it, compared with driving all six.

use modur::control::{local_control, plan_stages, Plant, PlantConfig, PidGains};
use modur::kinematics::{inverse_kinematics, ModuleState};

fn main() {
    let start = ModuleState::new(-15.0, 30.0, 110.0, 30.0, 230.0);
    let target = (45.0, 250.0);
    let goal = inverse_kinematics(&start.with_connector(modur::kinematics::ConnectorId::C, target.0, target.1));
    let plan = plan_stages(&inverse_kinematics(&start), &goal, 9.0).unwrap();
    let largest = plan.delta_total.to_array().iter().fold(0.0f64, |m, d| m.max(d.abs()));
    println!("largest angle change {largest:.2} deg -> {} stages of at most 9 deg", plan.steps);

    let mut plant = Plant::new(PlantConfig { seed: 3, ..PlantConfig::default() }, start);
    let rec = local_control(target, &PidGains::default(), &mut plant).expect("target inside the workspace of C");
    println!(
        "reached ({:.2}, {:.2}) for target ({}, {}): {:.3} deg off after {} iterations",
        rec.achieved.0, rec.achieved.1, target.0, target.1, rec.error, rec.iterations
    );
    let s = plant.state();
    println!("A and B held at ({:.2}) and ({:.2}, {:.2})", s.phi_a, s.phi_b, s.theta_b);
}
