//! Forward and inverse kinematics of one module, the chirality test and the
//! connector deflection.

use modur::kinematics::{
    closure_residual, deflection_c, forward_kinematics, inverse_kinematics, DeltaVector, ModuleState,
};

fn main() {
    let tetra = (-1.0f64 / 3.0).acos().to_degrees();
    let s = forward_kinematics(&DeltaVector::uniform(tetra)).expect("regular tetrahedron closes");
    println!("all six angles {tetra:.4} deg:");
    println!("  A ({:.4}, 0)  B ({:.4}, {:.4})  C ({:.4}, {:.4})", s.phi_a, s.phi_b, s.theta_b, s.phi_c, s.theta_c);
    println!("  deflection of C: {:.4} deg", deflection_c(&s).unwrap());

    let pose = ModuleState::new(10.0, 25.0, 110.0, 5.0, 230.0);
    let d = inverse_kinematics(&pose);
    println!("\nIK of {pose:?}:\n  {d:?}");
    let back = forward_kinematics(&d).expect("IK output closes");
    println!("  FK round trip drift: {:.2e} deg", (back.theta_c - pose.theta_c).abs());
    println!("  chirality holds: {}", back.is_chiral().unwrap());

    let mut bent = d;
    bent.bc += 3.0;
    println!("\nBC pushed 3 deg off: closure residual {:.4} deg", closure_residual(&bent).unwrap());
    match forward_kinematics(&bent) {
        Ok(_) => println!("  FK still accepted it"),
        Err(e) => println!("  FK rejects it: {e}"),
    }
}
