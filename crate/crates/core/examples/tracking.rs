//! Connector C following the spiral trajectory under bounded actuation error,
//! with and without the sixth (redundant) actuator.

use modur::control::{
    compare_redundancy, track_trajectory, ControllerMode, HeldConnectors, PidGains, PlantConfig,
    TrajectorySpec,
};

fn main() {
    let spec = TrajectorySpec::default();
    let held = HeldConnectors::default();
    let gains = PidGains::default();

    let clean = track_trajectory(&spec, &held, &gains, &PlantConfig::noiseless(), ControllerMode::Global)
        .expect("default trajectory is feasible");
    println!("noiseless plant: RMSE {:.2e} deg", clean.rmse_vs_design);

    let noisy = track_trajectory(&spec, &held, &gains, &PlantConfig::default(), ControllerMode::Global)
        .expect("default trajectory is feasible");
    println!(
        "9 deg error bound, seed 0: RMSE {:.3} deg, worst point {:.3} deg, {} iterations",
        noisy.rmse_vs_design,
        noisy.per_point_errors.iter().copied().fold(0.0, f64::max),
        noisy.total_iterations
    );

    let seeds: Vec<u64> = (0..10).collect();
    let cmp = compare_redundancy(&spec, &held, &gains, &PlantConfig::default(), &seeds).unwrap();
    println!(
        "over {} seeds: median RMSE redundant {:.3} deg, non-redundant {:.3} deg, redundant better on {:.0}%",
        seeds.len(),
        cmp.median_redundant,
        cmp.median_non_redundant,
        100.0 * cmp.redundant_wins
    );
}
