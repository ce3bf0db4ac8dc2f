//! Acceptance suite. Prints one PASS/FAIL line per criterion and exits
//! non-zero if any criterion fails. Run with `cargo test --test acceptance`.

use modur::control::{
    compare_redundancy, plan_stages, plan_stages_with, simulate_plant, HeldConnectors, PidGains,
    PlantConfig, StepRule, TrajectorySpec,
};
use modur::kinematics::{
    angular_distance, closure_residual, deflection_c, elevation_from_delta, forward_kinematics,
    inverse_kinematics, position_vector, tangent_toward, ConnectorId, DeltaVector, ModuleState, Vec3,
};
use modur::reconfig::{Action, TransitionScene};
use modur::slg::TABLE1;
use modur::workspace::{classify, feasible, opposite_slg_intersect, FeasibilityConfig, SweepConfig};
use nalgebra::{DMatrix, DVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use std::time::{Duration, Instant};

struct Outcome {
    pass: bool,
    detail: String,
}

fn outcome(pass: bool, detail: impl Into<String>) -> Outcome {
    Outcome {
        pass,
        detail: detail.into(),
    }
}

fn random_direction(rng: &mut impl Rng) -> (f64, f64) {
    let z: f64 = rng.random_range(-1.0..1.0);
    (z.asin().to_degrees(), rng.random_range(0.0..360.0))
}

fn random_state(rng: &mut impl Rng) -> ModuleState {
    let phi_a = rng.random_range(-30.0..90.0);
    let (pb, tb) = random_direction(rng);
    let (pc, tc) = random_direction(rng);
    ModuleState::new(phi_a, pb, tb, pc, tc)
}

fn random_feasible(rng: &mut impl Rng, config: &FeasibilityConfig) -> ModuleState {
    loop {
        let s = random_state(rng);
        if feasible(&s, config) {
            return s;
        }
    }
}

// ---------------------------------------------------------------------------
// Oracles

/// Six angles for parameters `[phi_a, phi_b, theta_b, phi_c, theta_c]`.
fn oracle_angles(p: &[f64]) -> [f64; 6] {
    let a = position_vector(p[0], 0.0);
    let b = position_vector(p[1], p[2]);
    let c = position_vector(p[3], p[4]);
    let d = Vec3::new(0.0, 0.0, -1.0);
    let ang = |u: &Vec3, v: &Vec3| u.dot(v).clamp(-1.0, 1.0).acos().to_degrees();
    [ang(&a, &b), ang(&a, &c), ang(&a, &d), ang(&b, &c), ang(&b, &d), ang(&c, &d)]
}

/// A, B, C counterclockwise about z seen from above, with D below:
/// the normal of triangle ABC points away from D.
fn oracle_chiral(p: &[f64]) -> bool {
    let a = position_vector(p[0], 0.0);
    let b = position_vector(p[1], p[2]);
    let c = position_vector(p[3], p[4]);
    let d = Vec3::new(0.0, 0.0, -1.0);
    (b - a).cross(&(c - a)).dot(&(d - a)) < 0.0
}

/// Levenberg-Marquardt fit of the five pose parameters to six angles,
/// multi-started; returns the chiral zero-residual solution.
fn least_squares_fk(target: &[f64; 6]) -> Option<[f64; 5]> {
    let starts = [
        [19.47, 19.47, 120.0, 19.47, 240.0],
        [0.0, 0.0, 90.0, 0.0, 270.0],
        [45.0, -10.0, 150.0, 10.0, 210.0],
        [-20.0, 30.0, 60.0, 30.0, 300.0],
        [60.0, 10.0, 100.0, -20.0, 200.0],
        [10.0, 50.0, 170.0, 50.0, 190.0],
    ];
    let resid = |p: &[f64]| {
        let a = oracle_angles(p);
        DVector::from_iterator(6, (0..6).map(|i| a[i] - target[i]))
    };
    for start in starts {
        let mut p = start.to_vec();
        let mut r = resid(&p);
        let mut lambda = 1e-3;
        for _ in 0..500 {
            let mut j = DMatrix::zeros(6, 5);
            for k in 0..5 {
                let mut q = p.clone();
                q[k] += 1e-7;
                let dr = (resid(&q) - &r) / 1e-7;
                j.set_column(k, &dr);
            }
            let jt = j.transpose();
            let h = &jt * &j + DMatrix::identity(5, 5) * lambda;
            let Some(step) = h.lu().solve(&(-&jt * &r)) else { break };
            let q: Vec<f64> = p.iter().zip(step.iter()).map(|(a, b)| a + b).collect();
            let rq = resid(&q);
            if rq.norm() < r.norm() {
                p = q;
                r = rq;
                lambda = (lambda * 0.3).max(1e-12);
            } else {
                lambda *= 10.0;
            }
            if r.norm() < 1e-11 {
                break;
            }
        }
        if r.norm() < 1e-9 && oracle_chiral(&p) {
            return Some([p[0], p[1], p[2].rem_euclid(360.0), p[3], p[4].rem_euclid(360.0)]);
        }
    }
    None
}

/// Closed-form test for two minor great-circle arcs crossing. Returns the
/// verdict and a tangency margin: the smallest endpoint distance to the other
/// arc's plane, and the smallest distance of the crossing point to an endpoint.
fn arcs_cross(p1: &Vec3, p2: &Vec3, q1: &Vec3, q2: &Vec3) -> (bool, f64) {
    let n1 = p1.cross(p2).normalize();
    let n2 = q1.cross(q2).normalize();
    let (sq1, sq2, sp1, sp2) = (q1.dot(&n1), q2.dot(&n1), p1.dot(&n2), p2.dot(&n2));
    let mut margin = sq1.abs().min(sq2.abs()).min(sp1.abs()).min(sp2.abs());
    if sq1 * sq2 > 0.0 || sp1 * sp2 > 0.0 {
        return (false, margin);
    }
    let x = n1.cross(&n2);
    if x.norm() < 1e-12 {
        return (false, 0.0);
    }
    let x = x.normalize();
    let on = |s: &Vec3, a: &Vec3, b: &Vec3| {
        (angular_distance(a, s) + angular_distance(s, b) - angular_distance(a, b)).abs() < 1e-9
    };
    for s in [x, -x] {
        if on(&s, p1, p2) && on(&s, q1, q2) {
            for e in [p1, p2, q1, q2] {
                margin = margin.min(angular_distance(e, &s).to_radians());
            }
            return (true, margin);
        }
    }
    (false, margin)
}

/// Spherical angle at C between the arcs toward D and toward B.
fn transported_deflection(s: &ModuleState) -> f64 {
    let c = s.position(ConnectorId::C);
    let to_b = tangent_toward(&c, &s.position(ConnectorId::B)).unwrap();
    let to_d = tangent_toward(&c, &Vec3::new(0.0, 0.0, -1.0)).unwrap();
    to_b.dot(&to_d).clamp(-1.0, 1.0).acos().to_degrees()
}

// ---------------------------------------------------------------------------
// Criteria

fn c1_a_arc() -> Outcome {
    let lo = elevation_from_delta(60.0).unwrap();
    let hi = elevation_from_delta(180.0).unwrap();
    let mut monotone = true;
    let mut prev = lo;
    for k in 1..=12_000 {
        let e = elevation_from_delta(60.0 + k as f64 * 0.01).unwrap();
        monotone &= e > prev;
        prev = e;
    }
    let outside = [59.999, 180.001].iter().all(|d| elevation_from_delta(*d).is_err());
    outcome(
        lo == -30.0 && hi == 90.0 && monotone && outside,
        format!("[60,180] -> [{lo}, {hi}], arc {} deg, monotone {monotone}", hi - lo),
    )
}

fn c2_total_ws() -> Outcome {
    let fine = SweepConfig::default();
    let a = fine.run().unwrap().ws;
    let b = fine.coarsened().run().unwrap().ws;
    let diff = (a - b).abs() * 100.0;
    outcome(
        (0.30..=0.40).contains(&a) && diff < 2.0,
        format!("WS {:.2}% at 5 deg, {:.2}% at 10 deg, difference {diff:.2} pp", 100.0 * a, 100.0 * b),
    )
}

fn c3_roundtrip() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let cfg = FeasibilityConfig::default();
    let (mut worst_rt, mut worst_ls, mut missing) = (0.0f64, 0.0f64, 0);
    for _ in 0..1000 {
        let d = inverse_kinematics(&random_feasible(&mut rng, &cfg));
        let s = forward_kinematics(&d).unwrap();
        worst_rt = worst_rt.max(inverse_kinematics(&s).max_abs_diff(&d));
        match least_squares_fk(&d.to_array()) {
            Some(p) => {
                // Compare directions, turning the fit about z so that A has azimuth 0.
                let flip = if p[0].to_radians().cos() < 0.0 { -1.0 } else { 1.0 };
                let theirs = [(p[0], 0.0), (p[1], p[2]), (p[3], p[4])];
                for (id, (phi, theta)) in ConnectorId::OUTPUTS.into_iter().zip(theirs) {
                    let v = position_vector(phi, theta);
                    let v = Vec3::new(flip * v.x, flip * v.y, v.z);
                    worst_ls = worst_ls.max(angular_distance(&s.position(id), &v));
                }
            }
            None => missing += 1,
        }
    }
    outcome(
        worst_rt < 1e-9 && worst_ls < 1e-6 && missing == 0,
        format!("max |IK(FK(d)) - d| {worst_rt:.2e} deg, max gap to least-squares oracle {worst_ls:.2e} deg, oracle misses {missing}"),
    )
}

fn c4_tetrahedron() -> Outcome {
    let t = (-1.0f64 / 3.0).acos().to_degrees();
    let s = forward_kinematics(&DeltaVector::uniform(t)).unwrap();
    let phi = 19.4712;
    let exact_phi = (1.0f64 / 3.0).asin().to_degrees();
    let defl = deflection_c(&s).unwrap();
    let dots = oracle_angles(&[s.phi_a, s.phi_b, s.theta_b, s.phi_c, s.theta_c]);
    let dot_ok = dots.iter().all(|a| (a - t).abs() < 1e-6);
    let transport = transported_deflection(&s);
    let ok = [s.phi_a, s.phi_b, s.phi_c].iter().all(|p| (p - exact_phi).abs() < 1e-6 && (p - phi).abs() < 1e-4)
        && (s.theta_b - 120.0).abs() < 1e-6
        && (s.theta_c - 240.0).abs() < 1e-6
        && (defl - 120.0).abs() < 1e-6
        && (transport - 120.0).abs() < 1e-6
        && dot_ok;
    outcome(
        ok,
        format!(
            "phi {:.6}, theta_B {:.6}, theta_C {:.6}, deflection C {defl:.6} (transport oracle {transport:.6}), dot oracle {dot_ok}",
            s.phi_a, s.theta_b, s.theta_c
        ),
    )
}

fn c5_intersection() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    // Enclosing states never cross, so sample on the range constraint alone.
    let range_only = FeasibilityConfig::range_only();
    let cfg = FeasibilityConfig::default();
    let (mut agree, mut crossing, mut bad) = (0usize, 0usize, 0usize);
    let n = 10_000;
    for _ in 0..n {
        let s = random_feasible(&mut rng, &range_only);
        let ours = opposite_slg_intersect(&s, &cfg).unwrap();
        let p = s.positions();
        let (mut oracle, mut margin) = (false, f64::MAX);
        for (i, j, k, l) in [(0, 1, 2, 3), (0, 2, 1, 3), (0, 3, 1, 2)] {
            let (x, m) = arcs_cross(&p[i], &p[j], &p[k], &p[l]);
            oracle |= x;
            margin = margin.min(m);
        }
        crossing += usize::from(oracle);
        if ours == oracle {
            agree += 1;
        } else if margin > 1e-6 {
            bad += 1;
        }
    }
    let rate = agree as f64 / n as f64;
    outcome(
        rate >= 0.999 && bad == 0,
        format!("{agree}/{n} agree ({crossing} crossing), {bad} disagreements away from tangency"),
    )
}

fn max_stage_change(origin: &DeltaVector, goals: &[DeltaVector]) -> f64 {
    let mut prev = *origin;
    let mut worst = 0.0f64;
    for g in goals {
        worst = worst.max(g.max_abs_diff(&prev));
        prev = *g;
    }
    worst
}

/// Both sub-checks are evaluated on the default (ceiling) rule. The floor
/// rule is also run to show that it breaks the per-stage bound instead.
fn c6_staging() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(6);
    let de = 9.0;
    let (mut over, mut floor_mismatch, mut floor_rule_over) = (0, 0, 0);
    let n = 10_000;
    for _ in 0..n {
        let o = DeltaVector::from_array(std::array::from_fn(|_| rng.random_range(60.0..180.0)));
        let t = DeltaVector::from_array(std::array::from_fn(|_| rng.random_range(60.0..180.0)));
        let plan = plan_stages(&o, &t, de).unwrap();
        over += usize::from(max_stage_change(&o, &plan.stage_goals) > de + 1e-9);
        let floor = ((t.max_abs_diff(&o) / de).floor() as usize).max(1);
        floor_mismatch += usize::from(plan.steps != floor);
        let floored = plan_stages_with(&o, &t, de, StepRule::Floor).unwrap();
        assert_eq!(floored.steps, floor);
        floor_rule_over += usize::from(max_stage_change(&o, &floored.stage_goals) > de + 1e-9);
    }
    outcome(
        over == 0 && floor_mismatch == 0,
        format!(
            "stages over the bound: {over}/{n}; step count differs from floor(max/de) in {floor_mismatch}/{n}; \
             the floor count itself overshoots de in {floor_rule_over}/{n}"
        ),
    )
}

fn c7_control() -> Outcome {
    let seeds: Vec<u64> = (0..20).collect();
    let cmp = compare_redundancy(
        &TrajectorySpec::default(),
        &HeldConnectors::default(),
        &PidGains::default(),
        &PlantConfig::default(),
        &seeds,
    )
    .unwrap();
    outcome(
        cmp.median_redundant <= 1.0 && cmp.redundant_wins >= 0.9,
        format!(
            "median RMSE {:.3} deg redundant, {:.3} deg non-redundant; redundant better on {:.0}% of seeds",
            cmp.median_redundant,
            cmp.median_non_redundant,
            100.0 * cmp.redundant_wins
        ),
    )
}

fn c8_transition() -> Outcome {
    let l = TABLE1.slg_radius;
    let scene = TransitionScene::canonical(l);
    let script = match scene.assembly.plan_transition("mc", "mp", "mr") {
        Ok(s) => s,
        Err(e) => return outcome(false, e.to_string()),
    };
    let (after, snaps) = scene.assembly.execute(&script).unwrap();
    let Some(k) = script.iter().position(|a| matches!(a, Action::Connect { .. })) else {
        return outcome(false, "no connect action");
    };
    let c = &snaps[k + 1].centers;
    let worst = [("mc", "mp"), ("mc", "mr"), ("mp", "mr")]
        .iter()
        .map(|(x, y)| ((c[*x] - c[*y]).norm() - 2.0 * l).abs())
        .fold(0.0, f64::max);
    let parent = after.parent_of("mc");
    let ok = worst < 1e-6 && parent.as_deref() == Some("mr") && !after.connected("mc", "mp");
    outcome(
        ok,
        format!("triangle side error {worst:.2e} mm, final parent {parent:?}, {} actions", script.len()),
    )
}

fn c9_closure() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(9);
    let cfg = FeasibilityConfig::default();
    let mut worst = 0.0f64;
    let mut errors = 0;
    for k in 0..300 {
        let d = inverse_kinematics(&random_feasible(&mut rng, &cfg));
        for redundant in [true, false] {
            let plant = PlantConfig {
                seed: k,
                redundant,
                ..PlantConfig::default()
            };
            match simulate_plant(&d, &plant).map(|out| closure_residual(&out)) {
                Ok(Ok(r)) => worst = worst.max(r),
                _ => errors += 1,
            }
        }
    }
    let mut accepted = 0;
    let mut non_chiral = 0;
    for _ in 0..20_000 {
        let s = random_state(&mut rng);
        if classify(&s, &cfg).is_ok() {
            accepted += 1;
            non_chiral += usize::from(!oracle_chiral(&[s.phi_a, s.phi_b, s.theta_b, s.phi_c, s.theta_c]));
        }
    }
    outcome(
        worst <= 1e-6 && non_chiral == 0 && errors == 0,
        format!("max plant closure residual {worst:.2e} deg over 600 runs ({errors} errors); {non_chiral} of {accepted} accepted states violate chirality"),
    )
}

fn main() {
    let criteria: [(&str, fn() -> Outcome, Duration); 9] = [
        ("1 A-connector arc", c1_a_arc, Duration::from_secs(1)),
        ("2 total C workspace", c2_total_ws, Duration::from_secs(300)),
        ("3 FK/IK roundtrip", c3_roundtrip, Duration::from_secs(10)),
        ("4 regular tetrahedron", c4_tetrahedron, Duration::from_secs(1)),
        ("5 intersection equivalence", c5_intersection, Duration::from_secs(30)),
        ("6 staging", c6_staging, Duration::from_secs(10)),
        ("7 control experiment", c7_control, Duration::from_secs(120)),
        ("8 transition experiment", c8_transition, Duration::from_secs(5)),
        ("9 closure and chirality", c9_closure, Duration::from_secs(30)),
    ];
    let mut failed = 0;
    for (name, f, budget) in criteria {
        let t = Instant::now();
        let o = f();
        let el = t.elapsed();
        let pass = o.pass && el <= budget;
        failed += usize::from(!pass);
        println!(
            "{} criterion {name}: {} ({:.2}s of {}s)",
            if pass { "PASS" } else { "FAIL" },
            o.detail,
            el.as_secs_f64(),
            budget.as_secs()
        );
    }
    if failed > 0 {
        println!("{failed} criterion(s) failed");
        std::process::exit(1);
    }
}
