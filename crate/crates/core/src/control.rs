//! Staged PID control of a module whose six SLGs realise their commanded
//! unfold angles only approximately.
//!
//! The plant adds a bounded error to every actuated angle, then settles on the
//! nearest configuration the module can actually take (six angles, five
//! degrees of freedom). Large moves are split into stages no larger than the
//! error bound, each closed with a PID loop.

use crate::kinematics::{
    angular_distance, forward_kinematics_with, inverse_kinematics, position_vector,
    tangent_toward, ConnectorId, DeltaVector, KinematicsError, ModuleState, Slg,
    DELTA_RANGE, SINGULAR_MARGIN,
};
use crate::workspace::{classify, FeasibilityConfig};
use nalgebra::{DMatrix, DVector, Rotation3, Unit};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ControlError {
    #[error("stage bound delta_e must be positive")]
    ZeroDeltaE,
    #[error("commanded {slg} = {value}° outside the unfold range")]
    InfeasibleCommand { slg: Slg, value: f64 },
    #[error("waypoint {index} ({phi:.3}°, {theta:.3}°) is infeasible: {reason}")]
    InfeasibleWaypoint {
        index: usize,
        phi: f64,
        theta: f64,
        reason: String,
    },
    #[error("target ({0:.3}°, {1:.3}°) outside the current workspace of C: {2}")]
    OutsideWorkspace(f64, f64, String),
    #[error("invalid trajectory: {0}")]
    InvalidTrajectory(String),
    #[error("invalid configuration: {0}")]
    InvalidConfig(String),
    #[error(transparent)]
    Kinematics(#[from] KinematicsError),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ErrorDistribution {
    /// Uniform in `[-b, b]`, `b = min(delta_e, |move|)`.
    Uniform,
    /// Every move falls short by half of `min(delta_e, |move|)`.
    ConstantBias,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct PlantConfig {
    pub delta_e_bound: f64,
    pub error_distribution: ErrorDistribution,
    /// Sag added to the passive SLG in non-redundant mode.
    pub gravity_bias: f64,
    pub seed: u64,
    /// Six motors when true; otherwise SLG BC is passive.
    pub redundant: bool,
    /// Weight of the passive angle when settling onto a consistent pose.
    pub passive_weight: f64,
}

impl Default for PlantConfig {
    fn default() -> Self {
        Self {
            delta_e_bound: 9.0,
            error_distribution: ErrorDistribution::Uniform,
            gravity_bias: 5.0,
            seed: 0,
            redundant: true,
            passive_weight: 1.0,
        }
    }
}

impl PlantConfig {
    pub fn noiseless() -> Self {
        Self {
            delta_e_bound: 0.0,
            gravity_bias: 0.0,
            ..Self::default()
        }
    }

    pub fn validate(&self) -> Result<(), ControlError> {
        if !(self.delta_e_bound >= 0.0) || !(self.gravity_bias >= 0.0) {
            return Err(ControlError::InvalidConfig(
                "delta_e_bound and gravity_bias must be non-negative".into(),
            ));
        }
        if !(self.passive_weight >= 0.0) {
            return Err(ControlError::InvalidConfig("passive_weight must be non-negative".into()));
        }
        Ok(())
    }
}

fn require_range(delta: &DeltaVector) -> Result<(), ControlError> {
    let (lo, hi) = DELTA_RANGE;
    match delta.range_violations(lo, hi).first() {
        Some(&(slg, value)) => Err(ControlError::InfeasibleCommand { slg, value }),
        None => Ok(()),
    }
}

/// Which pose parameters the plant may move while settling.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Freedom {
    /// All five position parameters.
    Global,
    /// Only C; A, B and D are held by their connections.
    LocalC,
}

/// Seeded simulated module.
#[derive(Debug, Clone)]
pub struct Plant {
    pub config: PlantConfig,
    state: ModuleState,
    rng: ChaCha8Rng,
}

impl Plant {
    pub fn new(config: PlantConfig, start: ModuleState) -> Self {
        let rng = ChaCha8Rng::seed_from_u64(config.seed);
        Self { config, state: start, rng }
    }

    pub fn state(&self) -> &ModuleState {
        &self.state
    }

    pub fn current(&self) -> DeltaVector {
        inverse_kinematics(&self.state)
    }

    fn actuation_error(&mut self, moved: f64) -> f64 {
        let bound = self.config.delta_e_bound.min(moved.abs());
        if bound <= 0.0 {
            return 0.0;
        }
        match self.config.error_distribution {
            ErrorDistribution::Uniform => self.rng.random_range(-bound..=bound),
            ErrorDistribution::ConstantBias => -moved.signum() * bound / 2.0,
        }
    }

    /// Applies a command to all SLGs and returns the settled angles.
    pub fn command(&mut self, commanded: &DeltaVector) -> Result<DeltaVector, ControlError> {
        self.apply(commanded, Freedom::Global)
    }

    /// Applies a command with A, B and D held; only C's SLGs act.
    pub fn command_local(&mut self, commanded: &DeltaVector) -> Result<DeltaVector, ControlError> {
        self.apply(commanded, Freedom::LocalC)
    }

    fn apply(&mut self, commanded: &DeltaVector, freedom: Freedom) -> Result<DeltaVector, ControlError> {
        require_range(commanded)?;
        let current = self.current();
        let mut raw = [0.0; 6];
        let mut weights = [1.0; 6];
        for slg in Slg::ALL {
            let i = slg as usize;
            let moved = commanded.get(slg) - current.get(slg);
            // Mechanical stops bound what any error can do.
            raw[i] = (commanded.get(slg) + self.actuation_error(moved)).clamp(DELTA_RANGE.0, DELTA_RANGE.1);
        }
        if !self.config.redundant {
            let i = Slg::BC as usize;
            // The passive SLG follows the others, then sags and wobbles.
            let others = DeltaVector::from_array(raw);
            let closed = closure_value_bc(&others, &self.state);
            let wobble = if self.config.delta_e_bound > 0.0 {
                let b = self.config.delta_e_bound;
                self.rng.random_range(-b..=b)
            } else {
                0.0
            };
            raw[i] = closed + self.config.gravity_bias + wobble;
            weights[i] = self.config.passive_weight;
        }
        self.state = settle(&self.state, &DeltaVector::from_array(raw), &weights, freedom);
        Ok(self.current())
    }
}

/// Value of dBC consistent with the other five angles, or the current value
/// when those five admit no pose.
fn closure_value_bc(delta: &DeltaVector, fallback: &ModuleState) -> f64 {
    let near = settle(
        fallback,
        delta,
        &[1.0, 1.0, 1.0, 0.0, 1.0, 1.0],
        Freedom::Global,
    );
    inverse_kinematics(&near).bc
}

fn params(state: &ModuleState, freedom: Freedom) -> Vec<f64> {
    match freedom {
        Freedom::Global => vec![state.phi_a, state.phi_b, state.theta_b, state.phi_c, state.theta_c],
        Freedom::LocalC => vec![state.phi_c, state.theta_c],
    }
}

/// Elevations are kept off the poles, where the pose is not parametrised.
fn with_params(base: &ModuleState, x: &[f64], freedom: Freedom) -> ModuleState {
    let lim = 90.0 - 2.0 * SINGULAR_MARGIN;
    let e = |phi: f64| phi.clamp(-lim, lim);
    match freedom {
        Freedom::Global => ModuleState::new(e(x[0]), e(x[1]), x[2], e(x[3]), x[4]),
        Freedom::LocalC => ModuleState::new(base.phi_a, base.phi_b, base.theta_b, e(x[0]), x[1]),
    }
}

fn residuals(state: &ModuleState, target: &DeltaVector, sqrt_w: &[f64; 6]) -> DVector<f64> {
    let d = inverse_kinematics(state).to_array();
    let t = target.to_array();
    DVector::from_fn(6, |i, _| sqrt_w[i] * (d[i] - t[i]))
}

/// Weighted least-squares pose whose angles best match `target`
/// (damped Gauss-Newton from `start`).
fn settle(start: &ModuleState, target: &DeltaVector, weights: &[f64; 6], freedom: Freedom) -> ModuleState {
    let sqrt_w = weights.map(f64::sqrt);
    // Never settle onto the mirrored labelling.
    let keep_chiral = start.is_chiral() == Ok(true);
    let admissible = |s: &ModuleState| !keep_chiral || s.is_chiral() == Ok(true);
    let mut x = params(start, freedom);
    let mut state = with_params(start, &x, freedom);
    let mut r = residuals(&state, target, &sqrt_w);
    let mut mu = 1e-6;
    const H: f64 = 1e-6;
    for _ in 0..100 {
        let n = x.len();
        let mut jac = DMatrix::zeros(6, n);
        for j in 0..n {
            let mut xp = x.clone();
            xp[j] += H;
            let mut xm = x.clone();
            xm[j] -= H;
            let rp = residuals(&with_params(start, &xp, freedom), target, &sqrt_w);
            let rm = residuals(&with_params(start, &xm, freedom), target, &sqrt_w);
            jac.set_column(j, &((rp - rm) / (2.0 * H)));
        }
        let jt = jac.transpose();
        let g = &jt * &r;
        let mut improved = false;
        for _ in 0..20 {
            let a = &jt * &jac + DMatrix::identity(n, n) * mu;
            let Some(step) = a.lu().solve(&(-&g)) else {
                mu *= 10.0;
                continue;
            };
            let xn: Vec<f64> = x.iter().zip(step.iter()).map(|(a, b)| a + b).collect();
            let sn = with_params(start, &xn, freedom);
            let xn = params(&sn, freedom);
            let rn = residuals(&sn, target, &sqrt_w);
            if admissible(&sn) && rn.norm_squared() <= r.norm_squared() {
                let small = step.amax() < 1e-12;
                x = xn;
                state = sn;
                r = rn;
                mu = (mu / 10.0).max(1e-12);
                improved = !small;
                break;
            }
            mu *= 10.0;
        }
        if !improved {
            break;
        }
    }
    state
}

/// One-shot plant response starting from the commanded pose itself, so every
/// actuated angle carries an error of up to the full bound.
pub fn simulate_plant(commanded: &DeltaVector, config: &PlantConfig) -> Result<DeltaVector, ControlError> {
    require_range(commanded)?;
    config.validate()?;
    let start = forward_kinematics_with(commanded, 9.0)?;
    let mut plant = Plant::new(config.clone(), start);
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed ^ 0x5eed);
    let b = config.delta_e_bound;
    // Pretend the module arrived from a full error bound away.
    let from = DeltaVector::from_array(commanded.to_array().map(|c| {
        let sign = if rng.random_bool(0.5) { 1.0 } else { -1.0 };
        c - b * sign
    }));
    plant.state = settle(&plant.state, &from, &[1.0; 6], Freedom::Global);
    plant.command(commanded)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "kebab-case")]
pub enum StepRule {
    /// Smallest stage count keeping every stage within the bound.
    #[default]
    Ceil,
    /// `floor(max|d| / delta_e)`, at least one.
    Floor,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HapidPlan {
    pub steps: usize,
    pub stage_goals: Vec<DeltaVector>,
    pub origin: DeltaVector,
    pub target: DeltaVector,
    pub delta_total: DeltaVector,
}

pub fn plan_stages(origin: &DeltaVector, target: &DeltaVector, delta_e: f64) -> Result<HapidPlan, ControlError> {
    plan_stages_with(origin, target, delta_e, StepRule::default())
}

pub fn plan_stages_with(
    origin: &DeltaVector,
    target: &DeltaVector,
    delta_e: f64,
    rule: StepRule,
) -> Result<HapidPlan, ControlError> {
    if !(delta_e > 0.0) {
        return Err(ControlError::ZeroDeltaE);
    }
    let delta_total = target.map2(origin, |t, o| t - o);
    let largest = delta_total.to_array().iter().fold(0.0f64, |m, d| m.max(d.abs()));
    let ratio = largest / delta_e;
    let raw = match rule {
        // Guard against ratios like 3.0000000000000004 from subtraction.
        StepRule::Ceil => (ratio - 1e-12).ceil(),
        StepRule::Floor => ratio.floor(),
    };
    let steps = (raw as usize).max(1);
    let stage_goals = (1..=steps)
        .map(|k| {
            if k == steps {
                *target
            } else {
                let f = k as f64 / steps as f64;
                origin.map2(&delta_total, |o, d| o + f * d)
            }
        })
        .collect();
    Ok(HapidPlan {
        steps,
        stage_goals,
        origin: *origin,
        target: *target,
        delta_total,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct PidGains {
    pub kp: f64,
    pub ki: f64,
    pub kd: f64,
    pub tolerance_final: f64,
    pub tolerance_intermediate: f64,
    pub max_iterations: usize,
}

impl Default for PidGains {
    fn default() -> Self {
        Self {
            kp: 0.1,
            ki: 0.3,
            kd: 0.02,
            tolerance_final: 0.5,
            tolerance_intermediate: 2.0,
            max_iterations: 50,
        }
    }
}

impl PidGains {
    pub fn validate(&self) -> Result<(), ControlError> {
        let finite = [self.kp, self.ki, self.kd].iter().all(|g| g.is_finite());
        if !finite || !(self.tolerance_final > 0.0) || !(self.tolerance_intermediate > 0.0) {
            return Err(ControlError::InvalidConfig(
                "gains must be finite and tolerances positive".into(),
            ));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ControllerMode {
    Global,
    Local,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PidOutcome {
    pub achieved: DeltaVector,
    pub last_command: DeltaVector,
    pub iterations: usize,
    pub converged: bool,
    pub final_error: f64,
}

const LOCAL_SLGS: [Slg; 3] = [Slg::AC, Slg::BC, Slg::CD];

/// Command, measure, correct until every watched angle is within tolerance.
/// Each SLG runs its own PID loop in velocity form,
/// `du = kp * de + ki * e + kd * d2e`.
pub fn pid_converge(
    goal: &DeltaVector,
    gains: &PidGains,
    plant: &mut Plant,
    loose: bool,
    mode: ControllerMode,
) -> Result<PidOutcome, ControlError> {
    let tol = if loose { gains.tolerance_intermediate } else { gains.tolerance_final };
    let watched: &[Slg] = match mode {
        ControllerMode::Global => &Slg::ALL,
        ControllerMode::Local => &LOCAL_SLGS,
    };
    let start = plant.current();
    let max_err = |d: &DeltaVector| watched.iter().fold(0.0f64, |m, &s| m.max((goal.get(s) - d.get(s)).abs()));
    let mut achieved = start;
    let mut command = start;
    if gains.max_iterations == 0 {
        return Ok(PidOutcome {
            achieved,
            last_command: command,
            iterations: 0,
            converged: false,
            final_error: max_err(&achieved),
        });
    }
    let (lo, hi) = DELTA_RANGE;
    command = *goal;
    for slg in Slg::ALL {
        if !watched.contains(&slg) {
            command.set(slg, start.get(slg));
        }
    }
    // Velocity form: e1 and e2 hold the errors of the two previous iterations.
    let mut e1 = [0.0; 6];
    let mut e2 = [0.0; 6];
    for it in 1..=gains.max_iterations {
        let clamped = command.map2(&command, |c, _| c.clamp(lo, hi));
        achieved = match mode {
            ControllerMode::Global => plant.command(&clamped)?,
            ControllerMode::Local => plant.command_local(&clamped)?,
        };
        let err = max_err(&achieved);
        if err <= tol {
            return Ok(PidOutcome {
                achieved,
                last_command: clamped,
                iterations: it,
                converged: true,
                final_error: err,
            });
        }
        for &slg in watched {
            let i = slg as usize;
            let e = goal.get(slg) - achieved.get(slg);
            let (p1, p2) = if it == 1 { (e, e) } else if it == 2 { (e1[i], e1[i]) } else { (e1[i], e2[i]) };
            let du = gains.kp * (e - p1) + gains.ki * e + gains.kd * (e - 2.0 * p1 + p2);
            e2[i] = e1[i];
            e1[i] = e;
            command.set(slg, clamped.get(slg) + du);
        }
    }
    Ok(PidOutcome {
        achieved,
        last_command: command,
        iterations: gains.max_iterations,
        converged: false,
        final_error: max_err(&achieved),
    })
}

/// Result of driving to one goal through all HAPID stages.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct StagedOutcome {
    pub achieved: DeltaVector,
    pub last_command: DeltaVector,
    pub stages: usize,
    pub iterations: usize,
    pub converged: bool,
}

/// Splits the move into stages, loose PID on all but the last.
pub fn drive_staged(
    target: &DeltaVector,
    gains: &PidGains,
    plant: &mut Plant,
    mode: ControllerMode,
) -> Result<StagedOutcome, ControlError> {
    let bound = if plant.config.delta_e_bound > 0.0 {
        plant.config.delta_e_bound
    } else {
        f64::INFINITY
    };
    let plan = plan_stages(&plant.current(), target, bound)?;
    let mut iterations = 0;
    let mut last = None;
    for (k, goal) in plan.stage_goals.iter().enumerate() {
        let out = pid_converge(goal, gains, plant, k + 1 < plan.steps, mode)?;
        iterations += out.iterations;
        last = Some(out);
    }
    let last = last.expect("a plan has at least one stage");
    Ok(StagedOutcome {
        achieved: last.achieved,
        last_command: last.last_command,
        stages: plan.steps,
        iterations,
        converged: last.converged,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TrajectorySpec {
    pub center: (f64, f64),
    pub through_point: (f64, f64),
    pub n_points: usize,
    pub turns: f64,
}

impl Default for TrajectorySpec {
    /// Mirror image across the SLG AD plane of a spiral about (30°, 120°)
    /// through (40°, 160°), so that it lies on C's side of the module.
    fn default() -> Self {
        Self {
            center: (30.0, 240.0),
            through_point: (40.0, 200.0),
            n_points: 50,
            turns: 2.0,
        }
    }
}

/// Spiral about `center`: the angular radius starts at the distance to
/// `through_point` and shrinks linearly with winding angle, reaching
/// `1 / (turns + 1)` of it after `turns` windings. Points are evenly spaced in
/// winding angle and run counterclockwise about the centre.
pub fn helix_trajectory(spec: &TrajectorySpec) -> Result<Vec<(f64, f64)>, ControlError> {
    if spec.n_points < 2 {
        return Err(ControlError::InvalidTrajectory("n_points must be at least 2".into()));
    }
    if !(spec.turns >= 0.0) {
        return Err(ControlError::InvalidTrajectory("turns must be non-negative".into()));
    }
    let c = position_vector(spec.center.0, spec.center.1);
    let t = position_vector(spec.through_point.0, spec.through_point.1);
    let r0 = angular_distance(&c, &t);
    let Some(u0) = tangent_toward(&c, &t).filter(|_| r0 > 1e-9) else {
        return Err(ControlError::InvalidTrajectory(
            "center and through point must be distinct and not antipodal".into(),
        ));
    };
    let axis = Unit::new_normalize(c);
    let n = spec.n_points;
    Ok((0..n)
        .map(|k| {
            if k == 0 {
                return spec.through_point;
            }
            let s = k as f64 / (n - 1) as f64;
            let psi = 360.0 * spec.turns * s;
            let r = r0 * (1.0 - s * spec.turns / (spec.turns + 1.0));
            let u = Rotation3::from_axis_angle(&axis, psi.to_radians()) * u0;
            let p = c * r.to_radians().cos() + u * r.to_radians().sin();
            crate::kinematics::spherical_coords(&p)
        })
        .collect())
}

/// Positions held fixed while C follows the trajectory.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct HeldConnectors {
    pub phi_a: f64,
    pub b: (f64, f64),
}

impl Default for HeldConnectors {
    fn default() -> Self {
        Self {
            phi_a: -15.0,
            b: (30.0, 110.0),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PointRecord {
    pub designed: (f64, f64),
    /// C where the final command would put it, if that command is consistent.
    pub commanded: Option<(f64, f64)>,
    pub achieved: (f64, f64),
    pub error: f64,
    pub iterations: usize,
    pub converged: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RmseReport {
    pub rmse_vs_design: f64,
    pub per_point_errors: Vec<f64>,
    pub controller_mode: ControllerMode,
    pub redundant: bool,
    pub total_iterations: usize,
    pub points: Vec<PointRecord>,
}

pub fn rmse(errors: &[f64]) -> f64 {
    if errors.is_empty() {
        return 0.0;
    }
    (errors.iter().map(|e| e * e).sum::<f64>() / errors.len() as f64).sqrt()
}

fn c_coords(state: &ModuleState) -> (f64, f64) {
    (state.phi_c, state.theta_c)
}

fn c_of_command(command: &DeltaVector) -> Option<(f64, f64)> {
    forward_kinematics_with(command, 9.0).ok().map(|s| c_coords(&s))
}

/// Target pose for a waypoint of C, checked against the workspace.
fn waypoint_state(
    index: usize,
    point: (f64, f64),
    held: &HeldConnectors,
) -> Result<ModuleState, ControlError> {
    let s = ModuleState::new(held.phi_a, held.b.0, held.b.1, point.0, point.1);
    classify(&s, &FeasibilityConfig::default()).map_err(|e| ControlError::InfeasibleWaypoint {
        index,
        phi: point.0,
        theta: point.1,
        reason: e.to_string(),
    })?;
    Ok(s)
}

/// Drives C through every waypoint and reports its deviation from the design.
pub fn track_trajectory(
    spec: &TrajectorySpec,
    held: &HeldConnectors,
    gains: &PidGains,
    plant_config: &PlantConfig,
    mode: ControllerMode,
) -> Result<RmseReport, ControlError> {
    gains.validate()?;
    plant_config.validate()?;
    let points = helix_trajectory(spec)?;
    let targets = points
        .iter()
        .enumerate()
        .map(|(i, &p)| waypoint_state(i, p, held))
        .collect::<Result<Vec<_>, _>>()?;
    let mut plant = Plant::new(plant_config.clone(), targets[0].clone());
    let mut records = Vec::with_capacity(points.len());
    for (designed, target) in points.iter().zip(&targets) {
        let goal = inverse_kinematics(target);
        let out = drive_staged(&goal, gains, &mut plant, mode)?;
        let achieved = c_coords(plant.state());
        let error = angular_distance(
            &plant.state().position(ConnectorId::C),
            &position_vector(designed.0, designed.1),
        );
        records.push(PointRecord {
            designed: *designed,
            commanded: c_of_command(&out.last_command),
            achieved,
            error,
            iterations: out.iterations,
            converged: out.converged,
        });
    }
    let per_point_errors: Vec<f64> = records.iter().map(|r| r.error).collect();
    Ok(RmseReport {
        rmse_vs_design: rmse(&per_point_errors),
        per_point_errors,
        controller_mode: mode,
        redundant: plant_config.redundant,
        total_iterations: records.iter().map(|r| r.iterations).sum(),
        points: records,
    })
}

/// Moves C alone to `target_c`, driving only its three SLGs.
pub fn local_control(
    target_c: (f64, f64),
    gains: &PidGains,
    plant: &mut Plant,
) -> Result<PointRecord, ControlError> {
    let s = plant.state().clone();
    let goal_state = s.with_connector(ConnectorId::C, target_c.0, target_c.1);
    classify(&goal_state, &FeasibilityConfig::default())
        .map_err(|e| ControlError::OutsideWorkspace(target_c.0, target_c.1, e.to_string()))?;
    let goal = inverse_kinematics(&goal_state);
    let out = drive_staged(&goal, gains, plant, ControllerMode::Local)?;
    Ok(PointRecord {
        designed: target_c,
        commanded: c_of_command(&out.last_command),
        achieved: c_coords(plant.state()),
        error: angular_distance(
            &plant.state().position(ConnectorId::C),
            &position_vector(target_c.0, target_c.1),
        ),
        iterations: out.iterations,
        converged: out.converged,
    })
}

pub fn median(values: &[f64]) -> f64 {
    let mut v = values.to_vec();
    v.sort_by(f64::total_cmp);
    match v.len() {
        0 => f64::NAN,
        n if n % 2 == 1 => v[n / 2],
        n => (v[n / 2 - 1] + v[n / 2]) / 2.0,
    }
}

/// Paired redundant / non-redundant runs over a range of seeds.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Comparison {
    pub seeds: Vec<u64>,
    pub redundant: Vec<f64>,
    pub non_redundant: Vec<f64>,
    pub median_redundant: f64,
    pub median_non_redundant: f64,
    /// Fraction of seeds where the redundant run has the lower RMSE.
    pub redundant_wins: f64,
}

pub fn compare_redundancy(
    spec: &TrajectorySpec,
    held: &HeldConnectors,
    gains: &PidGains,
    plant: &PlantConfig,
    seeds: &[u64],
) -> Result<Comparison, ControlError> {
    let mut red = Vec::new();
    let mut non = Vec::new();
    for &seed in seeds {
        for (redundant, out) in [(true, &mut red), (false, &mut non)] {
            let cfg = PlantConfig {
                seed,
                redundant,
                ..plant.clone()
            };
            out.push(track_trajectory(spec, held, gains, &cfg, ControllerMode::Global)?.rmse_vs_design);
        }
    }
    let wins = red.iter().zip(&non).filter(|(r, n)| r < n).count();
    Ok(Comparison {
        seeds: seeds.to_vec(),
        median_redundant: median(&red),
        median_non_redundant: median(&non),
        redundant_wins: wins as f64 / seeds.len().max(1) as f64,
        redundant: red,
        non_redundant: non,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::kinematics::closure_residual;

    fn tetra() -> DeltaVector {
        inverse_kinematics(&ModuleState::regular_tetrahedron())
    }

    #[test]
    fn stage_counts() {
        let o = tetra();
        let mut t = o;
        t.ab += 27.0;
        let p = plan_stages(&o, &t, 9.0).unwrap();
        assert_eq!(p.steps, 3);
        assert!((p.stage_goals[0].ab - (o.ab + 9.0)).abs() < 1e-12);
        assert_eq!(p.stage_goals[2], t);
        assert_eq!(plan_stages(&o, &o, 9.0).unwrap().steps, 1);
        let mut t8 = o;
        t8.cd -= 8.0;
        assert_eq!(plan_stages(&o, &t8, 9.0).unwrap().steps, 1);
        assert_eq!(plan_stages(&o, &t, 0.0), Err(ControlError::ZeroDeltaE));
    }

    #[test]
    fn floor_rule_can_exceed_the_bound() {
        let o = tetra();
        let mut t = o;
        t.ab += 17.0;
        let p = plan_stages_with(&o, &t, 9.0, StepRule::Floor).unwrap();
        assert_eq!(p.steps, 1);
        assert_eq!(plan_stages(&o, &t, 9.0).unwrap().steps, 2);
    }

    #[test]
    fn noiseless_plant_is_identity() {
        let d = tetra();
        let out = simulate_plant(&d, &PlantConfig::noiseless()).unwrap();
        assert!(out.max_abs_diff(&d) < 1e-9);
    }

    #[test]
    fn plant_is_deterministic_and_closed() {
        let d = tetra();
        let cfg = PlantConfig { seed: 7, ..PlantConfig::default() };
        let a = simulate_plant(&d, &cfg).unwrap();
        let b = simulate_plant(&d, &cfg).unwrap();
        assert_eq!(a, b);
        assert!(closure_residual(&a).unwrap() <= 1e-6);
        let non = PlantConfig { redundant: false, ..cfg };
        assert!(closure_residual(&simulate_plant(&d, &non).unwrap()).unwrap() <= 1e-6);
    }

    #[test]
    fn plant_rejects_out_of_range_command() {
        let mut d = tetra();
        d.ab = 50.0;
        assert!(matches!(
            simulate_plant(&d, &PlantConfig::noiseless()),
            Err(ControlError::InfeasibleCommand { slg: Slg::AB, .. })
        ));
    }

    #[test]
    fn pid_noiseless_converges_immediately() {
        let start = ModuleState::regular_tetrahedron();
        let mut plant = Plant::new(PlantConfig::noiseless(), start.clone());
        let goal = inverse_kinematics(&start.with_connector(ConnectorId::C, 25.0, 235.0));
        let out = pid_converge(&goal, &PidGains::default(), &mut plant, false, ControllerMode::Global).unwrap();
        assert!(out.converged && out.iterations <= 2);
        assert!(out.achieved.max_abs_diff(&goal) < 1e-9);
    }

    #[test]
    fn pid_zero_iterations_returns_start() {
        let start = ModuleState::regular_tetrahedron();
        let mut plant = Plant::new(PlantConfig::default(), start.clone());
        let gains = PidGains { max_iterations: 0, ..PidGains::default() };
        let out = pid_converge(&tetra(), &gains, &mut plant, false, ControllerMode::Global).unwrap();
        assert!(!out.converged);
        assert_eq!(out.iterations, 0);
        assert_eq!(out.achieved, inverse_kinematics(&start));
    }

    #[test]
    fn helix_shape() {
        let spec = TrajectorySpec {
            center: (30.0, 120.0),
            through_point: (40.0, 160.0),
            ..TrajectorySpec::default()
        };
        let pts = helix_trajectory(&spec).unwrap();
        assert_eq!(pts.len(), 50);
        assert_eq!(pts[0], (40.0, 160.0));
        let c = position_vector(30.0, 120.0);
        let r0 = angular_distance(&c, &position_vector(40.0, 160.0));
        assert!((r0 - 33.9).abs() < 0.05, "{r0}");
        for p in &pts {
            assert!(angular_distance(&c, &position_vector(p.0, p.1)) <= r0 + 1e-9);
        }
        let flat = helix_trajectory(&TrajectorySpec { turns: 0.0, ..spec }).unwrap();
        for p in &flat {
            assert!((angular_distance(&c, &position_vector(p.0, p.1)) - r0).abs() < 1e-9);
        }
        let same = TrajectorySpec { through_point: spec.center, ..spec };
        assert!(helix_trajectory(&same).is_err());
    }

    #[test]
    fn noiseless_tracking_is_exact() {
        let r = track_trajectory(
            &TrajectorySpec::default(),
            &HeldConnectors::default(),
            &PidGains::default(),
            &PlantConfig::noiseless(),
            ControllerMode::Global,
        )
        .unwrap();
        assert!(r.rmse_vs_design < 1e-6, "{}", r.rmse_vs_design);
    }

    #[test]
    fn local_control_rejects_unreachable_target() {
        let mut plant = Plant::new(PlantConfig::noiseless(), ModuleState::regular_tetrahedron());
        let err = local_control((19.47, 60.0), &PidGains::default(), &mut plant).unwrap_err();
        assert!(matches!(err, ControlError::OutsideWorkspace(..)));
        let ok = local_control((25.0, 235.0), &PidGains::default(), &mut plant).unwrap();
        assert!(ok.error < 1e-6);
    }
}
