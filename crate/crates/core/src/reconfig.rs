//! Assemblies of connected modules: frame propagation, rotation and
//! transition checks, transition planning and transactional execution.

use crate::kinematics::{
    angular_distance, connector_face, is_quarter_turn, spherical_coords, ConnectorId, Frame,
    KinematicsError, ModuleState, Vec3,
};
use crate::workspace::{classify, FeasibilityConfig};
use nalgebra::{Matrix3, Rotation3, Unit};
use serde::{Deserialize, Serialize};
use std::collections::{BTreeMap, BTreeSet};
use thiserror::Error;

pub type ModuleId = String;

/// Position tolerance for coincident faces and loop closure, in millimetres.
pub const POSITION_TOLERANCE: f64 = 1e-6;
/// Angular tolerance for coincident faces and loop closure, in degrees.
pub const ANGLE_TOLERANCE: f64 = 1e-6;
/// Largest step when sampling a rotation sweep, in degrees.
const SWEEP_STEP: f64 = 1.0;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ReconfigError {
    #[error("unknown module {0}")]
    UnknownModule(ModuleId),
    #[error("connector {0}.{1} is already connected")]
    AlreadyConnected(ModuleId, ConnectorId),
    #[error("no connection between {0}.{1} and {2}.{3}")]
    NotConnected(ModuleId, ConnectorId, ModuleId, ConnectorId),
    #[error("topology error: {0}")]
    Topology(String),
    #[error("inconsistent loop at module {module}: {distance:.3e} mm, {angle:.3e}° off")]
    InconsistentLoop {
        module: ModuleId,
        distance: f64,
        angle: f64,
    },
    #[error("faces do not meet: {0}")]
    FaceMismatch(String),
    #[error("deflection {0}° is not a multiple of 90°")]
    InvalidDeflection(f64),
    #[error("rotation of {module}.{connector} rejected: {reason}")]
    Rotation {
        module: ModuleId,
        connector: ConnectorId,
        reason: String,
    },
    #[error("transition preconditions not met: {}", .0.summary())]
    Precondition(Box<TransitionReport>),
    #[error("planning failed: {0}")]
    Planning(String),
    #[error("action {step} failed: {source}")]
    Step {
        step: usize,
        #[source]
        source: Box<ReconfigError>,
    },
    #[error(transparent)]
    Kinematics(#[from] KinematicsError),
}

#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
pub struct Endpoint {
    pub module: ModuleId,
    pub connector: ConnectorId,
}

impl Endpoint {
    pub fn new(module: &str, connector: ConnectorId) -> Self {
        Self {
            module: module.to_string(),
            connector,
        }
    }
}

impl std::fmt::Display for Endpoint {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "{}.{}", self.module, self.connector)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "status", rename_all = "snake_case")]
pub enum ConnectorStatus {
    Free,
    Connected {
        peer_module: ModuleId,
        peer_connector: ConnectorId,
        phi: f64,
    },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModuleNode {
    pub id: ModuleId,
    pub state: ModuleState,
    /// Pose of the module frame in the world. Authoritative for grounded
    /// modules, derived for the rest.
    pub world_frame: Frame,
    #[serde(default)]
    pub connector_status: BTreeMap<ConnectorId, ConnectorStatus>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Connection {
    pub a: Endpoint,
    pub b: Endpoint,
    /// Relative roll of the two faces, a multiple of 90°.
    pub phi: f64,
}

impl Connection {
    fn joins(&self, x: &Endpoint, y: &Endpoint) -> bool {
        (&self.a == x && &self.b == y) || (&self.a == y && &self.b == x)
    }

    /// The end on `module` and the far end.
    fn oriented(&self, module: &str) -> Option<(&Endpoint, &Endpoint)> {
        if self.a.module == module {
            Some((&self.a, &self.b))
        } else if self.b.module == module {
            Some((&self.b, &self.a))
        } else {
            None
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Assembly {
    /// Module sphere radius L in millimetres.
    pub slg_radius: f64,
    /// Optional gap between mated faces; centres sit `2L + gap` apart.
    #[serde(default)]
    pub connector_gap: Option<f64>,
    pub modules: BTreeMap<ModuleId, ModuleNode>,
    #[serde(default)]
    pub connections: Vec<Connection>,
    /// Modules whose world frame is fixed.
    #[serde(default)]
    pub ground: Vec<ModuleId>,
}

/// World pose of a module given the pose of the module it is attached to.
fn attached_pose(u_face_world: &Frame, v_face_local: &Frame, phi: f64, gap: f64) -> Frame {
    let z = -u_face_world.z_axis;
    let roll = Rotation3::from_axis_angle(&Unit::new_normalize(u_face_world.z_axis), phi.to_radians());
    let x = roll * u_face_world.x_axis;
    let world = Matrix3::from_columns(&[x, z.cross(&x), z]);
    let local = Matrix3::from_columns(&[v_face_local.x_axis, v_face_local.y_axis(), v_face_local.z_axis]);
    let r = world * local.transpose();
    let meet = u_face_world.origin + u_face_world.z_axis * gap;
    Frame {
        origin: meet - r * v_face_local.origin,
        x_axis: r * Vec3::x(),
        z_axis: r * Vec3::z(),
    }
}

/// Roll `phi` with `x_v = Rot(z_u, phi) x_u`, in `(-180, 180]`.
fn measured_roll(u: &Frame, v: &Frame) -> f64 {
    u.x_axis
        .cross(&v.x_axis)
        .dot(&u.z_axis)
        .atan2(u.x_axis.dot(&v.x_axis))
        .to_degrees()
}

fn frame_gap(a: &Frame, b: &Frame) -> (f64, f64) {
    let d = (a.origin - b.origin).norm();
    let ang = angular_distance(&a.x_axis, &b.x_axis).max(angular_distance(&a.z_axis, &b.z_axis));
    (d, ang)
}

fn quantize(phi: f64) -> f64 {
    ((phi / 90.0).round() * 90.0).rem_euclid(360.0)
}

/// Evaluation of one module-level condition of a transition.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Bullet {
    pub id: String,
    pub ok: bool,
    pub detail: String,
}

/// Targets a transition must reach.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TransitionTargets {
    pub apex: Vec3,
    pub parent_connector: ConnectorId,
    pub parent_target: (f64, f64),
    pub moving_connector: ConnectorId,
    pub moving_target: (f64, f64),
    pub receiving_connector: ConnectorId,
    pub receiving_target: (f64, f64),
    pub phi: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TransitionReport {
    pub ok: bool,
    pub bullets: Vec<Bullet>,
    pub targets: Option<TransitionTargets>,
}

impl TransitionReport {
    pub fn summary(&self) -> String {
        self.bullets
            .iter()
            .map(|b| format!("({}) {}: {}", b.id, if b.ok { "ok" } else { "FAILED" }, b.detail))
            .collect::<Vec<_>>()
            .join("; ")
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "action", rename_all = "snake_case")]
pub enum Action {
    SetConnectorGoal {
        module: ModuleId,
        connector: ConnectorId,
        target: (f64, f64),
    },
    Connect {
        a: Endpoint,
        b: Endpoint,
        phi: f64,
    },
    Disconnect {
        a: Endpoint,
        b: Endpoint,
    },
}

impl std::fmt::Display for Action {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            Self::SetConnectorGoal {
                module,
                connector,
                target,
            } => write!(f, "move {module}.{connector} to ({:.2}, {:.2})", target.0, target.1),
            Self::Connect { a, b, phi } => write!(f, "connect {a} to {b} at {phi}°"),
            Self::Disconnect { a, b } => write!(f, "disconnect {a} from {b}"),
        }
    }
}

pub type ActionScript = Vec<Action>;

/// Outcome of a rotation check.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RotationCheck {
    pub ok: bool,
    pub reason: Option<String>,
}

/// World positions of every module after one action.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SceneSnapshot {
    pub step: usize,
    pub action: String,
    pub centers: BTreeMap<ModuleId, Vec3>,
    pub connectors: BTreeMap<ModuleId, [Vec3; 4]>,
    pub connections: usize,
}

impl Assembly {
    pub fn new(slg_radius: f64) -> Self {
        Self {
            slg_radius,
            connector_gap: None,
            modules: BTreeMap::new(),
            connections: Vec::new(),
            ground: Vec::new(),
        }
    }

    pub fn add_module(&mut self, id: &str, state: ModuleState, world_frame: Frame) {
        self.modules.insert(
            id.to_string(),
            ModuleNode {
                id: id.to_string(),
                state,
                world_frame,
                connector_status: ConnectorId::ALL.map(|c| (c, ConnectorStatus::Free)).into(),
            },
        );
    }

    fn spacing_gap(&self) -> f64 {
        self.connector_gap.unwrap_or(0.0)
    }

    /// Centre distance of two mated modules.
    pub fn spacing(&self) -> f64 {
        2.0 * self.slg_radius + self.spacing_gap()
    }

    pub fn module(&self, id: &str) -> Result<&ModuleNode, ReconfigError> {
        self.modules.get(id).ok_or_else(|| ReconfigError::UnknownModule(id.to_string()))
    }

    fn module_mut(&mut self, id: &str) -> Result<&mut ModuleNode, ReconfigError> {
        self.modules.get_mut(id).ok_or_else(|| ReconfigError::UnknownModule(id.to_string()))
    }

    pub fn connection_at(&self, end: &Endpoint) -> Option<&Connection> {
        self.connections.iter().find(|c| &c.a == end || &c.b == end)
    }

    pub fn peer_of(&self, end: &Endpoint) -> Option<Endpoint> {
        self.connection_at(end).map(|c| if &c.a == end { c.b.clone() } else { c.a.clone() })
    }

    pub fn connected(&self, x: &str, y: &str) -> bool {
        self.connections.iter().any(|c| {
            (c.a.module == x && c.b.module == y) || (c.a.module == y && c.b.module == x)
        })
    }

    /// The module attached at `id`'s input connector.
    pub fn parent_of(&self, id: &str) -> Option<ModuleId> {
        self.peer_of(&Endpoint::new(id, ConnectorId::D)).map(|e| e.module)
    }

    fn rebuild_status(&mut self) {
        for node in self.modules.values_mut() {
            for c in ConnectorId::ALL {
                node.connector_status.insert(c, ConnectorStatus::Free);
            }
        }
        for conn in &self.connections {
            for (me, peer) in [(&conn.a, &conn.b), (&conn.b, &conn.a)] {
                if let Some(node) = self.modules.get_mut(&me.module) {
                    node.connector_status.insert(
                        me.connector,
                        ConnectorStatus::Connected {
                            peer_module: peer.module.clone(),
                            peer_connector: peer.connector,
                            phi: conn.phi,
                        },
                    );
                }
            }
        }
    }

    /// Face frame of a connector in world coordinates, using `pose` for the module.
    fn face_world(&self, end: &Endpoint, pose: &Frame) -> Result<Frame, ReconfigError> {
        let node = self.module(&end.module)?;
        let face = connector_face(&node.state, end.connector, self.slg_radius)?;
        Ok(pose.compose(&face))
    }

    /// Structural audit: symmetric status, single use per connector, quarter
    /// turns, and every attached module fed through its input connector.
    pub fn audit(&self) -> Vec<String> {
        let mut issues = Vec::new();
        let mut used = BTreeSet::new();
        for conn in &self.connections {
            for end in [&conn.a, &conn.b] {
                if !self.modules.contains_key(&end.module) {
                    issues.push(format!("connection references unknown module {}", end.module));
                }
                if !used.insert(end.clone()) {
                    issues.push(format!("connector {end} used twice"));
                }
            }
            if conn.a.module == conn.b.module {
                issues.push(format!("self connection on {}", conn.a.module));
            }
            if !is_quarter_turn(conn.phi) {
                issues.push(format!("deflection {}° on {}-{} is not a quarter turn", conn.phi, conn.a, conn.b));
            }
        }
        for node in self.modules.values() {
            for c in ConnectorId::ALL {
                let end = Endpoint::new(&node.id, c);
                let expected = match self.connection_at(&end) {
                    None => ConnectorStatus::Free,
                    Some(conn) => {
                        let peer = if conn.a == end { &conn.b } else { &conn.a };
                        ConnectorStatus::Connected {
                            peer_module: peer.module.clone(),
                            peer_connector: peer.connector,
                            phi: conn.phi,
                        }
                    }
                };
                if node.connector_status.get(&c) != Some(&expected) {
                    issues.push(format!("status of {end} disagrees with the connection list"));
                }
            }
        }
        if let Ok(tree) = self.spanning_tree() {
            for (child, (end, _)) in &tree.parent {
                if end.connector != ConnectorId::D {
                    issues.push(format!("{child} is attached through {end}, not its input connector"));
                }
            }
        }
        issues
    }

    fn roots(&self) -> Vec<ModuleId> {
        if self.ground.is_empty() {
            self.modules.keys().next().cloned().into_iter().collect()
        } else {
            self.ground.clone()
        }
    }

    /// Breadth-first tree from the roots, preferring edges that enter a module
    /// through its input connector.
    fn spanning_tree(&self) -> Result<Tree, ReconfigError> {
        self.spanning_tree_from(&self.roots())
    }

    fn spanning_tree_from(&self, roots: &[ModuleId]) -> Result<Tree, ReconfigError> {
        for r in roots {
            self.module(r)?;
        }
        let mut order: Vec<ModuleId> = roots.to_vec();
        let mut seen: BTreeSet<ModuleId> = roots.iter().cloned().collect();
        let mut parent = BTreeMap::new();
        loop {
            let mut best: Option<(&Connection, &Endpoint, &Endpoint)> = None;
            for conn in &self.connections {
                for (inner, outer) in [(&conn.a, &conn.b), (&conn.b, &conn.a)] {
                    if seen.contains(&inner.module) && !seen.contains(&outer.module) {
                        let better = match best {
                            None => true,
                            Some((_, _, o)) => o.connector != ConnectorId::D && outer.connector == ConnectorId::D,
                        };
                        if better {
                            best = Some((conn, inner, outer));
                        }
                    }
                }
            }
            let Some((conn, inner, outer)) = best else { break };
            seen.insert(outer.module.clone());
            order.push(outer.module.clone());
            parent.insert(outer.module.clone(), (outer.clone(), (inner.clone(), conn.phi)));
        }
        Ok(Tree { order, parent, seen })
    }

    /// World frame of every module. Loops are verified, not assumed.
    pub fn world_poses(&self) -> Result<BTreeMap<ModuleId, Frame>, ReconfigError> {
        let roots = self.roots();
        let pinned: BTreeMap<ModuleId, Frame> = if self.ground.is_empty() {
            roots.iter().map(|r| (r.clone(), Frame::identity())).collect()
        } else {
            roots
                .iter()
                .map(|r| self.module(r).map(|n| (r.clone(), n.world_frame)))
                .collect::<Result<_, _>>()?
        };
        self.propagate(&roots, pinned)
    }

    /// World frames with `root` pinned at the identity and ground ignored.
    pub fn world_poses_from(&self, root: &str) -> Result<BTreeMap<ModuleId, Frame>, ReconfigError> {
        let roots = vec![root.to_string()];
        self.propagate(&roots, [(root.to_string(), Frame::identity())].into())
    }

    fn propagate(
        &self,
        roots: &[ModuleId],
        pinned: BTreeMap<ModuleId, Frame>,
    ) -> Result<BTreeMap<ModuleId, Frame>, ReconfigError> {
        let tree = self.spanning_tree_from(roots)?;
        let gap = self.spacing_gap();
        let mut poses = pinned;
        for id in &tree.order {
            if poses.contains_key(id) {
                continue;
            }
            let (child_end, (parent_end, phi)) = &tree.parent[id];
            let u = self.face_world(parent_end, &poses[&parent_end.module])?;
            let v_local = connector_face(&self.module(id)?.state, child_end.connector, self.slg_radius)?;
            poses.insert(id.clone(), attached_pose(&u, &v_local, *phi, gap));
        }
        // Modules outside every rooted component keep their stored frames.
        for (id, node) in &self.modules {
            if !tree.seen.contains(id) {
                poses.insert(id.clone(), node.world_frame);
            }
        }
        for conn in &self.connections {
            let (ua, ub) = (&conn.a, &conn.b);
            if !tree.seen.contains(&ua.module) || !tree.seen.contains(&ub.module) {
                continue;
            }
            let u = self.face_world(ua, &poses[&ua.module])?;
            let v_local = connector_face(&self.module(&ub.module)?.state, ub.connector, self.slg_radius)?;
            let predicted = attached_pose(&u, &v_local, conn.phi, gap);
            let (distance, angle) = frame_gap(&predicted, &poses[&ub.module]);
            if distance > POSITION_TOLERANCE || angle > ANGLE_TOLERANCE {
                return Err(ReconfigError::InconsistentLoop {
                    module: ub.module.clone(),
                    distance,
                    angle,
                });
            }
        }
        Ok(poses)
    }

    fn refresh_poses(&mut self) -> Result<(), ReconfigError> {
        let poses = self.world_poses()?;
        for (id, pose) in poses {
            self.module_mut(&id)?.world_frame = pose;
        }
        Ok(())
    }

    /// Pairs of modules that are not directly connected yet whose centres are
    /// closer than L.
    pub fn collisions(&self, poses: &BTreeMap<ModuleId, Frame>) -> Vec<(ModuleId, ModuleId)> {
        let ids: Vec<&ModuleId> = poses.keys().collect();
        let mut out = Vec::new();
        for (i, a) in ids.iter().enumerate() {
            for b in &ids[i + 1..] {
                if self.connected(a, b) {
                    continue;
                }
                if (poses[*a].origin - poses[*b].origin).norm() < self.slg_radius {
                    out.push(((*a).clone(), (*b).clone()));
                }
            }
        }
        out
    }

    /// Whether `connector` of `module` can sweep to `target` with every
    /// intermediate pose feasible and free of module overlap.
    pub fn check_rotation(
        &self,
        module: &str,
        connector: ConnectorId,
        target: (f64, f64),
    ) -> Result<RotationCheck, ReconfigError> {
        let node = self.module(module)?;
        let fail = |reason: String| Ok(RotationCheck { ok: false, reason: Some(reason) });
        if connector == ConnectorId::D {
            return fail("the input connector cannot rotate".into());
        }
        if connector == ConnectorId::A && normalized_offset(target.1) > 1e-9 {
            return fail(format!("A is confined to azimuth 0°, target azimuth {}°", target.1));
        }
        let from = node.state.position(connector);
        let to = crate::kinematics::position_vector(target.0, target.1);
        let total = angular_distance(&from, &to);
        let n = ((total / SWEEP_STEP).ceil() as usize).max(1);
        let feas = FeasibilityConfig::default();
        let mut probe = self.clone();
        for k in 1..=n {
            let t = k as f64 / n as f64;
            let p = slerp(&from, &to, t);
            let (phi, theta) = spherical_coords(&p);
            let theta = if connector == ConnectorId::A { 0.0 } else { theta };
            let state = node.state.with_connector(connector, phi, theta);
            if let Err(why) = classify(&state, &feas) {
                return fail(format!("{} at ({phi:.2}°, {theta:.2}°): {why}", why.constraint()));
            }
            probe.module_mut(module)?.state = state;
            let poses = match probe.world_poses() {
                Ok(p) => p,
                Err(e) => return fail(e.to_string()),
            };
            if let Some((a, b)) = probe.collisions(&poses).first() {
                return fail(format!("modules {a} and {b} overlap at ({phi:.2}°, {theta:.2}°)"));
            }
        }
        Ok(RotationCheck { ok: true, reason: None })
    }

    /// Evaluates the transition conditions for moving `mc` from `mp` to `mr`.
    pub fn check_transition(&self, mc: &str, mp: &str, mr: &str) -> Result<TransitionReport, ReconfigError> {
        let parent_end = self.transition_topology(mc, mp)?;
        self.module(mr)?;
        let poses = self.world_poses()?;
        let (cp, cr) = (poses[mp].origin, poses[mr].origin);
        let s = self.spacing();
        let d = (cr - cp).norm();
        let mut bullets = Vec::new();
        let names = ["i", "ii", "iii", "iv"];
        if (d - s).abs() > POSITION_TOLERANCE * s.max(1.0) {
            let why = format!(
                "centres of {mp} and {mr} are {:.3} L apart, a shared meeting pose needs {:.3} L",
                d / self.slg_radius,
                s / self.slg_radius
            );
            for id in names {
                bullets.push(Bullet {
                    id: id.into(),
                    ok: false,
                    detail: why.clone(),
                });
            }
            return Ok(TransitionReport {
                ok: false,
                bullets,
                targets: None,
            });
        }
        let apexes = self.apex_candidates(&poses, &parent_end, cp, cr);
        let mut first: Option<TransitionReport> = None;
        for apex in apexes {
            let report = self.evaluate_apex(mc, mp, mr, &parent_end, &poses, apex)?;
            if report.ok {
                return Ok(report);
            }
            first.get_or_insert(report);
        }
        Ok(first.unwrap_or_else(|| TransitionReport {
            ok: false,
            bullets: names
                .iter()
                .map(|id| Bullet {
                    id: (*id).into(),
                    ok: false,
                    detail: format!("{parent_end} cannot point at any shared meeting pose"),
                })
                .collect(),
            targets: None,
        }))
    }

    /// `mc` must hang from `mp` by its input connector; returns `mp`'s end.
    fn transition_topology(&self, mc: &str, mp: &str) -> Result<Endpoint, ReconfigError> {
        self.module(mc)?;
        self.module(mp)?;
        match self.peer_of(&Endpoint::new(mc, ConnectorId::D)) {
            Some(end) if end.module == mp => Ok(end),
            _ => Err(ReconfigError::Topology(format!("{mc} is not a child of {mp}"))),
        }
    }

    /// Points 2L from both centres that the parent connector can face.
    fn apex_candidates(
        &self,
        poses: &BTreeMap<ModuleId, Frame>,
        parent_end: &Endpoint,
        cp: Vec3,
        cr: Vec3,
    ) -> Vec<Vec3> {
        let s = self.spacing();
        let d = (cr - cp).norm();
        let e = (cr - cp) / d;
        let mid = (cp + cr) / 2.0;
        let rho = (s * s - d * d / 4.0).max(0.0).sqrt();
        let helper = if e.x.abs() < 0.9 { Vec3::x() } else { Vec3::y() };
        let f = e.cross(&helper).normalize();
        let g = e.cross(&f);
        let on_circle = |t: f64| mid + (f * t.cos() + g * t.sin()) * rho;
        let pose = &poses[&parent_end.module];
        if parent_end.connector == ConnectorId::A {
            // A stays in its meridian plane: (apex - cp) . n = 0.
            let n = pose.y_axis();
            let (a, b, k) = (rho * f.dot(&n), rho * g.dot(&n), (mid - cp).dot(&n));
            let amp = (a * a + b * b).sqrt();
            if amp < 1e-12 || k.abs() > amp {
                return vec![];
            }
            let base = b.atan2(a);
            let off = (-k / amp).clamp(-1.0, 1.0).acos();
            let mut out = vec![on_circle(base + off), on_circle(base - off)];
            // Prefer the meeting point above the line of centres.
            out.sort_by(|p, q| q.z.total_cmp(&p.z));
            out
        } else {
            let child = self.peer_of(parent_end).map(|e| poses[&e.module].origin).unwrap_or(mid);
            let t = g.dot(&(child - mid)).atan2(f.dot(&(child - mid)));
            vec![on_circle(t)]
        }
    }

    fn evaluate_apex(
        &self,
        mc: &str,
        mp: &str,
        mr: &str,
        parent_end: &Endpoint,
        poses: &BTreeMap<ModuleId, Frame>,
        apex: Vec3,
    ) -> Result<TransitionReport, ReconfigError> {
        let s = self.spacing();
        let (cp, cr) = (poses[mp].origin, poses[mr].origin);
        let p_pose = &poses[mp];
        let r_pose = &poses[mr];
        let local = |pose: &Frame, v: Vec3| pose.rotation().inverse() * v;

        // (ii) the parent's output connector must point at the apex, 120° from its z axis.
        let v_p = local(p_pose, (apex - cp) / s);
        let p_target = spherical_coords(&v_p);
        let p_angle = angular_distance(&v_p, &Vec3::z());
        let p_rot = self.check_rotation(mp, parent_end.connector, p_target)?;
        let ii_ok = (p_angle - 120.0).abs() <= 1.0 && p_rot.ok;
        let ii = Bullet {
            id: "ii".into(),
            ok: ii_ok,
            detail: format!(
                "{parent_end} to ({:.2}°, {:.2}°), {p_angle:.2}° from z{}",
                p_target.0,
                p_target.1,
                p_rot.reason.map(|r| format!(", {r}")).unwrap_or_default()
            ),
        };

        // (iii) a free connector of the receiving module must point at the apex, 30° from z.
        let v_r = local(r_pose, (apex - cr) / s);
        let r_target = spherical_coords(&v_r);
        let r_angle = angular_distance(&v_r, &Vec3::z());
        let mut iii = Bullet {
            id: "iii".into(),
            ok: false,
            detail: format!("no free connector of {mr} reaches ({:.2}°, {:.2}°), {r_angle:.2}° from z", r_target.0, r_target.1),
        };
        let mut receiving = None;
        if (r_angle - 30.0).abs() <= 1.0 {
            for c in self.free_outputs(mr) {
                let target = if c == ConnectorId::A { (r_target.0, 0.0) } else { r_target };
                if c == ConnectorId::A && normalized_offset(r_target.1) > 1.0 {
                    continue;
                }
                let rot = self.check_rotation(mr, c, target)?;
                if rot.ok {
                    iii = Bullet {
                        id: "iii".into(),
                        ok: true,
                        detail: format!("{mr}.{c} to ({:.2}°, {:.2}°), {r_angle:.2}° from z", target.0, target.1),
                    };
                    receiving = Some((c, target));
                    break;
                }
                iii.detail = format!("{mr}.{c}: {}", rot.reason.unwrap_or_default());
            }
        }

        // Pose of the moving module once the parent connector has turned.
        let mut after_parent = self.clone();
        let p_state = self.module(mp)?.state.with_connector(parent_end.connector, p_target.0, p_target.1);
        after_parent.module_mut(mp)?.state = p_state;
        let predicted = after_parent.world_poses()?;
        let c_pose = &predicted[mc];
        let u = (cr - apex) / s;
        let v_c = local(c_pose, u);
        let c_target = spherical_coords(&v_c);

        // (i) a free connector of the moving module must face the receiver at -30°.
        let mut i = Bullet {
            id: "i".into(),
            ok: false,
            detail: format!("no free connector of {mc} can face ({:.2}°, {:.2}°)", c_target.0, c_target.1),
        };
        let mut moving = None;
        if (c_target.0 + 30.0).abs() <= 1.0 {
            for c in self.free_outputs(mc) {
                if c == ConnectorId::A && normalized_offset(c_target.1) > 1.0 {
                    continue;
                }
                let target = if c == ConnectorId::A { (c_target.0, 0.0) } else { c_target };
                let rot = self.check_rotation(mc, c, target)?;
                if rot.ok {
                    i = Bullet {
                        id: "i".into(),
                        ok: true,
                        detail: format!("{mc}.{c} to ({:.2}°, {:.2}°)", target.0, target.1),
                    };
                    moving = Some((c, target));
                    break;
                }
                i.detail = format!("{mc}.{c}: {}", rot.reason.unwrap_or_default());
            }
        }

        // (iv) both participating faces lie in the transfer plane and meet with a quarter-turn roll.
        let mut iv = Bullet {
            id: "iv".into(),
            ok: false,
            detail: "participating connectors unresolved".into(),
        };
        let mut phi = 0.0;
        if let (Some((yc, yt)), Some((zc, zt))) = (moving, receiving) {
            let mut after = after_parent.clone();
            let yc_state = after.module(mc)?.state.with_connector(yc, yt.0, yt.1);
            after.module_mut(mc)?.state = yc_state;
            let zc_state = after.module(mr)?.state.with_connector(zc, zt.0, zt.1);
            after.module_mut(mr)?.state = zc_state;
            let final_poses = after.world_poses()?;
            let fy = after.face_world(&Endpoint::new(mc, yc), &final_poses[mc])?;
            let fz = after.face_world(&Endpoint::new(mr, zc), &final_poses[mr])?;
            let normal = (cp - apex).cross(&(cr - apex)).normalize();
            let off_plane = |v: &Vec3| normal.dot(&v.normalize()).clamp(-1.0, 1.0).asin().to_degrees().abs();
            let tilt = off_plane(&fy.z_axis).max(off_plane(&fz.z_axis));
            let roll = measured_roll(&fz, &fy);
            phi = quantize(roll);
            let roll_err = (roll - phi + 180.0).rem_euclid(360.0) - 180.0;
            let gap = (fy.origin - fz.origin - fz.z_axis * self.spacing_gap()).norm();
            iv = Bullet {
                id: "iv".into(),
                ok: tilt <= 1.0 && roll_err.abs() <= 1.0 && gap <= 1e-3,
                detail: format!(
                    "faces {tilt:.3}° off the transfer plane, roll {roll:.3}° (using {phi}°), faces {gap:.2e} mm apart"
                ),
            };
        }

        let bullets = vec![i, ii, iii, iv];
        let ok = bullets.iter().all(|b| b.ok);
        let targets = match (moving, receiving) {
            (Some((yc, yt)), Some((zc, zt))) => Some(TransitionTargets {
                apex,
                parent_connector: parent_end.connector,
                parent_target: p_target,
                moving_connector: yc,
                moving_target: yt,
                receiving_connector: zc,
                receiving_target: zt,
                phi,
            }),
            _ => None,
        };
        Ok(TransitionReport { ok, bullets, targets })
    }

    fn free_outputs(&self, id: &str) -> Vec<ConnectorId> {
        ConnectorId::OUTPUTS
            .into_iter()
            .filter(|c| self.connection_at(&Endpoint::new(id, *c)).is_none())
            .collect()
    }

    /// Moves `mc` from `mp` to `mr` in five actions: turn the moving module's
    /// free connector, turn the receiver's, swing the moving module over with
    /// the parent connector, connect, disconnect.
    pub fn plan_transition(&self, mc: &str, mp: &str, mr: &str) -> Result<ActionScript, ReconfigError> {
        self.module(mr)?;
        if self.connected(mc, mr) {
            return Ok(vec![]);
        }
        let parent_end = self.transition_topology(mc, mp)?;
        let report = self.check_transition(mc, mp, mr)?;
        if !report.ok {
            return Err(ReconfigError::Precondition(Box::new(report)));
        }
        let t = report.targets.expect("passing report carries targets");
        let script = vec![
            Action::SetConnectorGoal {
                module: mc.into(),
                connector: t.moving_connector,
                target: t.moving_target,
            },
            Action::SetConnectorGoal {
                module: mr.into(),
                connector: t.receiving_connector,
                target: t.receiving_target,
            },
            Action::SetConnectorGoal {
                module: mp.into(),
                connector: t.parent_connector,
                target: t.parent_target,
            },
            Action::Connect {
                a: Endpoint::new(mc, t.moving_connector),
                b: Endpoint::new(mr, t.receiving_connector),
                phi: t.phi,
            },
            Action::Disconnect {
                a: parent_end,
                b: Endpoint::new(mc, ConnectorId::D),
            },
        ];
        self.execute(&script)
            .map_err(|e| ReconfigError::Planning(format!("dry run failed: {e}")))?;
        Ok(script)
    }

    /// Applies `script` to a copy of the assembly. On any failure the original
    /// is untouched and the error names the failing action.
    pub fn execute(&self, script: &[Action]) -> Result<(Assembly, Vec<SceneSnapshot>), ReconfigError> {
        let mut work = self.clone();
        let mut snapshots = vec![work.snapshot(0, "initial")?];
        for (k, action) in script.iter().enumerate() {
            work.apply(action).map_err(|e| ReconfigError::Step {
                step: k + 1,
                source: Box::new(e),
            })?;
            snapshots.push(work.snapshot(k + 1, &action.to_string())?);
        }
        Ok((work, snapshots))
    }

    fn apply(&mut self, action: &Action) -> Result<(), ReconfigError> {
        match action {
            Action::SetConnectorGoal {
                module,
                connector,
                target,
            } => {
                let check = self.check_rotation(module, *connector, *target)?;
                if !check.ok {
                    return Err(ReconfigError::Rotation {
                        module: module.clone(),
                        connector: *connector,
                        reason: check.reason.unwrap_or_default(),
                    });
                }
                let theta = if *connector == ConnectorId::A { 0.0 } else { target.1 };
                let state = self.module(module)?.state.with_connector(*connector, target.0, theta);
                self.module_mut(module)?.state = state;
                self.refresh_poses()
            }
            Action::Connect { a, b, phi } => self.connect(a, b, *phi),
            Action::Disconnect { a, b } => self.disconnect(a, b),
        }
    }

    pub fn connect(&mut self, a: &Endpoint, b: &Endpoint, phi: f64) -> Result<(), ReconfigError> {
        self.module(&a.module)?;
        self.module(&b.module)?;
        if a.module == b.module {
            return Err(ReconfigError::Topology("a module cannot connect to itself".into()));
        }
        if !is_quarter_turn(phi) {
            return Err(ReconfigError::InvalidDeflection(phi));
        }
        for end in [a, b] {
            if self.connection_at(end).is_some() {
                return Err(ReconfigError::AlreadyConnected(end.module.clone(), end.connector));
            }
        }
        let poses = self.world_poses()?;
        let fa = self.face_world(a, &poses[&a.module])?;
        let fb = self.face_world(b, &poses[&b.module])?;
        let gap = (fa.origin + fa.z_axis * self.spacing_gap() - fb.origin).norm();
        let facing = angular_distance(&fa.z_axis, &-fb.z_axis);
        let roll = measured_roll(&fa, &fb);
        let roll_err = ((roll - phi + 180.0).rem_euclid(360.0) - 180.0).abs();
        if gap > POSITION_TOLERANCE || facing > ANGLE_TOLERANCE || roll_err > ANGLE_TOLERANCE {
            return Err(ReconfigError::FaceMismatch(format!(
                "{a} and {b}: {gap:.3e} mm apart, {facing:.3e}° from facing, roll {roll:.4}° vs {phi}°"
            )));
        }
        self.connections.push(Connection {
            a: a.clone(),
            b: b.clone(),
            phi: phi.rem_euclid(360.0),
        });
        self.after_topology_change()
    }

    pub fn disconnect(&mut self, a: &Endpoint, b: &Endpoint) -> Result<(), ReconfigError> {
        let Some(pos) = self.connections.iter().position(|c| c.joins(a, b)) else {
            return Err(ReconfigError::NotConnected(
                a.module.clone(),
                a.connector,
                b.module.clone(),
                b.connector,
            ));
        };
        self.connections.remove(pos);
        self.after_topology_change()
    }

    /// Re-roots every module on its new parent connector and recomputes poses.
    fn after_topology_change(&mut self) -> Result<(), ReconfigError> {
        let tree = self.spanning_tree()?;
        if !self.ground.is_empty() {
            if let Some(lost) = self.modules.keys().find(|id| !tree.seen.contains(*id)) {
                return Err(ReconfigError::Topology(format!("{lost} would lose its support")));
            }
        }
        for id in &tree.order {
            if let Some((child_end, _)) = tree.parent.get(id) {
                if child_end.connector != ConnectorId::D {
                    self.relabel(id, child_end.connector)?;
                }
            }
        }
        self.rebuild_status();
        self.refresh_poses()
    }

    /// Makes `new_input` the module's D. Its frame partner becomes A and the
    /// remaining two become B and C in the order the chirality rule demands.
    /// The input face keeps its x axis, so the deflection of the parent link
    /// is unchanged.
    fn relabel(&mut self, id: &str, new_input: ConnectorId) -> Result<(), ReconfigError> {
        let node = self.module(id)?.clone();
        let pose = node.world_frame;
        let world = |c: ConnectorId| pose.transform_vector(&node.state.position(c));
        let new_a = new_input.frame_partner();
        let rest: Vec<ConnectorId> = ConnectorId::ALL
            .into_iter()
            .filter(|c| *c != new_input && *c != new_a)
            .collect();
        let z = -world(new_input);
        let pa = world(new_a);
        let x = pa - z * z.dot(&pa);
        if x.norm() < 1e-9 {
            return Err(ReconfigError::Topology(format!("{id}: new A sits on the pole of new D")));
        }
        let frame = Frame {
            origin: pose.origin,
            x_axis: x.normalize(),
            z_axis: z,
        };
        let to_local = frame.rotation().inverse();
        let local = |c: ConnectorId| to_local * world(c);
        let mut mapping = None;
        for (b, c) in [(rest[0], rest[1]), (rest[1], rest[0])] {
            let s = ModuleState::from_directions(&local(new_a), &local(b), &local(c));
            if s.is_chiral() == Ok(true) {
                mapping = Some((s, b, c));
                break;
            }
        }
        let Some((state, old_b, old_c)) = mapping else {
            return Err(ReconfigError::Topology(format!("{id}: no chiral relabelling")));
        };
        let rename = |c: ConnectorId| -> ConnectorId {
            if c == new_input {
                ConnectorId::D
            } else if c == new_a {
                ConnectorId::A
            } else if c == old_b {
                ConnectorId::B
            } else if c == old_c {
                ConnectorId::C
            } else {
                unreachable!()
            }
        };
        // Faces other than the input change their x-axis convention; keep the
        // neighbours where they are by re-measuring the roll.
        let poses = self.world_poses()?;
        let mut relabelled = self.clone();
        {
            let n = relabelled.module_mut(id)?;
            n.state = state;
            n.world_frame = frame;
        }
        for (k, conn) in self.connections.iter().enumerate() {
            let Some((mine, peer)) = conn.oriented(id) else { continue };
            let new_end = Endpoint::new(id, rename(mine.connector));
            let mut phi = conn.phi;
            if mine.connector != new_input {
                let f_mine = relabelled.face_world(&new_end, &frame)?;
                let f_peer = self.face_world(peer, &poses[&peer.module])?;
                let roll = measured_roll(&f_mine, &f_peer);
                phi = quantize(roll);
                if ((roll - phi + 180.0).rem_euclid(360.0) - 180.0).abs() > ANGLE_TOLERANCE {
                    return Err(ReconfigError::Topology(format!(
                        "{id}: relabelling leaves {new_end} at a roll of {roll:.4}°"
                    )));
                }
            }
            let c = &mut relabelled.connections[k];
            if c.a.module == id && c.a.connector == mine.connector {
                c.a = new_end;
            } else {
                c.b = new_end;
            }
            c.phi = phi;
        }
        *self = relabelled;
        Ok(())
    }

    pub fn snapshot(&self, step: usize, action: &str) -> Result<SceneSnapshot, ReconfigError> {
        let poses = self.world_poses()?;
        let mut connectors = BTreeMap::new();
        for (id, pose) in &poses {
            let node = self.module(id)?;
            connectors.insert(
                id.clone(),
                ConnectorId::ALL.map(|c| pose.transform_point(&(node.state.position(c) * self.slg_radius))),
            );
        }
        Ok(SceneSnapshot {
            step,
            action: action.to_string(),
            centers: poses.iter().map(|(k, f)| (k.clone(), f.origin)).collect(),
            connectors,
            connections: self.connections.len(),
        })
    }

    /// Loads an assembly, deriving connector status from the connection list.
    pub fn normalized(mut self) -> Result<Self, ReconfigError> {
        for (id, node) in self.modules.iter_mut() {
            node.id = id.clone();
            node.state.refresh_deflections();
        }
        self.rebuild_status();
        let issues = self.audit();
        if let Some(first) = issues.first() {
            return Err(ReconfigError::Topology(first.clone()));
        }
        self.refresh_poses()?;
        Ok(self)
    }
}

struct Tree {
    order: Vec<ModuleId>,
    /// child -> (child end, (parent end, phi))
    parent: BTreeMap<ModuleId, (Endpoint, (Endpoint, f64))>,
    seen: BTreeSet<ModuleId>,
}

fn normalized_offset(theta: f64) -> f64 {
    let t = theta.rem_euclid(360.0);
    t.min(360.0 - t)
}

fn slerp(p: &Vec3, q: &Vec3, t: f64) -> Vec3 {
    let omega = angular_distance(p, q).to_radians();
    if omega < 1e-12 {
        return *p;
    }
    let s = omega.sin();
    if s < 1e-9 {
        // Antipodal: pass through any perpendicular direction.
        let helper = if p.x.abs() < 0.9 { Vec3::x() } else { Vec3::y() };
        let perp = p.cross(&helper).normalize();
        let a = t * std::f64::consts::PI;
        return p * a.cos() + perp * a.sin();
    }
    (p * ((1.0 - t) * omega).sin() + q * (t * omega).sin()) / s
}

/// Three-module scene for a transition: `mr` stands upright at the origin,
/// `mp` lies on its side `separation` L away along x, and `mc` hangs from
/// `mp`'s A connector. Both `mr` and `mp` are grounded.
pub fn transition_scene(slg_radius: f64, separation: f64) -> Assembly {
    let mut asm = Assembly::new(slg_radius);
    asm.add_module(
        "mr",
        ModuleState::new(20.0, -25.0, 120.0, 15.0, 240.0),
        Frame::identity(),
    );
    asm.add_module(
        "mp",
        ModuleState::new(40.0, -25.0, 120.0, 55.0, 240.0),
        Frame {
            origin: Vec3::new(separation * slg_radius, 0.0, 0.0),
            x_axis: Vec3::z(),
            z_axis: Vec3::x(),
        },
    );
    asm.add_module(
        "mc",
        ModuleState::new(20.0, -25.0, 120.0, 55.0, 240.0),
        Frame::identity(),
    );
    asm.ground = vec!["mr".into(), "mp".into()];
    asm.connections.push(Connection {
        a: Endpoint::new("mp", ConnectorId::A),
        b: Endpoint::new("mc", ConnectorId::D),
        phi: 0.0,
    });
    asm.normalized().expect("scene is consistent")
}

/// A scene bundled with the roles of its three modules.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TransitionScene {
    pub assembly: Assembly,
    pub mc: ModuleId,
    pub mp: ModuleId,
    pub mr: ModuleId,
}

impl TransitionScene {
    pub fn canonical(slg_radius: f64) -> Self {
        Self::with_separation(slg_radius, 2.0)
    }

    pub fn with_separation(slg_radius: f64, separation: f64) -> Self {
        Self {
            assembly: transition_scene(slg_radius, separation),
            mc: "mc".into(),
            mp: "mp".into(),
            mr: "mr".into(),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::slg::TABLE1;

    const L: f64 = TABLE1.slg_radius;

    fn pair(phi: f64) -> Assembly {
        let mut asm = Assembly::new(L);
        asm.add_module("a", ModuleState::regular_tetrahedron(), Frame::identity());
        asm.add_module("b", ModuleState::regular_tetrahedron(), Frame::identity());
        asm.connections.push(Connection {
            a: Endpoint::new("a", ConnectorId::A),
            b: Endpoint::new("b", ConnectorId::D),
            phi,
        });
        asm.ground = vec!["a".into()];
        asm.normalized().unwrap()
    }

    #[test]
    fn mated_centres_are_2l_apart() {
        for phi in [0.0, 90.0, 180.0, 270.0] {
            let asm = pair(phi);
            let p = asm.world_poses().unwrap();
            assert!(((p["a"].origin - p["b"].origin).norm() - 2.0 * L).abs() < 1e-9);
            assert!(asm.audit().is_empty());
        }
    }

    #[test]
    fn connector_gap_adds_to_spacing() {
        let mut asm = pair(0.0);
        asm.connector_gap = Some(TABLE1.l_dk);
        let p = asm.world_poses().unwrap();
        assert!(((p["a"].origin - p["b"].origin).norm() - 2.0 * L - 8.0).abs() < 1e-9);
    }

    #[test]
    fn chain_of_four_within_6l() {
        let mut asm = Assembly::new(L);
        for id in ["m0", "m1", "m2", "m3"] {
            asm.add_module(id, ModuleState::regular_tetrahedron(), Frame::identity());
        }
        for (p, c, conn) in [("m0", "m1", ConnectorId::A), ("m1", "m2", ConnectorId::B), ("m2", "m3", ConnectorId::C)] {
            asm.connections.push(Connection {
                a: Endpoint::new(p, conn),
                b: Endpoint::new(c, ConnectorId::D),
                phi: 90.0,
            });
        }
        let asm = asm.normalized().unwrap();
        let p = asm.world_poses().unwrap();
        assert!((p["m0"].origin - p["m3"].origin).norm() <= 6.0 * L + 1e-9);
        // Re-rooting changes poses only by a rigid motion.
        let q = asm.world_poses_from("m2").unwrap();
        for (x, y) in [("m0", "m3"), ("m1", "m2"), ("m0", "m2")] {
            let dp = (p[x].origin - p[y].origin).norm();
            let dq = (q[x].origin - q[y].origin).norm();
            assert!((dp - dq).abs() < 1e-9);
        }
    }

    #[test]
    fn inconsistent_loop_is_reported() {
        let mut asm = pair(0.0);
        asm.ground.push("b".into());
        asm.modules.get_mut("b").unwrap().world_frame.origin.x += 1.0;
        assert!(matches!(asm.world_poses(), Err(ReconfigError::InconsistentLoop { .. })));
    }

    #[test]
    fn canonical_transition_checks_pass() {
        let scene = TransitionScene::canonical(L);
        let report = scene.assembly.check_transition("mc", "mp", "mr").unwrap();
        assert!(report.ok, "{}", report.summary());
        let t = report.targets.unwrap();
        assert!((t.apex - Vec3::new(L, 0.0, 3f64.sqrt() * L)).norm() < 1e-9);
        assert!((t.moving_target.0 + 30.0).abs() < 1e-9);
        assert!((t.receiving_target.0 - 60.0).abs() < 1e-9);
        assert!((t.parent_target.0 + 30.0).abs() < 1e-9);
        assert_eq!(t.phi, 0.0);
    }

    #[test]
    fn canonical_transition_executes() {
        let scene = TransitionScene::canonical(L);
        let asm = &scene.assembly;
        let script = asm.plan_transition("mc", "mp", "mr").unwrap();
        assert_eq!(script.len(), 5);
        let (after, snaps) = asm.execute(&script).unwrap();
        let c = &snaps[4].centers;
        for (x, y) in [("mc", "mp"), ("mc", "mr"), ("mp", "mr")] {
            assert!(((c[x] - c[y]).norm() - 2.0 * L).abs() < 1e-6);
        }
        assert_eq!(after.parent_of("mc").as_deref(), Some("mr"));
        assert!(!after.connected("mc", "mp"));
        assert_eq!(after.connections.len(), asm.connections.len());
        assert!(after.audit().is_empty(), "{:?}", after.audit());
        assert_eq!(after.module("mc").unwrap().state.is_chiral(), Ok(true));
        // The moved module does not move when relabelled.
        let before = &snaps[5].centers["mc"];
        assert!((after.world_poses().unwrap()["mc"].origin - before).norm() < 1e-9);
        assert!(after.plan_transition("mc", "mp", "mr").unwrap().is_empty());
    }

    #[test]
    fn wide_separation_fails() {
        let scene = TransitionScene::with_separation(L, 3.0);
        let err = scene.assembly.plan_transition("mc", "mp", "mr").unwrap_err();
        assert!(matches!(err, ReconfigError::Precondition(_)));
    }

    #[test]
    fn tilted_receiver_fails_bullet_three() {
        let mut scene = TransitionScene::canonical(L);
        let r = Rotation3::from_axis_angle(&Vector3y(), 20f64.to_radians());
        let f = &mut scene.assembly.modules.get_mut("mr").unwrap().world_frame;
        f.x_axis = r * f.x_axis;
        f.z_axis = r * f.z_axis;
        let report = scene.assembly.check_transition("mc", "mp", "mr").unwrap();
        assert!(!report.bullets[2].ok);
        assert!(!report.ok);
    }

    #[allow(non_snake_case)]
    fn Vector3y() -> Unit<Vec3> {
        Unit::new_normalize(Vec3::y())
    }

    #[test]
    fn failing_step_rolls_back() {
        let scene = TransitionScene::canonical(L);
        let asm = &scene.assembly;
        let mut script = asm.plan_transition("mc", "mp", "mr").unwrap();
        script[2] = Action::SetConnectorGoal {
            module: "mp".into(),
            connector: ConnectorId::A,
            target: (-40.0, 0.0),
        };
        let copy = asm.clone();
        let err = asm.execute(&script).unwrap_err();
        assert!(matches!(err, ReconfigError::Step { step: 3, .. }));
        assert_eq!(&copy, asm);
        let (same, _) = asm.execute(&[]).unwrap();
        assert_eq!(&same, asm);
    }

    #[test]
    fn topology_errors() {
        let scene = TransitionScene::canonical(L);
        assert!(matches!(
            scene.assembly.check_transition("mr", "mp", "mc"),
            Err(ReconfigError::Topology(_))
        ));
        assert!(matches!(
            scene.assembly.check_transition("ghost", "mp", "mr"),
            Err(ReconfigError::UnknownModule(_))
        ));
    }

    #[test]
    fn rotation_reasons() {
        let scene = TransitionScene::canonical(L);
        let asm = &scene.assembly;
        assert!(asm.check_rotation("mr", ConnectorId::A, (30.0, 0.0)).unwrap().ok);
        let low = asm.check_rotation("mr", ConnectorId::A, (-40.0, 0.0)).unwrap();
        let why = low.reason.unwrap();
        assert!(why.starts_with("enclosure at (11.00"), "{why}");
    }
}
