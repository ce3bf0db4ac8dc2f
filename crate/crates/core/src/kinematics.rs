//! Closed-form kinematics of a single module on its sphere.
//!
//! Frame {O}: origin at the sphere centre, the input connector D pinned at
//! `(0, 0, -1)`, `z` pointing from D toward O. Connector A always sits on the
//! `theta = 0` meridian, which fixes the azimuth gauge. Positions are unit
//! vectors; multiply by the SLG radius for millimetres.

use nalgebra::{Rotation3, Unit, Vector3};
use serde::{Deserialize, Serialize};
use std::collections::BTreeMap;
use std::fmt;
use thiserror::Error;

pub type Vec3 = Vector3<f64>;

/// Unfold-angle range every SLG can realise.
pub const DELTA_RANGE: (f64, f64) = (60.0, 180.0);
/// Elevations this close to the poles are rejected.
pub const SINGULAR_MARGIN: f64 = 0.01;
/// Default closure tolerance for exact inputs.
pub const CLOSURE_TOLERANCE: f64 = 1e-6;
/// `|phi_C|` below this uses the equatorial branch of the deflection formula.
pub const BRANCH_TOLERANCE: f64 = 1e-9;
const DEGENERACY: f64 = 1e-12;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum KinematicsError {
    #[error("unfold angle {slg} = {value}° outside [{lo}°, {hi}°]")]
    OutOfRange {
        slg: Slg,
        value: f64,
        lo: f64,
        hi: f64,
    },
    #[error("no real azimuth solves {slg} = {value}° (cos theta = {cos_theta})")]
    Infeasible { slg: Slg, value: f64, cos_theta: f64 },
    #[error("closure residual {residual}° exceeds tolerance {tolerance}°")]
    Closure { residual: f64, tolerance: f64 },
    #[error("connector {0:?} is within {SINGULAR_MARGIN}° of a pole")]
    Singular(ConnectorId),
    #[error("no azimuth branch satisfies the chirality condition")]
    NoChiralBranch,
    #[error("degenerate point set, chirality undefined")]
    Degenerate,
    #[error("deflection formula argument {0} outside [-1, 1]")]
    BranchDomain(f64),
    #[error("deflection undefined: equatorial branch denominator vanishes")]
    DeflectionUndefined,
    #[error("connector {0:?} has no child frame")]
    InvalidConnector(ConnectorId),
    #[error("deflection {0}° is not a multiple of 90°")]
    InvalidDeflection(f64),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum ConnectorId {
    A,
    B,
    C,
    D,
}

impl ConnectorId {
    pub const ALL: [ConnectorId; 4] = [Self::A, Self::B, Self::C, Self::D];
    pub const OUTPUTS: [ConnectorId; 3] = [Self::A, Self::B, Self::C];

    /// The connector whose SLG plane holds this connector's x-axis.
    pub fn frame_partner(self) -> ConnectorId {
        match self {
            Self::A => Self::D,
            Self::D => Self::A,
            Self::B => Self::C,
            Self::C => Self::B,
        }
    }

    fn index(self) -> usize {
        self as usize
    }
}

impl fmt::Display for ConnectorId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{self:?}")
    }
}

/// One of the six scissor-linkage groups, named by its two connectors.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Slg {
    AB,
    AC,
    AD,
    BC,
    BD,
    CD,
}

impl Slg {
    pub const ALL: [Slg; 6] = [Self::AB, Self::AC, Self::AD, Self::BC, Self::BD, Self::CD];

    pub fn endpoints(self) -> (ConnectorId, ConnectorId) {
        use ConnectorId::*;
        match self {
            Self::AB => (A, B),
            Self::AC => (A, C),
            Self::AD => (A, D),
            Self::BC => (B, C),
            Self::BD => (B, D),
            Self::CD => (C, D),
        }
    }

    /// The SLG sharing no connector with this one.
    pub fn opposite(self) -> Slg {
        match self {
            Self::AB => Self::CD,
            Self::CD => Self::AB,
            Self::AC => Self::BD,
            Self::BD => Self::AC,
            Self::AD => Self::BC,
            Self::BC => Self::AD,
        }
    }

    pub fn between(x: ConnectorId, y: ConnectorId) -> Option<Slg> {
        Self::ALL.into_iter().find(|s| {
            let (p, q) = s.endpoints();
            (p, q) == (x, y) || (q, p) == (x, y)
        })
    }
}

impl fmt::Display for Slg {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "d{self:?}")
    }
}

/// The six unfold angles, in degrees.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DeltaVector {
    #[serde(rename = "dAB")]
    pub ab: f64,
    #[serde(rename = "dAC")]
    pub ac: f64,
    #[serde(rename = "dAD")]
    pub ad: f64,
    #[serde(rename = "dBC")]
    pub bc: f64,
    #[serde(rename = "dBD")]
    pub bd: f64,
    #[serde(rename = "dCD")]
    pub cd: f64,
}

impl DeltaVector {
    pub fn uniform(value: f64) -> Self {
        Self::from_array([value; 6])
    }

    /// Order: AB, AC, AD, BC, BD, CD.
    pub fn from_array(v: [f64; 6]) -> Self {
        Self {
            ab: v[0],
            ac: v[1],
            ad: v[2],
            bc: v[3],
            bd: v[4],
            cd: v[5],
        }
    }

    pub fn to_array(&self) -> [f64; 6] {
        [self.ab, self.ac, self.ad, self.bc, self.bd, self.cd]
    }

    pub fn get(&self, slg: Slg) -> f64 {
        self.to_array()[slg as usize]
    }

    pub fn set(&mut self, slg: Slg, value: f64) {
        let mut v = self.to_array();
        v[slg as usize] = value;
        *self = Self::from_array(v);
    }

    pub fn map2(&self, other: &Self, f: impl Fn(f64, f64) -> f64) -> Self {
        let a = self.to_array();
        let b = other.to_array();
        Self::from_array(std::array::from_fn(|i| f(a[i], b[i])))
    }

    pub fn max_abs_diff(&self, other: &Self) -> f64 {
        self.map2(other, |a, b| (a - b).abs())
            .to_array()
            .into_iter()
            .fold(0.0, f64::max)
    }

    /// SLGs whose angle falls outside `[lo, hi]`.
    pub fn range_violations(&self, lo: f64, hi: f64) -> Vec<(Slg, f64)> {
        Slg::ALL
            .into_iter()
            .map(|s| (s, self.get(s)))
            .filter(|&(_, v)| !(lo..=hi).contains(&v))
            .collect()
    }

    fn require_range(&self, slgs: &[Slg], (lo, hi): (f64, f64)) -> Result<(), KinematicsError> {
        for &slg in slgs {
            let value = self.get(slg);
            if !(lo..=hi).contains(&value) {
                return Err(KinematicsError::OutOfRange { slg, value, lo, hi });
            }
        }
        Ok(())
    }
}

/// Unit vector for elevation `phi` and azimuth `theta`.
pub fn position_vector(phi: f64, theta: f64) -> Vec3 {
    let (p, t) = (phi.to_radians(), theta.to_radians());
    Vec3::new(p.cos() * t.cos(), p.cos() * t.sin(), p.sin())
}

/// Angle between two directions, robust near 0° and 180°.
pub fn angular_distance(u: &Vec3, v: &Vec3) -> f64 {
    u.cross(v).norm().atan2(u.dot(v)).to_degrees()
}

/// `(phi, theta)` of a direction, theta in `[0, 360)`.
pub fn spherical_coords(v: &Vec3) -> (f64, f64) {
    let n = v.normalize();
    let phi = n.z.clamp(-1.0, 1.0).asin().to_degrees();
    (phi, normalize_azimuth(n.y.atan2(n.x).to_degrees()))
}

pub fn normalize_azimuth(theta: f64) -> f64 {
    let t = theta.rem_euclid(360.0);
    if t >= 360.0 {
        0.0
    } else {
        t
    }
}

/// Elevation of a connector whose SLG to D is unfolded by `delta_xd`.
pub fn elevation_from_delta(delta_xd: f64) -> Result<f64, KinematicsError> {
    let (lo, hi) = DELTA_RANGE;
    if !(lo..=hi).contains(&delta_xd) {
        return Err(KinematicsError::OutOfRange {
            slg: Slg::AD,
            value: delta_xd,
            lo,
            hi,
        });
    }
    Ok(delta_xd - 90.0)
}

pub const D_POSITION: Vec3 = Vec3::new(0.0, 0.0, -1.0);

/// Pose of one module: the five position parameters plus connector deflections.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModuleState {
    pub phi_a: f64,
    pub phi_b: f64,
    pub theta_b: f64,
    pub phi_c: f64,
    pub theta_c: f64,
    /// Orientation of each output connector frame, when defined.
    #[serde(default)]
    pub deflections: BTreeMap<ConnectorId, f64>,
}

impl ModuleState {
    pub fn new(phi_a: f64, phi_b: f64, theta_b: f64, phi_c: f64, theta_c: f64) -> Self {
        let mut s = Self {
            phi_a,
            phi_b,
            theta_b: normalize_azimuth(theta_b),
            phi_c,
            theta_c: normalize_azimuth(theta_c),
            deflections: BTreeMap::new(),
        };
        s.refresh_deflections();
        s
    }

    /// The symmetric pose with every unfold angle at `acos(-1/3)`.
    pub fn regular_tetrahedron() -> Self {
        let phi = (1.0f64 / 3.0).asin().to_degrees();
        Self::new(phi, phi, 120.0, phi, 240.0)
    }

    /// Builds a state from three output directions, rotating about `z` so that
    /// A lands on the `theta = 0` meridian.
    pub fn from_directions(a: &Vec3, b: &Vec3, c: &Vec3) -> Self {
        let yaw = -a.y.atan2(a.x);
        let rot = Rotation3::from_axis_angle(&Vector3::z_axis(), yaw);
        let (phi_a, _) = spherical_coords(&(rot * a));
        let (phi_b, theta_b) = spherical_coords(&(rot * b));
        let (phi_c, theta_c) = spherical_coords(&(rot * c));
        Self::new(phi_a, phi_b, theta_b, phi_c, theta_c)
    }

    pub fn refresh_deflections(&mut self) {
        self.deflections.clear();
        self.deflections.insert(ConnectorId::A, 0.0);
        if let Ok(b) = deflection_b(self) {
            self.deflections.insert(ConnectorId::B, b);
        }
        if let Ok(c) = deflection_c(self) {
            self.deflections.insert(ConnectorId::C, c);
        }
    }

    pub fn elevation(&self, id: ConnectorId) -> f64 {
        match id {
            ConnectorId::A => self.phi_a,
            ConnectorId::B => self.phi_b,
            ConnectorId::C => self.phi_c,
            ConnectorId::D => -90.0,
        }
    }

    pub fn azimuth(&self, id: ConnectorId) -> f64 {
        match id {
            ConnectorId::A | ConnectorId::D => 0.0,
            ConnectorId::B => self.theta_b,
            ConnectorId::C => self.theta_c,
        }
    }

    pub fn position(&self, id: ConnectorId) -> Vec3 {
        match id {
            ConnectorId::D => D_POSITION,
            _ => position_vector(self.elevation(id), self.azimuth(id)),
        }
    }

    /// Unit positions in A, B, C, D order.
    pub fn positions(&self) -> [Vec3; 4] {
        ConnectorId::ALL.map(|id| self.position(id))
    }

    /// Copy with one output connector moved. A ignores `theta` (its azimuth is gauge-fixed).
    pub fn with_connector(&self, id: ConnectorId, phi: f64, theta: f64) -> Self {
        let (mut pa, mut pb, mut tb, mut pc, mut tc) =
            (self.phi_a, self.phi_b, self.theta_b, self.phi_c, self.theta_c);
        match id {
            ConnectorId::A => pa = phi,
            ConnectorId::B => (pb, tb) = (phi, theta),
            ConnectorId::C => (pc, tc) = (phi, theta),
            ConnectorId::D => {}
        }
        Self::new(pa, pb, tb, pc, tc)
    }

    pub fn singular_connector(&self) -> Option<ConnectorId> {
        ConnectorId::OUTPUTS
            .into_iter()
            .find(|&id| self.elevation(id).abs() >= 90.0 - SINGULAR_MARGIN)
    }

    pub fn is_chiral(&self) -> Result<bool, KinematicsError> {
        let [a, b, c, d] = self.positions();
        chirality(&a, &b, &c, &d)
    }
}

/// Labelling predicate for the three output connectors.
///
/// With `E` the centroid of triangle ABC, returns `CE . (AD x AB) > 0`. This
/// holds when A, B, C run counterclockwise about `z` as seen with D below.
pub fn chirality(a: &Vec3, b: &Vec3, c: &Vec3, d: &Vec3) -> Result<bool, KinematicsError> {
    let ab = b - a;
    let ad = d - a;
    let ac = c - a;
    if ab.cross(&ad).norm() < DEGENERACY || ab.cross(&ac).norm() < DEGENERACY {
        return Err(KinematicsError::Degenerate);
    }
    let e = (a + b + c) / 3.0;
    let ce = e - c;
    Ok(ce.dot(&ad.cross(&ab)) > 0.0)
}

pub fn inverse_kinematics(state: &ModuleState) -> DeltaVector {
    let p = state.positions();
    let ang = |x: ConnectorId, y: ConnectorId| angular_distance(&p[x.index()], &p[y.index()]);
    let d = |slg: Slg| {
        let (x, y) = slg.endpoints();
        ang(x, y)
    };
    DeltaVector::from_array(Slg::ALL.map(d))
}

/// Solves positions from the five angles other than `dBC`; returns the state
/// and the `dBC` residual of the chosen branch.
fn solve_five(delta: &DeltaVector, range: (f64, f64)) -> Result<(ModuleState, f64), KinematicsError> {
    delta.require_range(&[Slg::AD, Slg::BD, Slg::CD, Slg::AB, Slg::AC], range)?;
    let phi_a = delta.ad - 90.0;
    let phi_b = delta.bd - 90.0;
    let phi_c = delta.cd - 90.0;
    for (id, phi) in [
        (ConnectorId::A, phi_a),
        (ConnectorId::B, phi_b),
        (ConnectorId::C, phi_c),
    ] {
        if phi.abs() >= 90.0 - SINGULAR_MARGIN {
            return Err(KinematicsError::Singular(id));
        }
    }
    let azimuth = |slg: Slg, phi_x: f64| -> Result<f64, KinematicsError> {
        let (pa, px) = (phi_a.to_radians(), phi_x.to_radians());
        let value = delta.get(slg);
        let cos_theta = (value.to_radians().cos() - pa.sin() * px.sin()) / (pa.cos() * px.cos());
        if cos_theta.abs() > 1.0 + 1e-9 {
            return Err(KinematicsError::Infeasible {
                slg,
                value,
                cos_theta,
            });
        }
        Ok(cos_theta.clamp(-1.0, 1.0).acos().to_degrees())
    };
    let tb = azimuth(Slg::AB, phi_b)?;
    let tc = azimuth(Slg::AC, phi_c)?;

    let a = position_vector(phi_a, 0.0);
    let mut best: Option<(f64, f64, f64)> = None;
    for (sb, sc) in [(1.0, 1.0), (1.0, -1.0), (-1.0, 1.0), (-1.0, -1.0)] {
        let theta_b = sb * tb;
        let theta_c = sc * tc;
        let b = position_vector(phi_b, theta_b);
        let c = position_vector(phi_c, theta_c);
        if !matches!(chirality(&a, &b, &c, &D_POSITION), Ok(true)) {
            continue;
        }
        let residual = (angular_distance(&b, &c) - delta.bc).abs();
        let better = match best {
            None => true,
            Some((r, _, _)) => residual < r - 1e-12,
        };
        if better {
            best = Some((residual, theta_b, theta_c));
        }
    }
    let (residual, theta_b, theta_c) = best.ok_or(KinematicsError::NoChiralBranch)?;
    Ok((
        ModuleState::new(phi_a, phi_b, theta_b, phi_c, theta_c),
        residual,
    ))
}

pub fn forward_kinematics(delta: &DeltaVector) -> Result<ModuleState, KinematicsError> {
    forward_kinematics_with(delta, CLOSURE_TOLERANCE)
}

pub fn forward_kinematics_with(
    delta: &DeltaVector,
    closure_tolerance: f64,
) -> Result<ModuleState, KinematicsError> {
    delta.require_range(&[Slg::BC], DELTA_RANGE)?;
    let (state, residual) = solve_five(delta, DELTA_RANGE)?;
    if residual > closure_tolerance {
        return Err(KinematicsError::Closure {
            residual,
            tolerance: closure_tolerance,
        });
    }
    Ok(state)
}

/// `|angle(B, C) - dBC|` with B and C rebuilt from the other five angles.
/// Only geometric validity is required, not the unfold range.
pub fn closure_residual(delta: &DeltaVector) -> Result<f64, KinematicsError> {
    solve_five(delta, (0.0, 180.0)).map(|(_, r)| r)
}

/// Shared deflection formula; `near` is the connector whose deflection is
/// returned, `far` the other end of the SLG holding its x-axis.
fn deflection_formula(
    phi_far: f64,
    phi_near: f64,
    dtheta: f64,
    delta: f64,
) -> Result<f64, KinematicsError> {
    let (pf, pn, dt, d) = (
        phi_far.to_radians(),
        phi_near.to_radians(),
        dtheta.to_radians(),
        delta.to_radians(),
    );
    let cos_value = if phi_near.abs() > BRANCH_TOLERANCE {
        (pf.cos() * dt.cos() - d.cos() * pn.cos()) / (d.sin() * pn.sin())
    } else {
        let denom = d.sin() * dt.sin();
        if denom.abs() < DEGENERACY {
            return Err(KinematicsError::DeflectionUndefined);
        }
        (pf.cos() - d.cos() * dt.cos()) / denom
    };
    if !cos_value.is_finite() || cos_value.abs() > 1.0 + 1e-9 {
        return Err(KinematicsError::BranchDomain(cos_value));
    }
    Ok(cos_value.clamp(-1.0, 1.0).acos().to_degrees())
}

/// Deflection of connector C, in `[0, 180]`.
pub fn deflection_c(state: &ModuleState) -> Result<f64, KinematicsError> {
    let delta_bc = angular_distance(&state.position(ConnectorId::B), &state.position(ConnectorId::C));
    deflection_formula(
        state.phi_b,
        state.phi_c,
        state.theta_c - state.theta_b,
        delta_bc,
    )
}

/// Deflection of connector B: the C formula with the roles of B and C exchanged.
pub fn deflection_b(state: &ModuleState) -> Result<f64, KinematicsError> {
    let delta_bc = angular_distance(&state.position(ConnectorId::B), &state.position(ConnectorId::C));
    deflection_formula(
        state.phi_c,
        state.phi_b,
        state.theta_b - state.theta_c,
        delta_bc,
    )
}

/// Right-handed frame given by origin, x and z; y follows as `z x x`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Frame {
    pub origin: Vec3,
    pub x_axis: Vec3,
    pub z_axis: Vec3,
}

impl Frame {
    pub fn identity() -> Self {
        Self {
            origin: Vec3::zeros(),
            x_axis: Vec3::x(),
            z_axis: Vec3::z(),
        }
    }

    pub fn y_axis(&self) -> Vec3 {
        self.z_axis.cross(&self.x_axis)
    }

    pub fn rotation(&self) -> Rotation3<f64> {
        Rotation3::from_basis_unchecked(&[self.x_axis, self.y_axis(), self.z_axis])
    }

    pub fn is_orthonormal(&self, tol: f64) -> bool {
        (self.x_axis.norm() - 1.0).abs() < tol
            && (self.z_axis.norm() - 1.0).abs() < tol
            && self.x_axis.dot(&self.z_axis).abs() < tol
    }

    /// Maps a point expressed in this frame into the parent frame.
    pub fn transform_point(&self, p: &Vec3) -> Vec3 {
        self.origin + self.rotation() * p
    }

    pub fn transform_vector(&self, v: &Vec3) -> Vec3 {
        self.rotation() * v
    }

    /// Expresses a frame given in local coordinates in the parent frame.
    pub fn compose(&self, local: &Frame) -> Frame {
        Frame {
            origin: self.transform_point(&local.origin),
            x_axis: self.transform_vector(&local.x_axis),
            z_axis: self.transform_vector(&local.z_axis),
        }
    }
}

/// Unit tangent at `at` along the great circle toward `toward`.
pub fn tangent_toward(at: &Vec3, toward: &Vec3) -> Option<Vec3> {
    let t = toward - at * at.dot(toward);
    (t.norm() > 1e-12).then(|| t.normalize())
}

/// Face frame of a connector in module coordinates: origin on the sphere of
/// `radius`, `z` outward, `x` in the plane of the connector's frame SLG. For D,
/// `x` is the module's own x-axis.
pub fn connector_face(
    state: &ModuleState,
    id: ConnectorId,
    radius: f64,
) -> Result<Frame, KinematicsError> {
    if id == ConnectorId::D {
        return Ok(Frame {
            origin: D_POSITION * radius,
            x_axis: Vec3::x(),
            z_axis: D_POSITION,
        });
    }
    if let Some(s) = state.singular_connector() {
        return Err(KinematicsError::Singular(s));
    }
    let p = state.position(id);
    let partner = state.position(id.frame_partner());
    let x = tangent_toward(&p, &partner).ok_or(KinematicsError::Degenerate)?;
    Ok(Frame {
        origin: p * radius,
        x_axis: x,
        z_axis: p,
    })
}

pub fn is_quarter_turn(phi: f64) -> bool {
    let r = phi.rem_euclid(90.0);
    r < 1e-9 || 90.0 - r < 1e-9
}

/// Frame {D+} of a child module attached at output connector `id` with
/// quantised deflection `quantized_phi`.
pub fn child_frame(
    state: &ModuleState,
    id: ConnectorId,
    quantized_phi: f64,
    radius: f64,
) -> Result<Frame, KinematicsError> {
    if id == ConnectorId::D {
        return Err(KinematicsError::InvalidConnector(id));
    }
    if !is_quarter_turn(quantized_phi) {
        return Err(KinematicsError::InvalidDeflection(quantized_phi));
    }
    let face = connector_face(state, id, radius)?;
    let rot = Rotation3::from_axis_angle(&Unit::new_normalize(face.z_axis), quantized_phi.to_radians());
    Ok(Frame {
        x_axis: rot * face.x_axis,
        ..face
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn tetra_delta() -> f64 {
        (-1.0f64 / 3.0).acos().to_degrees()
    }

    #[test]
    fn position_vector_examples() {
        assert!((position_vector(0.0, 0.0) - Vec3::x()).norm() < 1e-15);
        assert!((position_vector(90.0, 37.0) - Vec3::z()).norm() < 1e-15);
        let v = position_vector(19.4712, 120.0);
        assert!((v - Vec3::new(-0.4714, 0.8165, 0.3333)).norm() < 1e-4);
    }

    #[test]
    fn elevation_examples() {
        assert_eq!(elevation_from_delta(90.0).unwrap(), 0.0);
        assert_eq!(elevation_from_delta(60.0).unwrap(), -30.0);
        assert_eq!(elevation_from_delta(180.0).unwrap(), 90.0);
        assert!(elevation_from_delta(59.9).is_err());
        assert!(elevation_from_delta(180.1).is_err());
    }

    #[test]
    fn tetrahedron_fk() {
        let s = forward_kinematics(&DeltaVector::uniform(tetra_delta())).unwrap();
        let phi = (1.0f64 / 3.0).asin().to_degrees();
        for p in [s.phi_a, s.phi_b, s.phi_c] {
            assert!((p - phi).abs() < 1e-9);
        }
        assert!((s.theta_b - 120.0).abs() < 1e-9, "{}", s.theta_b);
        assert!((s.theta_c - 240.0).abs() < 1e-9, "{}", s.theta_c);
    }

    #[test]
    fn tetrahedron_ik_and_chirality() {
        let s = ModuleState::regular_tetrahedron();
        let d = inverse_kinematics(&s);
        for v in d.to_array() {
            assert!((v - tetra_delta()).abs() < 1e-9);
        }
        assert!(s.is_chiral().unwrap());
        let [a, b, c, dd] = s.positions();
        assert!(!chirality(&a, &c, &b, &dd).unwrap());
    }

    #[test]
    fn chirality_degenerate() {
        let a = Vec3::x();
        let b = Vec3::new(2.0, 0.0, 0.0);
        let c = Vec3::new(3.0, 0.0, 0.0);
        assert_eq!(
            chirality(&a, &b, &c, &D_POSITION),
            Err(KinematicsError::Degenerate)
        );
    }

    #[test]
    fn equatorial_closure() {
        // dAC = 90° pins C to theta = ±90°, so dBC = 90° cannot close.
        let mut d = DeltaVector::uniform(90.0);
        assert!(matches!(
            forward_kinematics(&d),
            Err(KinematicsError::Closure { .. })
        ));
        d.bc = 180.0;
        let s = forward_kinematics(&d).unwrap();
        assert!(s.phi_a.abs() < 1e-12 && s.phi_b.abs() < 1e-12 && s.phi_c.abs() < 1e-12);
        assert!((s.theta_b - 90.0).abs() < 1e-9);
        assert!((s.theta_c - 270.0).abs() < 1e-9);
    }

    #[test]
    fn perturbed_bc_closure() {
        let mut d = DeltaVector::uniform(tetra_delta());
        d.bc += 10.0;
        assert!(matches!(
            forward_kinematics(&d),
            Err(KinematicsError::Closure { .. })
        ));
        for dx in [3.0, -3.0] {
            let mut d = DeltaVector::uniform(tetra_delta());
            d.bc += dx;
            assert!((closure_residual(&d).unwrap() - 3.0).abs() < 1e-9);
        }
    }

    #[test]
    fn a_on_pole_is_singular() {
        let d = DeltaVector::from_array([120.0, 120.0, 180.0, 120.0, 100.0, 100.0]);
        assert_eq!(
            forward_kinematics(&d),
            Err(KinematicsError::Singular(ConnectorId::A))
        );
    }

    #[test]
    fn ik_of_equatorial_a() {
        let s = ModuleState::new(0.0, 20.0, 120.0, 20.0, 240.0);
        assert!((inverse_kinematics(&s).ad - 90.0).abs() < 1e-12);
    }

    #[test]
    fn tetrahedron_deflection() {
        let s = ModuleState::regular_tetrahedron();
        let c = deflection_c(&s).unwrap();
        assert!((c - 120.0).abs() < 1e-9, "{c}");
        assert_eq!(s.deflections[&ConnectorId::A], 0.0);
    }

    #[test]
    fn equatorial_branch() {
        let s = ModuleState::new(10.0, 0.0, 90.0, 0.0, 180.0);
        // phi_B = 0, theta_C - theta_B = 90, dBC = 90: (1 - 0) / (1 * 1).
        assert!(deflection_c(&s).unwrap().abs() < 1e-6);
    }

    #[test]
    fn equatorial_branch_undefined_when_azimuths_coincide() {
        let s = ModuleState::new(10.0, 40.0, 150.0, 0.0, 150.0);
        assert_eq!(deflection_c(&s), Err(KinematicsError::DeflectionUndefined));
    }

    /// The off-equator branch equals the cosine of the angle between the
    /// tangent at C toward B and the local meridian pointing toward D.
    #[test]
    fn deflection_matches_frame_transport() {
        let s = ModuleState::regular_tetrahedron();
        let c = s.position(ConnectorId::C);
        let toward_b = tangent_toward(&c, &s.position(ConnectorId::B)).unwrap();
        let down = tangent_toward(&c, &D_POSITION).unwrap();
        let transported = toward_b.dot(&down).clamp(-1.0, 1.0).acos().to_degrees();
        assert!((transported - 120.0).abs() < 1e-9);
    }

    #[test]
    fn child_frame_examples() {
        let s = ModuleState::new(0.0, 20.0, 120.0, 20.0, 240.0);
        let f0 = child_frame(&s, ConnectorId::A, 0.0, 98.26).unwrap();
        assert!((f0.z_axis - Vec3::x()).norm() < 1e-12);
        assert!((f0.origin - Vec3::new(98.26, 0.0, 0.0)).norm() < 1e-9);
        let f180 = child_frame(&s, ConnectorId::A, 180.0, 98.26).unwrap();
        assert!((f180.x_axis + f0.x_axis).norm() < 1e-12);
        assert!((f180.z_axis - f0.z_axis).norm() < 1e-12);
        assert_eq!(
            child_frame(&s, ConnectorId::D, 0.0, 1.0),
            Err(KinematicsError::InvalidConnector(ConnectorId::D))
        );
        assert_eq!(
            child_frame(&s, ConnectorId::B, 45.0, 1.0),
            Err(KinematicsError::InvalidDeflection(45.0))
        );
    }

    #[test]
    fn from_directions_fixes_gauge() {
        let s = ModuleState::regular_tetrahedron();
        let rot = Rotation3::from_axis_angle(&Vector3::z_axis(), 0.7);
        let [a, b, c, _] = s.positions();
        let r = ModuleState::from_directions(&(rot * a), &(rot * b), &(rot * c));
        assert!((r.theta_b - s.theta_b).abs() < 1e-9);
        assert!((r.phi_c - s.phi_c).abs() < 1e-9);
    }
}
