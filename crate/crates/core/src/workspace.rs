//! Connector workspaces under the unfold-range, clearance and opposite-SLG
//! constraints, plus the WS / WSA / WSB metrics built on top of them.

use crate::kinematics::{
    angular_distance, chirality, position_vector, ConnectorId, KinematicsError, ModuleState, Slg,
    Vec3, D_POSITION, SINGULAR_MARGIN,
};
use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum WorkspaceError {
    #[error("delta range [{0}, {1}] must satisfy 0 < lo <= hi <= 180")]
    DeltaRange(f64, f64),
    #[error("arc_samples must be at least 2, got {0}")]
    ArcSamples(usize),
    #[error("grid step must be positive and divide 180 evenly, got {0}")]
    GridStep(f64),
    #[error("phi_A = {0} outside [-30, 90]")]
    ElevationA(f64),
    #[error("at least one A sample is required")]
    NoSamples,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct FeasibilityConfig {
    pub delta_range: (f64, f64),
    pub arc_samples: usize,
    pub grazing_tolerance: f64,
    /// Minimum pairwise angle between connectors; `None` leaves the clearance
    /// constraint to the unfold-range check.
    pub min_clearance: Option<f64>,
    pub check_intersection: bool,
    pub require_chirality: bool,
    /// Requires the tetrahedron ABCD to strictly contain the sphere centre.
    pub require_enclosure: bool,
}

impl Default for FeasibilityConfig {
    fn default() -> Self {
        Self {
            delta_range: (60.0, 180.0),
            arc_samples: 32,
            grazing_tolerance: 1e-9,
            min_clearance: None,
            check_intersection: true,
            require_chirality: true,
            require_enclosure: true,
        }
    }
}

impl FeasibilityConfig {
    pub fn validate(&self) -> Result<(), WorkspaceError> {
        let (lo, hi) = self.delta_range;
        if !(lo > 0.0 && lo <= hi && hi <= 180.0) {
            return Err(WorkspaceError::DeltaRange(lo, hi));
        }
        if self.arc_samples < 2 {
            return Err(WorkspaceError::ArcSamples(self.arc_samples));
        }
        Ok(())
    }

    /// Unfold range only.
    pub fn range_only() -> Self {
        Self {
            check_intersection: false,
            require_chirality: false,
            require_enclosure: false,
            ..Self::default()
        }
    }
}

/// Why a configuration is rejected.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Infeasibility {
    /// Constraint 1: an unfold angle is out of range.
    Range(Slg, f64),
    Singular(ConnectorId),
    /// Constraint 2: two connectors closer than the clearance angle.
    Clearance(ConnectorId, ConnectorId),
    /// Constraint 3: two opposite SLGs intersect.
    Intersection(Slg, Slg),
    Chirality,
    Enclosure,
    Degenerate,
}

impl Infeasibility {
    pub fn constraint(&self) -> &'static str {
        match self {
            Self::Range(..) => "constraint 1",
            Self::Clearance(..) => "constraint 2",
            Self::Intersection(..) => "constraint 3",
            Self::Singular(_) => "singular",
            Self::Chirality => "chirality",
            Self::Enclosure => "enclosure",
            Self::Degenerate => "degenerate",
        }
    }
}

impl std::fmt::Display for Infeasibility {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            Self::Range(s, v) => write!(f, "constraint 1: {s} = {v:.3}° out of range"),
            Self::Clearance(a, b) => write!(f, "constraint 2: connectors {a} and {b} too close"),
            Self::Intersection(a, b) => write!(f, "constraint 3: {a} intersects {b}"),
            Self::Singular(c) => write!(f, "connector {c} at a pole"),
            Self::Chirality => write!(f, "labelling violates chirality"),
            Self::Enclosure => write!(f, "connectors do not enclose the centre"),
            Self::Degenerate => write!(f, "degenerate connector layout"),
        }
    }
}

/// Ray/triangle intersection. Returns `(t, u, v)` with `t >= 0` and
/// barycentric `u, v`, or `None` for a miss or a ray parallel to the plane.
pub fn moller_trumbore(
    origin: &Vec3,
    direction: &Vec3,
    triangle: &[Vec3; 3],
    epsilon: f64,
) -> Option<(f64, f64, f64)> {
    let e1 = triangle[1] - triangle[0];
    let e2 = triangle[2] - triangle[0];
    let p = direction.cross(&e2);
    let det = e1.dot(&p);
    if det.abs() < epsilon {
        return None;
    }
    let inv = 1.0 / det;
    let s = origin - triangle[0];
    let u = s.dot(&p) * inv;
    if !(0.0..=1.0).contains(&u) {
        return None;
    }
    let q = s.cross(&e1);
    let v = direction.dot(&q) * inv;
    if v < 0.0 || u + v > 1.0 {
        return None;
    }
    let t = e2.dot(&q) * inv;
    (t >= 0.0).then_some((t, u, v))
}

/// `n + 1` points along the shorter great-circle arc from `p` to `q`.
/// `None` when the endpoints are (nearly) antipodal or coincident.
fn arc_points(p: &Vec3, q: &Vec3, n: usize, scale: f64) -> Option<Vec<Vec3>> {
    let omega = angular_distance(p, q).to_radians();
    let s = omega.sin();
    if s < 1e-9 {
        return None;
    }
    Some(
        (0..=n)
            .map(|k| {
                let t = k as f64 / n as f64;
                (p * ((1.0 - t) * omega).sin() + q * (t * omega).sin()) * (scale / s)
            })
            .collect(),
    )
}

/// Tests the chords of arc `x -> y` against the sector of arc `p -> q`.
///
/// The sector is a fan of triangles from the centre whose outer edges are
/// pushed out to `1 / cos(h)` (h = half the sample spacing) so the fan covers
/// the curved sector and every chord of the other arc, which lies inside the
/// unit sphere, hits it exactly when the two arcs cross.
fn arc_hits_sector(x: &Vec3, y: &Vec3, p: &Vec3, q: &Vec3, config: &FeasibilityConfig) -> Option<bool> {
    let n = config.arc_samples;
    let normal = p.cross(q);
    let (sx, sy) = (normal.dot(x), normal.dot(y));
    let plane = x.cross(y);
    let (sp, sq) = (plane.dot(p), plane.dot(q));
    // A great-circle arc shorter than 180° meets a plane through O at most
    // once, so endpoints on one side rule out a crossing.
    if sx * sy > 0.0 || sp * sq > 0.0 {
        return Some(false);
    }
    let chord = arc_points(x, y, n, 1.0)?;
    let half = angular_distance(p, q).to_radians() / (2.0 * n as f64);
    let fan = arc_points(p, q, n, 1.0 / half.cos())?;
    let origin = Vec3::zeros();
    for seg in chord.windows(2) {
        let (a, b) = (seg[0], seg[1]);
        if normal.dot(&a) * normal.dot(&b) > 0.0 {
            continue;
        }
        let dir = b - a;
        for k in 0..n {
            let tri = [origin, fan[k], fan[k + 1]];
            if let Some((t, _, _)) = moller_trumbore(&a, &dir, &tri, config.grazing_tolerance) {
                let hit = a + dir * t;
                if t <= 1.0 && hit.norm() > config.grazing_tolerance {
                    return Some(true);
                }
            }
        }
    }
    Some(false)
}

const OPPOSITE_PAIRS: [(Slg, Slg); 3] = [(Slg::AB, Slg::CD), (Slg::AC, Slg::BD), (Slg::AD, Slg::BC)];

fn intersecting_pair(pts: &[Vec3; 4], config: &FeasibilityConfig) -> Option<(Slg, Slg)> {
    for (s1, s2) in OPPOSITE_PAIRS {
        let (i, j) = s1.endpoints();
        let (k, l) = s2.endpoints();
        let (x, y) = (&pts[i as usize], &pts[j as usize]);
        let (p, q) = (&pts[k as usize], &pts[l as usize]);
        let hit = arc_hits_sector(x, y, p, q, config)
            .or_else(|| arc_hits_sector(p, q, x, y, config))
            .unwrap_or(false);
        if hit {
            return Some((s1, s2));
        }
    }
    None
}

/// Whether any pair of opposite SLGs intersects.
pub fn opposite_slg_intersect(
    state: &ModuleState,
    config: &FeasibilityConfig,
) -> Result<bool, KinematicsError> {
    let pts = state.positions();
    let [a, b, c, d] = &pts;
    chirality(a, b, c, d)?;
    Ok(intersecting_pair(&pts, config).is_some())
}

/// Strict containment of the origin in the tetrahedron `pts`.
pub fn encloses_center(pts: &[Vec3; 4]) -> bool {
    let det = |a: &Vec3, b: &Vec3, c: &Vec3, d: &Vec3| (b - a).dot(&(c - a).cross(&(d - a)));
    let o = Vec3::zeros();
    let total = det(&pts[0], &pts[1], &pts[2], &pts[3]);
    if total.abs() < 1e-12 {
        return false;
    }
    let parts = [
        det(&o, &pts[1], &pts[2], &pts[3]),
        det(&pts[0], &o, &pts[2], &pts[3]),
        det(&pts[0], &pts[1], &o, &pts[3]),
        det(&pts[0], &pts[1], &pts[2], &o),
    ];
    parts.iter().all(|p| p * total > 0.0)
}

/// Slack on the SLG range bounds so that boundary poses survive round-off, in degrees.
pub const RANGE_TOLERANCE: f64 = 1e-9;

/// Feasibility of a set of unit connector positions in A, B, C, D order.
pub fn classify_points(pts: &[Vec3; 4], config: &FeasibilityConfig) -> Result<(), Infeasibility> {
    let (lo, hi) = config.delta_range;
    let (clo, chi) = (hi.to_radians().cos(), lo.to_radians().cos());
    for slg in Slg::ALL {
        let (i, j) = slg.endpoints();
        let (p, q) = (&pts[i as usize], &pts[j as usize]);
        // Cosine bounds settle most cases; the exact angle is only needed near the edges.
        let cos = p.dot(q);
        if cos > clo + 1e-9 && cos < chi - 1e-9 {
            continue;
        }
        let d = angular_distance(p, q);
        if d < lo - RANGE_TOLERANCE || d > hi + RANGE_TOLERANCE {
            return Err(Infeasibility::Range(slg, d));
        }
    }
    for id in ConnectorId::OUTPUTS {
        if pts[id as usize].z.abs().asin().to_degrees() >= 90.0 - SINGULAR_MARGIN {
            return Err(Infeasibility::Singular(id));
        }
    }
    if let Some(min) = config.min_clearance {
        for slg in Slg::ALL {
            let (i, j) = slg.endpoints();
            if angular_distance(&pts[i as usize], &pts[j as usize]) < min {
                return Err(Infeasibility::Clearance(i, j));
            }
        }
    }
    if config.check_intersection {
        if let Some((s1, s2)) = intersecting_pair(pts, config) {
            return Err(Infeasibility::Intersection(s1, s2));
        }
    }
    if config.require_chirality {
        match chirality(&pts[0], &pts[1], &pts[2], &pts[3]) {
            Ok(true) => {}
            Ok(false) => return Err(Infeasibility::Chirality),
            Err(_) => return Err(Infeasibility::Degenerate),
        }
    }
    if config.require_enclosure && !encloses_center(pts) {
        return Err(Infeasibility::Enclosure);
    }
    Ok(())
}

/// Same verdict as [`classify_points`], with the expensive intersection test
/// run last.
pub fn feasible_points(pts: &[Vec3; 4], config: &FeasibilityConfig) -> bool {
    let cheap = FeasibilityConfig {
        check_intersection: false,
        ..config.clone()
    };
    classify_points(pts, &cheap).is_ok()
        && !(config.check_intersection && intersecting_pair(pts, config).is_some())
}

pub fn classify(state: &ModuleState, config: &FeasibilityConfig) -> Result<(), Infeasibility> {
    classify_points(&state.positions(), config)
}

pub fn feasible(state: &ModuleState, config: &FeasibilityConfig) -> bool {
    feasible_points(&state.positions(), config)
}

/// Equal-angle grid over the full sphere, cell centres at half steps.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SphericalGrid {
    pub phi_step: f64,
    pub theta_step: f64,
    /// Row-major over `phi` (south to north) then `theta`.
    pub cells: Vec<bool>,
    pub area_weights: Vec<f64>,
}

impl SphericalGrid {
    pub fn new(phi_step: f64, theta_step: f64) -> Result<Self, WorkspaceError> {
        for step in [phi_step, theta_step] {
            if !(step > 0.0) || (180.0 / step).fract().abs() > 1e-9 {
                return Err(WorkspaceError::GridStep(step));
            }
        }
        let n_phi = (180.0 / phi_step).round() as usize;
        let n_theta = (360.0 / theta_step).round() as usize;
        let raw: Vec<f64> = (0..n_phi * n_theta)
            .map(|k| (-90.0 + (k / n_theta) as f64 * phi_step + phi_step / 2.0).to_radians().cos())
            .collect();
        let total: f64 = raw.iter().sum();
        Ok(Self {
            phi_step,
            theta_step,
            cells: vec![false; raw.len()],
            area_weights: raw.into_iter().map(|w| w / total).collect(),
        })
    }

    pub fn n_phi(&self) -> usize {
        (180.0 / self.phi_step).round() as usize
    }

    pub fn n_theta(&self) -> usize {
        (360.0 / self.theta_step).round() as usize
    }

    pub fn len(&self) -> usize {
        self.cells.len()
    }

    pub fn is_empty(&self) -> bool {
        self.cells.is_empty()
    }

    /// Centre `(phi, theta)` of cell `k`.
    pub fn center(&self, k: usize) -> (f64, f64) {
        let n = self.n_theta();
        (
            -90.0 + (k / n) as f64 * self.phi_step + self.phi_step / 2.0,
            (k % n) as f64 * self.theta_step + self.theta_step / 2.0,
        )
    }

    pub fn index_of(&self, phi: f64, theta: f64) -> usize {
        let i = (((phi + 90.0) / self.phi_step).floor() as usize).min(self.n_phi() - 1);
        let j = ((theta.rem_euclid(360.0) / self.theta_step).floor() as usize).min(self.n_theta() - 1);
        i * self.n_theta() + j
    }

    pub fn directions(&self) -> Vec<Vec3> {
        (0..self.len())
            .map(|k| {
                let (p, t) = self.center(k);
                position_vector(p, t)
            })
            .collect()
    }

    pub fn cleared(&self) -> Self {
        Self {
            cells: vec![false; self.len()],
            ..self.clone()
        }
    }

    /// Area-weighted fraction of flagged cells.
    pub fn fraction(&self) -> f64 {
        self.cells
            .iter()
            .zip(&self.area_weights)
            .filter(|(c, _)| **c)
            .map(|(_, w)| w)
            .sum()
    }

    pub fn union_with(&mut self, other: &SphericalGrid) {
        for (a, b) in self.cells.iter_mut().zip(&other.cells) {
            *a |= *b;
        }
    }

    /// Every flagged cell of `other` is flagged here.
    pub fn contains(&self, other: &SphericalGrid) -> bool {
        self.cells.iter().zip(&other.cells).all(|(a, b)| *a || !*b)
    }
}

/// Fills `grid` with the feasible positions of C given A and B.
fn fill_c(
    a: &Vec3,
    b: &Vec3,
    c_dirs: &[Vec3],
    grid: &mut SphericalGrid,
    config: &FeasibilityConfig,
) -> f64 {
    let mut ws = 0.0;
    for (k, c) in c_dirs.iter().enumerate() {
        let ok = feasible_points(&[*a, *b, *c, D_POSITION], config);
        grid.cells[k] = ok;
        if ok {
            ws += grid.area_weights[k];
        }
    }
    ws
}

fn pair_ok(a: &Vec3, b: &Vec3, config: &FeasibilityConfig) -> bool {
    let (lo, hi) = config.delta_range;
    [angular_distance(a, b), angular_distance(b, &D_POSITION)]
        .iter()
        .all(|d| (lo - RANGE_TOLERANCE..=hi + RANGE_TOLERANCE).contains(d))
}

/// Workspace of C with A at `(phi_a, 0)` and B fixed.
pub fn workspace_of_c(
    phi_a: f64,
    b_position: (f64, f64),
    grid: &SphericalGrid,
    config: &FeasibilityConfig,
) -> (SphericalGrid, f64) {
    let a = position_vector(phi_a, 0.0);
    let b = position_vector(b_position.0, b_position.1);
    let mut out = grid.cleared();
    if !pair_ok(&a, &b, config) {
        return (out, 0.0);
    }
    let ws = fill_c(&a, &b, &grid.directions(), &mut out, config);
    (out, ws)
}

/// `count` evenly spaced A elevations over `[-30, 90]`.
pub fn a_samples(count: usize) -> Vec<f64> {
    match count {
        0 => vec![],
        1 => vec![-30.0],
        n => (0..n).map(|k| -30.0 + 120.0 * k as f64 / (n - 1) as f64).collect(),
    }
}

/// Fraction of A samples for which C has a non-empty workspace.
pub fn wsb_fraction(nonzero: &[bool]) -> f64 {
    if nonzero.is_empty() {
        return 0.0;
    }
    nonzero.iter().filter(|&&x| x).count() as f64 / nonzero.len() as f64
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct WsaEntry {
    pub phi_a: f64,
    /// Sum of C workspace fractions over all B cells.
    pub raw: f64,
    /// `raw` divided by the number of B cells.
    pub normalized: f64,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct WorkspaceMetrics {
    /// Union C workspace over every enumerated placement of A and B.
    pub ws: f64,
    pub wsa: Vec<WsaEntry>,
    /// One value per B cell.
    pub wsb: Vec<f64>,
    pub union: SphericalGrid,
    pub b_grid: SphericalGrid,
    /// Per A sample, C workspace for each B cell.
    pub heatmap: Vec<Vec<f64>>,
}

pub fn total_workspace_c(
    phi_a_values: &[f64],
    b_grid: &SphericalGrid,
    c_grid: &SphericalGrid,
    config: &FeasibilityConfig,
) -> Result<WorkspaceMetrics, WorkspaceError> {
    config.validate()?;
    if phi_a_values.is_empty() {
        return Err(WorkspaceError::NoSamples);
    }
    if let Some(&p) = phi_a_values.iter().find(|p| !(-30.0..=90.0).contains(*p)) {
        return Err(WorkspaceError::ElevationA(p));
    }
    let b_dirs = b_grid.directions();
    let c_dirs = c_grid.directions();
    let mut union = c_grid.cleared();
    let mut scratch = c_grid.cleared();
    let mut heatmap = Vec::with_capacity(phi_a_values.len());
    let mut nonzero = vec![Vec::with_capacity(phi_a_values.len()); b_dirs.len()];
    for &phi_a in phi_a_values {
        let a = position_vector(phi_a, 0.0);
        let mut row = vec![0.0; b_dirs.len()];
        for (kb, b) in b_dirs.iter().enumerate() {
            let ws = if pair_ok(&a, b, config) {
                let ws = fill_c(&a, b, &c_dirs, &mut scratch, config);
                union.union_with(&scratch);
                ws
            } else {
                0.0
            };
            row[kb] = ws;
            nonzero[kb].push(ws > 0.0);
        }
        heatmap.push(row);
    }
    let wsa = phi_a_values
        .iter()
        .zip(&heatmap)
        .map(|(&phi_a, row)| {
            let raw: f64 = row.iter().sum();
            WsaEntry {
                phi_a,
                raw,
                normalized: raw / row.len() as f64,
            }
        })
        .collect();
    Ok(WorkspaceMetrics {
        ws: union.fraction(),
        wsa,
        wsb: nonzero.iter().map(|v| wsb_fraction(v)).collect(),
        union,
        b_grid: b_grid.clone(),
        heatmap,
    })
}

/// Per A value, the C workspace for each B cell.
pub fn heatmap_c(
    phi_a_values: &[f64],
    b_grid: &SphericalGrid,
    c_grid: &SphericalGrid,
    config: &FeasibilityConfig,
) -> Result<Vec<Vec<f64>>, WorkspaceError> {
    Ok(total_workspace_c(phi_a_values, b_grid, c_grid, config)?.heatmap)
}

/// Resolution settings for a full workspace sweep.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SweepConfig {
    pub a_samples: usize,
    pub b_step: f64,
    pub c_step: f64,
    pub feasibility: FeasibilityConfig,
}

impl Default for SweepConfig {
    fn default() -> Self {
        Self {
            a_samples: 25,
            b_step: 5.0,
            c_step: 5.0,
            feasibility: FeasibilityConfig::default(),
        }
    }
}

impl SweepConfig {
    pub fn coarsened(&self) -> Self {
        Self {
            a_samples: self.a_samples.div_ceil(2),
            b_step: self.b_step * 2.0,
            c_step: self.c_step * 2.0,
            ..self.clone()
        }
    }

    pub fn run(&self) -> Result<WorkspaceMetrics, WorkspaceError> {
        if self.a_samples == 0 {
            return Err(WorkspaceError::NoSamples);
        }
        let b = SphericalGrid::new(self.b_step, self.b_step)?;
        let c = SphericalGrid::new(self.c_step, self.c_step)?;
        total_workspace_c(&a_samples(self.a_samples), &b, &c, &self.feasibility)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn axis_aligned_pierce() {
        let tri = [
            Vec3::new(-1.0, -1.0, 0.0),
            Vec3::new(1.0, -1.0, 0.0),
            Vec3::new(0.0, 1.0, 0.0),
        ];
        let o = Vec3::new(0.0, 0.0, -1.0);
        let (t, u, v) = moller_trumbore(&o, &Vec3::z(), &tri, 1e-9).unwrap();
        assert!((t - 1.0).abs() < 1e-12);
        assert!(u > 0.0 && v > 0.0 && u + v < 1.0);
        assert!(moller_trumbore(&o, &-Vec3::z(), &tri, 1e-9).is_none());
        assert!(moller_trumbore(&o, &Vec3::x(), &tri, 1e-9).is_none());
    }

    #[test]
    fn tetrahedron_is_feasible() {
        let s = ModuleState::regular_tetrahedron();
        let cfg = FeasibilityConfig::default();
        assert!(!opposite_slg_intersect(&s, &cfg).unwrap());
        assert_eq!(classify(&s, &cfg), Ok(()));
        assert!(encloses_center(&s.positions()));
    }

    #[test]
    fn antipodal_c_crosses() {
        // C lifted between A and B: arc CD runs down through arc AB.
        let s = ModuleState::new(0.0, 0.0, 120.0, 55.0, 60.0);
        let cfg = FeasibilityConfig::default();
        assert!(opposite_slg_intersect(&s, &cfg).unwrap());
        assert_eq!(classify(&s, &cfg).unwrap_err().constraint(), "constraint 3");
    }

    #[test]
    fn short_ab_is_rejected() {
        let s = ModuleState::new(0.0, 0.0, 50.0, 10.0, 200.0);
        assert!(matches!(
            classify(&s, &FeasibilityConfig::default()),
            Err(Infeasibility::Range(Slg::AB, _))
        ));
    }

    #[test]
    fn grid_weights_sum_to_one() {
        for step in [5.0, 10.0, 30.0] {
            let g = SphericalGrid::new(step, step).unwrap();
            let s: f64 = g.area_weights.iter().sum();
            assert!((s - 1.0).abs() < 1e-9);
            assert_eq!(g.index_of(g.center(17).0, g.center(17).1), 17);
        }
        assert!(SphericalGrid::new(0.0, 5.0).is_err());
        assert!(SphericalGrid::new(7.0, 5.0).is_err());
    }

    #[test]
    fn a_sampling() {
        let a = a_samples(25);
        assert_eq!(a.len(), 25);
        assert_eq!(a[0], -30.0);
        assert_eq!(a[24], 90.0);
        assert!((a[1] + 25.0).abs() < 1e-12);
    }

    #[test]
    fn wsb_worked_example() {
        let flags = [true, true, false, true, false, true, false, true, true, false];
        assert!((wsb_fraction(&flags) - 0.6).abs() < 1e-12);
    }

    #[test]
    fn infeasible_b_gives_empty_workspace() {
        let g = SphericalGrid::new(10.0, 10.0).unwrap();
        let (grid, ws) = workspace_of_c(0.0, (0.0, 20.0), &g, &FeasibilityConfig::default());
        assert_eq!(ws, 0.0);
        assert!(grid.cells.iter().all(|c| !c));
    }

    #[test]
    fn constraint_three_shrinks_workspace() {
        let g = SphericalGrid::new(10.0, 10.0).unwrap();
        let base = FeasibilityConfig {
            require_enclosure: false,
            require_chirality: false,
            ..FeasibilityConfig::default()
        };
        let loose = FeasibilityConfig {
            check_intersection: false,
            ..base.clone()
        };
        let (_, with) = workspace_of_c(0.0, (40.0, 150.0), &g, &base);
        let (_, without) = workspace_of_c(0.0, (40.0, 150.0), &g, &loose);
        assert!(with < without, "{with} vs {without}");
    }

    #[test]
    fn config_validation() {
        assert!(FeasibilityConfig::default().validate().is_ok());
        let bad = FeasibilityConfig {
            arc_samples: 1,
            ..Default::default()
        };
        assert_eq!(bad.validate(), Err(WorkspaceError::ArcSamples(1)));
        let bad = FeasibilityConfig {
            delta_range: (0.0, 180.0),
            ..Default::default()
        };
        assert!(bad.validate().is_err());
    }
}
