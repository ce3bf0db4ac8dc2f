//! File outputs: JSON with a metadata block, fixed-header CSV, and plain SVG
//! plots. Nothing written here carries a timestamp, so reruns are
//! byte-identical.

use crate::control::RmseReport;
use crate::kinematics::{DeltaVector, ModuleState};
use crate::reconfig::SceneSnapshot;
use crate::workspace::{SphericalGrid, WorkspaceMetrics};
use serde::Serialize;
use sha2::{Digest, Sha256};
use std::fmt::Write as _;
use std::io;
use std::path::Path;

pub const TOOLKIT_VERSION: &str = env!("CARGO_PKG_VERSION");

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct Metadata {
    pub toolkit: String,
    pub version: String,
    pub command: String,
    pub seed: u64,
    /// SHA-256 of the effective configuration as compact JSON.
    pub config_hash: String,
}

impl Metadata {
    pub fn new(command: &str, seed: u64, config: &impl Serialize) -> Self {
        Self {
            toolkit: env!("CARGO_PKG_NAME").into(),
            version: TOOLKIT_VERSION.into(),
            command: command.into(),
            seed,
            config_hash: config_hash(config),
        }
    }

    fn svg_comment(&self) -> String {
        format!(
            "<metadata>{} {} command={} seed={} config={}</metadata>",
            self.toolkit, self.version, self.command, self.seed, self.config_hash
        )
    }
}

pub fn config_hash(config: &impl Serialize) -> String {
    let bytes = serde_json::to_vec(config).expect("configuration serializes");
    Sha256::digest(&bytes).iter().fold(String::with_capacity(64), |mut s, b| {
        let _ = write!(s, "{b:02x}");
        s
    })
}

#[derive(Serialize)]
struct Envelope<'a, T: Serialize> {
    metadata: &'a Metadata,
    data: &'a T,
}

pub fn write_json(path: &Path, meta: &Metadata, data: &impl Serialize) -> io::Result<()> {
    let mut text = serde_json::to_string_pretty(&Envelope { metadata: meta, data })?;
    text.push('\n');
    std::fs::write(path, text)
}

fn csv_writer(path: &Path) -> io::Result<csv::Writer<std::fs::File>> {
    csv::Writer::from_path(path).map_err(io::Error::other)
}

fn finish(mut w: csv::Writer<std::fs::File>) -> io::Result<()> {
    w.flush()
}

/// Sidecar listing the metadata of every CSV in a run directory, since CSV
/// files keep their fixed header on the first line.
pub fn write_manifest(dir: &Path, meta: &Metadata, files: &[String]) -> io::Result<()> {
    write_json(&dir.join("manifest.json"), meta, &files)
}

pub const DELTA_HEADER: [&str; 6] = ["dAB", "dAC", "dAD", "dBC", "dBD", "dCD"];
pub const STATE_HEADER: [&str; 5] = ["phi_a", "phi_b", "theta_b", "phi_c", "theta_c"];

pub fn write_delta_csv(path: &Path, rows: &[DeltaVector]) -> io::Result<()> {
    let mut w = csv_writer(path)?;
    w.write_record(DELTA_HEADER)?;
    for d in rows {
        w.write_record(d.to_array().map(|v| v.to_string()))?;
    }
    finish(w)
}

pub fn write_state_csv(path: &Path, rows: &[ModuleState]) -> io::Result<()> {
    let mut w = csv_writer(path)?;
    w.write_record(STATE_HEADER)?;
    for s in rows {
        w.write_record([s.phi_a, s.phi_b, s.theta_b, s.phi_c, s.theta_c].map(|v| v.to_string()))?;
    }
    finish(w)
}

fn read_rows<const N: usize>(path: &Path, header: [&str; N]) -> Result<Vec<[f64; N]>, String> {
    let mut r = csv::Reader::from_path(path).map_err(|e| format!("{}: {e}", path.display()))?;
    let found = r.headers().map_err(|e| e.to_string())?.clone();
    if found.iter().ne(header.iter().copied()) {
        return Err(format!("{}: expected header {}", path.display(), header.join(",")));
    }
    r.records()
        .enumerate()
        .map(|(i, rec)| {
            let rec = rec.map_err(|e| e.to_string())?;
            let mut row = [0.0; N];
            for (k, cell) in rec.iter().enumerate().take(N) {
                row[k] = cell
                    .trim()
                    .parse()
                    .map_err(|_| format!("row {}: column {} is not a number: {cell:?}", i + 1, header[k]))?;
            }
            if rec.len() != N {
                return Err(format!("row {}: expected {N} columns, found {}", i + 1, rec.len()));
            }
            Ok(row)
        })
        .collect()
}

pub fn read_delta_csv(path: &Path) -> Result<Vec<DeltaVector>, String> {
    Ok(read_rows(path, DELTA_HEADER)?.into_iter().map(DeltaVector::from_array).collect())
}

pub fn read_state_csv(path: &Path) -> Result<Vec<ModuleState>, String> {
    Ok(read_rows(path, STATE_HEADER)?
        .into_iter()
        .map(|r| ModuleState::new(r[0], r[1], r[2], r[3], r[4]))
        .collect())
}

/// One row per cell: `phi,theta,feasible` with `feasible` as 0 or 1.
pub fn write_grid_csv(path: &Path, grid: &SphericalGrid) -> io::Result<()> {
    let mut w = csv_writer(path)?;
    w.write_record(["phi", "theta", "feasible"])?;
    for (k, &cell) in grid.cells.iter().enumerate() {
        let (phi, theta) = grid.center(k);
        w.write_record([phi.to_string(), theta.to_string(), u8::from(cell).to_string()])?;
    }
    finish(w)
}

/// One row per A sample and B cell.
pub fn write_heatmap_csv(path: &Path, metrics: &WorkspaceMetrics) -> io::Result<()> {
    let mut w = csv_writer(path)?;
    w.write_record(["phi_a", "phi_b", "theta_b", "ws"])?;
    for (entry, row) in metrics.wsa.iter().zip(&metrics.heatmap) {
        for (k, ws) in row.iter().enumerate() {
            let (p, t) = metrics.b_grid.center(k);
            w.write_record([entry.phi_a, p, t, *ws].map(|v| v.to_string()))?;
        }
    }
    finish(w)
}

pub fn write_trajectory_csv(path: &Path, report: &RmseReport) -> io::Result<()> {
    let mut w = csv_writer(path)?;
    w.write_record([
        "index",
        "designed_phi",
        "designed_theta",
        "commanded_phi",
        "commanded_theta",
        "achieved_phi",
        "achieved_theta",
        "error",
        "iterations",
        "converged",
    ])?;
    let opt = |v: Option<f64>| v.map(|x| x.to_string()).unwrap_or_default();
    for (i, p) in report.points.iter().enumerate() {
        w.write_record([
            i.to_string(),
            p.designed.0.to_string(),
            p.designed.1.to_string(),
            opt(p.commanded.map(|c| c.0)),
            opt(p.commanded.map(|c| c.1)),
            p.achieved.0.to_string(),
            p.achieved.1.to_string(),
            p.error.to_string(),
            p.iterations.to_string(),
            u8::from(p.converged).to_string(),
        ])?;
    }
    finish(w)
}

/// Module centres (`point = O`) and connector positions per step.
pub fn write_scene_csv(path: &Path, snapshots: &[SceneSnapshot]) -> io::Result<()> {
    let mut w = csv_writer(path)?;
    w.write_record(["step", "action", "module", "point", "x", "y", "z"])?;
    for snap in snapshots {
        for (id, c) in &snap.centers {
            let step = snap.step.to_string();
            let points = std::iter::once(("O", c)).chain(["A", "B", "C", "D"].into_iter().zip(&snap.connectors[id]));
            for (name, p) in points {
                w.write_record([step.as_str(), &snap.action, id, name, &p.x.to_string(), &p.y.to_string(), &p.z.to_string()])?;
            }
        }
    }
    finish(w)
}

fn svg_open(w: f64, h: f64, meta: &Metadata, title: &str) -> String {
    let mut s = String::new();
    let _ = writeln!(
        s,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{w}" height="{h}" viewBox="0 0 {w} {h}" font-family="sans-serif" font-size="12">"#
    );
    let _ = writeln!(s, "{}", meta.svg_comment());
    let _ = writeln!(s, r#"<rect width="{w}" height="{h}" fill="white"/>"#);
    let _ = writeln!(s, r#"<text x="10" y="18" font-size="14">{}</text>"#, escape(title));
    s
}

fn escape(text: &str) -> String {
    text.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;")
}

/// White to dark blue.
fn shade(v: f64) -> String {
    let v = v.clamp(0.0, 1.0);
    let c = |lo: f64, hi: f64| (lo + (hi - lo) * v).round() as u8;
    format!("#{:02x}{:02x}{:02x}", c(255.0, 8.0), c(255.0, 48.0), c(255.0, 107.0))
}

const MARGIN: f64 = 40.0;
const SCALE: f64 = 2.0;

fn equirect_frame(s: &mut String) {
    let (w, h) = (360.0 * SCALE, 180.0 * SCALE);
    let _ = writeln!(s, r#"<rect x="{MARGIN}" y="{MARGIN}" width="{w}" height="{h}" fill="none" stroke="black"/>"#);
    for t in (0..=360).step_by(60) {
        let x = MARGIN + t as f64 * SCALE;
        let _ = writeln!(s, r#"<text x="{x}" y="{}" text-anchor="middle">{t}</text>"#, MARGIN + h + 15.0);
    }
    for p in (-90..=90).step_by(30) {
        let y = MARGIN + (90.0 - p as f64) * SCALE;
        let _ = writeln!(s, r#"<text x="{}" y="{}" text-anchor="end">{p}</text>"#, MARGIN - 5.0, y + 4.0);
    }
    let _ = writeln!(
        s,
        r#"<text x="{}" y="{}" text-anchor="middle">theta (deg)</text>"#,
        MARGIN + w / 2.0,
        MARGIN + h + 32.0
    );
}

/// Equirectangular map of a grid with per-cell values in `[0, 1]`:
/// elevation vertical, azimuth horizontal.
pub fn sphere_svg(grid: &SphericalGrid, values: &[f64], meta: &Metadata, title: &str) -> String {
    let (w, h) = (360.0 * SCALE + 2.0 * MARGIN, 180.0 * SCALE + 2.0 * MARGIN + 10.0);
    let mut s = svg_open(w, h, meta, title);
    let (cw, ch) = (grid.theta_step * SCALE, grid.phi_step * SCALE);
    for (k, v) in values.iter().enumerate() {
        if *v <= 0.0 {
            continue;
        }
        let (phi, theta) = grid.center(k);
        let x = MARGIN + (theta - grid.theta_step / 2.0) * SCALE;
        let y = MARGIN + (90.0 - phi - grid.phi_step / 2.0) * SCALE;
        let _ = writeln!(s, r#"<rect x="{x:.2}" y="{y:.2}" width="{cw:.2}" height="{ch:.2}" fill="{}"/>"#, shade(*v));
    }
    equirect_frame(&mut s);
    s.push_str("</svg>\n");
    s
}

pub fn grid_svg(grid: &SphericalGrid, meta: &Metadata, title: &str) -> String {
    let values: Vec<f64> = grid.cells.iter().map(|&c| f64::from(u8::from(c))).collect();
    sphere_svg(grid, &values, meta, title)
}

/// One row per A sample, one column per B cell, shaded by C workspace.
pub fn heatmap_svg(metrics: &WorkspaceMetrics, meta: &Metadata) -> String {
    let rows = metrics.heatmap.len().max(1);
    let cols = metrics.heatmap.first().map_or(1, Vec::len).max(1);
    let (pw, ph) = (720.0, (rows as f64 * 12.0).max(120.0));
    let mut s = svg_open(pw + 2.0 * MARGIN + 40.0, ph + 2.0 * MARGIN, meta, "C workspace per A sample (rows) and B cell (columns)");
    let peak = metrics.heatmap.iter().flatten().copied().fold(0.0, f64::max).max(1e-12);
    let (cw, ch) = (pw / cols as f64, ph / rows as f64);
    for (i, row) in metrics.heatmap.iter().enumerate() {
        let y = MARGIN + i as f64 * ch;
        for (j, v) in row.iter().enumerate() {
            if *v > 0.0 {
                let x = MARGIN + 40.0 + j as f64 * cw;
                let _ = writeln!(s, r#"<rect x="{x:.3}" y="{y:.3}" width="{cw:.3}" height="{ch:.3}" fill="{}"/>"#, shade(v / peak));
            }
        }
        let _ = writeln!(s, r#"<text x="{}" y="{:.2}" text-anchor="end" font-size="9">{:.1}</text>"#, MARGIN + 36.0, y + ch * 0.8, metrics.wsa[i].phi_a);
    }
    s.push_str("</svg>\n");
    s
}

/// Designed, commanded and achieved positions of C in (theta, phi).
pub fn trajectory_svg(report: &RmseReport, meta: &Metadata) -> String {
    let pts: Vec<(f64, f64)> = report
        .points
        .iter()
        .flat_map(|p| [Some(p.designed), p.commanded, Some(p.achieved)])
        .flatten()
        .collect();
    let (mut t0, mut t1, mut p0, mut p1) = (f64::MAX, f64::MIN, f64::MAX, f64::MIN);
    for (p, t) in &pts {
        t0 = t0.min(*t);
        t1 = t1.max(*t);
        p0 = p0.min(*p);
        p1 = p1.max(*p);
    }
    let pad = 2.0;
    let (t0, t1, p0, p1) = (t0 - pad, t1 + pad, p0 - pad, p1 + pad);
    let size = 500.0;
    let k = size / (t1 - t0).max(p1 - p0);
    let map = |(p, t): (f64, f64)| (MARGIN + (t - t0) * k, MARGIN + (p1 - p) * k);
    let title = format!(
        "C trajectory, RMSE {:.3} deg ({}, {:?})",
        report.rmse_vs_design,
        if report.redundant { "redundant" } else { "non-redundant" },
        report.controller_mode
    );
    let mut s = svg_open(size + 2.0 * MARGIN + 140.0, size + 2.0 * MARGIN, meta, &title);
    let line: Vec<String> = report
        .points
        .iter()
        .map(|p| {
            let (x, y) = map(p.designed);
            format!("{x:.2},{y:.2}")
        })
        .collect();
    let _ = writeln!(s, r#"<polyline points="{}" fill="none" stroke="gray" stroke-width="1.5"/>"#, line.join(" "));
    for p in &report.points {
        if let Some(c) = p.commanded {
            let (x, y) = map(c);
            let _ = writeln!(s, r#"<rect x="{:.2}" y="{:.2}" width="4" height="4" fill="orange"/>"#, x - 2.0, y - 2.0);
        }
        let (x, y) = map(p.achieved);
        let _ = writeln!(s, r#"<circle cx="{x:.2}" cy="{y:.2}" r="2.5" fill="navy"/>"#);
    }
    let lx = MARGIN + size + 20.0;
    for (i, (label, color)) in [("designed", "gray"), ("commanded", "orange"), ("achieved", "navy")].iter().enumerate() {
        let y = MARGIN + 20.0 * i as f64;
        let _ = writeln!(s, r#"<rect x="{lx}" y="{y}" width="10" height="10" fill="{color}"/><text x="{}" y="{}">{label}</text>"#, lx + 15.0, y + 9.0);
    }
    let _ = writeln!(s, r#"<text x="{}" y="{}" text-anchor="middle">theta (deg)</text>"#, MARGIN + size / 2.0, size + MARGIN + 25.0);
    s.push_str("</svg>\n");
    s
}

/// One panel per step, projected onto the x-z plane.
pub fn scene_svg(snapshots: &[SceneSnapshot], meta: &Metadata) -> String {
    let all: Vec<_> = snapshots
        .iter()
        .flat_map(|s| s.connectors.values().flatten().chain(s.centers.values()))
        .collect();
    let (mut x0, mut x1, mut z0, mut z1) = (f64::MAX, f64::MIN, f64::MAX, f64::MIN);
    for p in &all {
        x0 = x0.min(p.x);
        x1 = x1.max(p.x);
        z0 = z0.min(p.z);
        z1 = z1.max(p.z);
    }
    let panel = 220.0;
    let k = (panel - 20.0) / (x1 - x0).max(z1 - z0).max(1e-9);
    let n = snapshots.len().max(1) as f64;
    let mut s = svg_open(panel * n + 20.0, panel + 70.0, meta, "Transition steps (x-z projection)");
    let colors = ["#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#8c564b"];
    for (i, snap) in snapshots.iter().enumerate() {
        let ox = 10.0 + i as f64 * panel;
        let map = |p: &crate::kinematics::Vec3| (ox + 10.0 + (p.x - x0) * k, 40.0 + (z1 - p.z) * k);
        let _ = writeln!(s, r#"<rect x="{ox}" y="30" width="{}" height="{panel}" fill="none" stroke="lightgray"/>"#, panel - 5.0);
        for (j, (id, c)) in snap.centers.iter().enumerate() {
            let color = colors[j % colors.len()];
            let (cx, cy) = map(c);
            for p in &snap.connectors[id] {
                let (px, py) = map(p);
                let _ = writeln!(s, r#"<line x1="{cx:.2}" y1="{cy:.2}" x2="{px:.2}" y2="{py:.2}" stroke="{color}"/>"#);
            }
            let _ = writeln!(s, r#"<circle cx="{cx:.2}" cy="{cy:.2}" r="4" fill="{color}"/><text x="{:.2}" y="{:.2}" font-size="10">{}</text>"#, cx + 5.0, cy - 5.0, escape(id));
        }
        let _ = writeln!(s, r#"<text x="{}" y="{}" font-size="9">{}. {}</text>"#, ox + 2.0, panel + 45.0, snap.step, escape(&snap.action));
    }
    s.push_str("</svg>\n");
    s
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn hash_is_stable_and_sensitive() {
        let a = config_hash(&serde_json::json!({"x": 1}));
        assert_eq!(a, config_hash(&serde_json::json!({"x": 1})));
        assert_ne!(a, config_hash(&serde_json::json!({"x": 2})));
        assert_eq!(a.len(), 64);
    }

    #[test]
    fn csv_roundtrip() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("d.csv");
        let rows = vec![DeltaVector::uniform(109.5), DeltaVector::from_array([60.0, 70.0, 80.0, 90.0, 100.0, 110.0])];
        write_delta_csv(&p, &rows).unwrap();
        let text = std::fs::read_to_string(&p).unwrap();
        assert!(text.starts_with("dAB,dAC,dAD,dBC,dBD,dCD\n"));
        assert_eq!(read_delta_csv(&p).unwrap(), rows);
        let bad = dir.path().join("bad.csv");
        std::fs::write(&bad, "a,b\n1,2\n").unwrap();
        assert!(read_delta_csv(&bad).is_err());
    }

    #[test]
    fn svg_has_metadata() {
        let meta = Metadata::new("workspace", 7, &1);
        let mut g = SphericalGrid::new(30.0, 30.0).unwrap();
        g.cells[3] = true;
        let svg = grid_svg(&g, &meta, "t");
        assert!(svg.contains("seed=7"));
        assert_eq!(svg.matches("<rect").count(), 3);
    }
}
