//! Command-line front end. The binary only parses arguments and maps
//! [`CliError`] to an exit code.

use crate::control::{
    compare_redundancy, track_trajectory, ControlError, ControllerMode, HeldConnectors, PidGains,
    PlantConfig, TrajectorySpec,
};
use crate::kinematics::{forward_kinematics, inverse_kinematics, DeltaVector, ModuleState};
use crate::reconfig::{ReconfigError, TransitionScene};
use crate::report::{self, Metadata};
use crate::slg::{self, SlgDesignInput, TABLE1};
use crate::workspace::{SweepConfig, WorkspaceError};
use clap::{Args, Parser, Subcommand};
use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};
use std::path::{Path, PathBuf};
use thiserror::Error;

#[derive(Debug, Parser)]
#[command(name = "modur", version, about = "Scissor-linkage spherical module toolkit")]
pub struct Cli {
    /// Seed recorded in every output; drives the plant noise in `track`.
    #[arg(long, global = true, default_value_t = 0)]
    pub seed: u64,
    /// Output directory.
    #[arg(long, global = true, default_value = "out")]
    pub out: PathBuf,
    /// JSON configuration for the subcommand.
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Synthesize linkage dimensions from design inputs.
    Design(DesignArgs),
    /// Connector positions from six unfold angles.
    Fk(FkArgs),
    /// Unfold angles from connector positions.
    Ik(IkArgs),
    /// Enumerate the workspace of connector C.
    Workspace(WorkspaceArgs),
    /// Track the spiral trajectory with connector C.
    Track(TrackArgs),
    /// Plan and execute a transition of one module between neighbours.
    Transition(TransitionArgs),
}

#[derive(Debug, Args)]
pub struct DesignArgs {
    /// Comma-separated alpha values for a sweep table.
    #[arg(long, value_delimiter = ',')]
    pub sweep_alpha: Vec<f64>,
    /// Comma-separated delta_min values for the sweep (defaults to the input's).
    #[arg(long, value_delimiter = ',')]
    pub sweep_delta_min: Vec<f64>,
}

#[derive(Debug, Args)]
pub struct FkArgs {
    /// dAB,dAC,dAD,dBC,dBD,dCD in degrees.
    #[arg(long, value_delimiter = ',', allow_negative_numbers = true, conflicts_with = "csv")]
    pub delta: Option<Vec<f64>>,
    /// CSV with header dAB,dAC,dAD,dBC,dBD,dCD.
    #[arg(long)]
    pub csv: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct IkArgs {
    /// phi_a,phi_b,theta_b,phi_c,theta_c in degrees.
    #[arg(long, value_delimiter = ',', allow_negative_numbers = true, conflicts_with = "csv")]
    pub state: Option<Vec<f64>>,
    /// CSV with header phi_a,phi_b,theta_b,phi_c,theta_c.
    #[arg(long)]
    pub csv: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct WorkspaceArgs {
    /// Skip the opposite-linkage intersection test.
    #[arg(long)]
    pub no_intersection: bool,
    /// Drop the requirement that the connectors enclose the centre.
    #[arg(long)]
    pub no_enclosure: bool,
    /// Halve every resolution.
    #[arg(long)]
    pub coarse: bool,
}

#[derive(Debug, Args)]
pub struct TrackArgs {
    /// Run paired redundant and non-redundant experiments over several seeds.
    #[arg(long)]
    pub compare: bool,
    /// Seeds used by --compare, starting at --seed.
    #[arg(long, default_value_t = 20)]
    pub seeds: u64,
    /// Switch off actuation error and sag.
    #[arg(long)]
    pub noiseless: bool,
    /// Run with the passive linkage (non-redundant).
    #[arg(long)]
    pub non_redundant: bool,
}

#[derive(Debug, Args)]
pub struct TransitionArgs {
    /// Without --config: distance of the receiving module in units of L.
    #[arg(long, default_value_t = 2.0)]
    pub separation: f64,
}

/// Configuration of a tracking experiment.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize, Default)]
#[serde(default)]
pub struct TrackExperiment {
    pub trajectory: TrajectorySpec,
    pub held: HeldConnectors,
    pub gains: PidGains,
    pub plant: PlantConfig,
    pub mode: Option<ControllerMode>,
}

#[derive(Debug, Error)]
pub enum CliError {
    #[error("{0}")]
    Input(String),
    #[error("{0}")]
    Control(String),
    #[error("{0}")]
    Reconfiguration(String),
    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            Self::Input(_) | Self::Io(_) => 2,
            Self::Control(_) => 3,
            Self::Reconfiguration(_) => 4,
        }
    }
}

impl From<ControlError> for CliError {
    fn from(e: ControlError) -> Self {
        match e {
            ControlError::InvalidConfig(_) | ControlError::InvalidTrajectory(_) | ControlError::ZeroDeltaE => {
                Self::Input(e.to_string())
            }
            _ => Self::Control(e.to_string()),
        }
    }
}

impl From<WorkspaceError> for CliError {
    fn from(e: WorkspaceError) -> Self {
        Self::Input(e.to_string())
    }
}

impl From<ReconfigError> for CliError {
    fn from(e: ReconfigError) -> Self {
        match e {
            ReconfigError::Topology(_)
            | ReconfigError::UnknownModule(_)
            | ReconfigError::InvalidDeflection(_)
            | ReconfigError::InconsistentLoop { .. } => Self::Input(e.to_string()),
            _ => Self::Reconfiguration(e.to_string()),
        }
    }
}

fn load<T: DeserializeOwned>(path: &Path) -> Result<T, CliError> {
    let text = std::fs::read_to_string(path).map_err(|e| CliError::Input(format!("{}: {e}", path.display())))?;
    serde_json::from_str(&text).map_err(|e| CliError::Input(format!("{}: {e}", path.display())))
}

fn load_or<T: DeserializeOwned>(path: Option<&Path>, default: impl FnOnce() -> T) -> Result<T, CliError> {
    path.map_or_else(|| Ok(default()), load)
}

struct Run {
    dir: PathBuf,
    meta: Metadata,
    files: Vec<String>,
}

impl Run {
    fn new(cli: &Cli, command: &str, config: &impl Serialize) -> Result<Self, CliError> {
        std::fs::create_dir_all(&cli.out)?;
        Ok(Self {
            dir: cli.out.clone(),
            meta: Metadata::new(command, cli.seed, config),
            files: Vec::new(),
        })
    }

    fn path(&mut self, name: &str) -> PathBuf {
        self.files.push(name.to_string());
        self.dir.join(name)
    }

    fn json(&mut self, name: &str, data: &impl Serialize) -> Result<(), CliError> {
        let p = self.path(name);
        Ok(report::write_json(&p, &self.meta, data)?)
    }

    fn text(&mut self, name: &str, body: &str) -> Result<(), CliError> {
        let p = self.path(name);
        Ok(std::fs::write(p, body)?)
    }

    fn finish(self) -> Result<(), CliError> {
        Ok(report::write_manifest(&self.dir, &self.meta, &self.files)?)
    }
}

pub fn run(cli: &Cli) -> Result<(), CliError> {
    let config = cli.config.as_deref();
    match &cli.command {
        Command::Design(args) => design(cli, args, config),
        Command::Fk(args) => fk(cli, args),
        Command::Ik(args) => ik(cli, args),
        Command::Workspace(args) => workspace(cli, args, config),
        Command::Track(args) => track(cli, args, config),
        Command::Transition(args) => transition(cli, args, config),
    }
}

fn design(cli: &Cli, args: &DesignArgs, config: Option<&Path>) -> Result<(), CliError> {
    let input: SlgDesignInput = load_or(config, || TABLE1.design_input())?;
    let design = slg::synthesize(&input).map_err(|e| CliError::Input(e.to_string()))?;
    let issues = slg::validate(&design);
    if let Some(first) = issues.first() {
        return Err(CliError::Input(format!("design rejected: {first}")));
    }
    let mut run = Run::new(cli, "design", &input)?;
    run.json("design.json", &design)?;
    if !args.sweep_alpha.is_empty() {
        let deltas = if args.sweep_delta_min.is_empty() {
            vec![input.delta_min]
        } else {
            args.sweep_delta_min.clone()
        };
        let rows = slg::sweep(&input, &args.sweep_alpha, &deltas).map_err(|e| CliError::Input(e.to_string()))?;
        let p = run.path("sweep.csv");
        let mut w = csv::Writer::from_path(&p).map_err(std::io::Error::other)?;
        w.write_record(["alpha", "delta_min", "delta_col", "l", "slg_radius", "connector_r"])
            .map_err(std::io::Error::other)?;
        for d in &rows {
            w.write_record(
                [d.input.alpha, d.input.delta_min, d.delta_col, d.l, d.slg_radius, d.connector_r].map(|v| v.to_string()),
            )
            .map_err(std::io::Error::other)?;
        }
        w.flush()?;
    }
    println!(
        "delta_col = {} deg, l = {} mm, L = {:.4} mm, R = {:.4} mm",
        design.delta_col, design.l, design.slg_radius, design.connector_r
    );
    run.finish()
}

fn fk(cli: &Cli, args: &FkArgs) -> Result<(), CliError> {
    let inputs = match (&args.delta, &args.csv) {
        (Some(d), None) => {
            let d: [f64; 6] = d
                .as_slice()
                .try_into()
                .map_err(|_| CliError::Input(format!("--delta needs 6 values, got {}", d.len())))?;
            vec![DeltaVector::from_array(d)]
        }
        (None, Some(p)) => report::read_delta_csv(p).map_err(CliError::Input)?,
        _ => return Err(CliError::Input("give either --delta or --csv".into())),
    };
    let states = inputs
        .iter()
        .enumerate()
        .map(|(i, d)| forward_kinematics(d).map_err(|e| CliError::Input(format!("row {}: {e}", i + 1))))
        .collect::<Result<Vec<_>, _>>()?;
    let mut run = Run::new(cli, "fk", &inputs)?;
    if args.csv.is_some() {
        let p = run.path("fk.csv");
        report::write_state_csv(&p, &states)?;
    } else {
        println!("{}", serde_json::to_string_pretty(&states[0]).expect("state serializes"));
    }
    run.json("fk.json", &states)?;
    run.finish()
}

fn ik(cli: &Cli, args: &IkArgs) -> Result<(), CliError> {
    let inputs = match (&args.state, &args.csv) {
        (Some(s), None) => {
            if s.len() != 5 {
                return Err(CliError::Input(format!("--state needs 5 values, got {}", s.len())));
            }
            vec![ModuleState::new(s[0], s[1], s[2], s[3], s[4])]
        }
        (None, Some(p)) => report::read_state_csv(p).map_err(CliError::Input)?,
        _ => return Err(CliError::Input("give either --state or --csv".into())),
    };
    let deltas: Vec<DeltaVector> = inputs.iter().map(inverse_kinematics).collect();
    let mut run = Run::new(cli, "ik", &inputs)?;
    if args.csv.is_some() {
        let p = run.path("ik.csv");
        report::write_delta_csv(&p, &deltas)?;
    } else {
        println!("{}", serde_json::to_string_pretty(&deltas[0]).expect("delta serializes"));
    }
    run.json("ik.json", &deltas)?;
    run.finish()
}

fn workspace(cli: &Cli, args: &WorkspaceArgs, config: Option<&Path>) -> Result<(), CliError> {
    let mut sweep: SweepConfig = load_or(config, SweepConfig::default)?;
    if args.coarse {
        sweep = sweep.coarsened();
    }
    if args.no_intersection {
        sweep.feasibility.check_intersection = false;
    }
    if args.no_enclosure {
        sweep.feasibility.require_enclosure = false;
    }
    let metrics = sweep.run()?;
    let mut run = Run::new(cli, "workspace", &sweep)?;
    #[derive(Serialize)]
    struct Summary<'a> {
        ws: f64,
        wsa: &'a [crate::workspace::WsaEntry],
        wsb: &'a [f64],
        heatmap: &'a [Vec<f64>],
    }
    run.json(
        "metrics.json",
        &Summary {
            ws: metrics.ws,
            wsa: &metrics.wsa,
            wsb: &metrics.wsb,
            heatmap: &metrics.heatmap,
        },
    )?;
    let p = run.path("grid.csv");
    report::write_grid_csv(&p, &metrics.union)?;
    let p = run.path("heatmap.csv");
    report::write_heatmap_csv(&p, &metrics)?;
    let title = format!("Total C workspace, WS = {:.2}%", 100.0 * metrics.ws);
    run.text("workspace.svg", &report::grid_svg(&metrics.union, &run.meta.clone(), &title))?;
    run.text(
        "wsb.svg",
        &report::sphere_svg(&metrics.b_grid, &metrics.wsb, &run.meta.clone(), "Share of A samples with a non-empty C workspace, per B cell"),
    )?;
    run.text("heatmap.svg", &report::heatmap_svg(&metrics, &run.meta.clone()))?;
    println!("WS = {:.2}%", 100.0 * metrics.ws);
    run.finish()
}

fn track(cli: &Cli, args: &TrackArgs, config: Option<&Path>) -> Result<(), CliError> {
    let mut exp: TrackExperiment = load_or(config, TrackExperiment::default)?;
    if args.noiseless {
        exp.plant = PlantConfig {
            redundant: exp.plant.redundant,
            ..PlantConfig::noiseless()
        };
    }
    if args.non_redundant {
        exp.plant.redundant = false;
    }
    exp.plant.seed = cli.seed;
    let mode = exp.mode.unwrap_or(ControllerMode::Global);
    let mut run = Run::new(cli, "track", &exp)?;
    if args.compare {
        if args.seeds == 0 {
            return Err(CliError::Input("--seeds must be positive".into()));
        }
        let seeds: Vec<u64> = (cli.seed..cli.seed + args.seeds).collect();
        let cmp = compare_redundancy(&exp.trajectory, &exp.held, &exp.gains, &exp.plant, &seeds)?;
        run.json("comparison.json", &cmp)?;
        let p = run.path("comparison.csv");
        let mut w = csv::Writer::from_path(&p).map_err(std::io::Error::other)?;
        w.write_record(["seed", "rmse_redundant", "rmse_non_redundant"]).map_err(std::io::Error::other)?;
        for ((s, r), n) in cmp.seeds.iter().zip(&cmp.redundant).zip(&cmp.non_redundant) {
            w.write_record([s.to_string(), r.to_string(), n.to_string()]).map_err(std::io::Error::other)?;
        }
        w.flush()?;
        println!(
            "median RMSE: redundant {:.4} deg, non-redundant {:.4} deg; redundant better on {:.0}% of seeds",
            cmp.median_redundant,
            cmp.median_non_redundant,
            100.0 * cmp.redundant_wins
        );
    } else {
        let report = track_trajectory(&exp.trajectory, &exp.held, &exp.gains, &exp.plant, mode)?;
        run.json("rmse.json", &report)?;
        let p = run.path("trajectory.csv");
        report::write_trajectory_csv(&p, &report)?;
        run.text("trajectory.svg", &report::trajectory_svg(&report, &run.meta.clone()))?;
        println!(
            "RMSE = {:.4} deg over {} points, {} PID iterations",
            report.rmse_vs_design,
            report.points.len(),
            report.total_iterations
        );
    }
    run.finish()
}

fn transition(cli: &Cli, args: &TransitionArgs, config: Option<&Path>) -> Result<(), CliError> {
    let scene: TransitionScene = match config {
        Some(p) => {
            let mut s: TransitionScene = load(p)?;
            s.assembly = s.assembly.normalized()?;
            s
        }
        None => {
            if !(args.separation > 0.0) {
                return Err(CliError::Input("--separation must be positive".into()));
            }
            TransitionScene::with_separation(TABLE1.slg_radius, args.separation)
        }
    };
    let asm = &scene.assembly;
    let mut run = Run::new(cli, "transition", &scene)?;
    let (mc, mp, mr) = (&scene.mc, &scene.mp, &scene.mr);
    if asm.connected(mc, mr) {
        println!("{mc} is already attached to {mr}; nothing to do");
        run.json("script.json", &Vec::<crate::reconfig::Action>::new())?;
        return run.finish();
    }
    let check = asm.check_transition(mc, mp, mr)?;
    run.json("check.json", &check)?;
    for b in &check.bullets {
        println!("({}) {}: {}", b.id, if b.ok { "ok" } else { "FAILED" }, b.detail);
    }
    if !check.ok {
        run.finish()?;
        return Err(CliError::Reconfiguration("transition preconditions not met".into()));
    }
    let script = asm.plan_transition(mc, mp, mr)?;
    run.json("script.json", &script)?;
    let (after, snapshots) = asm.execute(&script)?;
    let p = run.path("steps.csv");
    report::write_scene_csv(&p, &snapshots)?;
    run.json("final_assembly.json", &after)?;
    run.text("steps.svg", &report::scene_svg(&snapshots, &run.meta.clone()))?;
    println!(
        "executed {} actions; {mc} now hangs from {}",
        script.len(),
        after.parent_of(mc).unwrap_or_else(|| "nothing".into())
    );
    run.finish()
}
