//! Command-line driver for the cmcf library: run a flow on a mesh and write
//! the resulting map plus quality reports, compare two maps directly, or
//! validate mesh topology.
//!
//! Exit codes: 0 when the requested goal is reached, 2 when the pipeline ran
//! but the goal was not reached (flow degenerated, solver failed, step budget
//! exhausted, validation failed), 1 for usage and input errors.

use std::fmt::Write as _;
use std::fs;
use std::path::PathBuf;
use std::process::ExitCode;
use std::time::Instant;

use anyhow::{bail, Context, Result};
use clap::error::ErrorKind;
use clap::{Args, Parser, Subcommand, ValueEnum};
use cmcf::flow::{project_to_unit_sphere, FlowError};
use cmcf::mesh::save_obj;
use cmcf::metrics::SummaryStats;
use cmcf::{
    load_mesh, run_flow_with, summarize, validate_closed_genus_zero, ConformalityReport,
    FlowConfig, FlowMode, FlowResult, MassScheme, Normalization, TerminationReason,
};
use serde::Serialize;

#[derive(Parser)]
#[command(name = "cmcf", version, about = "Spherical parametrization of genus-zero meshes by conformalized mean curvature flow")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run a flow on a mesh and write the map, metrics, and manifest
    Run(RunArgs),
    /// Evaluate map quality between two meshes with shared connectivity
    Metrics(MetricsArgs),
    /// Check that a mesh is a closed, oriented, genus-zero surface
    Validate(ValidateArgs),
}

#[derive(Args)]
struct RunArgs {
    /// Input mesh, OBJ or OFF
    #[arg(long)]
    input: PathBuf,
    /// Flow variant
    #[arg(long, value_enum, default_value_t = ModeArg::Cmcf)]
    mode: ModeArg,
    /// Time step
    #[arg(long, default_value_t = 0.05)]
    tau: f64,
    /// Step budget
    #[arg(long, default_value_t = 200)]
    max_steps: usize,
    /// Stop once sphericity reaches this value
    #[arg(long, default_value_t = 0.999)]
    stop_sphericity: f64,
    /// Mass matrix scheme
    #[arg(long, value_enum, default_value_t = MassArg::Galerkin)]
    mass: MassArg,
    /// Per-step renormalization
    #[arg(long, value_enum, default_value_t = NormalizeArg::AreaCenter)]
    normalize: NormalizeArg,
    /// Write snapshot_NNNN.obj every N steps (0 disables snapshots)
    #[arg(long, default_value_t = 0)]
    snapshot_every: usize,
    /// Output directory, created if missing
    #[arg(long, default_value = "cmcf_out")]
    out_dir: PathBuf,
    /// Also write the unit-sphere projection of the final map and report
    /// its metrics in the manifest
    #[arg(long)]
    project_sphere: bool,
}

#[derive(Args)]
struct MetricsArgs {
    /// Reference mesh
    original: PathBuf,
    /// Mapped mesh with the same connectivity
    mapped: PathBuf,
}

#[derive(Args)]
struct ValidateArgs {
    /// Mesh to check
    input: PathBuf,
}

#[derive(Clone, Copy, ValueEnum)]
enum ModeArg {
    Mcf,
    Cmcf,
}

#[derive(Clone, Copy, ValueEnum)]
enum MassArg {
    Galerkin,
    Lumped,
}

#[derive(Clone, Copy, ValueEnum)]
enum NormalizeArg {
    AreaCenter,
    Area,
    None,
}

impl From<ModeArg> for FlowMode {
    fn from(m: ModeArg) -> Self {
        match m {
            ModeArg::Mcf => FlowMode::Mcf,
            ModeArg::Cmcf => FlowMode::Cmcf,
        }
    }
}

impl From<MassArg> for MassScheme {
    fn from(m: MassArg) -> Self {
        match m {
            MassArg::Galerkin => MassScheme::Galerkin,
            MassArg::Lumped => MassScheme::Lumped,
        }
    }
}

impl From<NormalizeArg> for Normalization {
    fn from(n: NormalizeArg) -> Self {
        match n {
            NormalizeArg::AreaCenter => Normalization::AreaCenter,
            NormalizeArg::Area => Normalization::AreaOnly,
            NormalizeArg::None => Normalization::None,
        }
    }
}

/// The metrics document written by `run`: distortion statistics of the final
/// map plus how the flow ended. Field set and order are part of the output
/// contract.
#[derive(Serialize)]
struct MetricsDoc {
    sphericity: f64,
    angular: SummaryStats,
    lcr: SummaryStats,
    degenerate_faces: usize,
    valid: bool,
    termination: TerminationReason,
    steps: usize,
}

impl MetricsDoc {
    fn new(report: &ConformalityReport, result: &FlowResult) -> Self {
        Self {
            sphericity: report.sphericity,
            angular: report.angular,
            lcr: report.lcr,
            degenerate_faces: report.degenerate_faces,
            valid: report.valid,
            termination: result.termination,
            steps: result.steps,
        }
    }
}

#[derive(Serialize)]
struct Timings {
    load: f64,
    flow: f64,
    metrics: f64,
    write: f64,
}

/// Written last; every file it lists exists by then.
#[derive(Serialize)]
struct RunManifest<'a> {
    tool: &'static str,
    version: &'static str,
    input: String,
    out_dir: String,
    config: &'a FlowConfig,
    termination: TerminationReason,
    steps: usize,
    failure_detail: Option<&'a str>,
    initial_sphericity: f64,
    final_sphericity: f64,
    degenerate_faces: usize,
    metrics_valid: bool,
    /// Metrics of the unit-sphere projection, present with --project-sphere.
    projected_metrics: Option<MetricsDoc>,
    outputs: Vec<String>,
    timings_ms: Timings,
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(err) => {
            let code = match err.kind() {
                ErrorKind::DisplayHelp | ErrorKind::DisplayVersion => 0,
                _ => 1,
            };
            let _ = err.print();
            return ExitCode::from(code);
        }
    };
    let outcome = match cli.command {
        Command::Run(args) => cmd_run(&args),
        Command::Metrics(args) => cmd_metrics(&args),
        Command::Validate(args) => cmd_validate(&args),
    };
    match outcome {
        Ok(code) => ExitCode::from(code),
        Err(err) => {
            eprintln!("error: {err:#}");
            ExitCode::from(1)
        }
    }
}

fn cmd_run(args: &RunArgs) -> Result<u8> {
    let t_load = Instant::now();
    let mesh = load_mesh(&args.input)
        .with_context(|| format!("reading {}", args.input.display()))?;
    let load_ms = ms_since(t_load);

    let cfg = FlowConfig {
        mode: args.mode.into(),
        tau: args.tau,
        mass_scheme: args.mass.into(),
        max_steps: args.max_steps,
        stop_sphericity: args.stop_sphericity,
        normalization: args.normalize.into(),
        snapshot_every: args.snapshot_every,
        ..FlowConfig::default()
    };

    fs::create_dir_all(&args.out_dir)
        .with_context(|| format!("creating {}", args.out_dir.display()))?;

    let mut outputs: Vec<String> = Vec::new();
    let mut snapshot_err: Option<anyhow::Error> = None;
    let t_flow = Instant::now();
    let result = run_flow_with(&mesh, &cfg, |step, snapshot| {
        if snapshot_err.is_some() {
            return;
        }
        let name = format!("snapshot_{step:04}.obj");
        match save_obj(snapshot, args.out_dir.join(&name)) {
            Ok(()) => outputs.push(name),
            Err(e) => snapshot_err = Some(anyhow::Error::new(e).context(format!("writing {name}"))),
        }
    });
    let flow_ms = ms_since(t_flow);
    let result = match result {
        Ok(r) => r,
        Err(FlowError::InvalidTopology(report)) => {
            eprintln!("input mesh is not eligible for the flow:\n{report}");
            return Ok(1);
        }
        Err(e @ FlowError::BadConfig(_)) => bail!(e),
    };
    if let Some(err) = snapshot_err {
        return Err(err);
    }

    let t_metrics = Instant::now();
    let report = summarize(&mesh, &result.mesh).context("evaluating the final map")?;
    let projection = if args.project_sphere {
        match result
            .sphere_projection
            .clone()
            .or_else(|| project_to_unit_sphere(&result.mesh))
        {
            Some(sphere) => {
                let sphere_report =
                    summarize(&mesh, &sphere).context("evaluating the projected map")?;
                Some((sphere, sphere_report))
            }
            None => None,
        }
    } else {
        None
    };
    let metrics_ms = ms_since(t_metrics);

    let t_write = Instant::now();
    save_obj(&result.mesh, args.out_dir.join("final.obj")).context("writing final.obj")?;
    outputs.push("final.obj".into());
    if let Some((sphere, _)) = &projection {
        save_obj(sphere, args.out_dir.join("sphere.obj")).context("writing sphere.obj")?;
        outputs.push("sphere.obj".into());
    }

    let metrics_doc = MetricsDoc::new(&report, &result);
    write_json(args.out_dir.join("metrics.json"), &metrics_doc)?;
    outputs.push("metrics.json".into());

    write_text(
        args.out_dir.join("metrics_faces.csv"),
        &faces_csv(&report),
    )?;
    outputs.push("metrics_faces.csv".into());
    write_text(
        args.out_dir.join("metrics_edges.csv"),
        &edges_csv(&report),
    )?;
    outputs.push("metrics_edges.csv".into());
    write_text(
        args.out_dir.join("history.csv"),
        &history_csv(&result),
    )?;
    outputs.push("history.csv".into());

    outputs.push("manifest.json".into());
    let manifest = RunManifest {
        tool: "cmcf",
        version: env!("CARGO_PKG_VERSION"),
        input: args.input.display().to_string(),
        out_dir: args.out_dir.display().to_string(),
        config: &cfg,
        termination: result.termination,
        steps: result.steps,
        failure_detail: result.failure_detail.as_deref(),
        initial_sphericity: result.initial_sphericity,
        final_sphericity: result.final_sphericity,
        degenerate_faces: report.degenerate_faces,
        metrics_valid: report.valid,
        projected_metrics: projection
            .as_ref()
            .map(|(_, r)| MetricsDoc::new(r, &result)),
        outputs,
        timings_ms: Timings {
            load: load_ms,
            flow: flow_ms,
            metrics: metrics_ms,
            write: ms_since(t_write),
        },
    };
    write_json(args.out_dir.join("manifest.json"), &manifest)?;

    match result.termination {
        TerminationReason::SphericityReached => {
            println!(
                "sphericity_reached after {} steps: sphericity {:.6} -> {:.6}",
                result.steps, result.initial_sphericity, result.final_sphericity
            );
            Ok(0)
        }
        reason => {
            println!(
                "{reason} after {} steps: sphericity {:.6} -> {:.6}",
                result.steps, result.initial_sphericity, result.final_sphericity
            );
            if let Some(detail) = &result.failure_detail {
                println!("  {detail}");
            }
            Ok(2)
        }
    }
}

fn cmd_metrics(args: &MetricsArgs) -> Result<u8> {
    let original = load_mesh(&args.original)
        .with_context(|| format!("reading {}", args.original.display()))?;
    let mapped = load_mesh(&args.mapped)
        .with_context(|| format!("reading {}", args.mapped.display()))?;
    let report = summarize(&original, &mapped)?;
    println!("{}", serde_json::to_string_pretty(&report)?);
    Ok(0)
}

fn cmd_validate(args: &ValidateArgs) -> Result<u8> {
    let mesh = load_mesh(&args.input)
        .with_context(|| format!("reading {}", args.input.display()))?;
    let report = validate_closed_genus_zero(&mesh);
    println!("{report}");
    Ok(if report.is_genus_zero_sphere() { 0 } else { 2 })
}

fn ms_since(start: Instant) -> f64 {
    start.elapsed().as_secs_f64() * 1e3
}

fn write_json(path: PathBuf, value: &impl Serialize) -> Result<()> {
    let mut body = serde_json::to_string_pretty(value)?;
    body.push('\n');
    write_text(path, &body)
}

fn write_text(path: PathBuf, body: &str) -> Result<()> {
    fs::write(&path, body).with_context(|| format!("writing {}", path.display()))
}

fn faces_csv(report: &ConformalityReport) -> String {
    let mut out = String::from("face,angular_distortion\n");
    for (face, value) in report.per_face_angular_distortion.iter().enumerate() {
        match value {
            Some(v) => {
                let _ = writeln!(out, "{face},{v:e}");
            }
            None => {
                let _ = writeln!(out, "{face},");
            }
        }
    }
    out
}

fn edges_csv(report: &ConformalityReport) -> String {
    let mut out = String::from("vertex_i,vertex_j,lcr_ratio\n");
    for (flap, value) in &report.per_edge_lcr_ratio {
        match value {
            Some(v) => {
                let _ = writeln!(out, "{},{},{v:e}", flap.i, flap.j);
            }
            None => {
                let _ = writeln!(out, "{},{},", flap.i, flap.j);
            }
        }
    }
    out
}

fn history_csv(result: &FlowResult) -> String {
    let mut out = String::from("step,sphericity,min_area_ratio,residual\n");
    for rec in &result.history {
        let _ = writeln!(
            out,
            "{},{:e},{:e},{:e}",
            rec.step, rec.sphericity, rec.min_area_ratio, rec.residual
        );
    }
    out
}
