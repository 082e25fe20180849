//! MCF and cMCF time stepping with per-step normalization, stopping logic
//! and a degeneracy watchdog.
//!
//! Both modes solve the backward-Euler system (D^t - τL) X(t+τ) = D^t X(t)
//! per step. Plain MCF reassembles the stiffness L^t from the current
//! positions alongside the mass D^t; cMCF keeps the stiffness frozen at its
//! step-0 value L^0 and reassembles only the mass. After each solve the
//! positions are renormalized so the total area stays at its initial value
//! (optionally also recentering the area centroid at the origin).

use nalgebra::Point3;
use serde::Serialize;
use thiserror::Error;

use crate::fem::{assemble_mass, assemble_stiffness, FemError, MassScheme};
use crate::mesh::{
    area_centroid_of, total_area_of, triangle_area, validate_closed_genus_zero, TriangleMesh,
    ValidationReport,
};
use crate::metrics;
use crate::solver::{solve_spd, SolveOptions, SolverError};
use crate::sparse::SparseSymMatrix;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum FlowMode {
    Mcf,
    Cmcf,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Normalization {
    /// Recenter the area centroid at the origin, then rescale to the target
    /// area.
    AreaCenter,
    /// Rescale only.
    AreaOnly,
    None,
}

#[derive(Debug, Clone, Copy, Serialize)]
pub struct FlowConfig {
    pub mode: FlowMode,
    pub tau: f64,
    pub mass_scheme: MassScheme,
    pub max_steps: usize,
    pub stop_sphericity: f64,
    pub normalization: Normalization,
    /// Fraction of the mean face area below which a face counts as
    /// degenerate.
    pub degeneracy_area_ratio: f64,
    /// Observer cadence for [`run_flow_with`]; 0 disables snapshots.
    pub snapshot_every: usize,
}

impl Default for FlowConfig {
    fn default() -> Self {
        Self {
            mode: FlowMode::Cmcf,
            tau: 0.05,
            mass_scheme: MassScheme::Galerkin,
            max_steps: 200,
            stop_sphericity: 0.999,
            normalization: Normalization::AreaCenter,
            degeneracy_area_ratio: 1e-8,
            snapshot_every: 0,
        }
    }
}

impl FlowConfig {
    pub fn validate(&self) -> Result<(), FlowError> {
        if !(self.tau > 0.0 && self.tau.is_finite()) {
            return Err(FlowError::BadConfig(format!("tau must be positive and finite, got {}", self.tau)));
        }
        if !(self.stop_sphericity > 0.0 && self.stop_sphericity <= 1.0) {
            return Err(FlowError::BadConfig(format!(
                "stop_sphericity must lie in (0, 1], got {}",
                self.stop_sphericity
            )));
        }
        if !(self.degeneracy_area_ratio >= 0.0 && self.degeneracy_area_ratio.is_finite()) {
            return Err(FlowError::BadConfig(format!(
                "degeneracy_area_ratio must be finite and non-negative, got {}",
                self.degeneracy_area_ratio
            )));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum TerminationReason {
    SphericityReached,
    MaxSteps,
    Degenerate,
    SolverFailed,
}

impl std::fmt::Display for TerminationReason {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            TerminationReason::SphericityReached => "sphericity_reached",
            TerminationReason::MaxSteps => "max_steps",
            TerminationReason::Degenerate => "degenerate",
            TerminationReason::SolverFailed => "solver_failed",
        })
    }
}

#[derive(Debug, Clone, Copy, Serialize)]
pub struct StepRecord {
    pub step: usize,
    pub sphericity: f64,
    /// Smallest face area relative to the mean face area, after
    /// normalization.
    pub min_area_ratio: f64,
    /// Worst relative solver residual of the step's three columns.
    pub residual: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct DegeneracyReport {
    pub degenerate_faces: Vec<u32>,
    /// Smallest face area over the reference mean area; infinite for an
    /// empty mesh.
    pub worst_ratio: f64,
    pub threshold: f64,
    /// Conformality statistics are meaningless once faces collapse.
    pub metrics_valid: bool,
}

impl DegeneracyReport {
    pub fn count(&self) -> usize {
        self.degenerate_faces.len()
    }
}

#[derive(Debug, Error)]
pub enum FlowError {
    #[error("invalid flow configuration: {0}")]
    BadConfig(String),
    #[error("input mesh is not eligible for the flow:\n{0}")]
    InvalidTopology(Box<ValidationReport>),
}

#[derive(Debug, Error)]
pub enum StepError {
    #[error("face {face} degenerated (zero area at assembly)")]
    DegenerateFace { face: usize },
    #[error("total area collapsed to zero")]
    ZeroArea,
    #[error(transparent)]
    Solver(#[from] SolverError),
}

impl From<FemError> for StepError {
    fn from(e: FemError) -> Self {
        match e {
            FemError::ZeroAreaFace { face } => StepError::DegenerateFace { face },
        }
    }
}

/// Raw step output before normalization.
#[derive(Debug, Clone)]
pub struct StepOutcome {
    pub positions: Vec<Point3<f64>>,
    /// Worst relative residual across the three coordinate solves.
    pub residual: f64,
}

/// One plain MCF step: reassembles both D^t and L^t from the current
/// positions and solves (D^t - τL^t) X(t+τ) = D^t X(t). τ = 0 returns the
/// positions exactly unchanged.
pub fn mcf_step(mesh: &TriangleMesh, cfg: &FlowConfig) -> Result<StepOutcome, StepError> {
    if cfg.tau == 0.0 {
        return Ok(StepOutcome { positions: mesh.vertices().to_vec(), residual: 0.0 });
    }
    let d = assemble_mass(mesh, cfg.mass_scheme)?;
    let l = assemble_stiffness(mesh)?;
    implicit_step(&d, &l, mesh.vertices(), cfg.tau)
}

/// One cMCF step: reassembles only D^t and solves with the frozen stiffness
/// L^0. τ = 0 returns the positions exactly unchanged.
pub fn cmcf_step(
    mesh: &TriangleMesh,
    stiffness0: &SparseSymMatrix,
    cfg: &FlowConfig,
) -> Result<StepOutcome, StepError> {
    if cfg.tau == 0.0 {
        return Ok(StepOutcome { positions: mesh.vertices().to_vec(), residual: 0.0 });
    }
    let d = assemble_mass(mesh, cfg.mass_scheme)?;
    implicit_step(&d, stiffness0, mesh.vertices(), cfg.tau)
}

fn implicit_step(
    d: &SparseSymMatrix,
    l: &SparseSymMatrix,
    positions: &[Point3<f64>],
    tau: f64,
) -> Result<StepOutcome, StepError> {
    let a = SparseSymMatrix::lin_comb(1.0, d, -tau, l);
    let rhs: Vec<Vec<f64>> = (0..3)
        .map(|axis| {
            let coord: Vec<f64> = positions.iter().map(|p| p[axis]).collect();
            d.mul_vec(&coord)
        })
        .collect();
    let out = solve_spd(&a, &rhs, &SolveOptions::default())?;
    let n = positions.len();
    let new_positions = (0..n)
        .map(|i| Point3::new(out.columns[0][i], out.columns[1][i], out.columns[2][i]))
        .collect();
    Ok(StepOutcome { positions: new_positions, residual: out.worst_residual() })
}

#[derive(Debug, Error)]
#[error("total area is zero, nothing to normalize")]
pub struct ZeroAreaError;

/// Applies the configured normalization: recenters (mode dependent) and
/// rescales so the total area equals `target_area`.
pub fn normalize(
    positions: &[Point3<f64>],
    faces: &[[u32; 3]],
    target_area: f64,
    mode: Normalization,
) -> Result<Vec<Point3<f64>>, ZeroAreaError> {
    if mode == Normalization::None {
        return Ok(positions.to_vec());
    }
    let area = total_area_of(positions, faces);
    if !(area > 0.0 && area.is_finite()) {
        return Err(ZeroAreaError);
    }
    let scale = (target_area / area).sqrt();
    let out = match mode {
        Normalization::AreaCenter => {
            let center = area_centroid_of(positions, faces).coords;
            positions.iter().map(|p| Point3::from((p.coords - center) * scale)).collect()
        }
        Normalization::AreaOnly => positions.iter().map(|p| Point3::from(p.coords * scale)).collect(),
        Normalization::None => unreachable!(),
    };
    Ok(out)
}

/// Scans face areas against `ratio_threshold` times the mean face area of
/// the current positions (the initial mean rescaled to the current total
/// area, since connectivity is fixed and area is held constant).
pub fn detect_degeneracy(
    positions: &[Point3<f64>],
    faces: &[[u32; 3]],
    ratio_threshold: f64,
) -> DegeneracyReport {
    let nf = faces.len();
    if nf == 0 {
        return DegeneracyReport {
            degenerate_faces: Vec::new(),
            worst_ratio: f64::INFINITY,
            threshold: ratio_threshold,
            metrics_valid: true,
        };
    }
    let mean = total_area_of(positions, faces) / nf as f64;
    let mut degenerate = Vec::new();
    let mut worst = f64::INFINITY;
    for (fi, &[i, j, k]) in faces.iter().enumerate() {
        let area =
            triangle_area(&positions[i as usize], &positions[j as usize], &positions[k as usize]);
        let ratio = if mean > 0.0 { area / mean } else { 0.0 };
        worst = worst.min(ratio);
        if ratio < ratio_threshold || mean == 0.0 {
            degenerate.push(fi as u32);
        }
    }
    DegeneracyReport {
        metrics_valid: degenerate.is_empty(),
        degenerate_faces: degenerate,
        worst_ratio: worst,
        threshold: ratio_threshold,
    }
}

/// Time-stepping state. `stiffness0` is assembled exactly once at
/// construction in cMCF mode and never touched again.
#[derive(Debug, Clone)]
pub struct FlowState {
    mesh: TriangleMesh,
    stiffness0: Option<SparseSymMatrix>,
    step: usize,
    target_area: f64,
    history: Vec<StepRecord>,
}

impl FlowState {
    /// Validates the input for the configured mode (cMCF needs a genus-zero
    /// closed manifold; MCF any closed manifold) and freezes the initial
    /// stiffness in cMCF mode.
    pub fn new(mesh: &TriangleMesh, cfg: &FlowConfig) -> Result<Self, FlowError> {
        cfg.validate()?;
        let report = validate_closed_genus_zero(mesh);
        let eligible = match cfg.mode {
            FlowMode::Cmcf => report.is_genus_zero_sphere(),
            FlowMode::Mcf => report.is_closed_manifold() && report.degenerate_faces.is_empty(),
        };
        if !eligible {
            return Err(FlowError::InvalidTopology(Box::new(report)));
        }
        let stiffness0 = match cfg.mode {
            FlowMode::Cmcf => Some(
                assemble_stiffness(mesh)
                    .expect("validated mesh has no zero-area faces"),
            ),
            FlowMode::Mcf => None,
        };
        Ok(Self {
            mesh: mesh.clone(),
            stiffness0,
            step: 0,
            target_area: mesh.total_area(),
            history: Vec::new(),
        })
    }

    pub fn mesh(&self) -> &TriangleMesh {
        &self.mesh
    }

    pub fn step_index(&self) -> usize {
        self.step
    }

    pub fn target_area(&self) -> f64 {
        self.target_area
    }

    pub fn history(&self) -> &[StepRecord] {
        &self.history
    }

    pub fn frozen_stiffness(&self) -> Option<&SparseSymMatrix> {
        self.stiffness0.as_ref()
    }

    /// Executes one step plus normalization and appends to the history.
    pub fn advance(&mut self, cfg: &FlowConfig) -> Result<StepRecord, StepError> {
        let outcome = match cfg.mode {
            FlowMode::Mcf => mcf_step(&self.mesh, cfg)?,
            FlowMode::Cmcf => {
                let l0 = self.stiffness0.as_ref().expect("cMCF state holds the frozen stiffness");
                cmcf_step(&self.mesh, l0, cfg)?
            }
        };
        let positions = normalize(&outcome.positions, self.mesh.faces(), self.target_area, cfg.normalization)
            .map_err(|_| StepError::ZeroArea)?;
        self.mesh = self.mesh.with_positions(positions).expect("solver output has matching length");
        self.step += 1;
        let degeneracy = detect_degeneracy(self.mesh.vertices(), self.mesh.faces(), cfg.degeneracy_area_ratio);
        let record = StepRecord {
            step: self.step,
            sphericity: sphericity_or_zero(&self.mesh),
            min_area_ratio: degeneracy.worst_ratio,
            residual: outcome.residual,
        };
        self.history.push(record);
        Ok(record)
    }
}

fn sphericity_or_zero(mesh: &TriangleMesh) -> f64 {
    metrics::sphericity(mesh).unwrap_or(0.0)
}

#[derive(Debug, Clone)]
pub struct FlowResult {
    pub mesh: TriangleMesh,
    pub termination: TerminationReason,
    /// Human-readable cause when termination is degenerate/solver_failed.
    pub failure_detail: Option<String>,
    pub steps: usize,
    pub initial_sphericity: f64,
    pub final_sphericity: f64,
    pub target_area: f64,
    pub history: Vec<StepRecord>,
    pub degeneracy: DegeneracyReport,
    /// Final positions centered and radially projected onto the unit
    /// sphere; only produced on sphericity_reached.
    pub sphere_projection: Option<TriangleMesh>,
}

/// Runs the configured flow to termination.
pub fn run_flow(mesh: &TriangleMesh, cfg: &FlowConfig) -> Result<FlowResult, FlowError> {
    run_flow_with(mesh, cfg, |_, _| {})
}

/// Like [`run_flow`], additionally invoking `observer(step, mesh)` after
/// every `cfg.snapshot_every`-th step (0 disables it).
pub fn run_flow_with(
    mesh: &TriangleMesh,
    cfg: &FlowConfig,
    mut observer: impl FnMut(usize, &TriangleMesh),
) -> Result<FlowResult, FlowError> {
    let mut state = FlowState::new(mesh, cfg)?;
    let initial_sphericity = sphericity_or_zero(state.mesh());

    let mut termination = TerminationReason::MaxSteps;
    let mut failure_detail = None;
    if initial_sphericity >= cfg.stop_sphericity {
        termination = TerminationReason::SphericityReached;
    } else {
        while state.step < cfg.max_steps {
            match state.advance(cfg) {
                Ok(record) => {
                    if cfg.snapshot_every > 0 && record.step % cfg.snapshot_every == 0 {
                        observer(record.step, state.mesh());
                    }
                    if record.min_area_ratio < cfg.degeneracy_area_ratio {
                        termination = TerminationReason::Degenerate;
                        failure_detail = Some(format!(
                            "face area ratio {:.3e} fell below {:.3e} at step {}",
                            record.min_area_ratio, cfg.degeneracy_area_ratio, record.step
                        ));
                        break;
                    }
                    if record.sphericity >= cfg.stop_sphericity {
                        termination = TerminationReason::SphericityReached;
                        break;
                    }
                }
                Err(e) => {
                    termination = match &e {
                        StepError::DegenerateFace { .. } | StepError::ZeroArea => TerminationReason::Degenerate,
                        StepError::Solver(_) => TerminationReason::SolverFailed,
                    };
                    failure_detail = Some(e.to_string());
                    break;
                }
            }
        }
    }

    let final_sphericity = state.history.last().map(|r| r.sphericity).unwrap_or(initial_sphericity);
    let degeneracy =
        detect_degeneracy(state.mesh.vertices(), state.mesh.faces(), cfg.degeneracy_area_ratio);
    let sphere_projection = if termination == TerminationReason::SphericityReached {
        project_to_unit_sphere(&state.mesh)
    } else {
        None
    };
    Ok(FlowResult {
        mesh: state.mesh,
        termination,
        failure_detail,
        steps: state.step,
        initial_sphericity,
        final_sphericity,
        target_area: state.target_area,
        history: state.history,
        degeneracy,
        sphere_projection,
    })
}

/// Centers the area centroid at the origin and divides each vertex by its
/// norm. `None` if the mesh has no area or a vertex sits at the centroid.
pub fn project_to_unit_sphere(mesh: &TriangleMesh) -> Option<TriangleMesh> {
    if !(mesh.total_area() > 0.0) {
        return None;
    }
    let center = mesh.area_centroid().coords;
    let mut positions = Vec::with_capacity(mesh.vertex_count());
    for p in mesh.vertices() {
        let v = p.coords - center;
        let norm = v.norm();
        if norm == 0.0 {
            return None;
        }
        positions.push(Point3::from(v / norm));
    }
    mesh.with_positions(positions).ok()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mesh::shapes;
    use approx::assert_relative_eq;
    use nalgebra::Vector3;

    fn blob() -> TriangleMesh {
        shapes::radial_bumps(
            &shapes::icosphere(1.0, 3),
            &[
                shapes::RadialBump::new(Vector3::new(1.0, 0.2, 0.1), 0.5, 0.5),
                shapes::RadialBump::new(Vector3::new(-0.3, -1.0, 0.2), 0.4, 0.4),
            ],
        )
    }

    #[test]
    fn tau_zero_steps_are_identity() {
        let mesh = blob();
        let cfg = FlowConfig { tau: 0.0, ..Default::default() };
        let out = mcf_step(&mesh, &cfg).unwrap();
        assert_eq!(out.positions, mesh.vertices());
        assert_eq!(out.residual, 0.0);
        let l0 = assemble_stiffness(&mesh).unwrap();
        let out = cmcf_step(&mesh, &l0, &cfg).unwrap();
        assert_eq!(out.positions, mesh.vertices());
    }

    #[test]
    fn normalize_rescales_to_target_radius() {
        let big = shapes::icosphere(2.0, 3);
        let target = big.total_area() / 4.0;
        let scaled = normalize(big.vertices(), big.faces(), target, Normalization::AreaOnly).unwrap();
        for p in &scaled {
            assert_relative_eq!(p.coords.norm(), 1.0, epsilon = 1e-12);
        }
    }

    #[test]
    fn normalize_is_idempotent_when_already_normalized() {
        let mesh = blob();
        let centered =
            normalize(mesh.vertices(), mesh.faces(), mesh.total_area(), Normalization::AreaCenter).unwrap();
        let again = normalize(&centered, mesh.faces(), mesh.total_area(), Normalization::AreaCenter).unwrap();
        for (a, b) in centered.iter().zip(&again) {
            assert!((a - b).norm() <= 1e-12);
        }
    }

    #[test]
    fn normalize_recenters_translated_mesh() {
        let mesh = shapes::icosphere(1.0, 2);
        let shifted: Vec<Point3<f64>> =
            mesh.vertices().iter().map(|p| p + Vector3::new(5.0, -2.0, 3.0)).collect();
        let back = normalize(&shifted, mesh.faces(), mesh.total_area(), Normalization::AreaCenter).unwrap();
        let back_mesh = mesh.with_positions(back).unwrap();
        assert!(back_mesh.area_centroid().coords.norm() < 1e-10);
        assert_relative_eq!(back_mesh.total_area(), mesh.total_area(), epsilon = 1e-12);
    }

    #[test]
    fn normalize_none_is_identity_and_zero_area_errors() {
        let mesh = blob();
        let same = normalize(mesh.vertices(), mesh.faces(), 1.0, Normalization::None).unwrap();
        assert_eq!(same, mesh.vertices());
        let flat: Vec<Point3<f64>> = mesh.vertices().iter().map(|_| Point3::origin()).collect();
        assert!(normalize(&flat, mesh.faces(), 1.0, Normalization::AreaOnly).is_err());
    }

    #[test]
    fn degeneracy_detector_flags_collapsed_faces() {
        let mesh = shapes::icosphere(1.0, 1);
        let clean = detect_degeneracy(mesh.vertices(), mesh.faces(), 1e-8);
        assert_eq!(clean.count(), 0);
        assert!(clean.metrics_valid);
        assert!(clean.worst_ratio > 0.1);

        let mut positions = mesh.vertices().to_vec();
        let [i, j, k] = mesh.faces()[0];
        // collapse face 0 onto a segment
        positions[k as usize] =
            Point3::from((positions[i as usize].coords + positions[j as usize].coords) / 2.0);
        let report = detect_degeneracy(&positions, mesh.faces(), 1e-8);
        assert!(report.degenerate_faces.contains(&0));
        assert!(!report.metrics_valid);
        assert!(report.worst_ratio < 1e-12, "collapsed face ratio {}", report.worst_ratio);
    }

    #[test]
    fn icosphere_terminates_immediately() {
        let mesh = shapes::icosphere(1.0, 3);
        let result = run_flow(&mesh, &FlowConfig::default()).unwrap();
        assert_eq!(result.termination, TerminationReason::SphericityReached);
        assert_eq!(result.steps, 0);
        assert!(result.history.is_empty());
        assert!(result.sphere_projection.is_some());
    }

    #[test]
    fn cmcf_keeps_stiffness_frozen_and_area_constant() {
        let mesh = blob();
        let cfg = FlowConfig { max_steps: 5, stop_sphericity: 1.0, ..Default::default() };
        let mut state = FlowState::new(&mesh, &cfg).unwrap();
        let l0 = assemble_stiffness(&mesh).unwrap();
        for _ in 0..5 {
            state.advance(&cfg).unwrap();
            assert_relative_eq!(
                state.mesh().total_area(),
                state.target_area(),
                max_relative = 1e-9
            );
        }
        assert_eq!(state.frozen_stiffness(), Some(&l0));
        assert_eq!(state.history().len(), 5);
        assert_eq!(state.history().last().unwrap().step, 5);
    }

    #[test]
    fn torus_is_refused_for_cmcf_but_allowed_for_mcf() {
        let t = shapes::torus(2.0, 0.6, 24, 16);
        let cmcf = FlowConfig::default();
        assert!(matches!(run_flow(&t, &cmcf), Err(FlowError::InvalidTopology(_))));
        let mcf = FlowConfig { mode: FlowMode::Mcf, max_steps: 1, ..Default::default() };
        let result = run_flow(&t, &mcf).unwrap();
        assert_eq!(result.termination, TerminationReason::MaxSteps);
        assert_eq!(result.steps, 1);
    }

    #[test]
    fn bad_configs_are_refused() {
        let mesh = shapes::icosphere(1.0, 1);
        for cfg in [
            FlowConfig { tau: 0.0, ..Default::default() },
            FlowConfig { tau: -0.1, ..Default::default() },
            FlowConfig { stop_sphericity: 0.0, ..Default::default() },
            FlowConfig { stop_sphericity: 1.5, ..Default::default() },
        ] {
            assert!(matches!(run_flow(&mesh, &cfg), Err(FlowError::BadConfig(_))));
        }
    }

    #[test]
    fn observer_fires_on_cadence() {
        let mesh = blob();
        let cfg = FlowConfig { max_steps: 6, stop_sphericity: 1.0, snapshot_every: 2, ..Default::default() };
        let mut seen = Vec::new();
        let result = run_flow_with(&mesh, &cfg, |step, snapshot| {
            assert_eq!(snapshot.vertex_count(), mesh.vertex_count());
            seen.push(step);
        })
        .unwrap();
        assert_eq!(result.steps, 6);
        assert_eq!(seen, vec![2, 4, 6]);
    }

    #[test]
    fn mcf_step_on_round_sphere_barely_moves_with_area_normalization() {
        let mesh = shapes::icosphere(1.0, 4);
        let cfg = FlowConfig { mode: FlowMode::Mcf, normalization: Normalization::AreaOnly, ..Default::default() };
        let out = mcf_step(&mesh, &cfg).unwrap();
        let renorm = normalize(&out.positions, mesh.faces(), mesh.total_area(), cfg.normalization).unwrap();
        let worst = mesh
            .vertices()
            .iter()
            .zip(&renorm)
            .map(|(a, b)| (a - b).norm())
            .fold(0.0, f64::max);
        assert!(worst < 1e-3, "sphere should be a fixed point, moved {worst}");
    }
}
