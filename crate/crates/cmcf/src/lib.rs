//! Spherical conformal parametrization of closed genus-zero triangle meshes.
//!
//! The core of the crate is conformalized mean curvature flow (cMCF): an
//! implicit mean curvature flow whose cotangent stiffness matrix is assembled
//! once on the input mesh and then frozen, while the mass matrix is
//! reassembled every step. Freezing the stiffness removes the conformal
//! factor from the evolution, so the flow converges to a conformal map onto
//! the round sphere instead of pinching off at high-curvature regions the
//! way plain MCF does. Plain MCF (both matrices reassembled) is kept as a
//! selectable mode for comparison.
//!
//! Pipeline: [`mesh`] (types, OBJ/OFF I/O, topology validation, elementary
//! geometry and procedural test shapes), [`fem`] (mass and stiffness
//! assembly over the piecewise-linear hat basis), [`sparse`] (symmetric
//! triplet matrix shared by assembly and solves), [`solver`] (sparse SPD
//! solves with a verified residual contract), [`flow`] (time stepping,
//! normalization, degeneracy watchdog), [`metrics`] (sphericity, angular
//! distortion, length-cross-ratio deviation).

pub mod fem;
pub mod flow;
pub mod mesh;
pub mod metrics;
pub mod solver;
pub mod sparse;

pub use fem::{assemble_mass, assemble_stiffness, MassScheme};
pub use flow::{run_flow, run_flow_with, FlowConfig, FlowMode, FlowResult, Normalization, TerminationReason};
pub use mesh::{load_mesh, save_obj, validate_closed_genus_zero, TriangleMesh, ValidationReport};
pub use metrics::{sphericity, summarize, ConformalityReport};
pub use solver::{solve_spd, SolveOptions};
pub use sparse::SparseSymMatrix;
