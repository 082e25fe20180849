//! Runs both flow modes on the built-in test blob and prints a short
//! comparison, plus the sphere-stability drift of the conformalized flow.
//!
//!     cargo run --release -p cmcf --example flow_report

use cmcf::flow::{run_flow, FlowConfig, FlowMode, Normalization};
use cmcf::mesh::shapes;
use cmcf::metrics;

fn main() {
    let blob = shapes::spot_like();
    println!(
        "blob: {} vertices, {} faces, initial sphericity {:.6}",
        blob.vertex_count(),
        blob.face_count(),
        metrics::sphericity(&blob).unwrap()
    );

    let cmcf_cfg = FlowConfig::default();
    let t0 = std::time::Instant::now();
    let conformal = run_flow(&blob, &cmcf_cfg).unwrap();
    println!(
        "cmcf: {} after {} steps, s = {:.6}, degenerate faces = {}, {:.2?}",
        conformal.termination,
        conformal.steps,
        conformal.final_sphericity,
        conformal.degeneracy.count(),
        t0.elapsed()
    );
    for r in conformal.history.iter().take(6) {
        println!(
            "  step {:3}  s = {:.6}  min area ratio = {:.3e}  residual = {:.2e}",
            r.step, r.sphericity, r.min_area_ratio, r.residual
        );
    }
    let report = metrics::summarize(&blob, &conformal.mesh).unwrap();
    println!(
        "  angular mean {:.4} std {:.4}   lcr mean {:.4} std {:.4}   valid {}",
        report.angular.mean, report.angular.std, report.lcr.mean, report.lcr.std, report.valid
    );

    let mcf_cfg = FlowConfig { mode: FlowMode::Mcf, ..Default::default() };
    let t0 = std::time::Instant::now();
    let plain = run_flow(&blob, &mcf_cfg).unwrap();
    println!(
        "mcf:  {} after {} steps, s = {:.6}, min area ratio = {:.3e}, {:.2?}",
        plain.termination,
        plain.steps,
        plain.final_sphericity,
        plain.history.last().map(|r| r.min_area_ratio).unwrap_or(f64::NAN),
        t0.elapsed()
    );
    for r in plain.history.iter().take(12) {
        println!(
            "  step {:3}  s = {:.6}  min area ratio = {:.3e}  residual = {:.2e}",
            r.step, r.sphericity, r.min_area_ratio, r.residual
        );
    }

    // sphere stability: cumulative vertex drift of 10 conformalized steps
    let sphere = shapes::icosphere(1.0, 4);
    let cfg = FlowConfig {
        max_steps: 10,
        stop_sphericity: 1.0,
        normalization: Normalization::AreaCenter,
        ..Default::default()
    };
    let out = run_flow(&sphere, &cfg).unwrap();
    let drift = sphere
        .vertices()
        .iter()
        .zip(out.mesh.vertices())
        .map(|(a, b)| (a - b).norm())
        .fold(0.0, f64::max);
    println!(
        "icosphere-4, 10 cmcf steps: max vertex drift {:.3e}, s {:.9} -> {:.9}",
        drift, out.initial_sphericity, out.final_sphericity
    );
}
