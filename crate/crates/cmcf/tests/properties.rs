//! Randomized invariants across the geometry, metrics, flow, and solver
//! layers. Mesh-level checks run over fixed ChaCha seeds so every run covers
//! the same cases; scalar-space properties use proptest.

use cmcf::flow::{run_flow, FlowConfig, FlowError, FlowMode, Normalization};
use cmcf::mesh::shapes::{icosphere, radial_bumps, scale_axes, torus, RadialBump};
use cmcf::mesh::{
    read_obj, triangle_angles, triangle_area, validate_closed_genus_zero, write_obj, MeshTopology,
    TriangleMesh,
};
use cmcf::metrics::lcr;
use cmcf::solver::{solve_spd, SolveMethod, SolveOptions};
use cmcf::sparse::SparseSymMatrix;
use cmcf::{assemble_mass, assemble_stiffness, sphericity, summarize, MassScheme};
use nalgebra::{Point3, Quaternion, UnitQuaternion, Vector3};
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

/// Star-shaped random blob: an icosphere pushed and dented by a few Gaussian
/// bumps, then anisotropically scaled. The radial scale stays positive, so
/// the result is always an embedded genus-zero surface.
fn random_blob(seed: u64) -> TriangleMesh {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let bump_count = rng.random_range(1..=3);
    let bumps: Vec<RadialBump> = (0..bump_count)
        .map(|_| {
            let dir = Vector3::new(
                rng.random_range(-1.0..1.0),
                rng.random_range(-1.0..1.0),
                rng.random_range(-1.0..1.0),
            );
            let dir = if dir.norm() < 1e-3 { Vector3::x() } else { dir };
            RadialBump::new(
                dir,
                rng.random_range(-0.15..0.5),
                rng.random_range(0.25..0.9),
            )
        })
        .collect();
    let blob = radial_bumps(&icosphere(1.0, 2), &bumps);
    scale_axes(
        &blob,
        Vector3::new(
            rng.random_range(0.75..1.35),
            rng.random_range(0.75..1.35),
            rng.random_range(0.75..1.35),
        ),
    )
}

fn random_rigid(rng: &mut ChaCha8Rng) -> (nalgebra::Rotation3<f64>, Vector3<f64>) {
    let quat = loop {
        let q = Quaternion::new(
            rng.random_range(-1.0..1.0),
            rng.random_range(-1.0..1.0),
            rng.random_range(-1.0..1.0),
            rng.random_range(-1.0..1.0),
        );
        if q.norm() > 1e-3 {
            break q;
        }
    };
    let rot = UnitQuaternion::from_quaternion(quat).to_rotation_matrix();
    let t = Vector3::new(
        rng.random_range(-3.0..3.0),
        rng.random_range(-3.0..3.0),
        rng.random_range(-3.0..3.0),
    );
    (rot, t)
}

fn transformed(
    mesh: &TriangleMesh,
    rot: &nalgebra::Rotation3<f64>,
    t: &Vector3<f64>,
    scale: f64,
) -> TriangleMesh {
    mesh.with_positions(
        mesh.vertices()
            .iter()
            .map(|p| Point3::from(rot * (p.coords * scale) + t))
            .collect(),
    )
    .unwrap()
}

#[test]
fn area_and_volume_are_rigid_invariants() {
    for seed in 0..10_u64 {
        let blob = random_blob(seed);
        let area = blob.total_area();
        let volume = blob.signed_volume();
        assert!(volume > 0.0, "seed {seed}: blob volume {volume} not positive");
        let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 0xabcd);
        for _ in 0..5 {
            let (rot, t) = random_rigid(&mut rng);
            let moved = transformed(&blob, &rot, &t, 1.0);
            let darea = (moved.total_area() - area).abs() / area;
            let dvol = (moved.signed_volume() - volume).abs() / volume;
            assert!(darea <= 1e-12, "seed {seed}: area drifted by {darea:e}");
            assert!(dvol <= 1e-11, "seed {seed}: volume drifted by {dvol:e}");
        }
    }
}

#[test]
fn sphericity_never_exceeds_one() {
    for seed in 0..25_u64 {
        let blob = random_blob(seed);
        let s = sphericity(&blob).unwrap();
        assert!(
            s > 0.0 && s <= 1.0 + 1e-12,
            "seed {seed}: sphericity {s} outside (0, 1]"
        );
    }
}

#[test]
fn metrics_are_similarity_invariant() {
    for seed in 0..8_u64 {
        let orig = random_blob(seed);
        let mapped = random_blob(seed + 1000);
        let reference = summarize(&orig, &mapped).unwrap();

        let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 0x51a1);
        let (rot, t) = random_rigid(&mut rng);
        let scale = (2.0_f64).powf(rng.random_range(-3.0..3.0));
        let moved = transformed(&mapped, &rot, &t, scale);
        let report = summarize(&orig, &moved).unwrap();

        let mut worst = (reference.angular.mean - report.angular.mean)
            .abs()
            .max((reference.lcr.mean - report.lcr.mean).abs());
        for (a, b) in reference
            .per_face_angular_distortion
            .iter()
            .zip(&report.per_face_angular_distortion)
        {
            let (Some(a), Some(b)) = (a, b) else {
                panic!("seed {seed}: similarity changed face exclusions");
            };
            worst = worst.max((a - b).abs());
        }
        for ((_, a), (_, b)) in reference.per_edge_lcr_ratio.iter().zip(&report.per_edge_lcr_ratio) {
            let (Some(a), Some(b)) = (a, b) else {
                panic!("seed {seed}: similarity changed edge exclusions");
            };
            worst = worst.max((a - b).abs());
        }
        assert!(
            worst <= 1e-9,
            "seed {seed}: similarity transform moved a metric by {worst:e}"
        );
    }
}

#[test]
fn self_comparison_is_exactly_identity() {
    for seed in 0..10_u64 {
        let blob = random_blob(seed);
        let report = summarize(&blob, &blob).unwrap();
        assert!(
            report
                .per_face_angular_distortion
                .iter()
                .all(|v| *v == Some(0.0)),
            "seed {seed}: self angular distortion not exactly zero"
        );
        assert!(
            report.per_edge_lcr_ratio.iter().all(|(_, v)| *v == Some(1.0)),
            "seed {seed}: self lcr ratio not exactly one"
        );
    }
}

#[test]
fn one_step_respects_area_and_center_normalization() {
    for seed in 0..6_u64 {
        let blob = random_blob(seed);
        let area = blob.total_area();
        for mode in [FlowMode::Cmcf, FlowMode::Mcf] {
            let result = run_flow(
                &blob,
                &FlowConfig {
                    mode,
                    max_steps: 1,
                    stop_sphericity: 1.0,
                    normalization: Normalization::AreaCenter,
                    ..FlowConfig::default()
                },
            )
            .unwrap();
            assert_eq!(result.steps, 1);
            let new_area = result.mesh.total_area();
            assert!(
                ((new_area - area) / area).abs() <= 1e-9,
                "seed {seed} {mode:?}: area {area} -> {new_area}"
            );
            let centroid = result.mesh.area_centroid();
            assert!(
                centroid.coords.norm() <= 1e-9 * area.sqrt(),
                "seed {seed} {mode:?}: centroid {centroid} not recentred"
            );
        }
    }
}

#[test]
fn direct_and_iterative_solvers_agree_on_flow_systems() {
    for seed in 0..6_u64 {
        let blob = random_blob(seed);
        let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 0xcafe);
        let tau = (10.0_f64).powf(rng.random_range(-3.0..0.0));
        let d = assemble_mass(&blob, MassScheme::Galerkin).unwrap();
        let l = assemble_stiffness(&blob).unwrap();
        let a = SparseSymMatrix::lin_comb(1.0, &d, -tau, &l);
        let rhs: Vec<Vec<f64>> = (0..3)
            .map(|axis| {
                let coords: Vec<f64> = blob.vertices().iter().map(|p| p.coords[axis]).collect();
                d.mul_vec(&coords)
            })
            .collect();

        let direct = solve_spd(
            &a,
            &rhs,
            &SolveOptions {
                method: SolveMethod::Direct,
                ..SolveOptions::default()
            },
        )
        .unwrap();
        let cg = solve_spd(
            &a,
            &rhs,
            &SolveOptions {
                method: SolveMethod::ConjugateGradient,
                ..SolveOptions::default()
            },
        )
        .unwrap();
        assert!(direct.worst_residual() <= 1e-10, "seed {seed}: direct residual");
        assert!(cg.worst_residual() <= 1e-10, "seed {seed}: cg residual");

        for (xd, xc) in direct.columns.iter().zip(&cg.columns) {
            let norm: f64 = xd.iter().map(|v| v * v).sum::<f64>().sqrt();
            let diff: f64 = xd
                .iter()
                .zip(xc)
                .map(|(a, b)| (a - b) * (a - b))
                .sum::<f64>()
                .sqrt();
            assert!(
                diff <= 1e-4 * norm.max(1.0),
                "seed {seed}: solver paths disagree by {diff:e} (|x| = {norm:e})"
            );
        }
    }
}

#[test]
fn obj_round_trip_is_bitwise() {
    for seed in 0..6_u64 {
        let blob = random_blob(seed);
        let mut buf = Vec::new();
        write_obj(&blob, &mut buf).unwrap();
        let back = read_obj(buf.as_slice()).unwrap();
        assert_eq!(blob.faces(), back.faces(), "seed {seed}: faces changed");
        for (a, b) in blob.vertices().iter().zip(back.vertices()) {
            assert_eq!(a.x.to_bits(), b.x.to_bits(), "seed {seed}");
            assert_eq!(a.y.to_bits(), b.y.to_bits(), "seed {seed}");
            assert_eq!(a.z.to_bits(), b.z.to_bits(), "seed {seed}");
        }
    }
}

#[test]
fn flow_eligibility_depends_on_mode() {
    let donut = torus(2.0, 0.6, 24, 12);
    let report = validate_closed_genus_zero(&donut);
    assert!(report.is_closed_manifold());
    assert!(!report.is_genus_zero_sphere());
    assert_eq!(report.genus, Some(1));

    // The conformalized flow targets the sphere and refuses other genera;
    // plain MCF only needs a closed manifold.
    let cmcf_err = run_flow(&donut, &FlowConfig::default());
    assert!(matches!(cmcf_err, Err(FlowError::InvalidTopology(_))));
    let mcf_ok = run_flow(
        &donut,
        &FlowConfig {
            mode: FlowMode::Mcf,
            max_steps: 1,
            ..FlowConfig::default()
        },
    );
    assert!(mcf_ok.is_ok());
}

#[test]
fn lcr_is_positive_and_finite_on_clean_meshes() {
    for seed in 0..8_u64 {
        let blob = random_blob(seed);
        let topology = MeshTopology::from_faces(blob.faces(), blob.vertex_count());
        for flap in topology.flaps() {
            let value = lcr(&blob, &flap);
            assert!(
                value.is_finite() && value > 0.0,
                "seed {seed}: lcr {value} on flap {flap:?}"
            );
        }
    }
}

proptest! {
    #[test]
    fn sphericity_is_scale_invariant(seed in 0u64..1000, exponent in -40.0_f64..40.0) {
        let blob = random_blob(seed);
        let s = sphericity(&blob).unwrap();
        let lambda = (2.0_f64).powf(exponent);
        let scaled = blob
            .with_positions(blob.vertices().iter().map(|p| Point3::from(p.coords * lambda)).collect())
            .unwrap();
        let s_scaled = sphericity(&scaled).unwrap();
        prop_assert!(
            ((s_scaled - s) / s).abs() <= 1e-12,
            "sphericity moved from {} to {} under scale 2^{}",
            s,
            s_scaled,
            exponent
        );
    }

    #[test]
    fn triangle_angles_sum_to_pi(
        ax in -3.0_f64..3.0, ay in -3.0_f64..3.0, az in -3.0_f64..3.0,
        bx in -3.0_f64..3.0, by in -3.0_f64..3.0, bz in -3.0_f64..3.0,
        cx in -3.0_f64..3.0, cy in -3.0_f64..3.0, cz in -3.0_f64..3.0,
    ) {
        let a = Point3::new(ax, ay, az);
        let b = Point3::new(bx, by, bz);
        let c = Point3::new(cx, cy, cz);
        prop_assume!(triangle_area(&a, &b, &c) > 1e-2);
        let sum: f64 = triangle_angles(&a, &b, &c).iter().sum();
        prop_assert!(
            (sum - std::f64::consts::PI).abs() <= 1e-9,
            "angles sum to {sum}"
        );
    }
}
