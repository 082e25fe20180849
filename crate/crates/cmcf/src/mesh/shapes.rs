//! Procedural closed meshes used by tests, benchmarks and examples.
//!
//! All generators are deterministic and produce outward-oriented (positive
//! signed volume) triangulations.

use std::collections::HashMap;

use nalgebra::{Point3, Vector3};

use super::TriangleMesh;

/// Axis-aligned unit cube [0,1]^3 as 12 triangles.
pub fn unit_cube() -> TriangleMesh {
    let v = vec![
        Point3::new(0.0, 0.0, 0.0),
        Point3::new(1.0, 0.0, 0.0),
        Point3::new(1.0, 1.0, 0.0),
        Point3::new(0.0, 1.0, 0.0),
        Point3::new(0.0, 0.0, 1.0),
        Point3::new(1.0, 0.0, 1.0),
        Point3::new(1.0, 1.0, 1.0),
        Point3::new(0.0, 1.0, 1.0),
    ];
    let f = vec![
        [0, 2, 1],
        [0, 3, 2],
        [4, 5, 6],
        [4, 6, 7],
        [0, 1, 5],
        [0, 5, 4],
        [2, 3, 7],
        [2, 7, 6],
        [0, 4, 7],
        [0, 7, 3],
        [1, 2, 6],
        [1, 6, 5],
    ];
    TriangleMesh::new(v, f).expect("cube is well formed")
}

/// Icosahedron subdivided `subdivisions` times, vertices on the sphere of
/// the given radius. 10 * 4^s + 2 vertices.
pub fn icosphere(radius: f64, subdivisions: u32) -> TriangleMesh {
    let t = (1.0 + 5.0_f64.sqrt()) / 2.0;
    let raw = [
        (-1.0, t, 0.0),
        (1.0, t, 0.0),
        (-1.0, -t, 0.0),
        (1.0, -t, 0.0),
        (0.0, -1.0, t),
        (0.0, 1.0, t),
        (0.0, -1.0, -t),
        (0.0, 1.0, -t),
        (t, 0.0, -1.0),
        (t, 0.0, 1.0),
        (-t, 0.0, -1.0),
        (-t, 0.0, 1.0),
    ];
    let mut vertices: Vec<Point3<f64>> = raw
        .iter()
        .map(|&(x, y, z)| {
            let v = Vector3::new(x, y, z).normalize() * radius;
            Point3::from(v)
        })
        .collect();
    let mut faces: Vec<[u32; 3]> = vec![
        [0, 11, 5],
        [0, 5, 1],
        [0, 1, 7],
        [0, 7, 10],
        [0, 10, 11],
        [1, 5, 9],
        [5, 11, 4],
        [11, 10, 2],
        [10, 7, 6],
        [7, 1, 8],
        [3, 9, 4],
        [3, 4, 2],
        [3, 2, 6],
        [3, 6, 8],
        [3, 8, 9],
        [4, 9, 5],
        [2, 4, 11],
        [6, 2, 10],
        [8, 6, 7],
        [9, 8, 1],
    ];
    for _ in 0..subdivisions {
        let mut midpoint: HashMap<(u32, u32), u32> = HashMap::new();
        let mut next = Vec::with_capacity(faces.len() * 4);
        for &[a, b, c] in &faces {
            let ab = midpoint_index(&mut vertices, &mut midpoint, a, b, radius);
            let bc = midpoint_index(&mut vertices, &mut midpoint, b, c, radius);
            let ca = midpoint_index(&mut vertices, &mut midpoint, c, a, radius);
            next.push([a, ab, ca]);
            next.push([b, bc, ab]);
            next.push([c, ca, bc]);
            next.push([ab, bc, ca]);
        }
        faces = next;
    }
    TriangleMesh::new(vertices, faces).expect("icosphere is well formed")
}

fn midpoint_index(
    vertices: &mut Vec<Point3<f64>>,
    cache: &mut HashMap<(u32, u32), u32>,
    a: u32,
    b: u32,
    radius: f64,
) -> u32 {
    let key = if a < b { (a, b) } else { (b, a) };
    if let Some(&ix) = cache.get(&key) {
        return ix;
    }
    let mid = (vertices[a as usize].coords + vertices[b as usize].coords) / 2.0;
    let p = Point3::from(mid.normalize() * radius);
    let ix = vertices.len() as u32;
    vertices.push(p);
    cache.insert(key, ix);
    ix
}

/// Latitude/longitude sphere: `columns` meridians (>= 3), `rings` latitude
/// divisions (>= 2). `columns * (rings - 1) + 2` vertices,
/// `2 * columns * (rings - 1)` faces.
pub fn uv_sphere(radius: f64, columns: usize, rings: usize) -> TriangleMesh {
    assert!(columns >= 3 && rings >= 2, "need columns >= 3 and rings >= 2");
    let c = columns;
    let mut vertices = Vec::with_capacity(c * (rings - 1) + 2);
    vertices.push(Point3::new(0.0, 0.0, radius));
    for ring in 1..rings {
        let phi = std::f64::consts::PI * ring as f64 / rings as f64;
        for col in 0..c {
            let theta = 2.0 * std::f64::consts::PI * col as f64 / c as f64;
            vertices.push(Point3::new(
                radius * phi.sin() * theta.cos(),
                radius * phi.sin() * theta.sin(),
                radius * phi.cos(),
            ));
        }
    }
    vertices.push(Point3::new(0.0, 0.0, -radius));
    let north = 0u32;
    let south = (vertices.len() - 1) as u32;
    let at = |ring: usize, col: usize| -> u32 { 1 + ((ring - 1) * c + col % c) as u32 };

    let mut faces = Vec::with_capacity(2 * c * (rings - 1));
    for col in 0..c {
        faces.push([north, at(1, col), at(1, col + 1)]);
    }
    for ring in 1..rings - 1 {
        for col in 0..c {
            let a = at(ring, col);
            let b = at(ring, col + 1);
            let d = at(ring + 1, col);
            let e = at(ring + 1, col + 1);
            faces.push([a, d, e]);
            faces.push([a, e, b]);
        }
    }
    for col in 0..c {
        faces.push([south, at(rings - 1, col + 1), at(rings - 1, col)]);
    }
    TriangleMesh::new(vertices, faces).expect("uv sphere is well formed")
}

/// Genus-one torus, `n_major * n_minor` vertices.
pub fn torus(major_radius: f64, minor_radius: f64, n_major: usize, n_minor: usize) -> TriangleMesh {
    assert!(n_major >= 3 && n_minor >= 3, "need at least 3 segments around each circle");
    let mut vertices = Vec::with_capacity(n_major * n_minor);
    for i in 0..n_major {
        let u = 2.0 * std::f64::consts::PI * i as f64 / n_major as f64;
        for j in 0..n_minor {
            let v = 2.0 * std::f64::consts::PI * j as f64 / n_minor as f64;
            let w = major_radius + minor_radius * v.cos();
            vertices.push(Point3::new(w * u.cos(), w * u.sin(), minor_radius * v.sin()));
        }
    }
    let at = |i: usize, j: usize| -> u32 { ((i % n_major) * n_minor + j % n_minor) as u32 };
    let mut faces = Vec::with_capacity(2 * n_major * n_minor);
    for i in 0..n_major {
        for j in 0..n_minor {
            let a = at(i, j);
            let b = at(i + 1, j);
            let c = at(i + 1, j + 1);
            let d = at(i, j + 1);
            faces.push([a, b, c]);
            faces.push([a, c, d]);
        }
    }
    TriangleMesh::new(vertices, faces).expect("torus is well formed")
}

/// Gaussian bump in angle space: points whose direction from the origin is
/// within a few `width` radians of `direction` move outward by up to
/// `amplitude` times their distance from the origin.
#[derive(Debug, Clone, Copy)]
pub struct RadialBump {
    pub direction: Vector3<f64>,
    pub amplitude: f64,
    pub width: f64,
}

impl RadialBump {
    pub fn new(direction: Vector3<f64>, amplitude: f64, width: f64) -> Self {
        Self { direction, amplitude, width }
    }
}

/// Displaces every vertex radially by the summed bump profile. The input
/// should be star-shaped around the origin (spheres, ellipsoids).
pub fn radial_bumps(mesh: &TriangleMesh, bumps: &[RadialBump]) -> TriangleMesh {
    let positions = mesh
        .vertices()
        .iter()
        .map(|p| {
            let r = p.coords.norm();
            if r == 0.0 {
                return *p;
            }
            let dir = p.coords / r;
            let mut scale = 1.0;
            for b in bumps {
                let axis = b.direction.normalize();
                let angle = dir.dot(&axis).clamp(-1.0, 1.0).acos();
                scale += b.amplitude * (-(angle / b.width).powi(2)).exp();
            }
            Point3::from(dir * (r * scale))
        })
        .collect();
    mesh.with_positions(positions).expect("same vertex count")
}

/// Per-axis scaling.
pub fn scale_axes(mesh: &TriangleMesh, scale: Vector3<f64>) -> TriangleMesh {
    let positions = mesh
        .vertices()
        .iter()
        .map(|p| Point3::new(p.x * scale.x, p.y * scale.y, p.z * scale.z))
        .collect();
    mesh.with_positions(positions).expect("same vertex count")
}

/// Cow-proportioned test blob: an elongated ellipsoidal body with head,
/// snout, ear, leg and tail protrusions on an icosphere triangulation
/// (2,562 vertices, 5,120 faces). Far from round (initial sphericity near
/// 0.68), with protrusions thin enough that plain mean curvature flow at
/// step size 0.05 collapses them within a few steps while the conformalized
/// flow rounds the whole shape out cleanly.
pub fn spot_like() -> TriangleMesh {
    let base = icosphere(1.0, 4);
    let bumps = [
        // head and snout, forward and slightly up
        RadialBump::new(Vector3::new(1.0, 0.0, 0.45), 1.0625, 0.42),
        RadialBump::new(Vector3::new(1.0, 0.0, 0.25), 0.6875, 0.22),
        // ears
        RadialBump::new(Vector3::new(0.75, 0.42, 0.72), 0.525, 0.13),
        RadialBump::new(Vector3::new(0.75, -0.42, 0.72), 0.525, 0.13),
        // four legs
        RadialBump::new(Vector3::new(0.55, 0.38, -1.0), 0.95, 0.20),
        RadialBump::new(Vector3::new(0.55, -0.38, -1.0), 0.95, 0.20),
        RadialBump::new(Vector3::new(-0.55, 0.38, -1.0), 0.95, 0.20),
        RadialBump::new(Vector3::new(-0.55, -0.38, -1.0), 0.95, 0.20),
        // tail
        RadialBump::new(Vector3::new(-1.0, 0.0, 0.1), 0.75, 0.16),
    ];
    let blob = radial_bumps(&base, &bumps);
    scale_axes(&blob, Vector3::new(1.52, 0.83, 0.78))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mesh::validate_closed_genus_zero;
    use approx::assert_relative_eq;
    use std::f64::consts::PI;

    #[test]
    fn icosphere_counts_and_geometry() {
        for s in 0..4 {
            let m = icosphere(1.0, s);
            assert_eq!(m.vertex_count(), 10 * 4usize.pow(s) + 2);
            assert_eq!(m.face_count(), 20 * 4usize.pow(s));
            assert!(validate_closed_genus_zero(&m).is_genus_zero_sphere());
            assert!(m.signed_volume() > 0.0);
        }
        let fine = icosphere(1.0, 4);
        assert_relative_eq!(fine.total_area(), 4.0 * PI, max_relative = 0.01);
        assert_relative_eq!(fine.signed_volume(), 4.0 * PI / 3.0, max_relative = 0.01);
    }

    #[test]
    fn uv_sphere_counts_and_geometry() {
        let m = uv_sphere(2.0, 16, 12);
        assert_eq!(m.vertex_count(), 16 * 11 + 2);
        assert_eq!(m.face_count(), 2 * 16 * 11);
        assert!(validate_closed_genus_zero(&m).is_genus_zero_sphere());
        assert_relative_eq!(m.total_area(), 16.0 * PI, max_relative = 0.03);
        assert!(m.signed_volume() > 0.0);
    }

    #[test]
    fn torus_is_genus_one() {
        let m = torus(2.0, 0.5, 24, 12);
        assert_eq!(m.vertex_count(), 24 * 12);
        assert_eq!(m.face_count(), 2 * 24 * 12);
        let rep = validate_closed_genus_zero(&m);
        assert_eq!(rep.genus, Some(1));
        assert!(m.signed_volume() > 0.0);
    }

    #[test]
    fn bumps_preserve_topology_and_grow_area() {
        let base = icosphere(1.0, 3);
        let bumped = radial_bumps(
            &base,
            &[RadialBump::new(Vector3::new(0.0, 0.0, 1.0), 0.8, 0.3)],
        );
        assert!(validate_closed_genus_zero(&bumped).is_genus_zero_sphere());
        assert!(bumped.total_area() > base.total_area());
    }

    #[test]
    fn spot_like_counts() {
        let m = spot_like();
        assert_eq!(m.vertex_count(), 2562);
        assert_eq!(m.face_count(), 5120);
        assert!(validate_closed_genus_zero(&m).is_genus_zero_sphere());
        assert!(m.signed_volume() > 0.0);
    }
}
