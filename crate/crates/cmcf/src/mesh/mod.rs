//! Triangle mesh type, elementary geometry, I/O and topology validation.

use nalgebra::{Point3, Vector3};
use thiserror::Error;

pub mod io;
pub mod shapes;
pub mod topology;

pub use io::{load_mesh, load_mesh_as, read_obj, read_off, save_obj, write_obj, MeshFormat};
pub use topology::{validate_closed_genus_zero, EdgeFlap, MeshTopology, ValidationReport};

#[derive(Debug, Error)]
pub enum MeshError {
    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),
    #[error("parse error at line {line}: {message}")]
    Parse { line: usize, message: String },
    #[error("face at line {line} has {count} vertices, only triangles are supported")]
    NonTriangularFace { line: usize, count: usize },
    #[error("face {face} references vertex {index} but the mesh has {vertices} vertices")]
    IndexOutOfRange { face: usize, index: i64, vertices: usize },
    #[error("face {face} repeats a vertex index")]
    RepeatedIndex { face: usize },
    #[error("vertex {vertex} has a non-finite coordinate")]
    NonFinitePosition { vertex: usize },
    #[error("expected {expected} positions, got {actual}")]
    PositionCount { expected: usize, actual: usize },
    #[error("cannot infer mesh format from path {0:?} (expected .obj or .off)")]
    UnknownFormat(std::path::PathBuf),
}

/// Indexed triangle mesh. Connectivity is immutable after construction;
/// evolving flows produce new meshes via [`TriangleMesh::with_positions`].
#[derive(Debug, Clone)]
pub struct TriangleMesh {
    vertices: Vec<Point3<f64>>,
    faces: Vec<[u32; 3]>,
}

impl TriangleMesh {
    /// Builds a mesh, checking index bounds, per-face index distinctness and
    /// coordinate finiteness. Topological soundness (closed, manifold, ...)
    /// is a separate concern, see [`validate_closed_genus_zero`].
    pub fn new(vertices: Vec<Point3<f64>>, faces: Vec<[u32; 3]>) -> Result<Self, MeshError> {
        let n = vertices.len();
        for (vi, v) in vertices.iter().enumerate() {
            if !(v.x.is_finite() && v.y.is_finite() && v.z.is_finite()) {
                return Err(MeshError::NonFinitePosition { vertex: vi });
            }
        }
        for (fi, f) in faces.iter().enumerate() {
            for &ix in f {
                if ix as usize >= n {
                    return Err(MeshError::IndexOutOfRange { face: fi, index: ix as i64, vertices: n });
                }
            }
            if f[0] == f[1] || f[1] == f[2] || f[0] == f[2] {
                return Err(MeshError::RepeatedIndex { face: fi });
            }
        }
        Ok(Self { vertices, faces })
    }

    /// Same connectivity, new vertex positions.
    pub fn with_positions(&self, positions: Vec<Point3<f64>>) -> Result<Self, MeshError> {
        if positions.len() != self.vertices.len() {
            return Err(MeshError::PositionCount { expected: self.vertices.len(), actual: positions.len() });
        }
        Self::new(positions, self.faces.clone())
    }

    pub fn vertex_count(&self) -> usize {
        self.vertices.len()
    }

    pub fn face_count(&self) -> usize {
        self.faces.len()
    }

    pub fn vertices(&self) -> &[Point3<f64>] {
        &self.vertices
    }

    pub fn faces(&self) -> &[[u32; 3]] {
        &self.faces
    }

    pub fn face_points(&self, face: usize) -> [Point3<f64>; 3] {
        let [i, j, k] = self.faces[face];
        [self.vertices[i as usize], self.vertices[j as usize], self.vertices[k as usize]]
    }

    pub fn face_area(&self, face: usize) -> f64 {
        let [a, b, c] = self.face_points(face);
        triangle_area(&a, &b, &c)
    }

    /// Interior angles at the face's three corners, in vertex order.
    pub fn face_angles(&self, face: usize) -> [f64; 3] {
        let [a, b, c] = self.face_points(face);
        triangle_angles(&a, &b, &c)
    }

    pub fn total_area(&self) -> f64 {
        (0..self.faces.len()).map(|f| self.face_area(f)).sum()
    }

    pub fn mean_face_area(&self) -> f64 {
        if self.faces.is_empty() {
            0.0
        } else {
            self.total_area() / self.faces.len() as f64
        }
    }

    /// Signed enclosed volume via the divergence theorem; positive when face
    /// winding is counterclockwise seen from outside.
    pub fn signed_volume(&self) -> f64 {
        self.faces
            .iter()
            .map(|&[i, j, k]| {
                let a = self.vertices[i as usize].coords;
                let b = self.vertices[j as usize].coords;
                let c = self.vertices[k as usize].coords;
                a.dot(&b.cross(&c)) / 6.0
            })
            .sum()
    }

    /// Area-weighted surface centroid. Falls back to the plain vertex mean
    /// when the total area vanishes.
    pub fn area_centroid(&self) -> Point3<f64> {
        area_centroid_of(&self.vertices, &self.faces)
    }
}

/// Total area over a raw position buffer, for callers evolving positions
/// without rebuilding a mesh.
pub fn total_area_of(positions: &[Point3<f64>], faces: &[[u32; 3]]) -> f64 {
    faces
        .iter()
        .map(|&[i, j, k]| {
            triangle_area(&positions[i as usize], &positions[j as usize], &positions[k as usize])
        })
        .sum()
}

/// Area-weighted centroid over a raw position buffer; plain vertex mean when
/// the total area vanishes.
pub fn area_centroid_of(positions: &[Point3<f64>], faces: &[[u32; 3]]) -> Point3<f64> {
    let mut acc = Vector3::zeros();
    let mut total = 0.0;
    for &[i, j, k] in faces {
        let (a, b, c) = (positions[i as usize], positions[j as usize], positions[k as usize]);
        let area = triangle_area(&a, &b, &c);
        acc += area * (a.coords + b.coords + c.coords) / 3.0;
        total += area;
    }
    if total > 0.0 {
        Point3::from(acc / total)
    } else if positions.is_empty() {
        Point3::origin()
    } else {
        let sum: Vector3<f64> = positions.iter().map(|p| p.coords).sum();
        Point3::from(sum / positions.len() as f64)
    }
}

pub fn triangle_area(a: &Point3<f64>, b: &Point3<f64>, c: &Point3<f64>) -> f64 {
    0.5 * (b - a).cross(&(c - a)).norm()
}

/// Angle between two edge vectors, with the argument of acos clamped so
/// roundoff never produces NaN. Zero-length edges yield a zero angle.
pub fn corner_angle(u: &Vector3<f64>, v: &Vector3<f64>) -> f64 {
    let den = u.norm() * v.norm();
    if den == 0.0 {
        return 0.0;
    }
    (u.dot(v) / den).clamp(-1.0, 1.0).acos()
}

/// Interior angles at a, b, c of triangle (a, b, c).
pub fn triangle_angles(a: &Point3<f64>, b: &Point3<f64>, c: &Point3<f64>) -> [f64; 3] {
    [
        corner_angle(&(b - a), &(c - a)),
        corner_angle(&(c - b), &(a - b)),
        corner_angle(&(a - c), &(b - c)),
    ]
}
