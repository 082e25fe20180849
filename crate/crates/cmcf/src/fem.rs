//! First-order FEM operators over the piecewise-linear hat basis.
//!
//! Stiffness is the negative Dirichlet energy Hessian: L_ij = -∫ ∇B_i·∇B_j,
//! giving the cotangent weights (cot α + cot β)/2 on off-diagonals and zero
//! row sums, so L is negative semidefinite and D - τL is positive definite
//! for τ > 0. Mass is the Galerkin ∫ B_i B_j (A/6 diagonal, A/12
//! off-diagonal per face) or its row-sum lumping (A/3 per corner).
//!
//! Cotangents are used as-is without clamping; degenerate faces make the
//! operators blow up by design and are the flow watchdog's job to catch
//! before assembly. Only an exactly zero or non-finite area is refused here.

use nalgebra::Point3;
use serde::Serialize;
use thiserror::Error;

use crate::mesh::{triangle_area, TriangleMesh};
use crate::sparse::SparseSymMatrix;

#[derive(Debug, Error)]
pub enum FemError {
    #[error("face {face} has zero or non-finite area")]
    ZeroAreaFace { face: usize },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum MassScheme {
    Galerkin,
    Lumped,
}

/// 3x3 stiffness element for one triangle, indexed like the corner order.
/// `None` when the area is zero or not finite.
pub fn stiffness_element(a: &Point3<f64>, b: &Point3<f64>, c: &Point3<f64>) -> Option<[[f64; 3]; 3]> {
    let area = triangle_area(a, b, c);
    if !(area > 0.0 && area.is_finite()) {
        return None;
    }
    // cot at a corner = dot of the outgoing edges / twice the area
    let cot = |apex: &Point3<f64>, p: &Point3<f64>, q: &Point3<f64>| (p - apex).dot(&(q - apex)) / (2.0 * area);
    let cots = [cot(a, b, c), cot(b, c, a), cot(c, a, b)];
    let mut m = [[0.0; 3]; 3];
    for (k, &ck) in cots.iter().enumerate() {
        let i = (k + 1) % 3;
        let j = (k + 2) % 3;
        let w = 0.5 * ck;
        m[i][j] += w;
        m[j][i] += w;
        m[i][i] -= w;
        m[j][j] -= w;
    }
    Some(m)
}

/// 3x3 Galerkin mass element: A/6 on the diagonal, A/12 elsewhere.
pub fn mass_element_galerkin(a: &Point3<f64>, b: &Point3<f64>, c: &Point3<f64>) -> [[f64; 3]; 3] {
    let area = triangle_area(a, b, c);
    let d = area / 6.0;
    let o = area / 12.0;
    [[d, o, o], [o, d, o], [o, o, d]]
}

/// Cotangent stiffness matrix of the whole mesh.
pub fn assemble_stiffness(mesh: &TriangleMesh) -> Result<SparseSymMatrix, FemError> {
    let mut triplets = Vec::with_capacity(mesh.face_count() * 6);
    for (fi, face) in mesh.faces().iter().enumerate() {
        let [a, b, c] = mesh.face_points(fi);
        let el = stiffness_element(&a, &b, &c).ok_or(FemError::ZeroAreaFace { face: fi })?;
        push_element(&mut triplets, face, &el);
    }
    Ok(SparseSymMatrix::from_triplets(mesh.vertex_count(), triplets))
}

/// Mass matrix of the whole mesh under the chosen scheme.
pub fn assemble_mass(mesh: &TriangleMesh, scheme: MassScheme) -> Result<SparseSymMatrix, FemError> {
    let mut triplets = Vec::with_capacity(mesh.face_count() * 6);
    for (fi, face) in mesh.faces().iter().enumerate() {
        let [a, b, c] = mesh.face_points(fi);
        let area = triangle_area(&a, &b, &c);
        if !(area > 0.0 && area.is_finite()) {
            return Err(FemError::ZeroAreaFace { face: fi });
        }
        match scheme {
            MassScheme::Galerkin => {
                let el = mass_element_galerkin(&a, &b, &c);
                push_element(&mut triplets, face, &el);
            }
            MassScheme::Lumped => {
                for &v in face {
                    triplets.push((v, v, area / 3.0));
                }
            }
        }
    }
    Ok(SparseSymMatrix::from_triplets(mesh.vertex_count(), triplets))
}

fn push_element(triplets: &mut Vec<(u32, u32, f64)>, face: &[u32; 3], el: &[[f64; 3]; 3]) {
    for r in 0..3 {
        for c in r..3 {
            triplets.push((face[r], face[c], el[r][c]));
        }
    }
}
