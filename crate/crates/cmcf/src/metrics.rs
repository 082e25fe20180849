//! Conformality and sphericity metrics between an input mesh and its
//! flowed image.
//!
//! Both meshes must share connectivity. Per-face angular distortion pairs
//! angles positionally (same vertex order, same triangle); per-edge
//! length-cross-ratio deviation compares the flap ratio
//! c = (ℓ_im ℓ_jk) / (ℓ_mj ℓ_ki) across the two meshes, which equals 1 on
//! every interior edge exactly when the meshes are discretely conformally
//! equivalent. Elements degenerate in either mesh are excluded from both
//! distributions and flip the report's `valid` flag.

use serde::Serialize;
use thiserror::Error;

use crate::mesh::topology::{EdgeFlap, MeshTopology, DEGENERATE_AREA_RATIO};
use crate::mesh::TriangleMesh;

const HISTOGRAM_BINS: usize = 64;

#[derive(Debug, Error)]
pub enum MetricsError {
    #[error("meshes do not share connectivity (vertex and face lists must match)")]
    ConnectivityMismatch,
    #[error("mesh has zero total area")]
    ZeroArea,
}

/// Isoperimetric sphericity s = (36π V²)^(1/3) / A, exactly 1 for a round
/// sphere and < 1 for everything else. Volume is taken in absolute value;
/// inverted orientation is a topology-validation concern, not a metric one.
pub fn sphericity(mesh: &TriangleMesh) -> Result<f64, MetricsError> {
    let area = mesh.total_area();
    if !(area > 0.0) {
        return Err(MetricsError::ZeroArea);
    }
    let volume = mesh.signed_volume().abs();
    Ok((36.0 * std::f64::consts::PI * volume * volume).cbrt() / area)
}

/// Per-face max relative angle change, `None` for faces degenerate in
/// either mesh. Entry f is max over the three corners of |θ - θ'| / θ.
pub fn angular_distortion(
    orig: &TriangleMesh,
    mapped: &TriangleMesh,
) -> Result<Vec<Option<f64>>, MetricsError> {
    check_connectivity(orig, mapped)?;
    let deg_orig = degenerate_face_mask(orig);
    let deg_mapped = degenerate_face_mask(mapped);
    let mut out = Vec::with_capacity(orig.face_count());
    for f in 0..orig.face_count() {
        if deg_orig[f] || deg_mapped[f] {
            out.push(None);
            continue;
        }
        let a = orig.face_angles(f);
        let b = mapped.face_angles(f);
        let worst = (0..3).map(|c| (a[c] - b[c]).abs() / a[c]).fold(0.0, f64::max);
        out.push(Some(worst));
    }
    Ok(out)
}

/// Length-cross-ratio of one flap: (ℓ_im ℓ_jk) / (ℓ_mj ℓ_ki). The formula
/// is symmetric in the edge direction: swapping (i, j, m, k) for
/// (j, i, k, m) reproduces the same value.
pub fn lcr(mesh: &TriangleMesh, flap: &EdgeFlap) -> f64 {
    let p = mesh.vertices();
    let (i, j, m, k) =
        (p[flap.i as usize], p[flap.j as usize], p[flap.m as usize], p[flap.k as usize]);
    ((i - m).norm() * (j - k).norm()) / ((m - j).norm() * (k - i).norm())
}

/// Per interior edge, the ratio lcr(mapped) / lcr(orig); 1 means the flap
/// is conformally unchanged. `None` marks excluded edges (a flanking face
/// degenerate in either mesh, or a zero stencil length). Edges are listed
/// in sorted (i, j) order.
pub fn lcr_deviation(
    orig: &TriangleMesh,
    mapped: &TriangleMesh,
) -> Result<Vec<(EdgeFlap, Option<f64>)>, MetricsError> {
    check_connectivity(orig, mapped)?;
    let deg_orig = degenerate_face_mask(orig);
    let deg_mapped = degenerate_face_mask(mapped);
    let topo = MeshTopology::from_mesh(orig);
    let mut out = Vec::new();
    for e in &topo.edges {
        let (flap, fm, fk) = match (e.forward_halves, e.backward_halves, e.m, e.k, e.face_m, e.face_k) {
            (1, 1, Some(m), Some(k), Some(fm), Some(fk)) => {
                (EdgeFlap { i: e.i, j: e.j, m, k }, fm as usize, fk as usize)
            }
            _ => continue, // boundary or non-manifold edge: not an interior flap
        };
        let excluded = deg_orig[fm]
            || deg_orig[fk]
            || deg_mapped[fm]
            || deg_mapped[fk]
            || has_zero_stencil_length(orig, &flap)
            || has_zero_stencil_length(mapped, &flap);
        if excluded {
            out.push((flap, None));
        } else {
            out.push((flap, Some(lcr(mapped, &flap) / lcr(orig, &flap))));
        }
    }
    Ok(out)
}

fn has_zero_stencil_length(mesh: &TriangleMesh, flap: &EdgeFlap) -> bool {
    let p = mesh.vertices();
    let (i, j, m, k) =
        (p[flap.i as usize], p[flap.j as usize], p[flap.m as usize], p[flap.k as usize]);
    (i - m).norm() == 0.0 || (j - k).norm() == 0.0 || (m - j).norm() == 0.0 || (k - i).norm() == 0.0
}

/// Population mean and standard deviation.
#[derive(Debug, Clone, Copy, Serialize)]
pub struct SummaryStats {
    pub mean: f64,
    pub std: f64,
    pub count: usize,
}

impl SummaryStats {
    fn over(values: impl Iterator<Item = f64>) -> Self {
        let values: Vec<f64> = values.collect();
        let count = values.len();
        if count == 0 {
            return Self { mean: 0.0, std: 0.0, count: 0 };
        }
        let mean = values.iter().sum::<f64>() / count as f64;
        let var = values.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / count as f64;
        Self { mean, std: var.sqrt(), count }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct Histogram {
    pub lo: f64,
    pub hi: f64,
    pub counts: Vec<u32>,
}

impl Histogram {
    /// Uniform bins over [lo, hi]; out-of-range samples clamp to the edge
    /// bins, and an empty or degenerate range is widened to keep bin width
    /// positive.
    fn over(values: impl Iterator<Item = f64>, lo: f64, hi: f64) -> Self {
        let hi = if hi > lo { hi } else { lo + 1e-12 };
        let mut counts = vec![0u32; HISTOGRAM_BINS];
        let width = (hi - lo) / HISTOGRAM_BINS as f64;
        for v in values {
            let bin = (((v - lo) / width).floor() as i64).clamp(0, HISTOGRAM_BINS as i64 - 1);
            counts[bin as usize] += 1;
        }
        Self { lo, hi, counts }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct ConformalityReport {
    /// Sphericity of the mapped mesh (0 if its area vanished).
    pub sphericity: f64,
    pub angular: SummaryStats,
    pub lcr: SummaryStats,
    /// Faces degenerate in either mesh.
    pub degenerate_faces: usize,
    /// False whenever any face is degenerate.
    pub valid: bool,
    pub angular_histogram: Histogram,
    pub lcr_histogram: Histogram,
    #[serde(skip)]
    pub per_face_angular_distortion: Vec<Option<f64>>,
    #[serde(skip)]
    pub per_edge_lcr_ratio: Vec<(EdgeFlap, Option<f64>)>,
}

/// Full report: both distortion distributions, sphericity of the mapped
/// mesh, and degeneracy accounting.
pub fn summarize(orig: &TriangleMesh, mapped: &TriangleMesh) -> Result<ConformalityReport, MetricsError> {
    check_connectivity(orig, mapped)?;
    let deg_orig = degenerate_face_mask(orig);
    let deg_mapped = degenerate_face_mask(mapped);
    let degenerate_faces = deg_orig.iter().zip(&deg_mapped).filter(|(a, b)| **a || **b).count();

    let per_face = angular_distortion(orig, mapped)?;
    let per_edge = lcr_deviation(orig, mapped)?;

    let angular = SummaryStats::over(per_face.iter().flatten().copied());
    let lcr = SummaryStats::over(per_edge.iter().filter_map(|(_, r)| *r));

    let ang_max = per_face.iter().flatten().copied().fold(0.0, f64::max);
    let angular_histogram = Histogram::over(per_face.iter().flatten().copied(), 0.0, ang_max);
    let lcr_histogram = Histogram::over(
        per_edge.iter().filter_map(|(_, r)| *r),
        lcr.mean - 4.0 * lcr.std,
        lcr.mean + 4.0 * lcr.std,
    );

    Ok(ConformalityReport {
        sphericity: sphericity(mapped).unwrap_or(0.0),
        angular,
        lcr,
        degenerate_faces,
        valid: degenerate_faces == 0,
        angular_histogram,
        lcr_histogram,
        per_face_angular_distortion: per_face,
        per_edge_lcr_ratio: per_edge,
    })
}

fn check_connectivity(orig: &TriangleMesh, mapped: &TriangleMesh) -> Result<(), MetricsError> {
    if orig.vertex_count() != mapped.vertex_count() || orig.faces() != mapped.faces() {
        return Err(MetricsError::ConnectivityMismatch);
    }
    Ok(())
}

fn degenerate_face_mask(mesh: &TriangleMesh) -> Vec<bool> {
    let mean = mesh.mean_face_area();
    (0..mesh.face_count()).map(|f| mesh.face_area(f) < DEGENERATE_AREA_RATIO * mean).collect()
}
