//! Symmetric sparse matrix stored as the upper triangle in sorted
//! coordinate form. This is the exchange format between FEM assembly, the
//! linear solver and the flow loop; it is not a general sparse algebra.

use std::io::Write;

/// Symmetric matrix holding entries with `row <= col` only, sorted
/// lexicographically with duplicates merged. Triplet canonicalization uses a
/// stable sort, so assembly order determines summation order and repeated
/// assemblies of the same mesh are bitwise identical.
#[derive(Debug, Clone, PartialEq)]
pub struct SparseSymMatrix {
    dim: usize,
    rows: Vec<u32>,
    cols: Vec<u32>,
    vals: Vec<f64>,
}

impl SparseSymMatrix {
    /// Builds from triplets in either triangle; (r, c) and (c, r) denote the
    /// same entry and duplicates are summed.
    pub fn from_triplets(dim: usize, triplets: impl IntoIterator<Item = (u32, u32, f64)>) -> Self {
        let mut items: Vec<(u32, u32, f64)> = triplets
            .into_iter()
            .map(|(r, c, v)| {
                assert!((r as usize) < dim && (c as usize) < dim, "triplet ({r}, {c}) out of range for dim {dim}");
                if r <= c {
                    (r, c, v)
                } else {
                    (c, r, v)
                }
            })
            .collect();
        items.sort_by_key(|&(r, c, _)| (r, c));
        let mut rows = Vec::new();
        let mut cols = Vec::new();
        let mut vals = Vec::new();
        for (r, c, v) in items {
            if rows.last() == Some(&r) && cols.last() == Some(&c) {
                *vals.last_mut().unwrap() += v;
            } else {
                rows.push(r);
                cols.push(c);
                vals.push(v);
            }
        }
        Self { dim, rows, cols, vals }
    }

    pub fn zeros(dim: usize) -> Self {
        Self { dim, rows: Vec::new(), cols: Vec::new(), vals: Vec::new() }
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    /// Stored (upper-triangle) entry count.
    pub fn nnz(&self) -> usize {
        self.vals.len()
    }

    /// Upper-triangle entries in sorted order.
    pub fn entries(&self) -> impl Iterator<Item = (usize, usize, f64)> + '_ {
        (0..self.vals.len()).map(|ix| (self.rows[ix] as usize, self.cols[ix] as usize, self.vals[ix]))
    }

    pub fn is_finite(&self) -> bool {
        self.vals.iter().all(|v| v.is_finite())
    }

    pub fn diagonal(&self) -> Vec<f64> {
        let mut d = vec![0.0; self.dim];
        for (r, c, v) in self.entries() {
            if r == c {
                d[r] = v;
            }
        }
        d
    }

    /// y = A x over the full (mirrored) matrix.
    pub fn mul_vec(&self, x: &[f64]) -> Vec<f64> {
        assert_eq!(x.len(), self.dim);
        let mut y = vec![0.0; self.dim];
        for (r, c, v) in self.entries() {
            y[r] += v * x[c];
            if r != c {
                y[c] += v * x[r];
            }
        }
        y
    }

    /// x^T A x.
    pub fn quadratic_form(&self, x: &[f64]) -> f64 {
        assert_eq!(x.len(), self.dim);
        let mut acc = 0.0;
        for (r, c, v) in self.entries() {
            if r == c {
                acc += v * x[r] * x[r];
            } else {
                acc += 2.0 * v * x[r] * x[c];
            }
        }
        acc
    }

    pub fn row_sums(&self) -> Vec<f64> {
        let mut s = vec![0.0; self.dim];
        for (r, c, v) in self.entries() {
            s[r] += v;
            if r != c {
                s[c] += v;
            }
        }
        s
    }

    /// Sum of all (mirrored) entries.
    pub fn total_sum(&self) -> f64 {
        self.row_sums().iter().sum()
    }

    /// alpha * A + beta * B by merging the sorted entry lists.
    pub fn lin_comb(alpha: f64, a: &Self, beta: f64, b: &Self) -> Self {
        assert_eq!(a.dim, b.dim, "dimension mismatch");
        let mut rows = Vec::with_capacity(a.nnz() + b.nnz());
        let mut cols = Vec::with_capacity(a.nnz() + b.nnz());
        let mut vals = Vec::with_capacity(a.nnz() + b.nnz());
        let (mut ia, mut ib) = (0, 0);
        while ia < a.nnz() || ib < b.nnz() {
            let ka = if ia < a.nnz() { Some((a.rows[ia], a.cols[ia])) } else { None };
            let kb = if ib < b.nnz() { Some((b.rows[ib], b.cols[ib])) } else { None };
            let (key, val) = match (ka, kb) {
                (Some(ka), Some(kb)) if ka == kb => {
                    let v = alpha * a.vals[ia] + beta * b.vals[ib];
                    ia += 1;
                    ib += 1;
                    (ka, v)
                }
                (Some(ka), Some(kb)) if ka < kb => {
                    let v = alpha * a.vals[ia];
                    ia += 1;
                    (ka, v)
                }
                (Some(_), Some(kb)) => {
                    let v = beta * b.vals[ib];
                    ib += 1;
                    (kb, v)
                }
                (Some(ka), None) => {
                    let v = alpha * a.vals[ia];
                    ia += 1;
                    (ka, v)
                }
                (None, Some(kb)) => {
                    let v = beta * b.vals[ib];
                    ib += 1;
                    (kb, v)
                }
                (None, None) => unreachable!(),
            };
            rows.push(key.0);
            cols.push(key.1);
            vals.push(val);
        }
        Self { dim: a.dim, rows, cols, vals }
    }

    /// MatrixMarket `coordinate real symmetric` dump (lower triangle,
    /// 1-based), for offline inspection of assembled operators.
    pub fn write_matrix_market(&self, mut w: impl Write) -> std::io::Result<()> {
        writeln!(w, "%%MatrixMarket matrix coordinate real symmetric")?;
        writeln!(w, "{} {} {}", self.dim, self.dim, self.nnz())?;
        for (r, c, v) in self.entries() {
            // stored upper triangle transposes to the lower triangle
            writeln!(w, "{} {} {:.16e}", c + 1, r + 1, v)?;
        }
        Ok(())
    }
}
