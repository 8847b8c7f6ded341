//! Dense vector/matrix kernels shared by the rest of the crate.
//!
//! Everything is `f64`; the decomposition optimizer and the residual
//! comparisons downstream need the precision headroom.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Row-major dense matrix.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Matrix {
    pub rows: usize,
    pub cols: usize,
    pub data: Vec<f64>,
}

impl Matrix {
    pub fn new(rows: usize, cols: usize, data: Vec<f64>) -> Result<Self> {
        if data.len() != rows * cols {
            return Err(Error::DimensionMismatch {
                context: "Matrix::new",
                expected: rows * cols,
                got: data.len(),
            });
        }
        Ok(Matrix { rows, cols, data })
    }

    pub fn zeros(rows: usize, cols: usize) -> Self {
        Matrix {
            rows,
            cols,
            data: vec![0.0; rows * cols],
        }
    }

    pub fn identity(n: usize) -> Self {
        let mut m = Matrix::zeros(n, n);
        for i in 0..n {
            m.data[i * n + i] = 1.0;
        }
        m
    }

    pub fn from_rows(rows: &[Vec<f64>]) -> Result<Self> {
        let r = rows.len();
        let c = rows.first().map_or(0, |v| v.len());
        let mut data = Vec::with_capacity(r * c);
        for row in rows {
            if row.len() != c {
                return Err(Error::DimensionMismatch {
                    context: "Matrix::from_rows",
                    expected: c,
                    got: row.len(),
                });
            }
            data.extend_from_slice(row);
        }
        Matrix::new(r, c, data)
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.data[i * self.cols + j]
    }

    #[inline]
    pub fn set(&mut self, i: usize, j: usize, v: f64) {
        self.data[i * self.cols + j] = v;
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.data[i * self.cols..(i + 1) * self.cols]
    }

    /// y = A x
    pub fn matvec(&self, x: &[f64]) -> Result<Vec<f64>> {
        if x.len() != self.cols {
            return Err(Error::DimensionMismatch {
                context: "matvec",
                expected: self.cols,
                got: x.len(),
            });
        }
        let mut y = vec![0.0; self.rows];
        for i in 0..self.rows {
            let row = self.row(i);
            let mut acc = 0.0;
            for j in 0..self.cols {
                acc += row[j] * x[j];
            }
            y[i] = acc;
        }
        Ok(y)
    }

    /// y = A^T x
    pub fn matvec_transposed(&self, x: &[f64]) -> Result<Vec<f64>> {
        if x.len() != self.rows {
            return Err(Error::DimensionMismatch {
                context: "matvec_transposed",
                expected: self.rows,
                got: x.len(),
            });
        }
        let mut y = vec![0.0; self.cols];
        for i in 0..self.rows {
            let row = self.row(i);
            let xi = x[i];
            for j in 0..self.cols {
                y[j] += row[j] * xi;
            }
        }
        Ok(y)
    }
}

/// Euclidean inner product.
pub fn inner(u: &[f64], v: &[f64]) -> Result<f64> {
    if u.len() != v.len() {
        return Err(Error::DimensionMismatch {
            context: "inner",
            expected: u.len(),
            got: v.len(),
        });
    }
    Ok(u.iter().zip(v).map(|(a, b)| a * b).sum())
}

/// Euclidean norm.
pub fn l2_norm(v: &[f64]) -> f64 {
    v.iter().map(|x| x * x).sum::<f64>().sqrt()
}

/// Numerically stabilized softmax: subtracts the maximum before
/// exponentiating, so large inputs do not overflow.
pub fn softmax(v: &[f64]) -> Vec<f64> {
    let max = v.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let mut out: Vec<f64> = v.iter().map(|x| (x - max).exp()).collect();
    let sum: f64 = out.iter().sum();
    for x in &mut out {
        *x /= sum;
    }
    out
}

/// Components of `v` sorted in ascending order.
pub fn vecsort_asc(v: &[f64]) -> Vec<f64> {
    let mut out = v.to_vec();
    out.sort_by(|a, b| a.partial_cmp(b).expect("non-finite value in vecsort_asc"));
    out
}

/// Indices ordering `v` from largest to smallest. Ties break toward the
/// lower index so that sorted reports are byte-for-byte reproducible.
pub fn argsort_desc(v: &[f64]) -> Vec<usize> {
    let mut idx: Vec<usize> = (0..v.len()).collect();
    idx.sort_by(|&a, &b| {
        v[b].partial_cmp(&v[a])
            .expect("non-finite value in argsort_desc")
            .then(a.cmp(&b))
    });
    idx
}

/// Indices ordering `v` from smallest to largest, ties toward lower index.
pub fn argsort_asc(v: &[f64]) -> Vec<usize> {
    let mut idx: Vec<usize> = (0..v.len()).collect();
    idx.sort_by(|&a, &b| {
        v[a].partial_cmp(&v[b])
            .expect("non-finite value in argsort_asc")
            .then(a.cmp(&b))
    });
    idx
}

/// Largest singular value of `a` estimated by power iteration on A^T A.
///
/// Converges when two successive estimates differ by less than `tol`
/// relative. Returns 0 for the zero matrix.
pub fn operator_norm(a: &Matrix, max_iters: usize, tol: f64) -> f64 {
    assert!(max_iters >= 1 && tol > 0.0);
    if a.data.iter().all(|&x| x == 0.0) {
        return 0.0;
    }
    // Deterministic start: a fixed non-degenerate direction.
    let mut v: Vec<f64> = (0..a.cols)
        .map(|j| 1.0 + (j as f64) / (a.cols as f64 + 1.0))
        .collect();
    let n = l2_norm(&v);
    for x in &mut v {
        *x /= n;
    }
    let mut est = 0.0;
    for _ in 0..max_iters {
        let av = a.matvec(&v).expect("shape checked");
        let atav = a.matvec_transposed(&av).expect("shape checked");
        let norm = l2_norm(&atav);
        if norm == 0.0 {
            return 0.0;
        }
        let new_est = l2_norm(&av);
        for (x, y) in v.iter_mut().zip(&atav) {
            *x = y / norm;
        }
        if est > 0.0 && ((new_est - est) / new_est).abs() < tol {
            return new_est;
        }
        est = new_est;
    }
    est
}

/// Smallest singular value of `a`, via the eigenvalues of the Gram matrix
/// of its columns (cyclic Jacobi iteration). Intended for the small
/// matrices arising in corpus diagnostics.
pub fn smallest_singular_value(a: &Matrix) -> f64 {
    let c = a.cols;
    // Gram matrix G = A^T A (c x c, symmetric PSD).
    let mut g = vec![0.0; c * c];
    for i in 0..c {
        for j in i..c {
            let mut acc = 0.0;
            for r in 0..a.rows {
                acc += a.get(r, i) * a.get(r, j);
            }
            g[i * c + j] = acc;
            g[j * c + i] = acc;
        }
    }
    let eig = symmetric_eigenvalues(&mut g, c);
    let min = eig.iter().cloned().fold(f64::INFINITY, f64::min);
    min.max(0.0).sqrt()
}

/// Eigenvalues of a symmetric matrix stored row-major in `g`, computed by
/// the cyclic Jacobi rotation method. `g` is destroyed.
fn symmetric_eigenvalues(g: &mut [f64], n: usize) -> Vec<f64> {
    if n == 1 {
        return vec![g[0]];
    }
    let max_sweeps = 100;
    for _ in 0..max_sweeps {
        let mut off = 0.0;
        for i in 0..n {
            for j in (i + 1)..n {
                off += g[i * n + j] * g[i * n + j];
            }
        }
        if off.sqrt() < 1e-14 * (1.0 + frobenius(g, n)) {
            break;
        }
        for p in 0..n {
            for q in (p + 1)..n {
                let apq = g[p * n + q];
                if apq.abs() < 1e-300 {
                    continue;
                }
                let app = g[p * n + p];
                let aqq = g[q * n + q];
                let theta = (aqq - app) / (2.0 * apq);
                let t = theta.signum() / (theta.abs() + (theta * theta + 1.0).sqrt());
                let cos = 1.0 / (t * t + 1.0).sqrt();
                let sin = t * cos;
                for k in 0..n {
                    let gkp = g[k * n + p];
                    let gkq = g[k * n + q];
                    g[k * n + p] = cos * gkp - sin * gkq;
                    g[k * n + q] = sin * gkp + cos * gkq;
                }
                for k in 0..n {
                    let gpk = g[p * n + k];
                    let gqk = g[q * n + k];
                    g[p * n + k] = cos * gpk - sin * gqk;
                    g[q * n + k] = sin * gpk + cos * gqk;
                }
            }
        }
    }
    (0..n).map(|i| g[i * n + i]).collect()
}

fn frobenius(g: &[f64], n: usize) -> f64 {
    g[..n * n].iter().map(|x| x * x).sum::<f64>().sqrt()
}

/// Checks that every entry is finite; used at data-ingestion boundaries.
pub fn ensure_finite(v: &[f64], context: &'static str) -> Result<()> {
    if v.iter().any(|x| !x.is_finite()) {
        return Err(Error::NonFinite(context));
    }
    Ok(())
}
