//! Symmetric eigendecomposition by cyclic Jacobi rotations.

use super::mat::Mat;
use crate::error::{Error, Result};

/// Sweep cap for the cyclic Jacobi iteration.
pub const MAX_SWEEPS: usize = 100;

/// Eigenvalues in descending order with matching orthonormal eigenvectors
/// stored as the columns of `vectors`.
#[derive(Debug, Clone)]
pub struct EigenPair {
    pub values: Vec<f64>,
    pub vectors: Mat,
}

impl EigenPair {
    pub fn dim(&self) -> usize {
        self.values.len()
    }

    /// Eigenvector `i` (0-based, in descending eigenvalue order).
    pub fn vector(&self, i: usize) -> Vec<f64> {
        self.vectors.col(i)
    }

    /// `Σ d_i v_i v_iᵀ`.
    pub fn reconstruct(&self) -> Mat {
        let n = self.dim();
        let mut out = Mat::zeros(n, n);
        for (i, &d) in self.values.iter().enumerate() {
            out.add_outer(d, &self.vector(i));
        }
        out
    }
}

fn off_diagonal_norm(a: &Mat) -> f64 {
    let n = a.rows();
    let mut s = 0.0;
    for i in 0..n {
        for j in (i + 1)..n {
            s += 2.0 * a[(i, j)] * a[(i, j)];
        }
    }
    s.sqrt()
}

/// Runs the Jacobi iteration on a working copy; returns the diagonalized
/// matrix and the accumulated rotations when requested.
fn jacobi(a: &Mat, want_vectors: bool) -> Result<(Vec<f64>, Option<Mat>)> {
    if !a.is_square() {
        return Err(Error::DimensionMismatch {
            op: "sym_eigen",
            expected: (a.rows(), a.rows()),
            got: a.shape(),
        });
    }
    let n = a.rows();
    let mut w = a.clone();
    w.symmetrize();
    let mut v = want_vectors.then(|| Mat::identity(n));
    let tol = 1e-12 * w.frobenius();

    let mut sweeps = 0;
    loop {
        let off = off_diagonal_norm(&w);
        if off <= tol || off == 0.0 {
            break;
        }
        if sweeps == MAX_SWEEPS {
            return Err(Error::NoConvergence {
                sweeps,
                off_norm: off,
            });
        }
        sweeps += 1;
        for p in 0..n {
            for q in (p + 1)..n {
                rotate(&mut w, v.as_mut(), p, q);
            }
        }
    }
    Ok((w.diag(), v))
}

/// Annihilates `w[(p, q)]` with one Jacobi rotation.
#[inline]
fn rotate(w: &mut Mat, v: Option<&mut Mat>, p: usize, q: usize) {
    let n = w.rows();
    let apq = w[(p, q)];
    if apq == 0.0 {
        return;
    }
    let app = w[(p, p)];
    let aqq = w[(q, q)];
    let theta = (aqq - app) / (2.0 * apq);
    let t = theta.signum() / (theta.abs() + (theta * theta + 1.0).sqrt());
    let c = 1.0 / (t * t + 1.0).sqrt();
    let s = t * c;
    let tau = s / (1.0 + c);

    w[(p, p)] = app - t * apq;
    w[(q, q)] = aqq + t * apq;
    w[(p, q)] = 0.0;
    w[(q, p)] = 0.0;

    let data = w.as_mut_slice();
    for r in 0..n {
        if r == p || r == q {
            continue;
        }
        let g = data[r * n + p];
        let h = data[r * n + q];
        let new_p = g - s * (h + g * tau);
        let new_q = h + s * (g - h * tau);
        data[r * n + p] = new_p;
        data[r * n + q] = new_q;
        data[p * n + r] = new_p;
        data[q * n + r] = new_q;
    }

    if let Some(v) = v {
        let data = v.as_mut_slice();
        for r in 0..n {
            let g = data[r * n + p];
            let h = data[r * n + q];
            data[r * n + p] = g - s * (h + g * tau);
            data[r * n + q] = h + s * (g - h * tau);
        }
    }
}

/// Descending order; ties keep the lower original index first.
fn descending_order(values: &[f64]) -> Vec<usize> {
    let mut idx: Vec<usize> = (0..values.len()).collect();
    idx.sort_by(|&i, &j| values[j].total_cmp(&values[i]).then(i.cmp(&j)));
    idx
}

/// Full symmetric eigendecomposition.
pub fn sym_eigen(a: &Mat) -> Result<EigenPair> {
    let (diag, v) = jacobi(a, true)?;
    let v = v.expect("vectors requested");
    let order = descending_order(&diag);
    let n = diag.len();
    let values = order.iter().map(|&i| diag[i]).collect();
    let vectors = Mat::from_fn(n, n, |r, c| v[(r, order[c])]);
    Ok(EigenPair { values, vectors })
}

/// Eigenvalues only, descending. Skips the rotation accumulation.
pub fn sym_eigenvalues(a: &Mat) -> Result<Vec<f64>> {
    let (mut diag, _) = jacobi(a, false)?;
    diag.sort_by(|x, y| y.total_cmp(x));
    Ok(diag)
}

/// Smallest and largest eigenvalue of a symmetric matrix.
pub fn lambda_extreme(a: &Mat) -> Result<(f64, f64)> {
    if a.rows() == 0 {
        return Ok((0.0, 0.0));
    }
    let values = sym_eigenvalues(a)?;
    Ok((values[values.len() - 1], values[0]))
}
