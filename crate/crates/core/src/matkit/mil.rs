//! Matrix inversion lemma.
//!
//! `(A + U C V)⁻¹ = A⁻¹ - A⁻¹ U (C⁻¹ + V A⁻¹ U)⁻¹ V A⁻¹`
//!
//! [`mil_update`] is the general form. [`sym_mil_update`] is the symmetric
//! specialization `U = Φᵀ, V = Φ` that the covariance-form estimators run
//! every step; it never forms anything larger than `n x q` besides the
//! updated matrix itself.

use super::mat::{dot, Mat};
use crate::error::{Error, Result};

/// Inverse of a small general matrix by Gauss-Jordan with partial pivoting.
pub fn lu_inverse(a: &Mat) -> Result<Mat> {
    if !a.is_square() {
        return Err(Error::DimensionMismatch {
            op: "lu_inverse",
            expected: (a.rows(), a.rows()),
            got: a.shape(),
        });
    }
    let n = a.rows();
    let scale = a.max_abs();
    let tol = f64::EPSILON * (n as f64) * scale;
    let mut m = a.clone();
    let mut inv = Mat::identity(n);
    for col in 0..n {
        let (piv, piv_val) = (col..n)
            .map(|r| (r, m[(r, col)].abs()))
            .fold((col, -1.0), |best, cur| if cur.1 > best.1 { cur } else { best });
        if !(piv_val > tol) {
            return Err(Error::SingularInnerMatrix {
                pivot: col,
                value: m[(piv, col)],
            });
        }
        if piv != col {
            for j in 0..n {
                m.as_mut_slice().swap(piv * n + j, col * n + j);
                inv.as_mut_slice().swap(piv * n + j, col * n + j);
            }
        }
        let d = m[(col, col)];
        for j in 0..n {
            m[(col, j)] /= d;
            inv[(col, j)] /= d;
        }
        for r in 0..n {
            if r == col {
                continue;
            }
            let f = m[(r, col)];
            if f == 0.0 {
                continue;
            }
            for j in 0..n {
                m[(r, j)] -= f * m[(col, j)];
                inv[(r, j)] -= f * inv[(col, j)];
            }
        }
    }
    Ok(inv)
}

/// `(A + U C V)⁻¹` from `A⁻¹`, at `O(q n²)` cost for `q = C.rows()`.
pub fn mil_update(a_inv: &Mat, u: &Mat, c: &Mat, v: &Mat) -> Result<Mat> {
    let n = a_inv.rows();
    let q = c.rows();
    if !a_inv.is_square() || u.shape() != (n, q) || v.shape() != (q, n) || !c.is_square() {
        return Err(Error::DimensionMismatch {
            op: "mil_update",
            expected: (n, q),
            got: u.shape(),
        });
    }
    let c_inv = lu_inverse(c)?;
    let ainv_u = a_inv.matmul(u)?; // n x q
    let v_ainv = v.matmul(a_inv)?; // q x n
    let inner = c_inv.add(&v.matmul(&ainv_u)?)?;
    let inner_inv = lu_inverse(&inner)?;
    let left = ainv_u.matmul(&inner_inv)?; // n x q
    let mut out = a_inv.clone();
    for i in 0..n {
        let li = left.row(i);
        let out_row = out.row_mut(i);
        for (a, &lia) in li.iter().enumerate() {
            if lia == 0.0 {
                continue;
            }
            for (o, &va) in out_row.iter_mut().zip(v_ainv.row(a)) {
                *o -= lia * va;
            }
        }
    }
    Ok(out)
}

/// `LDLᵀ` pivots of a small symmetric matrix, without pivoting.
///
/// Returns the `D` entries and the unit-lower factor; fails on a pivot that is
/// zero relative to the matrix scale.
fn ldl_small(s: &Mat) -> Result<(Vec<f64>, Mat)> {
    let q = s.rows();
    let tol = 1e-13 * s.max_abs().max(f64::MIN_POSITIVE);
    let mut l = Mat::identity(q);
    let mut d = vec![0.0; q];
    for j in 0..q {
        let mut dj = s[(j, j)];
        for k in 0..j {
            dj -= l[(j, k)] * l[(j, k)] * d[k];
        }
        if !(dj.abs() > tol) {
            return Err(Error::SingularInnerMatrix { pivot: j, value: dj });
        }
        d[j] = dj;
        for i in (j + 1)..q {
            let mut sij = s[(i, j)];
            for k in 0..j {
                sij -= l[(i, k)] * l[(j, k)] * d[k];
            }
            l[(i, j)] = sij / dj;
        }
    }
    Ok((d, l))
}

fn ldl_inverse(d: &[f64], l: &Mat) -> Mat {
    let q = d.len();
    // L⁻¹ by forward substitution, then L⁻ᵀ D⁻¹ L⁻¹
    let mut linv = Mat::identity(q);
    for j in 0..q {
        for i in (j + 1)..q {
            let mut s = 0.0;
            for k in j..i {
                s += l[(i, k)] * linv[(k, j)];
            }
            linv[(i, j)] = -s;
        }
    }
    let mut inv = Mat::from_fn(q, q, |i, j| {
        (0..q).map(|k| linv[(k, i)] * linv[(k, j)] / d[k]).sum()
    });
    inv.symmetrize();
    inv
}

/// In-place symmetric inversion-lemma update of a covariance matrix.
///
/// With `P` symmetric positive definite, replaces it by
/// `(P⁻¹ + Φᵀ W Φ)⁻¹ = P - P Φᵀ (W⁻¹ + Φ P Φᵀ)⁻¹ Φ P`, given `W⁻¹` (which
/// may be indefinite), and returns `P_new · r` for the extra vector `r` at no
/// additional pass over `P`.
///
/// The inner matrix must carry the same inertia as `W⁻¹`; otherwise the
/// updated matrix would not be positive definite and `SingularInnerMatrix`
/// is returned with `P` left untouched.
pub fn sym_mil_update(p: &mut Mat, phi: &Mat, weight_inv: &Mat, r: &[f64]) -> Result<Vec<f64>> {
    let n = p.rows();
    let q = phi.rows();
    if !p.is_square() || phi.cols() != n || weight_inv.shape() != (q, q) || r.len() != n {
        return Err(Error::DimensionMismatch {
            op: "sym_mil_update",
            expected: (q, n),
            got: phi.shape(),
        });
    }

    // One pass over P: U = P Φᵀ (n x q, row-major) and z = P r.
    let mut u = vec![0.0; n * q];
    let mut z = vec![0.0; n];
    for i in 0..n {
        let pi = p.row(i);
        for a in 0..q {
            u[i * q + a] = dot(pi, phi.row(a));
        }
        z[i] = dot(pi, r);
    }

    // S = W⁻¹ + Φ U
    let mut s = weight_inv.clone();
    for a in 0..q {
        let phi_a = phi.row(a);
        for b in 0..q {
            let mut acc = 0.0;
            for (i, &x) in phi_a.iter().enumerate() {
                acc += x * u[i * q + b];
            }
            s[(a, b)] += acc;
        }
    }
    s.symmetrize();

    let (d, l) = ldl_small(&s)?;
    let (w_d, _) = ldl_small(weight_inv)?;
    let negatives = |v: &[f64]| v.iter().filter(|x| **x < 0.0).count();
    if negatives(&d) != negatives(&w_d) {
        let (pivot, value) = d
            .iter()
            .enumerate()
            .zip(&w_d)
            .find(|((_, a), b)| (**a < 0.0) != (**b < 0.0))
            .map(|((i, a), _)| (i, *a))
            .unwrap_or((q - 1, d[q - 1]));
        return Err(Error::SingularInnerMatrix { pivot, value });
    }
    let s_inv = ldl_inverse(&d, &l);

    // G = U S⁻¹ (n x q)
    let mut g = vec![0.0; n * q];
    for i in 0..n {
        for b in 0..q {
            let mut acc = 0.0;
            for a in 0..q {
                acc += u[i * q + a] * s_inv[(a, b)];
            }
            g[i * q + b] = acc;
        }
    }

    // P_new r = z - G (Uᵀ r)
    let mut ut_r = vec![0.0; q];
    for i in 0..n {
        for a in 0..q {
            ut_r[a] += u[i * q + a] * r[i];
        }
    }
    for i in 0..n {
        z[i] -= dot(&g[i * q..(i + 1) * q], &ut_r);
    }

    // P_new = P - G Uᵀ on the upper triangle, mirrored.
    let data = p.as_mut_slice();
    for i in 0..n {
        let gi = &g[i * q..(i + 1) * q];
        let row = &mut data[i * n..(i + 1) * n];
        for j in i..n {
            row[j] -= dot(gi, &u[j * q..(j + 1) * q]);
        }
    }
    for i in 0..n {
        for j in (i + 1)..n {
            data[j * n + i] = data[i * n + j];
        }
    }
    Ok(z)
}
