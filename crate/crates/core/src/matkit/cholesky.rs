use super::mat::{dot, Mat};
use crate::error::{Error, Result};

/// Lower-triangular Cholesky factor `L` with `A = L Lᵀ`.
#[derive(Debug, Clone)]
pub struct CholFactor {
    lower: Mat,
}

impl CholFactor {
    pub fn lower(&self) -> &Mat {
        &self.lower
    }

    pub fn dim(&self) -> usize {
        self.lower.rows()
    }

    /// `L Lᵀ`.
    pub fn reconstruct(&self) -> Mat {
        let l = &self.lower;
        let n = l.rows();
        Mat::from_fn(n, n, |i, j| {
            let m = i.min(j) + 1;
            dot(&l.row(i)[..m], &l.row(j)[..m])
        })
    }

    /// Solves `A x = b` for one right-hand side.
    pub fn solve_vec(&self, b: &[f64]) -> Result<Vec<f64>> {
        let n = self.dim();
        if b.len() != n {
            return Err(Error::DimensionMismatch {
                op: "chol_solve",
                expected: (n, 1),
                got: (b.len(), 1),
            });
        }
        let l = &self.lower;
        // L y = b
        let mut x = b.to_vec();
        for i in 0..n {
            let row = l.row(i);
            x[i] = (x[i] - dot(&row[..i], &x[..i])) / row[i];
        }
        // Lᵀ x = y, sweeping rows of L so access stays contiguous
        for i in (0..n).rev() {
            let row = l.row(i);
            x[i] /= row[i];
            let xi = x[i];
            for (xj, &lij) in x[..i].iter_mut().zip(&row[..i]) {
                *xj -= lij * xi;
            }
        }
        Ok(x)
    }
}

/// Pivot threshold used by [`chol_factor`]: `1e-12 · (1 + max diagonal entry)`.
pub fn pd_tolerance(a: &Mat) -> f64 {
    let max_diag = a.diag().into_iter().fold(0.0_f64, f64::max);
    1e-12 * (1.0 + max_diag)
}

/// Cholesky factorization of a symmetric matrix. Only the lower triangle is read.
pub fn chol_factor(a: &Mat) -> Result<CholFactor> {
    if !a.is_square() {
        return Err(Error::DimensionMismatch {
            op: "chol_factor",
            expected: (a.rows(), a.rows()),
            got: a.shape(),
        });
    }
    let n = a.rows();
    let tolerance = pd_tolerance(a);
    let mut l = Mat::zeros(n, n);
    for i in 0..n {
        for j in 0..=i {
            let s = a[(i, j)] - dot(&l.row(i)[..j], &l.row(j)[..j]);
            if i == j {
                if !(s > tolerance) {
                    return Err(Error::NotPositiveDefinite {
                        pivot: i,
                        value: s,
                        tolerance,
                    });
                }
                l[(i, i)] = s.sqrt();
            } else {
                l[(i, j)] = s / l[(j, j)];
            }
        }
    }
    Ok(CholFactor { lower: l })
}

/// Solves `A X = B` given the factor of `A`.
pub fn chol_solve(f: &CholFactor, b: &Mat) -> Result<Mat> {
    let n = f.dim();
    if b.rows() != n {
        return Err(Error::DimensionMismatch {
            op: "chol_solve",
            expected: (n, b.cols()),
            got: b.shape(),
        });
    }
    let mut x = Mat::zeros(n, b.cols());
    for j in 0..b.cols() {
        let col = f.solve_vec(&b.col(j))?;
        for (i, v) in col.into_iter().enumerate() {
            x[(i, j)] = v;
        }
    }
    Ok(x)
}

/// Inverse of a symmetric positive-definite matrix, symmetrized.
pub fn spd_inverse(a: &Mat) -> Result<Mat> {
    let f = chol_factor(a)?;
    let n = a.rows();
    // A⁻¹ = L⁻ᵀ L⁻¹; form M = L⁻¹ row by row then the Gram product.
    let l = f.lower();
    let mut linv = Mat::zeros(n, n);
    for j in 0..n {
        // column j of L⁻¹ by forward substitution on e_j
        linv[(j, j)] = 1.0 / l[(j, j)];
        for i in (j + 1)..n {
            let mut s = 0.0;
            for k in j..i {
                s += l[(i, k)] * linv[(k, j)];
            }
            linv[(i, j)] = -s / l[(i, i)];
        }
    }
    // (L⁻ᵀ L⁻¹)_ij = Σ_k linv_ki linv_kj, k ≥ max(i, j)
    let mut inv = Mat::zeros(n, n);
    for k in 0..n {
        let row = linv.row(k);
        for i in 0..=k {
            let ri = row[i];
            if ri == 0.0 {
                continue;
            }
            let out = inv.row_mut(i);
            for j in 0..=k {
                out[j] += ri * row[j];
            }
        }
    }
    inv.symmetrize();
    Ok(inv)
}

/// Unique minimizer `-A⁻¹ b` of `xᵀ A x + 2 bᵀ x + c` for positive-definite `A`.
pub fn quad_minimizer(a: &Mat, b: &[f64]) -> Result<Vec<f64>> {
    let f = chol_factor(a)?;
    let neg_b: Vec<f64> = b.iter().map(|x| -x).collect();
    f.solve_vec(&neg_b)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::matkit::testutil::{random_mat, random_spd, rng};

    #[test]
    fn identity_factor() {
        let f = chol_factor(&Mat::identity(2)).unwrap();
        assert_eq!(f.lower(), &Mat::identity(2));
    }

    #[test]
    fn diagonal_factor() {
        let f = chol_factor(&Mat::from_diag(&[4.0, 1.0])).unwrap();
        assert_eq!(f.lower(), &Mat::from_rows(&[&[2.0, 0.0], &[0.0, 1.0]]));
    }

    #[test]
    fn random_spd_reconstructs() {
        let mut r = rng(11);
        let m = random_mat(&mut r, 5, 5);
        let mut a = m.transpose().matmul(&m).unwrap();
        a.add_scaled(1.0, &Mat::identity(5)).unwrap();
        let f = chol_factor(&a).unwrap();
        assert!(f.reconstruct().max_abs_diff(&a) <= 1e-10);
        for i in 0..5 {
            assert!(f.lower()[(i, i)] > 0.0);
        }
    }

    #[test]
    fn rejects_indefinite_and_singular() {
        let indefinite = Mat::from_rows(&[&[1.0, 2.0], &[2.0, 1.0]]);
        assert!(matches!(
            chol_factor(&indefinite),
            Err(Error::NotPositiveDefinite { pivot: 1, .. })
        ));
        assert!(chol_factor(&Mat::from_diag(&[1.0, 0.0])).is_err());
        assert!(chol_factor(&Mat::zeros(2, 3)).is_err());
    }

    #[test]
    fn solve_examples() {
        let f = chol_factor(&Mat::identity(3)).unwrap();
        let b = Mat::from_rows(&[&[1.0, 2.0], &[3.0, 4.0], &[5.0, 6.0]]);
        assert_eq!(chol_solve(&f, &b).unwrap(), b);

        let f = chol_factor(&Mat::from_diag(&[2.0, 2.0])).unwrap();
        let x = chol_solve(&f, &Mat::from_rows(&[&[2.0], &[4.0]])).unwrap();
        assert!(x.max_abs_diff(&Mat::from_rows(&[&[1.0], &[2.0]])) < 1e-15);

        assert!(chol_solve(&f, &Mat::zeros(3, 1)).is_err());
    }

    #[test]
    fn solve_residual_random() {
        let mut r = rng(12);
        let a = random_spd(&mut r, 6);
        let b = random_mat(&mut r, 6, 3);
        let x = chol_solve(&chol_factor(&a).unwrap(), &b).unwrap();
        let resid = a.matmul(&x).unwrap().sub(&b).unwrap();
        assert!(resid.frobenius() <= 1e-10 * (1.0 + b.frobenius()));
    }

    #[test]
    fn inverse_examples() {
        assert_eq!(spd_inverse(&Mat::identity(3)).unwrap(), Mat::identity(3));
        assert_eq!(
            spd_inverse(&Mat::from_diag(&[4.0, 1.0])).unwrap(),
            Mat::from_diag(&[0.25, 1.0])
        );
        let mut r = rng(13);
        for n in 1..9 {
            let a = random_spd(&mut r, n);
            let inv = spd_inverse(&a).unwrap();
            assert_eq!(inv.asymmetry(), 0.0);
            let prod = inv.matmul(&a).unwrap();
            assert!(prod.max_abs_diff(&Mat::identity(n)) <= 1e-9);
        }
    }

    #[test]
    fn quad_minimizer_examples() {
        assert_eq!(
            quad_minimizer(&Mat::identity(3), &[0.0; 3]).unwrap(),
            vec![0.0; 3]
        );
        assert_eq!(
            quad_minimizer(&Mat::identity(2), &[1.0, -2.0]).unwrap(),
            vec![-1.0, 2.0]
        );
        assert!(quad_minimizer(&Mat::from_diag(&[1.0, -1.0]), &[0.0, 0.0]).is_err());
    }

    #[test]
    fn quad_minimizer_beats_perturbations() {
        use rand::Rng;
        let mut r = rng(14);
        let a = random_spd(&mut r, 4);
        let b: Vec<f64> = (0..4).map(|_| r.gen_range(-1.0..1.0)).collect();
        let f = |x: &[f64]| dot(x, &a.matvec(x).unwrap()) + 2.0 * dot(&b, x) + 3.0;
        let x = quad_minimizer(&a, &b).unwrap();
        let grad: Vec<f64> = a
            .matvec(&x)
            .unwrap()
            .iter()
            .zip(&b)
            .map(|(ax, bi)| 2.0 * ax + 2.0 * bi)
            .collect();
        assert!(grad.iter().all(|g| g.abs() <= 1e-10));
        let fx = f(&x);
        for _ in 0..100 {
            let xp: Vec<f64> = x.iter().map(|xi| xi + r.gen_range(-0.1..0.1)).collect();
            assert!(fx <= f(&xp));
        }
    }
}
