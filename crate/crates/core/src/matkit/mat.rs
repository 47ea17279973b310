use std::fmt;
use std::ops::{Index, IndexMut};

use crate::error::{Error, Result};

/// Dense real matrix, row-major: entry `(i, j)` lives at `data[i * cols + j]`.
#[derive(Clone, PartialEq)]
pub struct Mat {
    rows: usize,
    cols: usize,
    data: Vec<f64>,
}

impl Mat {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        Mat {
            rows,
            cols,
            data: vec![0.0; rows * cols],
        }
    }

    pub fn identity(n: usize) -> Self {
        let mut m = Mat::zeros(n, n);
        for i in 0..n {
            m.data[i * n + i] = 1.0;
        }
        m
    }

    /// Builds a matrix from row-major data, rejecting bad lengths and
    /// non-finite entries.
    pub fn from_vec(rows: usize, cols: usize, data: Vec<f64>) -> Result<Self> {
        if data.len() != rows * cols {
            return Err(Error::InvalidData(format!(
                "{} entries for a {rows}x{cols} matrix",
                data.len()
            )));
        }
        if let Some(pos) = data.iter().position(|x| !x.is_finite()) {
            return Err(Error::InvalidData(format!(
                "non-finite entry at ({}, {})",
                pos / cols.max(1),
                pos % cols.max(1)
            )));
        }
        Ok(Mat { rows, cols, data })
    }

    /// Panics on ragged input; intended for literals.
    pub fn from_rows(rows: &[&[f64]]) -> Self {
        let r = rows.len();
        let c = rows.first().map_or(0, |row| row.len());
        let mut data = Vec::with_capacity(r * c);
        for row in rows {
            assert_eq!(row.len(), c, "ragged rows");
            data.extend_from_slice(row);
        }
        Mat {
            rows: r,
            cols: c,
            data,
        }
    }

    pub fn from_fn(rows: usize, cols: usize, mut f: impl FnMut(usize, usize) -> f64) -> Self {
        let mut data = Vec::with_capacity(rows * cols);
        for i in 0..rows {
            for j in 0..cols {
                data.push(f(i, j));
            }
        }
        Mat { rows, cols, data }
    }

    pub fn from_diag(diag: &[f64]) -> Self {
        let n = diag.len();
        let mut m = Mat::zeros(n, n);
        for (i, &d) in diag.iter().enumerate() {
            m.data[i * n + i] = d;
        }
        m
    }

    /// Column vector (n x 1).
    pub fn column(v: &[f64]) -> Self {
        Mat {
            rows: v.len(),
            cols: 1,
            data: v.to_vec(),
        }
    }

    /// Row vector (1 x n).
    pub fn row_vector(v: &[f64]) -> Self {
        Mat {
            rows: 1,
            cols: v.len(),
            data: v.to_vec(),
        }
    }

    #[inline]
    pub fn rows(&self) -> usize {
        self.rows
    }

    #[inline]
    pub fn cols(&self) -> usize {
        self.cols
    }

    #[inline]
    pub fn shape(&self) -> (usize, usize) {
        (self.rows, self.cols)
    }

    pub fn is_square(&self) -> bool {
        self.rows == self.cols
    }

    #[inline]
    pub fn as_slice(&self) -> &[f64] {
        &self.data
    }

    #[inline]
    pub fn as_mut_slice(&mut self) -> &mut [f64] {
        &mut self.data
    }

    pub fn into_vec(self) -> Vec<f64> {
        self.data
    }

    #[inline]
    pub fn row(&self, i: usize) -> &[f64] {
        &self.data[i * self.cols..(i + 1) * self.cols]
    }

    #[inline]
    pub fn row_mut(&mut self, i: usize) -> &mut [f64] {
        &mut self.data[i * self.cols..(i + 1) * self.cols]
    }

    pub fn col(&self, j: usize) -> Vec<f64> {
        (0..self.rows).map(|i| self.data[i * self.cols + j]).collect()
    }

    pub fn diag(&self) -> Vec<f64> {
        (0..self.rows.min(self.cols))
            .map(|i| self.data[i * self.cols + i])
            .collect()
    }

    pub fn trace(&self) -> f64 {
        self.diag().iter().sum()
    }

    pub fn transpose(&self) -> Mat {
        let mut t = Mat::zeros(self.cols, self.rows);
        for i in 0..self.rows {
            for j in 0..self.cols {
                t.data[j * self.rows + i] = self.data[i * self.cols + j];
            }
        }
        t
    }

    pub fn matmul(&self, other: &Mat) -> Result<Mat> {
        if self.cols != other.rows {
            return Err(Error::DimensionMismatch {
                op: "matmul",
                expected: (self.cols, other.cols),
                got: other.shape(),
            });
        }
        let mut out = Mat::zeros(self.rows, other.cols);
        for i in 0..self.rows {
            let out_row = &mut out.data[i * other.cols..(i + 1) * other.cols];
            for (k, &a) in self.row(i).iter().enumerate() {
                if a == 0.0 {
                    continue;
                }
                axpy(a, other.row(k), out_row);
            }
        }
        Ok(out)
    }

    pub fn matvec(&self, x: &[f64]) -> Result<Vec<f64>> {
        if self.cols != x.len() {
            return Err(Error::DimensionMismatch {
                op: "matvec",
                expected: (self.cols, 1),
                got: (x.len(), 1),
            });
        }
        Ok((0..self.rows).map(|i| dot(self.row(i), x)).collect())
    }

    /// `selfᵀ · x`.
    pub fn tr_matvec(&self, x: &[f64]) -> Result<Vec<f64>> {
        if self.rows != x.len() {
            return Err(Error::DimensionMismatch {
                op: "tr_matvec",
                expected: (self.rows, 1),
                got: (x.len(), 1),
            });
        }
        let mut out = vec![0.0; self.cols];
        for (i, &xi) in x.iter().enumerate() {
            axpy(xi, self.row(i), &mut out);
        }
        Ok(out)
    }

    fn check_same_shape(&self, other: &Mat, op: &'static str) -> Result<()> {
        if self.shape() != other.shape() {
            return Err(Error::DimensionMismatch {
                op,
                expected: self.shape(),
                got: other.shape(),
            });
        }
        Ok(())
    }

    pub fn add(&self, other: &Mat) -> Result<Mat> {
        let mut out = self.clone();
        out.add_scaled(1.0, other)?;
        Ok(out)
    }

    pub fn sub(&self, other: &Mat) -> Result<Mat> {
        let mut out = self.clone();
        out.add_scaled(-1.0, other)?;
        Ok(out)
    }

    /// `self += alpha · other`.
    pub fn add_scaled(&mut self, alpha: f64, other: &Mat) -> Result<()> {
        self.check_same_shape(other, "add_scaled")?;
        axpy(alpha, &other.data, &mut self.data);
        Ok(())
    }

    pub fn scale(&self, alpha: f64) -> Mat {
        let mut out = self.clone();
        out.data.iter_mut().for_each(|x| *x *= alpha);
        out
    }

    /// `self += alpha · u uᵀ`.
    pub fn add_outer(&mut self, alpha: f64, u: &[f64]) {
        debug_assert!(self.is_square() && u.len() == self.rows);
        let n = self.cols;
        for (i, &ui) in u.iter().enumerate() {
            if ui == 0.0 {
                continue;
            }
            axpy(alpha * ui, u, &mut self.data[i * n..(i + 1) * n]);
        }
    }

    /// `self += φᵀ W φ` for a `p x n` regressor and `p x p` weight.
    pub fn add_gram(&mut self, phi: &Mat, weight: &Mat) -> Result<()> {
        if !self.is_square() || phi.cols != self.rows {
            return Err(Error::DimensionMismatch {
                op: "add_gram",
                expected: (self.rows, self.rows),
                got: phi.shape(),
            });
        }
        if weight.shape() != (phi.rows, phi.rows) {
            return Err(Error::DimensionMismatch {
                op: "add_gram",
                expected: (phi.rows, phi.rows),
                got: weight.shape(),
            });
        }
        // W φ, p x n
        let wphi = weight.matmul(phi)?;
        let n = self.cols;
        for a in 0..phi.rows {
            let phi_a = phi.row(a);
            let wphi_a = wphi.row(a);
            for (i, &pi) in phi_a.iter().enumerate() {
                if pi == 0.0 {
                    continue;
                }
                axpy(pi, wphi_a, &mut self.data[i * n..(i + 1) * n]);
            }
        }
        Ok(())
    }

    /// Replaces `self` by `(self + selfᵀ) / 2`.
    pub fn symmetrize(&mut self) {
        debug_assert!(self.is_square());
        let n = self.rows;
        for i in 0..n {
            for j in (i + 1)..n {
                let m = 0.5 * (self.data[i * n + j] + self.data[j * n + i]);
                self.data[i * n + j] = m;
                self.data[j * n + i] = m;
            }
        }
    }

    pub fn max_abs(&self) -> f64 {
        self.data.iter().fold(0.0, |m, x| m.max(x.abs()))
    }

    pub fn frobenius(&self) -> f64 {
        norm(&self.data)
    }

    pub fn max_abs_diff(&self, other: &Mat) -> f64 {
        assert_eq!(self.shape(), other.shape());
        self.data
            .iter()
            .zip(&other.data)
            .fold(0.0, |m, (a, b)| m.max((a - b).abs()))
    }

    /// Largest asymmetry `|a_ij - a_ji|`.
    pub fn asymmetry(&self) -> f64 {
        if !self.is_square() {
            return f64::INFINITY;
        }
        let n = self.rows;
        let mut worst: f64 = 0.0;
        for i in 0..n {
            for j in (i + 1)..n {
                worst = worst.max((self.data[i * n + j] - self.data[j * n + i]).abs());
            }
        }
        worst
    }

    pub fn is_finite(&self) -> bool {
        self.data.iter().all(|x| x.is_finite())
    }
}

impl Index<(usize, usize)> for Mat {
    type Output = f64;

    #[inline]
    fn index(&self, (i, j): (usize, usize)) -> &f64 {
        debug_assert!(i < self.rows && j < self.cols);
        &self.data[i * self.cols + j]
    }
}

impl IndexMut<(usize, usize)> for Mat {
    #[inline]
    fn index_mut(&mut self, (i, j): (usize, usize)) -> &mut f64 {
        debug_assert!(i < self.rows && j < self.cols);
        &mut self.data[i * self.cols + j]
    }
}

impl fmt::Debug for Mat {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "Mat {}x{} [", self.rows, self.cols)?;
        for i in 0..self.rows {
            writeln!(f, "  {:?}", self.row(i))?;
        }
        write!(f, "]")
    }
}

#[inline]
pub fn dot(a: &[f64], b: &[f64]) -> f64 {
    debug_assert_eq!(a.len(), b.len());
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

/// `y += alpha · x`.
#[inline]
pub fn axpy(alpha: f64, x: &[f64], y: &mut [f64]) {
    debug_assert_eq!(x.len(), y.len());
    for (yi, &xi) in y.iter_mut().zip(x) {
        *yi += alpha * xi;
    }
}

pub fn norm(x: &[f64]) -> f64 {
    dot(x, x).sqrt()
}

pub fn sub_vec(a: &[f64], b: &[f64]) -> Vec<f64> {
    a.iter().zip(b).map(|(x, y)| x - y).collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn from_vec_rejects_bad_input() {
        assert!(Mat::from_vec(2, 2, vec![1.0; 3]).is_err());
        assert!(Mat::from_vec(1, 2, vec![1.0, f64::NAN]).is_err());
        assert!(Mat::from_vec(1, 2, vec![1.0, 2.0]).is_ok());
    }

    #[test]
    fn matmul_and_transpose() {
        let a = Mat::from_rows(&[&[1.0, 2.0, 3.0], &[4.0, 5.0, 6.0]]);
        let ata = a.transpose().matmul(&a).unwrap();
        assert_eq!(ata.shape(), (3, 3));
        assert_eq!(ata[(0, 0)], 17.0);
        assert_eq!(ata[(1, 2)], 2.0 * 3.0 + 5.0 * 6.0);
        assert!(a.matmul(&a).is_err());
    }

    #[test]
    fn gram_matches_explicit_product() {
        let phi = Mat::from_rows(&[&[1.0, -2.0, 0.5], &[0.0, 3.0, 1.0]]);
        let w = Mat::from_rows(&[&[2.0, 0.5], &[0.5, 1.0]]);
        let mut g = Mat::identity(3);
        g.add_gram(&phi, &w).unwrap();
        let explicit = Mat::identity(3)
            .add(&phi.transpose().matmul(&w).unwrap().matmul(&phi).unwrap())
            .unwrap();
        assert!(g.max_abs_diff(&explicit) < 1e-14);
    }

    #[test]
    fn outer_update() {
        let mut m = Mat::zeros(2, 2);
        m.add_outer(2.0, &[1.0, 3.0]);
        assert_eq!(m, Mat::from_rows(&[&[2.0, 6.0], &[6.0, 18.0]]));
    }
}
