use super::MeasurementTriple;
use crate::error::{Error, Result};
use crate::matkit::{chol_factor, Mat};
use crate::regularizers::RegDelta;

/// Measurements in order from step 0.
#[derive(Debug, Clone, Default)]
pub struct History {
    entries: Vec<MeasurementTriple>,
}

impl History {
    pub fn new() -> Self {
        History::default()
    }

    pub fn push(&mut self, m: MeasurementTriple) -> Result<()> {
        if let Some(first) = self.entries.first() {
            if first.dim() != m.dim() {
                return Err(Error::DimensionMismatch {
                    op: "History::push",
                    expected: (first.phi.rows(), first.dim()),
                    got: m.phi.shape(),
                });
            }
        }
        self.entries.push(m);
        Ok(())
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn entries(&self) -> &[MeasurementTriple] {
        &self.entries
    }

    /// History truncated to steps `0..=k`.
    pub fn prefix(&self, k: usize) -> History {
        History {
            entries: self.entries[..=k.min(self.entries.len() - 1)].to_vec(),
        }
    }

    /// `S = Σ φᵢᵀ Γᵢ φᵢ` over the whole history, for an `n`-parameter model.
    pub fn information_sum(&self, n: usize) -> Mat {
        let mut s = Mat::zeros(n, n);
        for m in &self.entries {
            s.add_gram(&m.phi, &m.gamma).expect("dimensions checked on push");
        }
        s.symmetrize();
        s
    }

    /// `Σ φᵢᵀ Γᵢ yᵢ`.
    pub fn target_sum(&self, n: usize) -> Vec<f64> {
        let mut b = vec![0.0; n];
        for m in &self.entries {
            let gy = m.gamma.matvec(&m.y).expect("dimensions checked");
            let t = m.phi.tr_matvec(&gy).expect("dimensions checked");
            b.iter_mut().zip(&t).for_each(|(bi, ti)| *bi += ti);
        }
        b
    }
}

/// Batch minimizer of the regularized cost over the whole history:
/// `(R_k + Σ φᵀΓφ)⁻¹ (R_k θ_reg,k + Σ φᵀΓy)`, by Cholesky solve.
pub fn batch_solve(h: &History, reg: &RegDelta) -> Result<Vec<f64>> {
    batch_solve_dense(h, &reg.r_current.to_dense(), &reg.theta_reg)
}

/// [`batch_solve`] with an explicit regularization matrix.
pub fn batch_solve_dense(h: &History, r: &Mat, theta_reg: &[f64]) -> Result<Vec<f64>> {
    let n = r.rows();
    let mut a = h.information_sum(n);
    a.add_scaled(1.0, r)?;
    let mut b = h.target_sum(n);
    let r_theta = r.matvec(theta_reg)?;
    b.iter_mut().zip(&r_theta).for_each(|(bi, ri)| *bi += ri);
    chol_factor(&a)?.solve_vec(&b)
}
