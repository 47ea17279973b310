//! Single-step recursions.
//!
//! All functions leave the state untouched when they return an error.

use super::MeasurementTriple;
use crate::error::{Error, Result};
use crate::matkit::{chol_factor, spd_inverse, sym_mil_update, Mat};
use crate::regularizers::{DeltaKind, RegDelta};

/// Which of `P_k` / `P_k⁻¹` a state maintains.
#[derive(Debug, Clone)]
pub enum Form {
    /// `P_k⁻¹`, updated additively; each step costs a Cholesky solve.
    Information(Mat),
    /// `P_k`, updated through the matrix inversion lemma.
    Covariance(Mat),
}

#[derive(Debug, Clone)]
pub struct EstimatorState {
    /// Current estimate `θ_k`.
    pub theta: Vec<f64>,
    pub form: Form,
    /// Number of measurements consumed; the next step index.
    pub k: usize,
    /// Regularization of the last consumed step.
    pub prev_reg: Option<RegDelta>,
}

impl EstimatorState {
    pub fn dim(&self) -> usize {
        self.theta.len()
    }

    /// `P_k`, inverting the information matrix when needed.
    pub fn covariance(&self) -> Result<Mat> {
        match &self.form {
            Form::Covariance(p) => Ok(p.clone()),
            Form::Information(info) => spd_inverse(info),
        }
    }

    /// `P_k⁻¹`, inverting the covariance when needed.
    pub fn information(&self) -> Result<Mat> {
        match &self.form {
            Form::Information(info) => Ok(info.clone()),
            Form::Covariance(p) => spd_inverse(p),
        }
    }

    /// Switches to covariance form (one `O(n³)` inversion).
    pub fn to_covariance(&mut self) -> Result<()> {
        if let Form::Information(info) = &self.form {
            self.form = Form::Covariance(spd_inverse(info)?);
        }
        Ok(())
    }

    /// Switches to information form (one `O(n³)` inversion).
    pub fn to_information(&mut self) -> Result<()> {
        if let Form::Covariance(p) = &self.form {
            self.form = Form::Information(spd_inverse(p)?);
        }
        Ok(())
    }
}

fn check_dims(n: usize, reg: Option<&RegDelta>, m: &MeasurementTriple) -> Result<()> {
    if m.dim() != n || reg.is_some_and(|r| r.dim() != n) {
        return Err(Error::DimensionMismatch {
            op: "estimator update",
            expected: (m.phi.rows(), n),
            got: m.phi.shape(),
        });
    }
    Ok(())
}

/// `φᵀ Γ (y - φ θ)`.
fn data_term(theta: &[f64], m: &MeasurementTriple) -> Vec<f64> {
    let pred = m.phi.matvec(theta).expect("dimension checked");
    let innov: Vec<f64> = m.y.iter().zip(&pred).map(|(y, p)| y - p).collect();
    let weighted = m.gamma.matvec(&innov).expect("dimension checked");
    m.phi.tr_matvec(&weighted).expect("dimension checked")
}

/// Bracketed vector of the θ recursion:
/// `φᵀΓ(y - φθ) + R_k(θ_reg,k - θ) - R_{k-1}(θ_reg,k-1 - θ)`.
///
/// When the target does not move the two regularization terms collapse to
/// `(R_k - R_{k-1})(θ_reg - θ)`, which costs `O(n)` for rank-1 changes.
fn residual(
    theta: &[f64],
    reg: &RegDelta,
    prev: Option<&RegDelta>,
    m: &MeasurementTriple,
) -> Vec<f64> {
    let mut r = data_term(theta, m);
    match prev {
        Some(prev) if prev.theta_reg != reg.theta_reg => {
            let cur_off: Vec<f64> = reg.theta_reg.iter().zip(theta).map(|(a, b)| a - b).collect();
            let prev_off: Vec<f64> = prev.theta_reg.iter().zip(theta).map(|(a, b)| a - b).collect();
            let a = reg.r_current.mul_vec(&cur_off);
            let b = prev.r_current.mul_vec(&prev_off);
            for ((ri, ai), bi) in r.iter_mut().zip(&a).zip(&b) {
                *ri += ai - bi;
            }
        }
        _ => {
            if !matches!(reg.kind, DeltaKind::Zero) {
                let off: Vec<f64> = reg.theta_reg.iter().zip(theta).map(|(a, b)| a - b).collect();
                let d = reg.delta_mul_vec(&off);
                r.iter_mut().zip(&d).for_each(|(ri, di)| *ri += di);
            }
        }
    }
    r
}

/// First step of the general recursion, in information form:
/// `P_1⁻¹ = R_0 + φ_0ᵀΓ_0φ_0`, `θ_1 = θ_reg,0 + P_1 φ_0ᵀΓ_0 (y_0 - φ_0 θ_reg,0)`.
pub fn tvr_init(reg0: &RegDelta, m0: &MeasurementTriple) -> Result<EstimatorState> {
    let n = reg0.dim();
    check_dims(n, Some(reg0), m0)?;
    let mut info = reg0.r_current.to_dense();
    info.add_gram(&m0.phi, &m0.gamma)?;
    info.symmetrize();
    let factor = chol_factor(&info)?;
    let rhs = data_term(&reg0.theta_reg, m0);
    let step = factor.solve_vec(&rhs)?;
    let theta = reg0.theta_reg.iter().zip(&step).map(|(a, b)| a + b).collect();
    Ok(EstimatorState {
        theta,
        form: Form::Information(info),
        k: 1,
        prev_reg: Some(reg0.clone()),
    })
}

/// General step `k ≥ 1`: `P_{k+1}⁻¹ = P_k⁻¹ + φᵀΓφ + R_k - R_{k-1}` followed
/// by a Cholesky solve for the θ correction. `O(n³)`.
pub fn tvr_update(s: &mut EstimatorState, reg: &RegDelta, m: &MeasurementTriple) -> Result<()> {
    check_dims(s.dim(), Some(reg), m)?;
    if s.prev_reg.is_none() {
        return Err(Error::Config(
            "tvr_update needs a state produced by tvr_init".into(),
        ));
    }
    let mut info = s.information()?;
    info.add_gram(&m.phi, &m.gamma)?;
    reg.add_delta_to(&mut info);
    info.symmetrize();
    let factor = chol_factor(&info)?;
    let r = residual(&s.theta, reg, s.prev_reg.as_ref(), m);
    let step = factor.solve_vec(&r)?;
    s.theta.iter_mut().zip(&step).for_each(|(t, d)| *t += d);
    s.form = Form::Information(info);
    s.k += 1;
    s.prev_reg = Some(reg.clone());
    Ok(())
}

/// Covariance-form state before any data: `P_0 = R_0⁻¹`, `θ_0 = θ_reg,0`.
pub fn covariance_init(reg0: &RegDelta) -> Result<EstimatorState> {
    let p0 = spd_inverse(&reg0.r_current.to_dense())?;
    Ok(EstimatorState {
        theta: reg0.theta_reg.clone(),
        form: Form::Covariance(p0),
        k: 0,
        prev_reg: None,
    })
}

fn ensure_covariance(s: &mut EstimatorState) -> Result<&mut Mat> {
    s.to_covariance()?;
    match &mut s.form {
        Form::Covariance(p) => Ok(p),
        Form::Information(_) => unreachable!("converted above"),
    }
}

/// Classical RLS step with no regularization change:
/// `P_{k+1} = P_k - P_kφᵀ(Γ⁻¹ + φP_kφᵀ)⁻¹φP_k`. `O(p n²)`.
pub fn rls_mil_update(s: &mut EstimatorState, m: &MeasurementTriple) -> Result<()> {
    check_dims(s.dim(), None, m)?;
    let gamma_inv = spd_inverse(&m.gamma)?;
    let r = data_term(&s.theta, m);
    let p = ensure_covariance(s)?;
    let step = sym_mil_update(p, &m.phi, &gamma_inv, &r)?;
    s.theta.iter_mut().zip(&step).for_each(|(t, d)| *t += d);
    s.k += 1;
    Ok(())
}

/// Rank-1 regularization step in covariance form.
///
/// `φ_kᵀΓ_kφ_k - c v vᵀ` is written as `φ̄ᵀ Γ̄ φ̄` with the augmented
/// regressor `φ̄ = [φ; vᵀ]` and weight `Γ̄ = diag(Γ, -c)`, whose inverse is
/// `diag(Γ⁻¹, -1/c)`; one inversion-lemma update then costs `O((p+1) n²)`.
pub fn r1fr_update(s: &mut EstimatorState, reg: &RegDelta, m: &MeasurementTriple) -> Result<()> {
    check_dims(s.dim(), Some(reg), m)?;
    let rank1 = match &reg.kind {
        DeltaKind::Zero => None,
        DeltaKind::Rank1 { coef, direction } if *coef != 0.0 => Some((*coef, direction)),
        DeltaKind::Rank1 { .. } => None,
        DeltaKind::Full(_) => {
            return Err(Error::Config(
                "r1fr_update needs a rank-1 or zero regularization change".into(),
            ))
        }
    };
    let gamma_inv = spd_inverse(&m.gamma)?;
    let r = residual(&s.theta, reg, s.prev_reg.as_ref(), m);
    let (rows, weight_inv) = match rank1 {
        None => (m.phi.clone(), gamma_inv),
        Some((c, v)) => {
            let p = m.phi.rows();
            let n = s.dim();
            let mut rows = Mat::zeros(p + 1, n);
            rows.as_mut_slice()[..p * n].copy_from_slice(m.phi.as_slice());
            rows.row_mut(p).copy_from_slice(v);
            let mut w = Mat::zeros(p + 1, p + 1);
            for i in 0..p {
                w.row_mut(i)[..p].copy_from_slice(gamma_inv.row(i));
            }
            w[(p, p)] = -1.0 / c;
            (rows, w)
        }
    };
    let p = ensure_covariance(s)?;
    let step = sym_mil_update(p, &rows, &weight_inv, &r)?;
    s.theta.iter_mut().zip(&step).for_each(|(t, d)| *t += d);
    s.k += 1;
    s.prev_reg = Some(reg.clone());
    Ok(())
}
