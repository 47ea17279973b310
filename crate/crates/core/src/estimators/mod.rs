//! Recursive estimators behind one update contract.
//!
//! | kind          | schedule            | form                                   | step cost            |
//! |---------------|---------------------|----------------------------------------|----------------------|
//! | `classical`   | constant            | covariance                             | `O(p n²)`            |
//! | `fr`          | fading              | information until `k_cut`, then covariance | `O(n³)` then `O(p n²)` |
//! | `r1fr`        | rank-1 fading       | covariance                             | `O((p+1) n²)`        |
//! | `tvr-general` | any                 | information                            | `O(n³)`              |

mod batch;
mod update;

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

pub use batch::{batch_solve, batch_solve_dense, History};
pub use update::{
    covariance_init, r1fr_update, rls_mil_update, tvr_init, tvr_update, EstimatorState, Form,
};

use crate::error::{Error, Result};
use crate::matkit::{chol_factor, Mat};
use crate::regularizers::{
    ConstantSchedule, FadingParams, FadingSchedule, R1FRParams, Rank1FadingSchedule, RegDelta,
    Schedule,
};

/// One step's regressor `φ` (`p x n`), measurement `y` (`p`) and weight `Γ` (`p x p`).
#[derive(Debug, Clone)]
pub struct MeasurementTriple {
    pub phi: Mat,
    pub y: Vec<f64>,
    pub gamma: Mat,
}

impl MeasurementTriple {
    /// Validates dimensions and that `Γ` is positive definite.
    pub fn new(phi: Mat, y: Vec<f64>, gamma: Mat) -> Result<Self> {
        let p = phi.rows();
        if y.len() != p || gamma.shape() != (p, p) {
            return Err(Error::DimensionMismatch {
                op: "MeasurementTriple::new",
                expected: (p, p),
                got: gamma.shape(),
            });
        }
        if !phi.is_finite() || y.iter().any(|v| !v.is_finite()) {
            return Err(Error::InvalidData("non-finite measurement".into()));
        }
        chol_factor(&gamma)?;
        Ok(MeasurementTriple { phi, y, gamma })
    }

    /// `Γ = I`.
    pub fn unit_weight(phi: Mat, y: Vec<f64>) -> Result<Self> {
        let p = phi.rows();
        MeasurementTriple::new(phi, y, Mat::identity(p))
    }

    /// Number of parameters `n`.
    pub fn dim(&self) -> usize {
        self.phi.cols()
    }

    /// Measurements per step `p`.
    pub fn outputs(&self) -> usize {
        self.phi.rows()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum EstimatorKind {
    Classical,
    Fr,
    R1fr,
    TvrGeneral,
}

impl EstimatorKind {
    pub const ALL: [EstimatorKind; 4] = [
        EstimatorKind::Classical,
        EstimatorKind::Fr,
        EstimatorKind::R1fr,
        EstimatorKind::TvrGeneral,
    ];

    pub fn as_str(&self) -> &'static str {
        match self {
            EstimatorKind::Classical => "classical",
            EstimatorKind::Fr => "fr",
            EstimatorKind::R1fr => "r1fr",
            EstimatorKind::TvrGeneral => "tvr-general",
        }
    }

    /// Display label used in figures.
    pub fn label(&self) -> &'static str {
        match self {
            EstimatorKind::Classical => "RLS",
            EstimatorKind::Fr => "FR-RLS",
            EstimatorKind::R1fr => "R1FR-RLS",
            EstimatorKind::TvrGeneral => "TVR-RLS",
        }
    }
}

impl fmt::Display for EstimatorKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for EstimatorKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        EstimatorKind::ALL
            .into_iter()
            .find(|k| k.as_str() == s)
            .ok_or_else(|| Error::Config(format!("unknown estimator kind '{s}'")))
    }
}

/// Schedule driving the `tvr-general` estimator.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ScheduleKind {
    Constant,
    #[default]
    Fading,
    Rank1,
}

#[derive(Debug, Clone)]
pub struct EstimatorParams {
    pub r0: Mat,
    pub theta_reg: Vec<f64>,
    pub mu: f64,
    pub k_cut: Option<usize>,
    pub j_cut: Option<usize>,
    pub general_schedule: ScheduleKind,
}

impl EstimatorParams {
    /// `R_0 = r0_scale · I`, `θ_reg = 0`.
    pub fn isotropic(n: usize, r0_scale: f64, mu: f64, k_cut: Option<usize>, j_cut: Option<usize>) -> Self {
        EstimatorParams {
            r0: Mat::identity(n).scale(r0_scale),
            theta_reg: vec![0.0; n],
            mu,
            k_cut,
            j_cut,
            general_schedule: ScheduleKind::default(),
        }
    }

    /// Builds the schedule of the given kind from these parameters.
    pub fn schedule(&self, kind: ScheduleKind) -> Result<Box<dyn Schedule>> {
        Ok(match kind {
            ScheduleKind::Constant => Box::new(ConstantSchedule::new(
                self.r0.clone(),
                self.theta_reg.clone(),
            )?),
            ScheduleKind::Fading => Box::new(FadingSchedule::new(
                FadingParams {
                    r0: self.r0.clone(),
                    mu: self.mu,
                    k_cut: self.k_cut,
                },
                self.theta_reg.clone(),
            )?),
            ScheduleKind::Rank1 => Box::new(Rank1FadingSchedule::new(
                R1FRParams::new(self.r0.clone(), self.mu, self.j_cut)?,
                self.theta_reg.clone(),
            )?),
        })
    }
}

/// Common contract for every estimator: consume one measurement per step,
/// in order, and expose the current estimate and covariance.
pub trait RecursiveEstimator {
    fn update(&mut self, m: &MeasurementTriple) -> Result<()>;

    /// `θ_k` after `k` consumed measurements.
    fn theta(&self) -> &[f64];

    /// `P_k`.
    fn covariance(&self) -> Result<Mat>;

    /// Number of measurements consumed.
    fn steps(&self) -> usize;

    /// Regularization of the last consumed step.
    fn regularization(&self) -> Option<&RegDelta>;
}

enum Stage {
    /// Nothing consumed yet; holds the initial estimate and, for covariance
    /// estimators, `P_0 = R_0⁻¹`.
    Fresh(EstimatorState),
    Running(EstimatorState),
}

/// A recursive estimator of one of the four kinds.
pub struct Estimator {
    kind: EstimatorKind,
    schedule: Box<dyn Schedule>,
    stage: Stage,
    /// Information form is kept through this step (inclusive); after it the
    /// state switches to covariance form. `None` keeps information form.
    information_until: Option<usize>,
}

/// Builds an estimator of the given kind.
pub fn make_estimator(kind: EstimatorKind, params: &EstimatorParams) -> Result<Estimator> {
    let n = params.r0.rows();
    if !params.r0.is_square() || params.theta_reg.len() != n || n == 0 {
        return Err(Error::Config(format!(
            "R_0 is {:?} but theta_reg has length {}",
            params.r0.shape(),
            params.theta_reg.len()
        )));
    }
    let schedule = match kind {
        EstimatorKind::Classical => params.schedule(ScheduleKind::Constant)?,
        EstimatorKind::Fr => params.schedule(ScheduleKind::Fading)?,
        EstimatorKind::R1fr => params.schedule(ScheduleKind::Rank1)?,
        EstimatorKind::TvrGeneral => params.schedule(params.general_schedule)?,
    };
    match kind {
        EstimatorKind::Classical | EstimatorKind::R1fr => Estimator::covariance(kind, schedule),
        EstimatorKind::Fr => {
            let until = params.k_cut;
            Estimator::information(kind, schedule, until)
        }
        EstimatorKind::TvrGeneral => Estimator::information(kind, schedule, None),
    }
}

impl Estimator {
    fn covariance(kind: EstimatorKind, mut schedule: Box<dyn Schedule>) -> Result<Self> {
        let reg0 = schedule.step(0);
        let state = covariance_init(&reg0).map_err(|e| {
            Error::Config(format!("{kind} needs a positive-definite R_0: {e}"))
        })?;
        Ok(Estimator {
            kind,
            schedule,
            stage: Stage::Fresh(state),
            information_until: Some(0),
        })
    }

    fn information(
        kind: EstimatorKind,
        mut schedule: Box<dyn Schedule>,
        until: Option<usize>,
    ) -> Result<Self> {
        let reg0 = schedule.step(0);
        let state = EstimatorState {
            theta: reg0.theta_reg.clone(),
            form: Form::Information(reg0.r_current.to_dense()),
            k: 0,
            prev_reg: None,
        };
        Ok(Estimator {
            kind,
            schedule,
            stage: Stage::Fresh(state),
            information_until: until,
        })
    }

    /// General information-form estimator over an arbitrary schedule.
    pub fn general(schedule: Box<dyn Schedule>) -> Result<Self> {
        Estimator::information(EstimatorKind::TvrGeneral, schedule, None)
    }

    pub fn kind(&self) -> EstimatorKind {
        self.kind
    }

    pub fn dim(&self) -> usize {
        self.schedule.dim()
    }

    pub fn state(&self) -> &EstimatorState {
        match &self.stage {
            Stage::Fresh(s) | Stage::Running(s) => s,
        }
    }

    /// Last step carrying a regularization change (`None`: never stops).
    pub fn last_change(&self) -> Option<usize> {
        self.schedule.last_change()
    }

    fn step_inner(&mut self, m: &MeasurementTriple) -> Result<()> {
        let k = self.steps();
        let reg = self.schedule.step(k);
        let covariance_form = self.information_until.is_some_and(|last| k > last);
        match (&mut self.stage, self.kind) {
            (Stage::Fresh(s), EstimatorKind::Classical | EstimatorKind::R1fr) => {
                let mut s = s.clone();
                r1fr_update(&mut s, &reg, m)?;
                self.stage = Stage::Running(s);
            }
            (Stage::Fresh(_), _) => {
                self.stage = Stage::Running(tvr_init(&reg, m)?);
            }
            (Stage::Running(s), EstimatorKind::Classical) => {
                rls_mil_update(s, m)?;
                s.prev_reg = Some(reg);
            }
            (Stage::Running(s), _) if covariance_form => r1fr_update(s, &reg, m)?,
            (Stage::Running(s), _) => tvr_update(s, &reg, m)?,
        }
        // Past the last full-rank change the inversion lemma takes over.
        if let (Stage::Running(s), Some(last)) = (&mut self.stage, self.information_until) {
            if s.k > last {
                s.to_covariance()?;
            }
        }
        Ok(())
    }
}

impl RecursiveEstimator for Estimator {
    fn update(&mut self, m: &MeasurementTriple) -> Result<()> {
        let k = self.steps();
        if m.dim() != self.dim() {
            return Err(Error::DimensionMismatch {
                op: "Estimator::update",
                expected: (m.outputs(), self.dim()),
                got: m.phi.shape(),
            });
        }
        self.step_inner(m).map_err(|e| e.at_step(k))
    }

    fn theta(&self) -> &[f64] {
        &self.state().theta
    }

    fn covariance(&self) -> Result<Mat> {
        self.state().covariance()
    }

    fn steps(&self) -> usize {
        self.state().k
    }

    fn regularization(&self) -> Option<&RegDelta> {
        self.state().prev_reg.as_ref()
    }
}

/// Batch reference: re-solves the regularized normal equations from the
/// running sums at every step. `O(n³)` per step; used as an oracle.
pub struct BatchOracle {
    schedule: Box<dyn Schedule>,
    info_sum: Mat,
    target_sum: Vec<f64>,
    theta: Vec<f64>,
    k: usize,
    last_reg: Option<RegDelta>,
}

impl BatchOracle {
    pub fn new(mut schedule: Box<dyn Schedule>) -> Self {
        let n = schedule.dim();
        let theta = schedule.step(0).theta_reg;
        BatchOracle {
            schedule,
            info_sum: Mat::zeros(n, n),
            target_sum: vec![0.0; n],
            theta,
            k: 0,
            last_reg: None,
        }
    }

    /// `Σ φᵢᵀΓᵢφᵢ` over the consumed steps.
    pub fn information_sum(&self) -> &Mat {
        &self.info_sum
    }
}

impl RecursiveEstimator for BatchOracle {
    fn update(&mut self, m: &MeasurementTriple) -> Result<()> {
        let k = self.k;
        let reg = self.schedule.step(k);
        let mut info = self.info_sum.clone();
        info.add_gram(&m.phi, &m.gamma)?;
        info.symmetrize();
        let gy = m.gamma.matvec(&m.y)?;
        let phity = m.phi.tr_matvec(&gy)?;
        let target: Vec<f64> = self.target_sum.iter().zip(&phity).map(|(a, b)| a + b).collect();

        let mut a = info.clone();
        reg.r_current.add_to(1.0, &mut a);
        let r_theta = reg.r_current.mul_vec(&reg.theta_reg);
        let b: Vec<f64> = target.iter().zip(&r_theta).map(|(x, y)| x + y).collect();
        let theta = chol_factor(&a).and_then(|f| f.solve_vec(&b)).map_err(|e| e.at_step(k))?;

        self.info_sum = info;
        self.target_sum = target;
        self.theta = theta;
        self.k += 1;
        self.last_reg = Some(reg);
        Ok(())
    }

    fn theta(&self) -> &[f64] {
        &self.theta
    }

    fn covariance(&self) -> Result<Mat> {
        let mut a = self.info_sum.clone();
        if let Some(reg) = &self.last_reg {
            reg.r_current.add_to(1.0, &mut a);
        }
        crate::matkit::spd_inverse(&a)
    }

    fn steps(&self) -> usize {
        self.k
    }

    fn regularization(&self) -> Option<&RegDelta> {
        self.last_reg.as_ref()
    }
}

#[cfg(test)]
mod tests;
