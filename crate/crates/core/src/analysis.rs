//! Error dynamics of the noise-free model `y_k = φ_k θ`, and excitation
//! monitoring.

use crate::error::{Error, Result};
use crate::estimators::{History, MeasurementTriple};
use crate::matkit::{chol_factor, norm, sub_vec, sym_eigenvalues, Mat};
use crate::regularizers::RegDelta;

/// Ground-truth parameter.
#[derive(Debug, Clone, PartialEq)]
pub struct TrueModel {
    pub theta: Vec<f64>,
}

impl TrueModel {
    pub fn new(theta: Vec<f64>) -> Result<Self> {
        if theta.iter().any(|v| !v.is_finite()) {
            return Err(Error::InvalidData("non-finite true parameter".into()));
        }
        Ok(TrueModel { theta })
    }

    pub fn dim(&self) -> usize {
        self.theta.len()
    }

    /// Noise-free measurement `φ θ`.
    pub fn measure(&self, phi: &Mat) -> Result<Vec<f64>> {
        phi.matvec(&self.theta)
    }

    /// `‖θ_k - θ‖`.
    pub fn error_norm(&self, theta_k: &[f64]) -> f64 {
        norm(&sub_vec(theta_k, &self.theta))
    }
}

fn check_len(op: &'static str, n: usize, v: &[f64]) -> Result<()> {
    if v.len() != n {
        return Err(Error::DimensionMismatch {
            op,
            expected: (n, 1),
            got: (v.len(), 1),
        });
    }
    Ok(())
}

/// One step of the error recursion:
/// `θ̃_{k+1} = P_{k+1}[P_k⁻¹θ̃_k + R_k(θ_reg,k - θ) - R_{k-1}(θ_reg,k-1 - θ)]`.
///
/// `reg_k` is the regularization used by the step and `reg_km1` the one
/// before it.
pub fn propagate_error(
    prev_error: &[f64],
    p_k_inv: &Mat,
    p_k1: &Mat,
    reg_k: &RegDelta,
    reg_km1: &RegDelta,
    model: &TrueModel,
) -> Result<Vec<f64>> {
    let n = model.dim();
    check_len("propagate_error", n, prev_error)?;
    for (m, op) in [(p_k_inv, "propagate_error P_k⁻¹"), (p_k1, "propagate_error P_k+1")] {
        if m.shape() != (n, n) {
            return Err(Error::DimensionMismatch {
                op,
                expected: (n, n),
                got: m.shape(),
            });
        }
    }
    if reg_k.dim() != n || reg_km1.dim() != n {
        return Err(Error::DimensionMismatch {
            op: "propagate_error regularization",
            expected: (n, n),
            got: (reg_k.dim(), reg_km1.dim()),
        });
    }
    let mut v = p_k_inv.matvec(prev_error)?;
    let cur = reg_k
        .r_current
        .mul_vec(&sub_vec(&reg_k.theta_reg, &model.theta));
    let prev = reg_km1
        .r_current
        .mul_vec(&sub_vec(&reg_km1.theta_reg, &model.theta));
    for ((vi, c), p) in v.iter_mut().zip(&cur).zip(&prev) {
        *vi += c - p;
    }
    p_k1.matvec(&v)
}

/// Error of the batch minimizer on noise-free data:
/// `(R_k + S_k)⁻¹ R_k (θ_reg,k - θ)` with `S_k = Σ φᵢᵀΓᵢφᵢ` over `h`.
pub fn closed_form_error(h: &History, reg: &RegDelta, model: &TrueModel) -> Result<Vec<f64>> {
    let n = model.dim();
    if reg.dim() != n {
        return Err(Error::DimensionMismatch {
            op: "closed_form_error",
            expected: (n, n),
            got: (reg.dim(), reg.dim()),
        });
    }
    let mut a = h.information_sum(n);
    reg.r_current.add_to(1.0, &mut a);
    let rhs = reg
        .r_current
        .mul_vec(&sub_vec(&reg.theta_reg, &model.theta));
    chol_factor(&a)?.solve_vec(&rhs)
}

/// `λ_max(R_k) / λ_min(S_krank) · (‖θ_reg,k‖ + ‖θ‖)`.
pub fn attractivity_bound(
    reg: &RegDelta,
    s_krank: &Mat,
    theta_reg_norm: f64,
    theta_norm: f64,
) -> Result<f64> {
    let lambda_min = sym_eigenvalues(s_krank)?
        .last()
        .copied()
        .unwrap_or(0.0);
    bound_from_spectrum(reg.r_current.lambda_max(), lambda_min, theta_reg_norm, theta_norm)
}

/// [`attractivity_bound`] with the two eigenvalues already known.
pub fn bound_from_spectrum(
    r_lambda_max: f64,
    s_lambda_min: f64,
    theta_reg_norm: f64,
    theta_norm: f64,
) -> Result<f64> {
    if !(s_lambda_min > 0.0) {
        return Err(Error::RankNotAttained {
            lambda_min: s_lambda_min,
        });
    }
    Ok(r_lambda_max.max(0.0) / s_lambda_min * (theta_reg_norm + theta_norm))
}

/// Default rank threshold `1e-8 · (1 + λ_max)` of the accumulated sum.
pub fn default_rank_threshold(lambda_max: f64) -> f64 {
    1e-8 * (1.0 + lambda_max)
}

/// Default monitoring cadence: every step for `n ≤ 128`, every 10 steps above.
pub fn default_cadence(n: usize) -> usize {
    if n <= 128 {
        1
    } else {
        10
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct RankReport {
    /// Smallest `k` whose accumulated sum clears the threshold.
    pub k_rank: Option<usize>,
    /// `λ_min(S_k)` for every `k` in the history.
    pub lambda_min: Vec<f64>,
}

/// Finds `k_rank` over a whole history. `threshold = None` uses
/// [`default_rank_threshold`] at each step.
pub fn detect_k_rank(h: &History, threshold: Option<f64>) -> Result<RankReport> {
    let Some(first) = h.entries().first() else {
        return Ok(RankReport {
            k_rank: None,
            lambda_min: Vec::new(),
        });
    };
    let mut mon = ExcitationMonitor::new(first.dim(), 1);
    mon.threshold = threshold;
    for m in h.entries() {
        mon.push(m)?;
    }
    Ok(RankReport {
        k_rank: mon.k_rank(),
        lambda_min: mon.lambda_min.into_iter().map(|v| v.unwrap_or(f64::NAN)).collect(),
    })
}

/// Running `S_k = Σ φᵢᵀΓᵢφᵢ` with its smallest eigenvalue recomputed on a
/// cadence. Until rank is attained the eigenvalues are computed every step so
/// `k_rank` does not depend on the cadence.
#[derive(Debug, Clone)]
pub struct ExcitationMonitor {
    sum: Mat,
    cadence: usize,
    threshold: Option<f64>,
    lambda_min: Vec<Option<f64>>,
    k_rank: Option<usize>,
    s_krank_lambda_min: Option<f64>,
}

impl ExcitationMonitor {
    pub fn new(n: usize, cadence: usize) -> Self {
        ExcitationMonitor {
            sum: Mat::zeros(n, n),
            cadence: cadence.max(1),
            threshold: None,
            lambda_min: Vec::new(),
            k_rank: None,
            s_krank_lambda_min: None,
        }
    }

    /// Fixed absolute threshold instead of the scale-relative default.
    pub fn with_threshold(mut self, threshold: f64) -> Self {
        self.threshold = Some(threshold);
        self
    }

    /// Adds measurement `k` (the number of pushes so far) and returns
    /// `λ_min(S_k)` when it was computed.
    pub fn push(&mut self, m: &MeasurementTriple) -> Result<Option<f64>> {
        let k = self.lambda_min.len();
        self.sum.add_gram(&m.phi, &m.gamma)?;
        self.sum.symmetrize();
        let due = self.k_rank.is_none() || k.is_multiple_of(self.cadence);
        let value = if due {
            let ev = sym_eigenvalues(&self.sum)?;
            let (lo, hi) = (ev[ev.len() - 1], ev[0]);
            if self.k_rank.is_none() {
                let t = self.threshold.unwrap_or_else(|| default_rank_threshold(hi));
                if lo > t {
                    self.k_rank = Some(k);
                    self.s_krank_lambda_min = Some(lo);
                }
            }
            Some(lo)
        } else {
            None
        };
        self.lambda_min.push(value);
        Ok(value)
    }

    pub fn steps(&self) -> usize {
        self.lambda_min.len()
    }

    pub fn k_rank(&self) -> Option<usize> {
        self.k_rank
    }

    /// `λ_min(S_krank)` once rank has been attained.
    pub fn krank_lambda_min(&self) -> Option<f64> {
        self.s_krank_lambda_min
    }

    /// `λ_min(S_k)` per pushed step, `None` where the cadence skipped it.
    pub fn lambda_min_history(&self) -> &[Option<f64>] {
        &self.lambda_min
    }

    pub fn sum(&self) -> &Mat {
        &self.sum
    }
}

/// One record of an estimator run. Row `k` describes the estimate `θ_k`,
/// i.e. the state after consuming measurements `0..k`; `lambda_min` and
/// `r_max` refer to `S_{k-1}` and `R_{k-1}`, the quantities that produced it.
#[derive(Debug, Clone, PartialEq)]
pub struct TraceRow {
    pub k: usize,
    pub error_norm: f64,
    pub lambda_min: Option<f64>,
    pub r_max: f64,
    /// Wall-clock of the update producing `θ_k`.
    pub step_ms: f64,
    /// Attractivity bound on `error_norm`, once `k - 1 ≥ k_rank`.
    pub bound: Option<f64>,
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct ErrorTrace {
    pub label: String,
    pub rows: Vec<TraceRow>,
    pub k_rank: Option<usize>,
}

impl ErrorTrace {
    pub fn new(label: impl Into<String>) -> Self {
        ErrorTrace {
            label: label.into(),
            rows: Vec::new(),
            k_rank: None,
        }
    }

    pub fn len(&self) -> usize {
        self.rows.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rows.is_empty()
    }

    /// Row for estimate `θ_k`.
    pub fn at(&self, k: usize) -> Option<&TraceRow> {
        let first = self.rows.first()?.k;
        self.rows.get(k.checked_sub(first)?).filter(|r| r.k == k)
    }

    pub fn error_at(&self, k: usize) -> Option<f64> {
        self.at(k).map(|r| r.error_norm)
    }

    pub fn final_error(&self) -> Option<f64> {
        self.rows.last().map(|r| r.error_norm)
    }

    pub fn errors(&self) -> Vec<f64> {
        self.rows.iter().map(|r| r.error_norm).collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::estimators::{
        make_estimator, EstimatorKind, EstimatorParams, RecursiveEstimator, ScheduleKind,
    };
    use crate::matkit::testutil::{random_mat, random_spd, rng};
    use crate::regularizers::{ConstantSchedule, Schedule};
    use rand::Rng;

    fn unit(phi: &[f64]) -> MeasurementTriple {
        MeasurementTriple::unit_weight(Mat::row_vector(phi), vec![0.0]).unwrap()
    }

    #[test]
    fn constant_at_truth_is_pure_contraction() {
        let theta = vec![1.0, 2.0];
        let model = TrueModel::new(theta.clone()).unwrap();
        let mut s = ConstantSchedule::new(Mat::identity(2), theta).unwrap();
        let (r1, r0) = (s.step(1), s.step(0));
        let pk_inv = Mat::from_diag(&[2.0, 3.0]);
        let pk1 = Mat::from_diag(&[0.25, 0.5]);
        let e = propagate_error(&[1.0, 1.0], &pk_inv, &pk1, &r1, &r0, &model).unwrap();
        assert_eq!(e, vec![0.5, 1.5]);
        let z = propagate_error(&[0.0, 0.0], &pk_inv, &pk1, &r1, &r0, &model).unwrap();
        assert_eq!(z, vec![0.0, 0.0]);
    }

    #[test]
    fn propagate_rejects_bad_dims() {
        let model = TrueModel::new(vec![0.0; 2]).unwrap();
        let mut s = ConstantSchedule::new(Mat::identity(2), vec![0.0; 2]).unwrap();
        let r = s.step(0);
        let i2 = Mat::identity(2);
        assert!(propagate_error(&[0.0; 3], &i2, &i2, &r, &r, &model).is_err());
        assert!(propagate_error(&[0.0; 2], &Mat::identity(3), &i2, &r, &r, &model).is_err());
    }

    #[test]
    fn scalar_chain_propagates() {
        // RLS with R_0 = 1, θ_reg = 0, θ = 2, φ = 1 noise-free
        let model = TrueModel::new(vec![2.0]).unwrap();
        let p = EstimatorParams::isotropic(1, 1.0, 0.5, None, None);
        let mut est = make_estimator(EstimatorKind::Classical, &p).unwrap();
        let mut sched = ConstantSchedule::new(Mat::identity(1), vec![0.0]).unwrap();
        let m = MeasurementTriple::unit_weight(Mat::identity(1), vec![2.0]).unwrap();
        est.update(&m).unwrap();
        let mut err = vec![est.theta()[0] - 2.0];
        for k in 1..6 {
            let p_inv = crate::matkit::spd_inverse(&est.covariance().unwrap()).unwrap();
            est.update(&m).unwrap();
            let next = propagate_error(
                &err,
                &p_inv,
                &est.covariance().unwrap(),
                &sched.step(k),
                &sched.step(k - 1),
                &model,
            )
            .unwrap();
            assert!((next[0] - (est.theta()[0] - 2.0)).abs() <= 1e-12);
            err = next;
        }
    }

    #[test]
    fn closed_form_trivial_cases() {
        let model = TrueModel::new(vec![1.0, -1.0]).unwrap();
        let mut h = History::new();
        h.push(unit(&[1.0, 0.0])).unwrap();
        h.push(unit(&[0.0, 1.0])).unwrap();
        let mut zero = ConstantSchedule::new(Mat::zeros(2, 2), vec![3.0, 3.0]).unwrap();
        assert_eq!(closed_form_error(&h, &zero.step(0), &model).unwrap(), vec![0.0, 0.0]);
        let mut at_truth = ConstantSchedule::new(Mat::identity(2), model.theta.clone()).unwrap();
        assert_eq!(closed_form_error(&h, &at_truth.step(0), &model).unwrap(), vec![0.0, 0.0]);
    }

    #[test]
    fn closed_form_matches_batch() {
        let mut r = rng(90);
        let n = 5;
        let model = TrueModel::new((0..n).map(|_| r.gen_range(-1.0..1.0)).collect()).unwrap();
        let r0 = random_spd(&mut r, n);
        let theta_reg: Vec<f64> = (0..n).map(|_| r.gen_range(-1.0..1.0)).collect();
        let mut h = History::new();
        for _ in 0..3 {
            let phi = random_mat(&mut r, 1, n);
            let y = model.measure(&phi).unwrap();
            h.push(MeasurementTriple::unit_weight(phi, y).unwrap()).unwrap();
        }
        let mut s = ConstantSchedule::new(r0, theta_reg).unwrap();
        let reg = s.step(2);
        let batch = crate::estimators::batch_solve(&h, &reg).unwrap();
        let e = closed_form_error(&h, &reg, &model).unwrap();
        for i in 0..n {
            assert!((e[i] - (batch[i] - model.theta[i])).abs() <= 1e-10);
        }
    }

    #[test]
    fn bound_examples() {
        let mut zero = ConstantSchedule::new(Mat::zeros(2, 2), vec![0.0; 2]).unwrap();
        assert_eq!(attractivity_bound(&zero.step(0), &Mat::identity(2), 1.0, 1.0).unwrap(), 0.0);
        let mut unit = ConstantSchedule::new(Mat::identity(2), vec![0.0; 2]).unwrap();
        assert_eq!(attractivity_bound(&unit.step(0), &Mat::identity(2), 0.0, 2.0).unwrap(), 2.0);
        assert!(matches!(
            attractivity_bound(&unit.step(0), &Mat::from_diag(&[1.0, 0.0]), 0.0, 2.0),
            Err(Error::RankNotAttained { .. })
        ));
    }

    #[test]
    fn bound_holds_along_fading_run() {
        let n = 4;
        let mut r = rng(91);
        let model = TrueModel::new((0..n).map(|_| r.gen_range(-1.0..1.0)).collect()).unwrap();
        let mut p = EstimatorParams::isotropic(n, 5.0, 0.9, Some(12), None);
        p.theta_reg = vec![0.3; n];
        p.general_schedule = ScheduleKind::Fading;
        let mut est = make_estimator(EstimatorKind::Fr, &p).unwrap();
        let mut mon = ExcitationMonitor::new(n, 1);
        for _ in 0..20 {
            let phi = random_mat(&mut r, 1, n);
            let y = model.measure(&phi).unwrap();
            let m = MeasurementTriple::unit_weight(phi, y).unwrap();
            est.update(&m).unwrap();
            mon.push(&m).unwrap();
            if let Some(lmin) = mon.krank_lambda_min() {
                let reg = est.regularization().unwrap();
                let b = bound_from_spectrum(
                    reg.r_current.lambda_max(),
                    lmin,
                    norm(&reg.theta_reg),
                    norm(&model.theta),
                )
                .unwrap();
                assert!(model.error_norm(est.theta()) <= b + 1e-9);
            }
        }
        assert_eq!(mon.k_rank(), Some(3));
    }

    #[test]
    fn k_rank_examples() {
        let mut h = History::new();
        h.push(unit(&[1.0, 0.0])).unwrap();
        h.push(unit(&[0.0, 1.0])).unwrap();
        let rep = detect_k_rank(&h, None).unwrap();
        assert_eq!(rep.k_rank, Some(1));
        assert_eq!(rep.lambda_min, vec![0.0, 1.0]);

        let mut h = History::new();
        for _ in 0..10 {
            h.push(unit(&[0.0, 0.0])).unwrap();
        }
        assert_eq!(detect_k_rank(&h, None).unwrap().k_rank, None);
        assert_eq!(detect_k_rank(&History::new(), None).unwrap().k_rank, None);
    }

    #[test]
    fn monitor_cadence_skips_after_rank() {
        let mut mon = ExcitationMonitor::new(2, 3);
        let ms = [unit(&[0.0, 0.0]), unit(&[1.0, 0.0]), unit(&[0.0, 1.0])];
        for i in 0..9 {
            mon.push(&ms[i.min(2)]).unwrap();
        }
        assert_eq!(mon.k_rank(), Some(2));
        let computed: Vec<bool> = mon.lambda_min_history().iter().map(|v| v.is_some()).collect();
        assert_eq!(
            computed,
            vec![true, true, true, true, false, false, true, false, false]
        );
    }

    #[test]
    fn trace_lookup() {
        let mut t = ErrorTrace::new("x");
        for k in 1..4 {
            t.rows.push(TraceRow {
                k,
                error_norm: k as f64,
                lambda_min: None,
                r_max: 0.0,
                step_ms: 0.0,
                bound: None,
            });
        }
        assert_eq!(t.error_at(2), Some(2.0));
        assert_eq!(t.error_at(0), None);
        assert_eq!(t.error_at(4), None);
        assert_eq!(t.final_error(), Some(3.0));
    }
}
