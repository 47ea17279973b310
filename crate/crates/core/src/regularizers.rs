//! Regularization schedules.
//!
//! A schedule emits, for every step `k`, the regularization matrix `R_k`, the
//! regularization target `θ_reg,k`, and the change `R_k - R_{k-1}` in a
//! structured form the estimators can exploit: a rank-1 change costs `O(n)`
//! to apply, a full-rank change forces an `O(n³)` step.
//!
//! Matrices are carried as [`RegMatrix`] values (scaled copies of `R_0`,
//! spectral weights over the eigenbasis of `R_0`, or explicit dense
//! matrices), so producing a step never costs more than `O(n)`.

use std::sync::Arc;

use crate::error::{Error, Result};
use crate::matkit::{chol_factor, dot, lambda_extreme, sym_eigen, EigenPair, Mat};

/// A fixed symmetric matrix together with its extreme eigenvalues.
#[derive(Debug)]
pub struct BaseMatrix {
    pub mat: Mat,
    pub lambda_min: f64,
    pub lambda_max: f64,
}

impl BaseMatrix {
    pub fn new(mat: Mat) -> Result<Arc<Self>> {
        let (lambda_min, lambda_max) = lambda_extreme(&mat)?;
        Ok(Arc::new(BaseMatrix {
            mat,
            lambda_min,
            lambda_max,
        }))
    }
}

/// Structured symmetric `n x n` matrix.
#[derive(Debug, Clone)]
pub enum RegMatrix {
    Zero(usize),
    /// `factor · base`
    Scaled { factor: f64, base: Arc<BaseMatrix> },
    /// `Σ_i weights[i] · d_i d_iᵀ`, with `d_i` the orthonormal rows of `directions`.
    Spectral {
        weights: Vec<f64>,
        directions: Arc<Mat>,
    },
    Dense(Arc<BaseMatrix>),
}

impl RegMatrix {
    pub fn dim(&self) -> usize {
        match self {
            RegMatrix::Zero(n) => *n,
            RegMatrix::Scaled { base, .. } | RegMatrix::Dense(base) => base.mat.rows(),
            RegMatrix::Spectral { weights, .. } => weights.len(),
        }
    }

    pub fn is_zero(&self) -> bool {
        match self {
            RegMatrix::Zero(_) => true,
            RegMatrix::Scaled { factor, .. } => *factor == 0.0,
            RegMatrix::Spectral { weights, .. } => weights.iter().all(|w| *w == 0.0),
            RegMatrix::Dense(base) => base.mat.max_abs() == 0.0,
        }
    }

    pub fn to_dense(&self) -> Mat {
        let n = self.dim();
        match self {
            RegMatrix::Zero(_) => Mat::zeros(n, n),
            RegMatrix::Scaled { factor, base } => base.mat.scale(*factor),
            RegMatrix::Spectral {
                weights,
                directions,
            } => {
                let mut out = Mat::zeros(n, n);
                for (i, &w) in weights.iter().enumerate() {
                    if w != 0.0 {
                        out.add_outer(w, directions.row(i));
                    }
                }
                out
            }
            RegMatrix::Dense(base) => base.mat.clone(),
        }
    }

    /// `self · x`.
    pub fn mul_vec(&self, x: &[f64]) -> Vec<f64> {
        let n = self.dim();
        debug_assert_eq!(x.len(), n);
        match self {
            RegMatrix::Zero(_) => vec![0.0; n],
            RegMatrix::Scaled { factor, base } => {
                let mut y = base.mat.matvec(x).expect("dimension checked");
                y.iter_mut().for_each(|v| *v *= factor);
                y
            }
            RegMatrix::Spectral {
                weights,
                directions,
            } => {
                let mut y = vec![0.0; n];
                for (i, &w) in weights.iter().enumerate() {
                    if w == 0.0 {
                        continue;
                    }
                    let d = directions.row(i);
                    let coef = w * dot(d, x);
                    for (yj, &dj) in y.iter_mut().zip(d) {
                        *yj += coef * dj;
                    }
                }
                y
            }
            RegMatrix::Dense(base) => base.mat.matvec(x).expect("dimension checked"),
        }
    }

    /// `target += alpha · self`.
    pub fn add_to(&self, alpha: f64, target: &mut Mat) {
        match self {
            RegMatrix::Zero(_) => {}
            RegMatrix::Scaled { factor, base } => {
                target
                    .add_scaled(alpha * factor, &base.mat)
                    .expect("dimension checked");
            }
            RegMatrix::Spectral {
                weights,
                directions,
            } => {
                for (i, &w) in weights.iter().enumerate() {
                    if w != 0.0 {
                        target.add_outer(alpha * w, directions.row(i));
                    }
                }
            }
            RegMatrix::Dense(base) => {
                target
                    .add_scaled(alpha, &base.mat)
                    .expect("dimension checked");
            }
        }
    }

    /// Largest eigenvalue.
    pub fn lambda_max(&self) -> f64 {
        match self {
            RegMatrix::Zero(_) => 0.0,
            RegMatrix::Scaled { factor, base } => {
                if *factor >= 0.0 {
                    factor * base.lambda_max
                } else {
                    factor * base.lambda_min
                }
            }
            RegMatrix::Spectral { weights, .. } => {
                weights.iter().copied().fold(f64::NEG_INFINITY, f64::max)
            }
            RegMatrix::Dense(base) => base.lambda_max,
        }
    }

    /// Smallest eigenvalue.
    pub fn lambda_min(&self) -> f64 {
        match self {
            RegMatrix::Zero(_) => 0.0,
            RegMatrix::Scaled { factor, base } => {
                if *factor >= 0.0 {
                    factor * base.lambda_min
                } else {
                    factor * base.lambda_max
                }
            }
            RegMatrix::Spectral { weights, .. } => {
                weights.iter().copied().fold(f64::INFINITY, f64::min)
            }
            RegMatrix::Dense(base) => base.lambda_min,
        }
    }
}

/// Structure of `R_k - R_{k-1}`.
#[derive(Debug, Clone)]
pub enum DeltaKind {
    /// No change (also used at `k = 0`, where there is no previous step).
    Zero,
    /// A general (typically full-rank) change.
    Full(RegMatrix),
    /// `R_k = R_{k-1} - coef · v vᵀ` with unit `direction`.
    Rank1 { coef: f64, direction: Vec<f64> },
}

/// Regularization emitted for one step.
#[derive(Debug, Clone)]
pub struct RegDelta {
    pub k: usize,
    pub kind: DeltaKind,
    pub r_current: RegMatrix,
    pub theta_reg: Vec<f64>,
}

impl RegDelta {
    pub fn dim(&self) -> usize {
        self.r_current.dim()
    }

    /// `(R_k - R_{k-1}) · x`.
    pub fn delta_mul_vec(&self, x: &[f64]) -> Vec<f64> {
        match &self.kind {
            DeltaKind::Zero => vec![0.0; x.len()],
            DeltaKind::Full(m) => m.mul_vec(x),
            DeltaKind::Rank1 { coef, direction } => {
                let s = -coef * dot(direction, x);
                direction.iter().map(|v| s * v).collect()
            }
        }
    }

    /// `target += R_k - R_{k-1}`.
    pub fn add_delta_to(&self, target: &mut Mat) {
        match &self.kind {
            DeltaKind::Zero => {}
            DeltaKind::Full(m) => m.add_to(1.0, target),
            DeltaKind::Rank1 { coef, direction } => target.add_outer(-coef, direction),
        }
    }

    /// Dense `R_k - R_{k-1}`.
    pub fn delta_dense(&self) -> Mat {
        let n = self.dim();
        let mut out = Mat::zeros(n, n);
        self.add_delta_to(&mut out);
        out
    }
}

/// A regularization schedule. Steps are normally requested in order
/// `0, 1, 2, ...`; stateful schedules replay from zero when asked out of order.
pub trait Schedule: Send {
    fn dim(&self) -> usize;

    fn step(&mut self, k: usize) -> RegDelta;

    /// Last step whose delta is nonzero, or `None` if the regularization
    /// keeps changing forever. Constant schedules report `Some(0)`.
    fn last_change(&self) -> Option<usize>;
}

fn check_pd(r0: &Mat, what: &str) -> Result<()> {
    if !r0.is_square() {
        return Err(Error::Config(format!("{what} must be square")));
    }
    chol_factor(r0)
        .map(|_| ())
        .map_err(|e| Error::Config(format!("{what} must be positive definite: {e}")))
}

fn check_mu(mu: f64) -> Result<()> {
    if mu > 0.0 && mu < 1.0 {
        Ok(())
    } else {
        Err(Error::Config(format!("fading factor mu must lie in (0, 1), got {mu}")))
    }
}

fn check_theta(theta: &[f64], n: usize) -> Result<()> {
    if theta.len() != n {
        return Err(Error::Config(format!(
            "theta_reg has length {}, expected {n}",
            theta.len()
        )));
    }
    if theta.iter().any(|x| !x.is_finite()) {
        return Err(Error::Config("theta_reg must be finite".into()));
    }
    Ok(())
}

/// Classical RLS: `R_k = R_0`, `θ_reg,k = θ_0` for all `k`.
pub struct ConstantSchedule {
    r0: Arc<BaseMatrix>,
    theta_reg: Vec<f64>,
}

impl ConstantSchedule {
    /// `r0` may be any symmetric positive-semidefinite matrix.
    pub fn new(r0: Mat, theta_reg: Vec<f64>) -> Result<Self> {
        if !r0.is_square() {
            return Err(Error::Config("R_0 must be square".into()));
        }
        check_theta(&theta_reg, r0.rows())?;
        Ok(ConstantSchedule {
            r0: BaseMatrix::new(r0)?,
            theta_reg,
        })
    }
}

impl Schedule for ConstantSchedule {
    fn dim(&self) -> usize {
        self.r0.mat.rows()
    }

    fn step(&mut self, k: usize) -> RegDelta {
        RegDelta {
            k,
            kind: DeltaKind::Zero,
            r_current: RegMatrix::Scaled {
                factor: 1.0,
                base: self.r0.clone(),
            },
            theta_reg: self.theta_reg.clone(),
        }
    }

    fn last_change(&self) -> Option<usize> {
        Some(0)
    }
}

#[derive(Debug, Clone)]
pub struct FadingParams {
    pub r0: Mat,
    pub mu: f64,
    /// First step at which the regularization is zero; `None` never cuts.
    pub k_cut: Option<usize>,
}

impl FadingParams {
    pub fn validate(&self) -> Result<()> {
        check_pd(&self.r0, "R_0")?;
        check_mu(self.mu)?;
        if self.k_cut == Some(0) {
            return Err(Error::Config("k_cut must be at least 1".into()));
        }
        Ok(())
    }
}

/// `R_k = μᵏ R_0` for `k < k_cut`, zero from `k_cut` on.
pub struct FadingSchedule {
    r0: Arc<BaseMatrix>,
    mu: f64,
    k_cut: Option<usize>,
    theta_reg: Vec<f64>,
}

impl FadingSchedule {
    pub fn new(params: FadingParams, theta_reg: Vec<f64>) -> Result<Self> {
        params.validate()?;
        check_theta(&theta_reg, params.r0.rows())?;
        Ok(FadingSchedule {
            r0: BaseMatrix::new(params.r0)?,
            mu: params.mu,
            k_cut: params.k_cut,
            theta_reg,
        })
    }

    fn scaled(&self, factor: f64) -> RegMatrix {
        RegMatrix::Scaled {
            factor,
            base: self.r0.clone(),
        }
    }
}

impl Schedule for FadingSchedule {
    fn dim(&self) -> usize {
        self.r0.mat.rows()
    }

    fn step(&mut self, k: usize) -> RegDelta {
        let n = self.dim();
        let cut = self.k_cut.unwrap_or(usize::MAX);
        let r_current = if k == 0 {
            self.scaled(1.0)
        } else if k < cut {
            self.scaled(self.mu.powf(k as f64))
        } else {
            RegMatrix::Zero(n)
        };
        let prev = self.mu.powf(k.saturating_sub(1) as f64);
        let kind = if k == 0 || k > cut {
            DeltaKind::Zero
        } else if k < cut {
            // μᵏ - μᵏ⁻¹
            DeltaKind::Full(self.scaled(-prev * (1.0 - self.mu)))
        } else {
            DeltaKind::Full(self.scaled(-prev))
        };
        RegDelta {
            k,
            kind,
            r_current,
            theta_reg: self.theta_reg.clone(),
        }
    }

    fn last_change(&self) -> Option<usize> {
        self.k_cut
    }
}

#[derive(Debug, Clone)]
pub struct R1FRParams {
    pub r0: Mat,
    pub mu: f64,
    /// Last cycle carrying regularization; `None` never cuts.
    pub j_cut: Option<usize>,
    pub eigen: EigenPair,
}

impl R1FRParams {
    /// Decomposes `r0` and validates the parameters.
    pub fn new(r0: Mat, mu: f64, j_cut: Option<usize>) -> Result<Self> {
        check_pd(&r0, "R_0")?;
        check_mu(mu)?;
        let eigen = sym_eigen(&r0)?;
        if eigen.values.iter().any(|d| !(*d > 0.0)) {
            return Err(Error::Config(
                "R_0 must have strictly positive eigenvalues".into(),
            ));
        }
        Ok(R1FRParams {
            r0,
            mu,
            j_cut,
            eigen,
        })
    }

    pub fn dim(&self) -> usize {
        self.r0.rows()
    }

    /// Number of steps that carry a nonzero delta: `(j_cut + 1) · n`.
    pub fn active_steps(&self) -> Option<usize> {
        self.j_cut.map(|j| (j + 1) * self.dim())
    }
}

/// Rank-1 fading: each step removes part of one eigendirection of `R_0`,
/// cycling through the directions in descending eigenvalue order, so that
/// every `n` steps the regularization equals `μ^{jn} R_0`.
pub struct Rank1FadingSchedule {
    params: R1FRParams,
    directions: Arc<Mat>,
    weights: Vec<f64>,
    next_k: usize,
    theta_reg: Vec<f64>,
}

impl Rank1FadingSchedule {
    pub fn new(params: R1FRParams, theta_reg: Vec<f64>) -> Result<Self> {
        check_theta(&theta_reg, params.dim())?;
        let directions = Arc::new(params.eigen.vectors.transpose());
        let weights = params.eigen.values.clone();
        Ok(Rank1FadingSchedule {
            params,
            directions,
            weights,
            next_k: 0,
            theta_reg,
        })
    }

    pub fn params(&self) -> &R1FRParams {
        &self.params
    }

    /// Coefficient `c_k` and 0-based direction index for step `k ≥ 1`, or
    /// `None` once the schedule is exhausted.
    pub fn coefficient(&self, k: usize) -> Option<(f64, usize)> {
        let n = self.params.dim();
        if k == 0 || self.params.active_steps().is_some_and(|last| k > last) {
            return None;
        }
        let j = (k - 1) / n;
        let l = (k - 1) % n;
        let d = self.params.eigen.values[l];
        let decay = self.params.mu.powf((j * n) as f64);
        let c = if Some(j) == self.params.j_cut {
            decay * d
        } else {
            decay * (1.0 - self.params.mu.powf(n as f64)) * d
        };
        Some((c, l))
    }

    fn current(&self) -> RegMatrix {
        if self.weights.iter().all(|w| *w == 0.0) {
            RegMatrix::Zero(self.params.dim())
        } else {
            RegMatrix::Spectral {
                weights: self.weights.clone(),
                directions: self.directions.clone(),
            }
        }
    }

    fn reset(&mut self) {
        self.weights = self.params.eigen.values.clone();
        self.next_k = 0;
    }

    fn advance(&mut self) -> DeltaKind {
        let k = self.next_k;
        self.next_k += 1;
        match self.coefficient(k) {
            None => DeltaKind::Zero,
            Some((c, l)) => {
                let n = self.params.dim();
                if Some((k - 1) / n) == self.params.j_cut {
                    // the final cycle removes each direction entirely
                    self.weights[l] = 0.0;
                } else {
                    self.weights[l] -= c;
                }
                DeltaKind::Rank1 {
                    coef: c,
                    direction: self.directions.row(l).to_vec(),
                }
            }
        }
    }
}

impl Schedule for Rank1FadingSchedule {
    fn dim(&self) -> usize {
        self.params.dim()
    }

    fn step(&mut self, k: usize) -> RegDelta {
        if k < self.next_k {
            self.reset();
        }
        let mut kind = DeltaKind::Zero;
        while self.next_k <= k {
            kind = self.advance();
        }
        RegDelta {
            k,
            kind,
            r_current: self.current(),
            theta_reg: self.theta_reg.clone(),
        }
    }

    fn last_change(&self) -> Option<usize> {
        self.params.active_steps()
    }
}

/// Closed-form rank-1 fading regularization at step `k`.
///
/// With `k = j n + l`: for cycles before the cut, directions `0..l` carry
/// `μ^{(j+1)n} d_i` and the rest `μ^{jn} d_i`; in the final cycle the first
/// `l` directions are gone; afterwards the matrix is zero. Used to check the
/// accumulated schedule.
pub fn r1fr_closed_form(p: &R1FRParams, k: usize) -> Mat {
    let n = p.dim();
    let j = k / n;
    let l = k % n;
    let mut out = Mat::zeros(n, n);
    if p.j_cut.is_some_and(|jc| j > jc) {
        return out;
    }
    let final_cycle = p.j_cut == Some(j);
    let decay = p.mu.powf((j * n) as f64);
    let reduced = p.mu.powf(n as f64);
    for i in 0..n {
        let d = p.eigen.values[i];
        let w = if i >= l {
            decay * d
        } else if final_cycle {
            0.0
        } else {
            decay * reduced * d
        };
        if w != 0.0 {
            out.add_outer(w, &p.eigen.vector(i));
        }
    }
    out
}

/// Arbitrary per-step `(R_k, θ_reg,k)` pairs, for exercising the general
/// recursion. The last pair is held once the list is exhausted.
pub struct ExplicitSchedule {
    steps: Vec<(Arc<BaseMatrix>, Vec<f64>)>,
}

impl ExplicitSchedule {
    pub fn new(steps: Vec<(Mat, Vec<f64>)>) -> Result<Self> {
        let n = steps
            .first()
            .map(|(r, _)| r.rows())
            .ok_or_else(|| Error::Config("explicit schedule needs at least one step".into()))?;
        let mut out = Vec::with_capacity(steps.len());
        for (r, theta) in steps {
            if r.shape() != (n, n) {
                return Err(Error::Config("inconsistent regularization dimensions".into()));
            }
            check_theta(&theta, n)?;
            let mut r = r;
            r.symmetrize();
            out.push((BaseMatrix::new(r)?, theta));
        }
        Ok(ExplicitSchedule { steps: out })
    }

    fn at(&self, k: usize) -> &(Arc<BaseMatrix>, Vec<f64>) {
        &self.steps[k.min(self.steps.len() - 1)]
    }
}

impl Schedule for ExplicitSchedule {
    fn dim(&self) -> usize {
        self.steps[0].0.mat.rows()
    }

    fn step(&mut self, k: usize) -> RegDelta {
        let (r, theta) = self.at(k);
        let kind = if k == 0 || k >= self.steps.len() {
            DeltaKind::Zero
        } else {
            let prev = &self.at(k - 1).0;
            let delta = r.mat.sub(&prev.mat).expect("dimension checked");
            DeltaKind::Full(RegMatrix::Dense(
                BaseMatrix::new(delta).expect("finite symmetric delta"),
            ))
        };
        RegDelta {
            k,
            kind,
            r_current: RegMatrix::Dense(r.clone()),
            theta_reg: theta.clone(),
        }
    }

    fn last_change(&self) -> Option<usize> {
        Some(self.steps.len().saturating_sub(1))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn close(a: &Mat, b: &Mat, tol: f64) -> bool {
        a.max_abs_diff(b) <= tol
    }

    #[test]
    fn constant_examples() {
        let mut s = ConstantSchedule::new(Mat::identity(2), vec![0.0; 2]).unwrap();
        let d0 = s.step(0);
        assert_eq!(d0.r_current.to_dense(), Mat::identity(2));
        let d5 = s.step(5);
        assert!(matches!(d5.kind, DeltaKind::Zero));
        assert_eq!(d5.r_current.to_dense(), Mat::identity(2));

        let mut s = ConstantSchedule::new(Mat::from_diag(&[4.0, 1.0]), vec![0.0; 2]).unwrap();
        for k in [0, 1, 7, 1000] {
            assert_eq!(s.step(k).r_current.to_dense(), Mat::from_diag(&[4.0, 1.0]));
        }
    }

    #[test]
    fn fading_examples() {
        let params = FadingParams {
            r0: Mat::identity(2),
            mu: 0.5,
            k_cut: Some(3),
        };
        let mut s = FadingSchedule::new(params, vec![0.0; 2]).unwrap();
        assert_eq!(s.step(2).r_current.to_dense(), Mat::identity(2).scale(0.25));
        let d3 = s.step(3);
        assert!(d3.r_current.is_zero());
        // the cutoff step removes μ² R_0 in one go
        assert!(close(&d3.delta_dense(), &Mat::identity(2).scale(-0.25), 0.0));
        assert!(matches!(s.step(4).kind, DeltaKind::Zero));

        let params = FadingParams {
            r0: Mat::identity(100),
            mu: 0.99,
            k_cut: None,
        };
        let mut s = FadingSchedule::new(params, vec![0.0; 100]).unwrap();
        let r = s.step(200).r_current.to_dense();
        let expected = 0.99f64.powi(200);
        assert!((expected - 0.1340).abs() < 1e-4);
        assert!(close(&r, &Mat::identity(100).scale(expected), 1e-15));
    }

    #[test]
    fn fading_rejects_bad_params() {
        let bad_mu = FadingParams {
            r0: Mat::identity(2),
            mu: 1.0,
            k_cut: None,
        };
        assert!(FadingSchedule::new(bad_mu, vec![0.0; 2]).is_err());
        let bad_r0 = FadingParams {
            r0: Mat::from_diag(&[1.0, 0.0]),
            mu: 0.5,
            k_cut: None,
        };
        assert!(FadingSchedule::new(bad_r0, vec![0.0; 2]).is_err());
    }

    fn r1fr(j_cut: Option<usize>) -> Rank1FadingSchedule {
        let p = R1FRParams::new(Mat::from_diag(&[4.0, 1.0]), 0.5, j_cut).unwrap();
        Rank1FadingSchedule::new(p, vec![0.0; 2]).unwrap()
    }

    #[test]
    fn r1fr_hand_evaluation() {
        let mut s = r1fr(Some(1));
        let d1 = s.step(1);
        match &d1.kind {
            DeltaKind::Rank1 { coef, direction } => {
                assert_eq!(*coef, 3.0);
                assert_eq!(direction, &vec![1.0, 0.0]);
            }
            other => panic!("unexpected {other:?}"),
        }
        assert!(close(&d1.r_current.to_dense(), &Mat::identity(2), 1e-15));
        let d2 = s.step(2);
        assert!(matches!(d2.kind, DeltaKind::Rank1 { coef, .. } if coef == 0.75));
        assert!(close(
            &d2.r_current.to_dense(),
            &Mat::from_diag(&[1.0, 0.25]),
            1e-15
        ));
    }

    #[test]
    fn r1fr_final_cycle() {
        let mut s = r1fr(Some(0));
        let d1 = s.step(1);
        assert!(matches!(d1.kind, DeltaKind::Rank1 { coef, .. } if coef == 4.0));
        assert_eq!(d1.r_current.to_dense(), Mat::from_diag(&[0.0, 1.0]));
        let d2 = s.step(2);
        assert!(matches!(d2.kind, DeltaKind::Rank1 { coef, .. } if coef == 1.0));
        assert!(d2.r_current.is_zero());
        assert!(matches!(s.step(3).kind, DeltaKind::Zero));
    }

    #[test]
    fn r1fr_closed_form_examples() {
        let p = R1FRParams::new(Mat::from_diag(&[4.0, 1.0]), 0.5, Some(1)).unwrap();
        assert_eq!(r1fr_closed_form(&p, 0), Mat::from_diag(&[4.0, 1.0]));
        assert!(close(&r1fr_closed_form(&p, 1), &Mat::identity(2), 1e-15));
        assert!(close(
            &r1fr_closed_form(&p, 2),
            &Mat::from_diag(&[1.0, 0.25]),
            1e-15
        ));
        assert_eq!(r1fr_closed_form(&p, 4), Mat::zeros(2, 2));
    }

    #[test]
    fn r1fr_out_of_order_replays() {
        let mut a = r1fr(Some(2));
        let mut b = r1fr(Some(2));
        for k in 0..7 {
            a.step(k);
        }
        let direct = b.step(6).r_current.to_dense();
        assert!(close(&a.step(6).r_current.to_dense(), &direct, 0.0));
        // stepping backwards recomputes from scratch
        let back = a.step(3).r_current.to_dense();
        assert!(close(&back, &b.step(3).r_current.to_dense(), 0.0));
    }

    #[test]
    fn explicit_schedule_deltas() {
        let steps = vec![
            (Mat::identity(2), vec![0.0, 0.0]),
            (Mat::from_diag(&[2.0, 0.5]), vec![1.0, 0.0]),
        ];
        let mut s = ExplicitSchedule::new(steps).unwrap();
        assert!(matches!(s.step(0).kind, DeltaKind::Zero));
        let d1 = s.step(1);
        assert_eq!(d1.delta_dense(), Mat::from_diag(&[1.0, -0.5]));
        assert_eq!(d1.theta_reg, vec![1.0, 0.0]);
        assert!(matches!(s.step(2).kind, DeltaKind::Zero));
    }

    #[test]
    fn structured_ops_match_dense() {
        let p = R1FRParams::new(
            Mat::from_rows(&[&[3.0, 1.0, 0.0], &[1.0, 2.0, 0.5], &[0.0, 0.5, 1.0]]),
            0.7,
            None,
        )
        .unwrap();
        let mut s = Rank1FadingSchedule::new(p, vec![0.0; 3]).unwrap();
        let x = [0.3, -1.0, 2.0];
        for k in 0..5 {
            let d = s.step(k);
            let dense = d.r_current.to_dense();
            let y = d.r_current.mul_vec(&x);
            let yd = dense.matvec(&x).unwrap();
            for (a, b) in y.iter().zip(&yd) {
                assert!((a - b).abs() < 1e-13);
            }
            let dd = d.delta_dense();
            let y = d.delta_mul_vec(&x);
            let yd = dd.matvec(&x).unwrap();
            for (a, b) in y.iter().zip(&yd) {
                assert!((a - b).abs() < 1e-13);
            }
            let (lo, hi) = lambda_extreme(&dense).unwrap();
            assert!((d.r_current.lambda_max() - hi).abs() < 1e-10);
            assert!((d.r_current.lambda_min() - lo).abs() < 1e-10);
        }
    }
}
