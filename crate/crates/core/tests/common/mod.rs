#![allow(dead_code)]

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use tvrls::estimators::{
    EstimatorKind, EstimatorParams, History, MeasurementTriple, ScheduleKind,
};
use tvrls::matkit::Mat;

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

pub fn uniform_mat(r: &mut ChaCha8Rng, rows: usize, cols: usize) -> Mat {
    Mat::from_fn(rows, cols, |_, _| r.gen_range(-1.0..1.0))
}

/// `MᵀM + I`: symmetric positive definite with eigenvalues at least 1.
pub fn spd(r: &mut ChaCha8Rng, n: usize) -> Mat {
    let m = uniform_mat(r, n, n);
    let mut a = m.transpose().matmul(&m).unwrap();
    a.add_scaled(1.0, &Mat::identity(n)).unwrap();
    a
}

pub fn uniform_vec(r: &mut ChaCha8Rng, n: usize) -> Vec<f64> {
    (0..n).map(|_| r.gen_range(-1.0..1.0)).collect()
}

pub fn max_diff(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y).abs()).fold(0.0, f64::max)
}

pub fn norm(x: &[f64]) -> f64 {
    x.iter().map(|v| v * v).sum::<f64>().sqrt()
}

/// Random noise-free instance: dimensions, estimator parameters, true
/// parameter and a measurement sequence with random positive-definite weights.
pub struct Instance {
    pub n: usize,
    pub p: usize,
    pub params: EstimatorParams,
    pub theta: Vec<f64>,
    pub data: Vec<MeasurementTriple>,
}

pub fn random_instance(seed: u64, max_n: usize, max_p: usize, steps: usize) -> Instance {
    let mut r = rng(seed);
    let n = r.gen_range(1..=max_n);
    let p = r.gen_range(1..=max_p);
    let params = EstimatorParams {
        r0: spd(&mut r, n),
        theta_reg: uniform_vec(&mut r, n),
        mu: r.gen_range(0.3..0.99),
        // a cut before the data reach full rank would leave P⁻¹ singular
        k_cut: Some(r.gen_range(n.div_ceil(p).max(1)..=30)),
        j_cut: Some(r.gen_range(0..=3)),
        general_schedule: [ScheduleKind::Constant, ScheduleKind::Fading, ScheduleKind::Rank1]
            [r.gen_range(0..3)],
    };
    let theta: Vec<f64> = (0..n).map(|_| r.gen_range(-2.0..2.0)).collect();
    let data = (0..steps)
        .map(|_| {
            let phi = uniform_mat(&mut r, p, n);
            let y = phi.matvec(&theta).unwrap();
            let gamma = spd(&mut r, p).scale(0.5);
            MeasurementTriple::new(phi, y, gamma).unwrap()
        })
        .collect();
    Instance {
        n,
        p,
        params,
        theta,
        data,
    }
}

/// Schedule kind an estimator kind runs on.
pub fn schedule_of(kind: EstimatorKind, params: &EstimatorParams) -> ScheduleKind {
    match kind {
        EstimatorKind::Classical => ScheduleKind::Constant,
        EstimatorKind::Fr => ScheduleKind::Fading,
        EstimatorKind::R1fr => ScheduleKind::Rank1,
        EstimatorKind::TvrGeneral => params.general_schedule,
    }
}

pub fn history(data: &[MeasurementTriple]) -> History {
    let mut h = History::new();
    for m in data {
        h.push(m.clone()).unwrap();
    }
    h
}
