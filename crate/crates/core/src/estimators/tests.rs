use super::*;
use crate::matkit::testutil::{random_mat, random_spd, rng};
use crate::regularizers::ExplicitSchedule;
use rand::Rng;

fn scalar(phi: f64, y: f64) -> MeasurementTriple {
    MeasurementTriple::unit_weight(Mat::from_rows(&[&[phi]]), vec![y]).unwrap()
}

fn random_triples(seed: u64, n: usize, p: usize, steps: usize) -> Vec<MeasurementTriple> {
    let mut r = rng(seed);
    (0..steps)
        .map(|_| {
            let phi = random_mat(&mut r, p, n);
            let y: Vec<f64> = (0..p).map(|_| r.gen_range(-1.0..1.0)).collect();
            let gamma = random_spd(&mut r, p);
            MeasurementTriple::new(phi, y, gamma).unwrap()
        })
        .collect()
}

fn max_diff(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y).abs()).fold(0.0, f64::max)
}

fn params(n: usize, seed: u64) -> EstimatorParams {
    let mut r = rng(seed);
    EstimatorParams {
        r0: random_spd(&mut r, n),
        theta_reg: (0..n).map(|_| r.gen_range(-1.0..1.0)).collect(),
        mu: 0.8,
        k_cut: Some(6),
        j_cut: Some(1),
        general_schedule: ScheduleKind::Fading,
    }
}

#[test]
fn triple_validation() {
    assert!(MeasurementTriple::new(Mat::zeros(2, 3), vec![0.0; 2], Mat::identity(2)).is_ok());
    assert!(MeasurementTriple::new(Mat::zeros(2, 3), vec![0.0; 3], Mat::identity(2)).is_err());
    assert!(
        MeasurementTriple::new(Mat::zeros(1, 3), vec![0.0], Mat::from_rows(&[&[-1.0]])).is_err()
    );
    assert!(MeasurementTriple::new(Mat::zeros(1, 1), vec![f64::NAN], Mat::identity(1)).is_err());
}

#[test]
fn kind_names_roundtrip() {
    for k in EstimatorKind::ALL {
        assert_eq!(k.as_str().parse::<EstimatorKind>().unwrap(), k);
        let json = serde_json::to_string(&k).unwrap();
        assert_eq!(json, format!("\"{}\"", k.as_str()));
    }
    assert!("rls".parse::<EstimatorKind>().is_err());
}

#[test]
fn scalar_batch_example() {
    let mut h = History::new();
    h.push(scalar(1.0, 2.0)).unwrap();
    let mut s = ConstantSchedule::new(Mat::identity(1), vec![0.0]).unwrap();
    assert!((batch_solve(&h, &s.step(0)).unwrap()[0] - 1.0).abs() < 1e-15);
}

#[test]
fn scalar_init_example() {
    let mut s = ConstantSchedule::new(Mat::identity(1), vec![0.0]).unwrap();
    let st = tvr_init(&s.step(0), &scalar(1.0, 2.0)).unwrap();
    assert_eq!(st.information().unwrap()[(0, 0)], 2.0);
    assert!((st.theta[0] - 1.0).abs() < 1e-15);
    assert_eq!(st.k, 1);
}

#[test]
fn scalar_rls_chain() {
    let mut st = EstimatorState {
        theta: vec![1.0],
        form: Form::Covariance(Mat::from_rows(&[&[0.5]])),
        k: 1,
        prev_reg: None,
    };
    rls_mil_update(&mut st, &scalar(1.0, 2.0)).unwrap();
    let p = st.covariance().unwrap()[(0, 0)];
    assert!((p - 1.0 / 3.0).abs() < 1e-15);
    assert!((st.theta[0] - 4.0 / 3.0).abs() < 1e-15);
}

#[test]
fn zero_regressor_leaves_state() {
    let mut st = EstimatorState {
        theta: vec![0.3, -0.2],
        form: Form::Covariance(Mat::from_diag(&[2.0, 3.0])),
        k: 4,
        prev_reg: None,
    };
    let m = MeasurementTriple::unit_weight(Mat::zeros(1, 2), vec![5.0]).unwrap();
    rls_mil_update(&mut st, &m).unwrap();
    assert_eq!(st.theta, vec![0.3, -0.2]);
    assert_eq!(st.covariance().unwrap(), Mat::from_diag(&[2.0, 3.0]));
    assert_eq!(st.k, 5);
}

#[test]
fn dimension_mismatch_is_rejected() {
    let mut est = make_estimator(EstimatorKind::Classical, &params(3, 1)).unwrap();
    let m = MeasurementTriple::unit_weight(Mat::zeros(1, 2), vec![0.0]).unwrap();
    assert!(matches!(est.update(&m), Err(Error::DimensionMismatch { .. })));
    assert_eq!(est.steps(), 0);
}

fn assert_matches_oracle(kind: EstimatorKind, p: &EstimatorParams, seed: u64, steps: usize) {
    let n = p.r0.rows();
    let data = random_triples(seed, n, 2, steps);
    let mut est = make_estimator(kind, p).unwrap();
    let sched_kind = match kind {
        EstimatorKind::Classical => ScheduleKind::Constant,
        EstimatorKind::Fr => ScheduleKind::Fading,
        EstimatorKind::R1fr => ScheduleKind::Rank1,
        EstimatorKind::TvrGeneral => p.general_schedule,
    };
    let mut oracle = BatchOracle::new(p.schedule(sched_kind).unwrap());
    for (k, m) in data.iter().enumerate() {
        est.update(m).unwrap();
        oracle.update(m).unwrap();
        let scale = 1.0 + oracle.theta().iter().map(|x| x.abs()).fold(0.0, f64::max);
        let d = max_diff(est.theta(), oracle.theta());
        assert!(d <= 1e-9 * scale, "{kind} step {k}: diff {d}");
    }
    let pc = est.covariance().unwrap();
    let po = oracle.covariance().unwrap();
    assert!(pc.max_abs_diff(&po) <= 1e-8 * (1.0 + po.max_abs()));
}

#[test]
fn classical_matches_batch() {
    assert_matches_oracle(EstimatorKind::Classical, &params(4, 2), 20, 30);
}

#[test]
fn fading_matches_batch() {
    assert_matches_oracle(EstimatorKind::Fr, &params(4, 3), 21, 30);
}

#[test]
fn rank1_matches_batch() {
    let mut p = params(3, 4);
    p.mu = 0.6;
    assert_matches_oracle(EstimatorKind::R1fr, &p, 22, 30);
    p.j_cut = Some(0);
    assert_matches_oracle(EstimatorKind::R1fr, &p, 23, 30);
    p.j_cut = Some(3);
    assert_matches_oracle(EstimatorKind::R1fr, &p, 24, 30);
}

#[test]
fn general_matches_batch_for_each_schedule() {
    for (i, kind) in [ScheduleKind::Constant, ScheduleKind::Fading, ScheduleKind::Rank1]
        .into_iter()
        .enumerate()
    {
        let mut p = params(3, 5 + i as u64);
        p.general_schedule = kind;
        assert_matches_oracle(EstimatorKind::TvrGeneral, &p, 30 + i as u64, 25);
    }
}

#[test]
fn general_tracks_moving_target() {
    let n = 3;
    let mut r = rng(40);
    let steps: Vec<(Mat, Vec<f64>)> = (0..8)
        .map(|i| {
            let m = random_spd(&mut r, n).scale(1.0 / (1.0 + i as f64));
            let t = (0..n).map(|_| r.gen_range(-2.0..2.0)).collect();
            (m, t)
        })
        .collect();
    let mut est = Estimator::general(Box::new(ExplicitSchedule::new(steps.clone()).unwrap())).unwrap();
    let mut oracle = BatchOracle::new(Box::new(ExplicitSchedule::new(steps).unwrap()));
    for m in random_triples(41, n, 1, 15) {
        est.update(&m).unwrap();
        oracle.update(&m).unwrap();
        assert!(max_diff(est.theta(), oracle.theta()) <= 1e-9);
    }
}

#[test]
fn fading_switches_to_covariance_after_cut() {
    let p = params(3, 6);
    let mut est = make_estimator(EstimatorKind::Fr, &p).unwrap();
    let data = random_triples(50, 3, 1, 10);
    for (k, m) in data.iter().enumerate() {
        est.update(m).unwrap();
        let info = matches!(est.state().form, Form::Information(_));
        assert_eq!(info, k < 6, "step {k}");
    }
}

#[test]
fn information_and_covariance_forms_agree() {
    let p = params(4, 7);
    let data = random_triples(60, 4, 2, 12);
    let mut a = make_estimator(EstimatorKind::TvrGeneral, &p).unwrap();
    let mut b = make_estimator(EstimatorKind::Fr, &p).unwrap();
    for m in &data {
        a.update(m).unwrap();
        b.update(m).unwrap();
    }
    assert!(max_diff(a.theta(), b.theta()) <= 1e-10);
    let pa = a.covariance().unwrap();
    let pb = b.covariance().unwrap();
    assert!(pa.max_abs_diff(&pb) <= 1e-9 * (1.0 + pa.max_abs()));
    let ia = a.state().information().unwrap();
    let prod = ia.matmul(&pb).unwrap();
    assert!(prod.max_abs_diff(&Mat::identity(4)) <= 1e-8);
}

#[test]
fn exact_recovery_after_regularization_ends() {
    // noise-free data: once R vanishes and the data excite all directions,
    // the estimate is the true parameter
    let n = 4;
    let mut r = rng(70);
    let theta: Vec<f64> = (0..n).map(|_| r.gen_range(-1.0..1.0)).collect();
    let mut p = EstimatorParams::isotropic(n, 1.0, 0.7, Some(5), Some(0));
    p.theta_reg = vec![0.5; n];
    for kind in [EstimatorKind::Fr, EstimatorKind::R1fr] {
        let mut est = make_estimator(kind, &p).unwrap();
        let mut r = rng(71);
        for k in 0..20 {
            let phi = random_mat(&mut r, 1, n);
            let y = phi.matvec(&theta).unwrap();
            est.update(&MeasurementTriple::unit_weight(phi, y).unwrap()).unwrap();
            if k >= 8 {
                assert!(max_diff(est.theta(), &theta) <= 1e-9, "{kind} step {k}");
            }
        }
        assert!(est.regularization().unwrap().r_current.is_zero());
    }
}

#[test]
fn classical_keeps_bias_without_excitation() {
    let n = 2;
    let p = EstimatorParams::isotropic(n, 1.0, 0.9, Some(3), Some(0));
    let theta = [1.0, -1.0];
    let mut est = make_estimator(EstimatorKind::Classical, &p).unwrap();
    let mut fr = make_estimator(EstimatorKind::Fr, &p).unwrap();
    for k in 0..40 {
        let phi = if k % 2 == 0 {
            Mat::from_rows(&[&[1.0, 0.0]])
        } else {
            Mat::from_rows(&[&[0.0, 1.0]])
        };
        let y = phi.matvec(&theta).unwrap();
        let m = MeasurementTriple::unit_weight(phi, y).unwrap();
        est.update(&m).unwrap();
        fr.update(&m).unwrap();
    }
    assert!(max_diff(est.theta(), &theta) > 1e-3);
    assert!(max_diff(fr.theta(), &theta) < 1e-12);
}

#[test]
fn errors_carry_step_and_leave_state() {
    // a PSD R_0 with no excitation of its null space fails at step 0
    let p = EstimatorParams {
        r0: Mat::from_diag(&[1.0, 0.0]),
        theta_reg: vec![0.0; 2],
        mu: 0.5,
        k_cut: Some(3),
        j_cut: None,
        general_schedule: ScheduleKind::Constant,
    };
    let mut est = make_estimator(EstimatorKind::TvrGeneral, &p).unwrap();
    let m = MeasurementTriple::unit_weight(Mat::from_rows(&[&[1.0, 0.0]]), vec![1.0]).unwrap();
    let err = est.update(&m).unwrap_err();
    assert_eq!(err.step(), Some(0));
    assert!(matches!(err.root(), Error::NotPositiveDefinite { .. }));
    assert_eq!(est.steps(), 0);

    // the same R_0 is rejected up front by covariance-form estimators
    assert!(make_estimator(EstimatorKind::Classical, &p).is_err());
}

#[test]
fn psd_r0_with_excitation_works_in_general_path() {
    let p = EstimatorParams {
        r0: Mat::from_diag(&[1.0, 0.0]),
        theta_reg: vec![0.0; 2],
        mu: 0.5,
        k_cut: Some(3),
        j_cut: None,
        general_schedule: ScheduleKind::Constant,
    };
    let mut est = make_estimator(EstimatorKind::TvrGeneral, &p).unwrap();
    let m = MeasurementTriple::unit_weight(Mat::from_rows(&[&[0.0, 1.0]]), vec![2.0]).unwrap();
    est.update(&m).unwrap();
    assert_eq!(est.theta(), &[0.0, 2.0]);
}
