use std::time::Instant;

use rayon::prelude::*;

use super::config::ExperimentConfig;
use super::data::{experiment_rng, gen_data, trial_seed};
use crate::analysis::{bound_from_spectrum, ErrorTrace, ExcitationMonitor, TraceRow, TrueModel};
use crate::error::{Error, Result};
use crate::estimators::{make_estimator, EstimatorKind, MeasurementTriple, RecursiveEstimator};
use crate::matkit::norm;

/// Timing samples from the first steps of every run are discarded.
pub const WARMUP_STEPS: usize = 20;

/// Two-sided 95% normal quantile.
const Z95: f64 = 1.96;

/// Excitation of one measurement sequence, shared by every estimator run on it.
#[derive(Debug, Clone, PartialEq)]
pub struct Excitation {
    /// `λ_min(S_k)` per step, `None` where the cadence skipped it.
    pub lambda_min: Vec<Option<f64>>,
    pub k_rank: Option<usize>,
    pub krank_lambda_min: Option<f64>,
}

pub fn excitation(cfg: &ExperimentConfig, data: &[MeasurementTriple]) -> Result<Excitation> {
    let mut mon = ExcitationMonitor::new(cfg.n, cfg.cadence());
    for m in data {
        mon.push(m)?;
    }
    Ok(Excitation {
        k_rank: mon.k_rank(),
        krank_lambda_min: mon.krank_lambda_min(),
        lambda_min: mon.lambda_min_history().to_vec(),
    })
}

/// Drives one estimator over `data`, timing each update.
pub fn run_trace(
    cfg: &ExperimentConfig,
    kind: EstimatorKind,
    model: &TrueModel,
    data: &[MeasurementTriple],
    exc: &Excitation,
) -> Result<ErrorTrace> {
    let mut est = make_estimator(kind, &cfg.estimator_params())?;
    let theta_norm = norm(&model.theta);
    let mut trace = ErrorTrace::new(kind.label());
    trace.k_rank = exc.k_rank;
    trace.rows.reserve(data.len());
    for (k, m) in data.iter().enumerate() {
        let start = Instant::now();
        est.update(m)?;
        let step_ms = start.elapsed().as_secs_f64() * 1e3;
        let reg = est.regularization().expect("set by update");
        let r_max = reg.r_current.lambda_max();
        let bound = match (exc.k_rank, exc.krank_lambda_min) {
            (Some(kr), Some(lmin)) if k >= kr => {
                bound_from_spectrum(r_max, lmin, norm(&reg.theta_reg), theta_norm).ok()
            }
            _ => None,
        };
        trace.rows.push(TraceRow {
            k: k + 1,
            error_norm: model.error_norm(est.theta()),
            lambda_min: exc.lambda_min.get(k).copied().flatten(),
            r_max,
            step_ms,
            bound,
        });
    }
    Ok(trace)
}

/// Output of one seeded run of every configured estimator on shared data.
#[derive(Debug, Clone)]
pub struct RunOutput {
    pub model: TrueModel,
    pub excitation: Excitation,
    pub traces: Vec<(EstimatorKind, ErrorTrace)>,
}

pub fn run_all(cfg: &ExperimentConfig) -> Result<RunOutput> {
    cfg.validate()?;
    let (model, data) = gen_data(cfg, &mut experiment_rng(cfg.seed))?;
    let exc = excitation(cfg, &data)?;
    let traces = cfg
        .estimators
        .iter()
        .map(|&kind| Ok((kind, run_trace(cfg, kind, &model, &data, &exc)?)))
        .collect::<Result<Vec<_>>>()?;
    Ok(RunOutput {
        model,
        excitation: exc,
        traces,
    })
}

/// One estimator on the data drawn from `cfg.seed`.
pub fn run_single(cfg: &ExperimentConfig, kind: EstimatorKind) -> Result<ErrorTrace> {
    cfg.validate()?;
    let (model, data) = gen_data(cfg, &mut experiment_rng(cfg.seed))?;
    let exc = excitation(cfg, &data)?;
    run_trace(cfg, kind, &model, &data, &exc)
}

/// Error norms `‖θ_k - θ‖` for `k = 1..=data.len()`, without timing or monitoring.
pub fn error_path(
    cfg: &ExperimentConfig,
    kind: EstimatorKind,
    model: &TrueModel,
    data: &[MeasurementTriple],
) -> Result<Vec<f64>> {
    let mut est = make_estimator(kind, &cfg.estimator_params())?;
    data.iter()
        .map(|m| {
            est.update(m)?;
            Ok(model.error_norm(est.theta()))
        })
        .collect()
}

/// Sample mean with its normal-approximation 95% interval
/// `mean ± 1.96 · s / √N`. A single sample gives a zero-width interval.
pub fn mean_ci(xs: &[f64]) -> (f64, f64, f64) {
    let n = xs.len() as f64;
    let mean = xs.iter().sum::<f64>() / n;
    if xs.len() < 2 {
        return (mean, mean, mean);
    }
    let var = xs.iter().map(|x| (x - mean) * (x - mean)).sum::<f64>() / (n - 1.0);
    let half = Z95 * (var / n).sqrt();
    (mean, mean - half, mean + half)
}

#[derive(Debug, Clone, PartialEq)]
pub struct McRow {
    pub k: usize,
    pub mean: f64,
    pub ci_lo: f64,
    pub ci_hi: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct McSummary {
    pub kind: EstimatorKind,
    pub trials: usize,
    pub rows: Vec<McRow>,
}

impl McSummary {
    pub fn label(&self) -> &'static str {
        self.kind.label()
    }

    /// Row for estimate `θ_k`.
    pub fn at(&self, k: usize) -> Option<&McRow> {
        self.rows.get(k.checked_sub(1)?)
    }
}

/// Independent trials with seeds from [`trial_seed`]; trials run on a pool
/// of `threads` workers (`None`: all cores) and are reduced in trial order,
/// so the result does not depend on the thread count.
pub fn run_monte_carlo(cfg: &ExperimentConfig, threads: Option<usize>) -> Result<Vec<McSummary>> {
    cfg.validate()?;
    if cfg.trials < 2 {
        return Err(Error::Config(
            "Monte Carlo intervals need at least 2 trials".into(),
        ));
    }
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(threads.unwrap_or(0))
        .build()
        .map_err(|e| Error::Config(format!("cannot start worker pool: {e}")))?;
    let per_trial: Vec<Vec<Vec<f64>>> = pool.install(|| {
        (0..cfg.trials)
            .into_par_iter()
            .map(|t| {
                let mut rng = experiment_rng(trial_seed(cfg.seed, t as u64));
                let (model, data) = gen_data(cfg, &mut rng)?;
                cfg.estimators
                    .iter()
                    .map(|&kind| error_path(cfg, kind, &model, &data))
                    .collect::<Result<Vec<_>>>()
            })
            .collect::<Result<Vec<_>>>()
    })?;

    let steps = cfg.data.steps;
    let mut column = vec![0.0; cfg.trials];
    Ok(cfg
        .estimators
        .iter()
        .enumerate()
        .map(|(e, &kind)| {
            let rows = (0..steps)
                .map(|k| {
                    for (c, trial) in column.iter_mut().zip(&per_trial) {
                        *c = trial[e][k];
                    }
                    let (mean, ci_lo, ci_hi) = mean_ci(&column);
                    McRow {
                        k: k + 1,
                        mean,
                        ci_lo,
                        ci_hi,
                    }
                })
                .collect();
            McSummary {
                kind,
                trials: cfg.trials,
                rows,
            }
        })
        .collect())
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Phase {
    /// Steps that still change the regularization.
    Fading,
    PostCutoff,
}

impl Phase {
    pub fn as_str(&self) -> &'static str {
        match self {
            Phase::Fading => "fading",
            Phase::PostCutoff => "post-cutoff",
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct TimingRow {
    pub kind: EstimatorKind,
    pub phase: Phase,
    pub mean_ms: f64,
    pub ci_lo_ms: f64,
    pub ci_hi_ms: f64,
    pub samples: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct TimingSummary {
    pub n: usize,
    pub p: usize,
    pub rows: Vec<TimingRow>,
}

impl TimingSummary {
    pub fn get(&self, kind: EstimatorKind, phase: Phase) -> Option<&TimingRow> {
        self.rows.iter().find(|r| r.kind == kind && r.phase == phase)
    }
}

/// Per-step wall-clock of every configured estimator on the calling thread.
///
/// Step `k` counts toward the fading phase when `k` does not exceed
/// [`ExperimentConfig::fading_boundary`]; the first [`WARMUP_STEPS`] steps
/// are dropped. Phases with no samples are omitted.
pub fn run_timing(cfg: &ExperimentConfig) -> Result<TimingSummary> {
    cfg.validate()?;
    let (_, data) = gen_data(cfg, &mut experiment_rng(cfg.seed))?;
    let mut rows = Vec::new();
    for &kind in &cfg.estimators {
        let boundary = cfg.fading_boundary(kind);
        let mut est = make_estimator(kind, &cfg.estimator_params())?;
        let mut fading = Vec::new();
        let mut post = Vec::new();
        for (k, m) in data.iter().enumerate() {
            let start = Instant::now();
            est.update(m)?;
            let ms = start.elapsed().as_secs_f64() * 1e3;
            if k < WARMUP_STEPS {
                continue;
            }
            if k <= boundary {
                fading.push(ms);
            } else {
                post.push(ms);
            }
        }
        for (phase, samples) in [(Phase::Fading, fading), (Phase::PostCutoff, post)] {
            if samples.is_empty() {
                continue;
            }
            let (mean_ms, ci_lo_ms, ci_hi_ms) = mean_ci(&samples);
            rows.push(TimingRow {
                kind,
                phase,
                mean_ms,
                ci_lo_ms,
                ci_hi_ms,
                samples: samples.len(),
            });
        }
    }
    Ok(TimingSummary {
        n: cfg.n,
        p: cfg.p,
        rows,
    })
}
