use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::estimators::{EstimatorKind, EstimatorParams, ScheduleKind};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DataMode {
    /// Every regressor row is standard normal.
    Pe,
    /// Standard normal up to `switch_step`, zero after it.
    NonPe,
}

impl DataMode {
    pub fn as_str(&self) -> &'static str {
        match self {
            DataMode::Pe => "pe",
            DataMode::NonPe => "non_pe",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Scale {
    /// Reduced dimensions for quick runs.
    Desk,
    /// The dimensions of the reference experiments.
    Full,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScheduleConfig {
    /// Schedule of the `tvr-general` estimator; the other kinds fix their own.
    #[serde(default)]
    pub kind: ScheduleKind,
    pub mu: f64,
    #[serde(default)]
    pub k_cut: Option<usize>,
    #[serde(default)]
    pub j_cut: Option<usize>,
    /// `R_0 = r0_scale · I`.
    pub r0_scale: f64,
}

fn default_switch() -> usize {
    100
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DataConfig {
    pub mode: DataMode,
    pub noise_std: f64,
    pub steps: usize,
    /// Last step with nonzero regressors in `non_pe` mode.
    #[serde(default = "default_switch")]
    pub switch_step: usize,
}

fn default_trials() -> usize {
    1
}

fn default_estimators() -> Vec<EstimatorKind> {
    vec![
        EstimatorKind::Classical,
        EstimatorKind::Fr,
        EstimatorKind::R1fr,
    ]
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub n: usize,
    pub p: usize,
    pub seed: u64,
    pub schedule: ScheduleConfig,
    pub data: DataConfig,
    #[serde(default = "default_trials")]
    pub trials: usize,
    #[serde(default = "default_estimators")]
    pub estimators: Vec<EstimatorKind>,
    /// Steps between excitation-monitor evaluations once rank is attained.
    #[serde(default)]
    pub monitor_cadence: Option<usize>,
}

fn config_err(msg: impl Into<String>) -> Error {
    Error::Config(msg.into())
}

impl ExperimentConfig {
    pub fn validate(&self) -> Result<()> {
        if self.n == 0 || self.p == 0 {
            return Err(config_err("n and p must be at least 1"));
        }
        if self.data.steps == 0 {
            return Err(config_err("data.steps must be at least 1"));
        }
        if self.trials == 0 {
            return Err(config_err("trials must be at least 1"));
        }
        let s = &self.schedule;
        if !(s.mu > 0.0 && s.mu < 1.0) {
            return Err(config_err(format!("schedule.mu must lie in (0, 1), got {}", s.mu)));
        }
        if !(s.r0_scale > 0.0 && s.r0_scale.is_finite()) {
            return Err(config_err(format!(
                "schedule.r0_scale must be positive and finite, got {}",
                s.r0_scale
            )));
        }
        if s.k_cut == Some(0) {
            return Err(config_err("schedule.k_cut must be at least 1"));
        }
        if !(self.data.noise_std >= 0.0 && self.data.noise_std.is_finite()) {
            return Err(config_err(format!(
                "data.noise_std must be finite and non-negative, got {}",
                self.data.noise_std
            )));
        }
        if self.estimators.is_empty() {
            return Err(config_err("estimators must not be empty"));
        }
        for (i, k) in self.estimators.iter().enumerate() {
            if self.estimators[..i].contains(k) {
                return Err(config_err(format!("estimator '{k}' listed twice")));
            }
        }
        if self.monitor_cadence == Some(0) {
            return Err(config_err("monitor_cadence must be at least 1"));
        }
        Ok(())
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let cfg: ExperimentConfig =
            serde_json::from_str(text).map_err(|e| config_err(format!("invalid config: {e}")))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("config serializes")
    }

    pub fn estimator_params(&self) -> EstimatorParams {
        let s = &self.schedule;
        let mut p = EstimatorParams::isotropic(self.n, s.r0_scale, s.mu, s.k_cut, s.j_cut);
        p.general_schedule = s.kind;
        p
    }

    pub fn cadence(&self) -> usize {
        self.monitor_cadence
            .unwrap_or_else(|| crate::analysis::default_cadence(self.n))
    }

    /// Last step (inclusive) at which `kind` still changes its regularization;
    /// timing samples up to it count as the fading phase.
    pub fn fading_boundary(&self, kind: EstimatorKind) -> usize {
        let s = &self.schedule;
        let fr = s.k_cut.unwrap_or(usize::MAX);
        let r1 = s.j_cut.map_or(usize::MAX, |j| (j + 1) * self.n);
        match (kind, s.kind) {
            (EstimatorKind::Fr, _) | (EstimatorKind::TvrGeneral, ScheduleKind::Fading) => fr,
            (EstimatorKind::R1fr, _) | (EstimatorKind::TvrGeneral, ScheduleKind::Rank1) => r1,
            _ => {
                // constant regularization has no phases of its own; split it
                // where the fading kinds switch so the phases line up
                let known: Vec<usize> = [s.k_cut, s.j_cut.map(|j| (j + 1) * self.n)]
                    .into_iter()
                    .flatten()
                    .collect();
                known.into_iter().max().unwrap_or(usize::MAX)
            }
        }
    }

    /// Noise-free regressor comparison of the three main estimators.
    pub fn example1(scale: Scale, mode: DataMode) -> Self {
        let (n, k_cut, steps, switch) = match scale {
            Scale::Desk => (20, 41, 100, 20),
            Scale::Full => (100, 201, 400, 100),
        };
        ExperimentConfig {
            n,
            p: 2,
            seed: 1,
            schedule: ScheduleConfig {
                kind: ScheduleKind::Fading,
                mu: 0.99,
                k_cut: Some(k_cut),
                j_cut: Some(1),
                r0_scale: 1.0,
            },
            data: DataConfig {
                mode,
                noise_std: 0.0,
                steps,
                switch_step: switch,
            },
            trials: 1,
            estimators: default_estimators(),
            monitor_cadence: None,
        }
    }

    /// Monte Carlo with unit measurement noise for one regularization scale.
    pub fn example2(scale: Scale, r0_scale: f64) -> Self {
        let mut cfg = ExperimentConfig::example1(scale, DataMode::Pe);
        cfg.seed = 2;
        cfg.schedule.r0_scale = r0_scale;
        cfg.data.noise_std = 1.0;
        cfg.trials = match scale {
            Scale::Desk => 100,
            Scale::Full => 1000,
        };
        cfg
    }

    /// Per-step timing. The rank-1 schedule uses `j_cut = 0` so its fading
    /// phase lasts `n` steps, and the fading schedule cuts one step later;
    /// 200 post-cutoff steps follow.
    pub fn bench(scale: Scale) -> Self {
        let n = match scale {
            Scale::Desk => 100,
            Scale::Full => 400,
        };
        let mut cfg = ExperimentConfig::example1(Scale::Full, DataMode::Pe);
        cfg.n = n;
        cfg.seed = 3;
        cfg.schedule.k_cut = Some(n + 1);
        cfg.schedule.j_cut = Some(0);
        cfg.data.steps = n + 1 + 200;
        cfg
    }
}
