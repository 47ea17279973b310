use rand::{Rng, RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::config::{DataMode, ExperimentConfig};
use crate::analysis::TrueModel;
use crate::error::Result;
use crate::estimators::MeasurementTriple;
use crate::matkit::Mat;

/// The generator behind every experiment: ChaCha8 seeded through
/// `seed_from_u64`, which is specified independently of the platform.
pub type ExperimentRng = ChaCha8Rng;

pub fn experiment_rng(seed: u64) -> ExperimentRng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// SplitMix64 finalizer.
fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9e37_79b9_7f4a_7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

/// Seed of Monte Carlo trial `trial`: `splitmix64(master ^ splitmix64(trial))`.
pub fn trial_seed(master: u64, trial: u64) -> u64 {
    splitmix64(master ^ splitmix64(trial))
}

/// Standard normal draws by the Box–Muller transform; the second value of
/// each pair is kept for the next call.
#[derive(Debug, Clone, Default)]
pub struct BoxMuller {
    spare: Option<f64>,
}

impl BoxMuller {
    pub fn new() -> Self {
        BoxMuller::default()
    }

    pub fn sample<R: RngCore>(&mut self, rng: &mut R) -> f64 {
        if let Some(z) = self.spare.take() {
            return z;
        }
        // u1 in (0, 1] keeps the log finite
        let u1 = 1.0 - rng.gen::<f64>();
        let u2: f64 = rng.gen();
        let r = (-2.0 * u1.ln()).sqrt();
        let (s, c) = (std::f64::consts::TAU * u2).sin_cos();
        self.spare = Some(r * s);
        r * c
    }

    pub fn fill<R: RngCore>(&mut self, rng: &mut R, out: &mut [f64]) {
        for v in out {
            *v = self.sample(rng);
        }
    }
}

/// Draws the true parameter and the measurement sequence.
///
/// Draw order is fixed: `θ`, then per step the regressor rows (drawn even
/// when they are zeroed) followed by the noise, so data prefixes do not
/// depend on `steps`, and the mode only masks rows.
pub fn gen_data<R: RngCore>(
    cfg: &ExperimentConfig,
    rng: &mut R,
) -> Result<(TrueModel, Vec<MeasurementTriple>)> {
    cfg.validate()?;
    let (n, p) = (cfg.n, cfg.p);
    let mut normal = BoxMuller::new();
    let mut theta = vec![0.0; n];
    normal.fill(rng, &mut theta);
    let model = TrueModel::new(theta)?;
    let gamma = Mat::identity(p);
    let mut data = Vec::with_capacity(cfg.data.steps);
    for k in 0..cfg.data.steps {
        let mut phi = Mat::zeros(p, n);
        normal.fill(rng, phi.as_mut_slice());
        let mut noise = vec![0.0; p];
        normal.fill(rng, &mut noise);
        if cfg.data.mode == DataMode::NonPe && k > cfg.data.switch_step {
            phi = Mat::zeros(p, n);
        }
        let mut y = model.measure(&phi)?;
        for (yi, w) in y.iter_mut().zip(&noise) {
            *yi += cfg.data.noise_std * w;
        }
        data.push(MeasurementTriple::new(phi, y, gamma.clone())?);
    }
    Ok((model, data))
}
