//! Monte Carlo comparison of inverse-distance and uniform neighbour
//! averaging under distance-dependent noise.
//!
//! Each trial draws `k` neighbour distances uniformly from
//! `[d_min, d_max]` and perturbs the true posterior `p` at every neighbour
//! by a Lipschitz deviation `±L d_j` (random sign) plus Gaussian noise of
//! variance `sigma0^2 (1 + lambda d_j)`, clipped to `[0, 1]`. Both
//! estimators are applied to the same per-neighbour observations and
//! scored by squared error against `p`.
//!
//! With [`LabelModel::NoisyPosterior`] the observations are the perturbed
//! posteriors themselves, so the estimator variance is
//! `sum_j w_j^2 sigma^2(d_j)`. With [`LabelModel::Bernoulli`] each
//! observation is a 0/1 label drawn from the perturbed posterior; the
//! label variance is then `p_j (1 - p_j)` and does not grow with distance
//! except through clipping.

use serde::{Deserialize, Serialize};

use rand::Rng;

use crate::error::{Error, Result};
use crate::rng::Gaussian;

/// `sigma^2(d) = sigma0_sq * (1 + lambda * d)`, with a Lipschitz bound on
/// the posterior's spatial deviation.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct NoiseModel {
    pub sigma0_sq: f64,
    pub lambda: f64,
    pub lipschitz: f64,
}

impl Default for NoiseModel {
    fn default() -> Self {
        Self {
            sigma0_sq: 0.01,
            lambda: 10.0,
            lipschitz: 0.1,
        }
    }
}

impl NoiseModel {
    pub fn variance(&self, d: f64) -> f64 {
        self.sigma0_sq * (1.0 + self.lambda * d)
    }

    pub fn validate(&self) -> Result<()> {
        let ok = self.sigma0_sq > 0.0
            && self.sigma0_sq.is_finite()
            && self.lambda >= 0.0
            && self.lambda.is_finite()
            && self.lipschitz >= 0.0
            && self.lipschitz.is_finite();
        if ok {
            Ok(())
        } else {
            Err(Error::InvalidConfig(format!(
                "noise model needs sigma0_sq > 0, lambda >= 0, lipschitz >= 0; got {self:?}"
            )))
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum LabelModel {
    #[default]
    NoisyPosterior,
    Bernoulli,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct VarianceSetup {
    pub noise: NoiseModel,
    pub k: usize,
    pub n_trials: usize,
    pub seed: u64,
    /// True posterior at the query.
    pub posterior: f64,
    pub d_min: f64,
    pub d_max: f64,
    pub epsilon: f64,
    pub labels: LabelModel,
}

impl VarianceSetup {
    pub fn new(noise: NoiseModel, k: usize, n_trials: usize, seed: u64) -> Self {
        Self {
            noise,
            k,
            n_trials,
            seed,
            posterior: 0.5,
            d_min: 0.1,
            d_max: 1.0,
            epsilon: 1e-8,
            labels: LabelModel::NoisyPosterior,
        }
    }

    fn validate(&self) -> Result<()> {
        self.noise.validate()?;
        if self.k == 0 {
            return Err(Error::InvalidConfig("k must be at least 1".into()));
        }
        if self.n_trials < 1000 {
            return Err(Error::InvalidConfig(format!(
                "need at least 1000 trials for a stable estimate, got {}",
                self.n_trials
            )));
        }
        if !(0.0..=1.0).contains(&self.posterior) {
            return Err(Error::InvalidConfig(format!(
                "posterior must lie in [0, 1], got {}",
                self.posterior
            )));
        }
        if !(self.d_min > 0.0 && self.d_max >= self.d_min && self.d_max.is_finite()) {
            return Err(Error::InvalidConfig(format!(
                "distance range must satisfy 0 < d_min <= d_max, got [{}, {}]",
                self.d_min, self.d_max
            )));
        }
        if self.epsilon.is_nan() || self.epsilon <= 0.0 {
            return Err(Error::InvalidConfig("epsilon must be positive".into()));
        }
        Ok(())
    }

    pub fn run(&self) -> Result<VarianceResult> {
        self.validate()?;
        let mut gauss = Gaussian::new(self.seed);
        let k = self.k;
        let p = self.posterior;
        let mut distances = vec![0.0; k];
        let mut observed = vec![0.0; k];
        let mut weights = vec![0.0; k];
        let (mut se_geo, mut se_unif, mut k_eff_sum) = (0.0, 0.0, 0.0);

        for _ in 0..self.n_trials {
            for d in distances.iter_mut() {
                *d = gauss.rng_mut().random_range(self.d_min..=self.d_max);
            }
            distances.sort_unstable_by(f64::total_cmp);
            for (obs, &d) in observed.iter_mut().zip(&distances) {
                let sign = if gauss.rng_mut().random::<bool>() { 1.0 } else { -1.0 };
                let noise = self.noise.variance(d).sqrt() * gauss.sample();
                let p_j = (p + sign * self.noise.lipschitz * d + noise).clamp(0.0, 1.0);
                *obs = match self.labels {
                    LabelModel::NoisyPosterior => p_j,
                    LabelModel::Bernoulli => f64::from(u8::from(gauss.rng_mut().random::<f64>() < p_j)),
                };
            }
            let total: f64 = distances
                .iter()
                .zip(weights.iter_mut())
                .map(|(&d, w)| {
                    *w = 1.0 / (d + self.epsilon);
                    *w
                })
                .sum();
            for w in weights.iter_mut() {
                *w /= total;
            }
            let geo: f64 = weights.iter().zip(&observed).map(|(w, y)| w * y).sum();
            let unif: f64 = observed.iter().sum::<f64>() / k as f64;
            se_geo += (geo - p) * (geo - p);
            se_unif += (unif - p) * (unif - p);
            k_eff_sum += 1.0 / weights.iter().map(|w| w * w).sum::<f64>();
        }
        let n = self.n_trials as f64;
        Ok(VarianceResult {
            mse_geometric: se_geo / n,
            mse_uniform: se_unif / n,
            mean_k_eff: k_eff_sum / n,
            k: self.k,
            n_trials: self.n_trials,
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct VarianceResult {
    pub mse_geometric: f64,
    pub mse_uniform: f64,
    /// Mean of `1 / sum_j w_j^2` over trials.
    pub mean_k_eff: f64,
    pub k: usize,
    pub n_trials: usize,
}

/// Runs [`VarianceSetup::new`] with its defaults.
pub fn variance_reduction_experiment(
    noise: NoiseModel,
    k: usize,
    n_trials: usize,
    seed: u64,
) -> Result<VarianceResult> {
    VarianceSetup::new(noise, k, n_trials, seed).run()
}
