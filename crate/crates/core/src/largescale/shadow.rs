//! Log-normal shadow fading.
//!
//! Parameters are kept in dB: the shadowing term `SF_dB` is Gaussian with
//! mean `mean_db` and standard deviation `std_db`, so the linear factor
//! `10^(SF_dB / 10)` is log-normal with natural-log parameters scaled by
//! `ln(10) / 10`.

use std::f64::consts::{LN_10, PI};

use rand::Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub const MIN_FIT_SAMPLES: usize = 30;
const DB_TO_NEPER: f64 = LN_10 / 10.0;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ShadowFadingParams {
    pub mean_db: f64,
    pub std_db: f64,
}

impl Default for ShadowFadingParams {
    fn default() -> Self {
        ShadowFadingParams {
            mean_db: 19.5,
            std_db: 8.1,
        }
    }
}

impl ShadowFadingParams {
    pub fn new(mean_db: f64, std_db: f64) -> Result<Self> {
        let p = ShadowFadingParams { mean_db, std_db };
        p.validate()?;
        Ok(p)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.std_db > 0.0) || !self.std_db.is_finite() {
            return Err(Error::domain("shadow_fading", "standard deviation must be positive"));
        }
        if !self.mean_db.is_finite() {
            return Err(Error::domain("shadow_fading", "mean must be finite"));
        }
        Ok(())
    }

    /// Natural-log location of the linear factor.
    pub fn ln_mean(&self) -> f64 {
        self.mean_db * DB_TO_NEPER
    }

    /// Natural-log scale of the linear factor.
    pub fn ln_std(&self) -> f64 {
        self.std_db * DB_TO_NEPER
    }

    pub fn sample_db<R: Rng + ?Sized>(&self, rng: &mut R) -> f64 {
        let z: f64 = StandardNormal.sample(rng);
        self.mean_db + self.std_db * z
    }

    /// Linear power factor `exp(mu + sigma Z)`.
    pub fn sample_linear<R: Rng + ?Sized>(&self, rng: &mut R) -> f64 {
        let z: f64 = StandardNormal.sample(rng);
        (self.ln_mean() + self.ln_std() * z).exp()
    }
}

/// Log-normal density of the linear shadowing factor.
pub fn sf_pdf(x: f64, params: &ShadowFadingParams) -> Result<f64> {
    params.validate()?;
    if x < 0.0 || x.is_nan() {
        return Err(Error::domain("sf_pdf", "linear shadowing must be non-negative"));
    }
    if x == 0.0 || x.is_infinite() {
        return Ok(0.0);
    }
    let (mu, sigma) = (params.ln_mean(), params.ln_std());
    let z = (x.ln() - mu) / sigma;
    Ok((-0.5 * z * z).exp() / ((2.0 * PI).sqrt() * sigma * x))
}

/// Maximum-likelihood fit to shadowing samples given in dB.
pub fn fit_shadow_fading(samples_db: &[f64]) -> Result<ShadowFadingParams> {
    if samples_db.len() < MIN_FIT_SAMPLES {
        return Err(Error::InsufficientData {
            needed: MIN_FIT_SAMPLES,
            got: samples_db.len(),
        });
    }
    if samples_db.iter().any(|x| !x.is_finite()) {
        return Err(Error::domain("fit_shadow_fading", "samples must be finite"));
    }
    let n = samples_db.len() as f64;
    let mean = samples_db.iter().sum::<f64>() / n;
    let var = samples_db.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / n;
    if !(var > 0.0) {
        return Err(Error::DegenerateFit("all shadowing samples are equal".into()));
    }
    Ok(ShadowFadingParams {
        mean_db: mean,
        std_db: var.sqrt(),
    })
}
