//! One-hidden-layer regression network for near-ground path loss.
//!
//! Inputs `(d, azimuth, elevation)` and the output are min-max normalised
//! with constants recorded at training time. Hidden units are logistic, the
//! output unit is a leaky rectifier.

use std::fmt::Write as _;
use std::path::Path;

use rand::seq::SliceRandom;
use rand::Rng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub const MIN_TRAINING_SAMPLES: usize = 50;

/// One `(d, azimuth, elevation) -> PL` observation.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PlSample {
    pub distance: f64,
    pub azimuth: f64,
    pub elevation: f64,
    pub pl_db: f64,
}

impl PlSample {
    fn inputs(&self) -> [f64; 3] {
        [self.distance, self.azimuth, self.elevation]
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Optimizer {
    /// Plain per-sample gradient descent.
    Sgd,
    /// Per-sample Adam updates (beta1 0.9, beta2 0.999).
    Adam,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct TrainingConfig {
    pub hidden: usize,
    pub leaky_slope: f64,
    pub learning_rate: f64,
    pub epochs: usize,
    /// Fraction of samples used for fitting; the rest is held out.
    pub train_fraction: f64,
    pub optimizer: Optimizer,
    pub seed: u64,
}

impl Default for TrainingConfig {
    fn default() -> Self {
        TrainingConfig {
            hidden: 16,
            leaky_slope: 0.01,
            learning_rate: 1e-3,
            epochs: 2000,
            train_fraction: 0.7,
            optimizer: Optimizer::Adam,
            seed: 1,
        }
    }
}

impl TrainingConfig {
    pub fn validate(&self) -> Result<()> {
        if self.hidden == 0 {
            return Err(Error::config("ngs.training.hidden", "need at least one hidden unit"));
        }
        if self.leaky_slope == 0.0 || !self.leaky_slope.is_finite() {
            return Err(Error::config("ngs.training.leaky_slope", "must be finite and non-zero"));
        }
        if !(self.learning_rate > 0.0) || !self.learning_rate.is_finite() {
            return Err(Error::config("ngs.training.learning_rate", "must be positive"));
        }
        if self.epochs == 0 {
            return Err(Error::config("ngs.training.epochs", "must be at least 1"));
        }
        if !(self.train_fraction > 0.0 && self.train_fraction < 1.0) {
            return Err(Error::config("ngs.training.train_fraction", "must lie in (0, 1)"));
        }
        Ok(())
    }
}

pub fn logistic(x: f64) -> f64 {
    1.0 / (1.0 + (-x).exp())
}

pub fn leaky_relu(x: f64, slope: f64) -> f64 {
    x.max(0.0) + slope * x.min(0.0)
}

#[derive(Debug, Clone, PartialEq)]
pub struct MlpModel {
    /// `hidden x 3`, row-major.
    pub hidden_weights: Vec<[f64; 3]>,
    pub hidden_bias: Vec<f64>,
    pub output_weights: Vec<f64>,
    pub output_bias: f64,
    pub leaky_slope: f64,
    pub input_min: [f64; 3],
    pub input_max: [f64; 3],
    pub output_min: f64,
    pub output_max: f64,
    pub validation_rmse_db: f64,
}

/// Network output plus whether any input left the training range.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NgsPrediction {
    pub pl_db: f64,
    pub extrapolated: bool,
}

fn span(lo: f64, hi: f64) -> f64 {
    if hi > lo {
        hi - lo
    } else {
        1.0
    }
}

impl MlpModel {
    pub fn hidden_units(&self) -> usize {
        self.hidden_bias.len()
    }

    fn normalise(&self, x: [f64; 3]) -> [f64; 3] {
        std::array::from_fn(|i| (x[i] - self.input_min[i]) / span(self.input_min[i], self.input_max[i]))
    }

    fn forward_normalised(&self, z: &[f64; 3], hidden: &mut [f64]) -> f64 {
        let mut out = self.output_bias;
        for (k, h) in hidden.iter_mut().enumerate() {
            let w = &self.hidden_weights[k];
            *h = logistic(w[0] * z[0] + w[1] * z[1] + w[2] * z[2] + self.hidden_bias[k]);
            out += self.output_weights[k] * *h;
        }
        out
    }

    pub fn predict(&self, distance: f64, azimuth: f64, elevation: f64) -> NgsPrediction {
        let x = [distance, azimuth, elevation];
        let z = self.normalise(x);
        let mut hidden = vec![0.0; self.hidden_units()];
        let y = leaky_relu(self.forward_normalised(&z, &mut hidden), self.leaky_slope);
        let extrapolated = (0..3).any(|i| x[i] < self.input_min[i] || x[i] > self.input_max[i]);
        NgsPrediction {
            pl_db: self.output_min + y * span(self.output_min, self.output_max),
            extrapolated,
        }
    }

    /// Upper bound on the Euclidean-norm Lipschitz constant in raw units.
    ///
    /// Product of Frobenius norms (each bounding the operator norm), the
    /// logistic slope bound 1/4, a unit output slope and the normalisation
    /// scales.
    pub fn lipschitz_bound(&self) -> f64 {
        let w1: f64 = self
            .hidden_weights
            .iter()
            .map(|w| (0..3).map(|i| (w[i] / span(self.input_min[i], self.input_max[i])).powi(2)).sum::<f64>())
            .sum::<f64>()
            .sqrt();
        let w2: f64 = self.output_weights.iter().map(|w| w * w).sum::<f64>().sqrt();
        let out_slope = self.leaky_slope.abs().max(1.0);
        span(self.output_min, self.output_max) * out_slope * w2 * 0.25 * w1
    }

    pub fn to_text(&self) -> String {
        let mut s = String::new();
        let _ = writeln!(s, "u2g-mlp 1");
        let _ = writeln!(s, "layers 3 {} 1", self.hidden_units());
        let _ = writeln!(s, "leaky_slope {:.16e}", self.leaky_slope);
        let row = |v: &[f64]| v.iter().map(|x| format!("{x:.16e}")).collect::<Vec<_>>().join(" ");
        for w in &self.hidden_weights {
            let _ = writeln!(s, "w1 {}", row(w));
        }
        let _ = writeln!(s, "b1 {}", row(&self.hidden_bias));
        let _ = writeln!(s, "w2 {}", row(&self.output_weights));
        let _ = writeln!(s, "b2 {}", row(&[self.output_bias]));
        let _ = writeln!(s, "input_min {}", row(&self.input_min));
        let _ = writeln!(s, "input_max {}", row(&self.input_max));
        let _ = writeln!(s, "output_range {}", row(&[self.output_min, self.output_max]));
        let _ = writeln!(s, "validation_rmse_db {}", row(&[self.validation_rmse_db]));
        s
    }

    pub fn from_text(text: &str) -> Result<Self> {
        let mut lines = text.lines().filter(|l| !l.trim().is_empty());
        let mut next = |key: &str| -> Result<Vec<f64>> {
            let line = lines
                .next()
                .ok_or_else(|| Error::Parse(format!("model file ends before `{key}`")))?;
            let mut parts = line.split_whitespace();
            if parts.next() != Some(key) {
                return Err(Error::Parse(format!("expected `{key}` line, got `{line}`")));
            }
            parts
                .map(|p| p.parse::<f64>().map_err(|e| Error::Parse(format!("`{key}`: {e}"))))
                .collect()
        };
        if next("u2g-mlp")? != [1.0] {
            return Err(Error::Parse("unsupported model format version".into()));
        }
        let layers = next("layers")?;
        if layers.len() != 3 || layers[0] != 3.0 || layers[2] != 1.0 || !(layers[1] >= 1.0) {
            return Err(Error::Parse("layers must read `3 <hidden> 1`".into()));
        }
        let hidden = layers[1] as usize;
        let exact = |v: Vec<f64>, n: usize, key: &str| -> Result<Vec<f64>> {
            if v.len() == n {
                Ok(v)
            } else {
                Err(Error::Parse(format!("`{key}` needs {n} values, got {}", v.len())))
            }
        };
        let leaky_slope = exact(next("leaky_slope")?, 1, "leaky_slope")?[0];
        let mut hidden_weights = Vec::with_capacity(hidden);
        for _ in 0..hidden {
            let w = exact(next("w1")?, 3, "w1")?;
            hidden_weights.push([w[0], w[1], w[2]]);
        }
        let hidden_bias = exact(next("b1")?, hidden, "b1")?;
        let output_weights = exact(next("w2")?, hidden, "w2")?;
        let output_bias = exact(next("b2")?, 1, "b2")?[0];
        let lo = exact(next("input_min")?, 3, "input_min")?;
        let hi = exact(next("input_max")?, 3, "input_max")?;
        let out = exact(next("output_range")?, 2, "output_range")?;
        let rmse = exact(next("validation_rmse_db")?, 1, "validation_rmse_db")?[0];
        let model = MlpModel {
            hidden_weights,
            hidden_bias,
            output_weights,
            output_bias,
            leaky_slope,
            input_min: [lo[0], lo[1], lo[2]],
            input_max: [hi[0], hi[1], hi[2]],
            output_min: out[0],
            output_max: out[1],
            validation_rmse_db: rmse,
        };
        if model.leaky_slope == 0.0 {
            return Err(Error::Parse("leaky slope must be non-zero".into()));
        }
        let finite = model.hidden_weights.iter().flatten().all(|x| x.is_finite())
            && model.hidden_bias.iter().chain(&model.output_weights).all(|x| x.is_finite())
            && model.output_bias.is_finite();
        if !finite {
            return Err(Error::Parse("model weights must be finite".into()));
        }
        Ok(model)
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        std::fs::write(path, self.to_text())?;
        Ok(())
    }

    pub fn load(path: &Path) -> Result<Self> {
        Self::from_text(&std::fs::read_to_string(path)?)
    }
}

/// Seeded 7:3-style split: returns `(train, validation)`.
pub fn split_samples(samples: &[PlSample], train_fraction: f64, rng: &mut ChaCha8Rng) -> (Vec<PlSample>, Vec<PlSample>) {
    let mut shuffled = samples.to_vec();
    shuffled.shuffle(rng);
    let n_train = ((samples.len() as f64) * train_fraction).round() as usize;
    let n_train = n_train.clamp(1, samples.len().saturating_sub(1).max(1));
    let validation = shuffled.split_off(n_train);
    (shuffled, validation)
}

struct AdamState {
    m: Vec<f64>,
    v: Vec<f64>,
    step: i32,
}

/// Trains the network by back-propagation on the mean-squared error of the
/// normalised output.
pub fn train_mlp(samples: &[PlSample], cfg: &TrainingConfig) -> Result<MlpModel> {
    cfg.validate()?;
    if samples.len() < MIN_TRAINING_SAMPLES {
        return Err(Error::InsufficientData {
            needed: MIN_TRAINING_SAMPLES,
            got: samples.len(),
        });
    }
    if samples
        .iter()
        .any(|s| !(s.distance.is_finite() && s.azimuth.is_finite() && s.elevation.is_finite() && s.pl_db.is_finite()))
    {
        return Err(Error::domain("train_mlp", "training samples must be finite"));
    }
    let mut rng = crate::rng::substream(cfg.seed, crate::rng::TRAINING_STREAM);
    let (train, validation) = split_samples(samples, cfg.train_fraction, &mut rng);

    let mut input_min = [f64::INFINITY; 3];
    let mut input_max = [f64::NEG_INFINITY; 3];
    let (mut output_min, mut output_max) = (f64::INFINITY, f64::NEG_INFINITY);
    for s in &train {
        for (i, x) in s.inputs().into_iter().enumerate() {
            input_min[i] = input_min[i].min(x);
            input_max[i] = input_max[i].max(x);
        }
        output_min = output_min.min(s.pl_db);
        output_max = output_max.max(s.pl_db);
    }

    let h = cfg.hidden;
    let limit1 = (6.0f64 / (3 + h) as f64).sqrt();
    let limit2 = (6.0f64 / (h + 1) as f64).sqrt();
    let mut model = MlpModel {
        hidden_weights: (0..h)
            .map(|_| std::array::from_fn(|_| rng.random_range(-limit1..limit1)))
            .collect(),
        hidden_bias: vec![0.0; h],
        output_weights: (0..h).map(|_| rng.random_range(-limit2..limit2)).collect(),
        output_bias: 0.0,
        leaky_slope: cfg.leaky_slope,
        input_min,
        input_max,
        output_min,
        output_max,
        validation_rmse_db: f64::NAN,
    };

    let targets: Vec<([f64; 3], f64)> = train
        .iter()
        .map(|s| (model.normalise(s.inputs()), (s.pl_db - output_min) / span(output_min, output_max)))
        .collect();
    // parameter layout: w1 (3h), b1 (h), w2 (h), b2 (1)
    let n_params = 5 * h + 1;
    let mut adam = AdamState {
        m: vec![0.0; n_params],
        v: vec![0.0; n_params],
        step: 0,
    };
    let mut grad = vec![0.0; n_params];
    let mut hidden = vec![0.0; h];
    let mut order: Vec<usize> = (0..targets.len()).collect();

    for epoch in 0..cfg.epochs {
        order.shuffle(&mut rng);
        let mut loss = 0.0;
        for &i in &order {
            let (z, y) = &targets[i];
            let pre = model.forward_normalised(z, &mut hidden);
            let out = leaky_relu(pre, model.leaky_slope);
            let err = out - y;
            loss += err * err;
            let d_out = 2.0 * err * if pre > 0.0 { 1.0 } else { model.leaky_slope };
            for k in 0..h {
                let d_hidden = d_out * model.output_weights[k] * hidden[k] * (1.0 - hidden[k]);
                for j in 0..3 {
                    grad[3 * k + j] = d_hidden * z[j];
                }
                grad[3 * h + k] = d_hidden;
                grad[4 * h + k] = d_out * hidden[k];
            }
            grad[5 * h] = d_out;
            apply_update(&mut model, &mut grad, cfg, &mut adam);
        }
        if !loss.is_finite() {
            return Err(Error::TrainingDivergence { epoch });
        }
    }
    model.validation_rmse_db = rmse_db(&model, &validation);
    Ok(model)
}

fn apply_update(model: &mut MlpModel, grad: &mut [f64], cfg: &TrainingConfig, adam: &mut AdamState) {
    if cfg.optimizer == Optimizer::Adam {
        const B1: f64 = 0.9;
        const B2: f64 = 0.999;
        adam.step += 1;
        let c1 = 1.0 - B1.powi(adam.step);
        let c2 = 1.0 - B2.powi(adam.step);
        for (i, g) in grad.iter_mut().enumerate() {
            adam.m[i] = B1 * adam.m[i] + (1.0 - B1) * *g;
            adam.v[i] = B2 * adam.v[i] + (1.0 - B2) * *g * *g;
            *g = (adam.m[i] / c1) / ((adam.v[i] / c2).sqrt() + 1e-8);
        }
    }
    let lr = cfg.learning_rate;
    let h = model.hidden_units();
    for k in 0..h {
        for j in 0..3 {
            model.hidden_weights[k][j] -= lr * grad[3 * k + j];
        }
        model.hidden_bias[k] -= lr * grad[3 * h + k];
        model.output_weights[k] -= lr * grad[4 * h + k];
    }
    model.output_bias -= lr * grad[5 * h];
}

/// Root-mean-square prediction error in dB.
pub fn rmse_db(model: &MlpModel, samples: &[PlSample]) -> f64 {
    if samples.is_empty() {
        return f64::NAN;
    }
    let sse: f64 = samples
        .iter()
        .map(|s| {
            let e = model.predict(s.distance, s.azimuth, s.elevation).pl_db - s.pl_db;
            e * e
        })
        .sum();
    (sse / samples.len() as f64).sqrt()
}

/// Convenience wrapper matching the forward-pass operation name.
pub fn predict_ngs_pl(model: &MlpModel, distance: f64, azimuth: f64, elevation: f64) -> NgsPrediction {
    model.predict(distance, azimuth, elevation)
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::Rng;

    fn plane_corpus(n: usize, seed: u64) -> Vec<PlSample> {
        let mut rng = crate::rng::substream(seed, 99);
        (0..n)
            .map(|_| {
                let d = rng.random_range(50.0..500.0);
                let a = rng.random_range(0.0..std::f64::consts::TAU);
                let b = rng.random_range(0.0..std::f64::consts::FRAC_PI_2);
                PlSample {
                    distance: d,
                    azimuth: a,
                    elevation: b,
                    pl_db: 0.1 * d + 2.0 * a + 3.0 * b + 40.0,
                }
            })
            .collect()
    }

    #[test]
    fn activations() {
        assert_eq!(logistic(0.0), 0.5);
        assert!((leaky_relu(-2.0, 0.01) + 0.02).abs() < 1e-15);
        assert_eq!(leaky_relu(3.0, 0.01), 3.0);
    }

    #[test]
    fn too_few_samples() {
        let err = train_mlp(&plane_corpus(49, 1), &TrainingConfig::default());
        assert!(matches!(err, Err(Error::InsufficientData { needed: 50, got: 49 })));
    }

    #[test]
    fn non_finite_samples_rejected() {
        let mut c = plane_corpus(60, 1);
        c[3].pl_db = f64::NAN;
        assert!(train_mlp(&c, &TrainingConfig::default()).is_err());
    }

    #[test]
    fn huge_learning_rate_reports_divergence() {
        let cfg = TrainingConfig {
            learning_rate: 1e300,
            optimizer: Optimizer::Sgd,
            epochs: 50,
            ..TrainingConfig::default()
        };
        assert!(matches!(train_mlp(&plane_corpus(60, 2), &cfg), Err(Error::TrainingDivergence { .. })));
    }

    #[test]
    fn split_is_seeded_and_proportional() {
        let c = plane_corpus(100, 3);
        let (t1, v1) = split_samples(&c, 0.7, &mut crate::rng::substream(5, 0));
        let (t2, _) = split_samples(&c, 0.7, &mut crate::rng::substream(5, 0));
        assert_eq!((t1.len(), v1.len()), (70, 30));
        assert_eq!(t1, t2);
    }

    #[test]
    fn text_round_trip_is_exact() {
        let cfg = TrainingConfig {
            epochs: 5,
            ..TrainingConfig::default()
        };
        let m = train_mlp(&plane_corpus(80, 4), &cfg).unwrap();
        let back = MlpModel::from_text(&m.to_text()).unwrap();
        assert_eq!(back, m);
        assert!(MlpModel::from_text("u2g-mlp 2\n").is_err());
    }

    #[test]
    fn extrapolation_is_flagged() {
        let cfg = TrainingConfig {
            epochs: 2,
            ..TrainingConfig::default()
        };
        let m = train_mlp(&plane_corpus(80, 4), &cfg).unwrap();
        assert!(m.predict(5000.0, 1.0, 0.5).extrapolated);
        assert!(!m.predict(200.0, 1.0, 0.5).extrapolated);
    }

    #[test]
    fn lipschitz_bound_dominates_finite_differences() {
        let cfg = TrainingConfig {
            epochs: 200,
            ..TrainingConfig::default()
        };
        let m = train_mlp(&plane_corpus(200, 6), &cfg).unwrap();
        let bound = m.lipschitz_bound();
        let mut rng = crate::rng::substream(11, 0);
        for _ in 0..100 {
            let x = [rng.random_range(50.0..500.0), rng.random_range(0.0..std::f64::consts::TAU), rng.random_range(0.0..std::f64::consts::FRAC_PI_2)];
            let dir: [f64; 3] = std::array::from_fn(|_| rng.random_range(-1.0..1.0));
            let n = dir.iter().map(|v| v * v).sum::<f64>().sqrt();
            let h = 1e-4;
            let f = |s: f64| m.predict(x[0] + s * dir[0] / n, x[1] + s * dir[1] / n, x[2] + s * dir[2] / n).pl_db;
            let slope = ((f(h) - f(-h)) / (2.0 * h)).abs();
            assert!(slope <= bound * (1.0 + 1e-6), "slope {slope} > bound {bound}");
        }
    }
}
