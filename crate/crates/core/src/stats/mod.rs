//! Channel statistics: temporal autocorrelation, power delay profiles,
//! level crossings, fade durations and stationary intervals.

pub mod report;

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::smallscale::Tap;

/// Uniformly sampled fading envelope.
#[derive(Debug, Clone, PartialEq)]
pub struct EnvelopeSeries {
    pub dt: f64,
    pub values: Vec<f64>,
}

impl EnvelopeSeries {
    pub fn new(dt: f64, values: Vec<f64>) -> Result<Self> {
        if !(dt > 0.0) {
            return Err(Error::domain("envelope", "sample interval must be positive"));
        }
        if values.len() < 2 {
            return Err(Error::InsufficientData {
                needed: 2,
                got: values.len(),
            });
        }
        if values.iter().any(|v| !v.is_finite()) {
            return Err(Error::domain("envelope", "samples must be finite"));
        }
        Ok(EnvelopeSeries { dt, values })
    }

    pub fn from_complex(dt: f64, samples: &[Complex64]) -> Result<Self> {
        EnvelopeSeries::new(dt, samples.iter().map(|h| h.norm()).collect())
    }

    pub fn duration(&self) -> f64 {
        self.dt * (self.values.len() - 1) as f64
    }

    pub fn rms(&self) -> f64 {
        (self.values.iter().map(|v| v * v).sum::<f64>() / self.values.len() as f64).sqrt()
    }
}

/// Ensemble autocorrelation at sample `reference` for each lag (in samples).
///
/// `members[i][k]` is the `(LoS, NLoS)` pair of realisation `i` at sample
/// `k`. The LoS and NLoS correlations are summed and normalised by the
/// geometric mean of the total powers at the two instants, so lag 0 gives 1.
pub fn temporal_acf(members: &[Vec<(Complex64, Complex64)>], reference: usize, lags: &[isize]) -> Result<Vec<Complex64>> {
    let len = members
        .first()
        .map(Vec::len)
        .ok_or(Error::InsufficientData { needed: 1, got: 0 })?;
    if members.iter().any(|m| m.len() != len) {
        return Err(Error::domain("temporal_acf", "ensemble members must share the time grid"));
    }
    if reference >= len {
        return Err(Error::domain("temporal_acf", "reference sample outside the record"));
    }
    let n = members.len() as f64;
    let power = |k: usize| members.iter().map(|m| m[k].0.norm_sqr() + m[k].1.norm_sqr()).sum::<f64>() / n;
    let p0 = power(reference);
    lags.iter()
        .map(|&lag| {
            let k = reference as isize + lag;
            if k < 0 || k as usize >= len {
                return Err(Error::domain("temporal_acf", format!("lag {lag} runs past the record")));
            }
            let k = k as usize;
            let pk = power(k);
            if !(p0 > 0.0 && pk > 0.0) {
                return Err(Error::domain("temporal_acf", "zero ensemble power"));
            }
            let sum: Complex64 = members
                .iter()
                .map(|m| m[reference].0.conj() * m[k].0 + m[reference].1.conj() * m[k].1)
                .sum();
            Ok(sum / n / (p0 * pk).sqrt())
        })
        .collect()
}

/// Power delay profile on an integer delay grid of step `resolution`.
#[derive(Debug, Clone, PartialEq)]
pub struct Pdp {
    pub resolution: f64,
    /// `(bin, power)` with strictly increasing bins; bin `i` is delay `i * resolution`.
    pub bins: Vec<(u64, f64)>,
}

impl Pdp {
    /// Bins tap powers to the nearest grid delay.
    pub fn from_taps(taps: &[Tap], resolution: f64, include_los: bool) -> Result<Self> {
        if !(resolution > 0.0) {
            return Err(Error::domain("pdp", "delay resolution must be positive"));
        }
        let mut raw: Vec<(u64, f64)> = taps
            .iter()
            .filter(|t| include_los || !t.los)
            .map(|t| ((t.delay / resolution).round().max(0.0) as u64, t.gain.norm_sqr()))
            .collect();
        raw.sort_by_key(|b| b.0);
        let mut bins: Vec<(u64, f64)> = Vec::with_capacity(raw.len());
        for (bin, p) in raw {
            match bins.last_mut() {
                Some(last) if last.0 == bin => last.1 += p,
                _ => bins.push((bin, p)),
            }
        }
        Ok(Pdp { resolution, bins })
    }

    pub fn total_power(&self) -> f64 {
        self.bins.iter().map(|b| b.1).sum()
    }

    /// `(delay, power)` of the strongest bin.
    pub fn dominant(&self) -> Option<(f64, f64)> {
        self.bins
            .iter()
            .max_by(|a, b| a.1.total_cmp(&b.1))
            .map(|&(bin, p)| (bin as f64 * self.resolution, p))
    }

    fn inner(&self, other: &Pdp) -> f64 {
        let (mut i, mut j, mut acc) = (0, 0, 0.0);
        while i < self.bins.len() && j < other.bins.len() {
            match self.bins[i].0.cmp(&other.bins[j].0) {
                std::cmp::Ordering::Less => i += 1,
                std::cmp::Ordering::Greater => j += 1,
                std::cmp::Ordering::Equal => {
                    acc += self.bins[i].1 * other.bins[j].1;
                    i += 1;
                    j += 1;
                }
            }
        }
        acc
    }

    /// Bin-wise mean of several profiles on the same grid.
    pub fn average(pdps: &[Pdp]) -> Result<Pdp> {
        let first = pdps.first().ok_or(Error::InsufficientData { needed: 1, got: 0 })?;
        if pdps.iter().any(|p| p.resolution != first.resolution) {
            return Err(Error::domain("pdp_average", "profiles must share the delay grid"));
        }
        let mut all: Vec<(u64, f64)> = pdps.iter().flat_map(|p| p.bins.iter().copied()).collect();
        all.sort_by_key(|b| b.0);
        let n = pdps.len() as f64;
        let mut bins: Vec<(u64, f64)> = Vec::new();
        for (bin, p) in all {
            match bins.last_mut() {
                Some(last) if last.0 == bin => last.1 += p / n,
                _ => bins.push((bin, p / n)),
            }
        }
        Ok(Pdp {
            resolution: first.resolution,
            bins,
        })
    }
}

/// Normalised PDP cross-correlation: the inner product divided by the larger
/// of the two self-products. Zero when either profile is empty of power.
pub fn pdp_correlation(a: &Pdp, b: &Pdp) -> f64 {
    let norm = a.inner(a).max(b.inner(b));
    if norm > 0.0 {
        a.inner(b) / norm
    } else {
        0.0
    }
}

/// Averaged PDPs over non-overlapping groups of `count` consecutive drops;
/// a trailing partial group is discarded.
pub fn averaged_pdps(drops: &[Pdp], count: usize) -> Result<Vec<Pdp>> {
    if count == 0 {
        return Err(Error::domain("averaged_pdps", "averaging count must be at least 1"));
    }
    drops.chunks_exact(count).map(Pdp::average).collect()
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StationaryInterval {
    pub start: f64,
    pub duration: f64,
    /// The correlation never fell below the threshold before the record ended.
    pub censored: bool,
}

/// Stationary interval at every averaged-PDP drop.
///
/// The interval starting at drop `a` spans drop `a` and every following drop
/// whose correlation with it stays at or above `threshold`, times the drop
/// spacing.
pub fn stationary_interval(pdps: &[Pdp], spacing: f64, threshold: f64) -> Result<Vec<StationaryInterval>> {
    if !(threshold > 0.0 && threshold < 1.0) {
        return Err(Error::domain("stationary_interval", "threshold must lie in (0, 1)"));
    }
    if !(spacing > 0.0) {
        return Err(Error::domain("stationary_interval", "drop spacing must be positive"));
    }
    if pdps.len() < 2 {
        return Err(Error::InsufficientData {
            needed: 2,
            got: pdps.len(),
        });
    }
    Ok((0..pdps.len())
        .map(|a| {
            let run = pdps[a + 1..]
                .iter()
                .position(|b| pdp_correlation(&pdps[a], b) < threshold);
            let (drops, censored) = match run {
                Some(k) => (k + 1, false),
                None => (pdps.len() - a, true),
            };
            StationaryInterval {
                start: a as f64 * spacing,
                duration: drops as f64 * spacing,
                censored,
            }
        })
        .collect())
}

fn check_level(r: f64) -> Result<()> {
    if !(r > 0.0) || !r.is_finite() {
        return Err(Error::domain("level_crossing", "level must be positive and finite"));
    }
    Ok(())
}

/// Up-crossing instants of level `r`, linearly interpolated between samples.
pub fn up_crossings(series: &EnvelopeSeries, r: f64) -> Result<Vec<f64>> {
    check_level(r)?;
    Ok(series
        .values
        .windows(2)
        .enumerate()
        .filter(|(_, w)| w[0] < r && w[1] >= r)
        .map(|(k, w)| (k as f64 + (r - w[0]) / (w[1] - w[0])) * series.dt)
        .collect())
}

/// Up-crossings per second.
pub fn lcr(series: &EnvelopeSeries, r: f64) -> Result<f64> {
    Ok(up_crossings(series, r)?.len() as f64 / series.duration())
}

/// Time spent below `r`, treating the envelope as linear between samples.
pub fn time_below(series: &EnvelopeSeries, r: f64) -> Result<f64> {
    check_level(r)?;
    let dt = series.dt;
    Ok(series
        .values
        .windows(2)
        .map(|w| {
            let (a, b) = (w[0], w[1]);
            match (a < r, b < r) {
                (true, true) => dt,
                (false, false) => 0.0,
                (true, false) => dt * (r - a) / (b - a),
                (false, true) => dt * (a - r) / (a - b),
            }
        })
        .sum())
}

/// Average fade duration: time below `r` divided by the number of fades,
/// each fade counted by the up-crossing that ends it. `None` when the
/// envelope never completes a fade below `r`.
pub fn afd(series: &EnvelopeSeries, r: f64) -> Result<Option<f64>> {
    let fades = up_crossings(series, r)?.len();
    let below = time_below(series, r)?;
    Ok((fades > 0 && below > 0.0).then(|| below / fades as f64))
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct KsResult {
    pub statistic: f64,
    pub p_value: f64,
}

/// Kolmogorov distribution tail `P(K > x)`.
pub fn kolmogorov_tail(x: f64) -> f64 {
    if x <= 0.0 {
        return 1.0;
    }
    if x < 1.18 {
        // small-x form converges faster here
        let t = -std::f64::consts::PI.powi(2) / (8.0 * x * x);
        let s: f64 = (1..=50)
            .map(|k| ((2 * k - 1) as f64).powi(2) * t)
            .map(f64::exp)
            .sum();
        return (1.0 - (2.0 * std::f64::consts::PI).sqrt() / x * s).clamp(0.0, 1.0);
    }
    let s: f64 = (1..=100)
        .map(|k| {
            let k = k as f64;
            let sign = if k as u64 % 2 == 1 { 1.0 } else { -1.0 };
            sign * (-2.0 * k * k * x * x).exp()
        })
        .sum();
    (2.0 * s).clamp(0.0, 1.0)
}

/// One-sample Kolmogorov-Smirnov test against a continuous CDF, with the
/// asymptotic p-value and the usual small-sample correction.
pub fn ks_test(samples: &[f64], cdf: impl Fn(f64) -> f64) -> Result<KsResult> {
    if samples.is_empty() {
        return Err(Error::InsufficientData { needed: 1, got: 0 });
    }
    if samples.iter().any(|x| x.is_nan()) {
        return Err(Error::domain("ks_test", "samples must not be NaN"));
    }
    let mut xs = samples.to_vec();
    xs.sort_by(f64::total_cmp);
    let n = xs.len() as f64;
    let d = xs
        .iter()
        .enumerate()
        .map(|(i, &x)| {
            let f = cdf(x);
            (f - i as f64 / n).max((i + 1) as f64 / n - f)
        })
        .fold(0.0, f64::max);
    let sn = n.sqrt();
    Ok(KsResult {
        statistic: d,
        p_value: kolmogorov_tail((sn + 0.12 + 0.11 / sn) * d),
    })
}

/// Rayleigh CDF with mean power `mean_power`.
pub fn rayleigh_cdf(x: f64, mean_power: f64) -> f64 {
    if x <= 0.0 {
        0.0
    } else {
        1.0 - (-x * x / mean_power).exp()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;
    use rand::Rng;
    use std::f64::consts::TAU;

    fn tap(delay: f64, re: f64, los: bool) -> Tap {
        Tap {
            delay,
            gain: Complex64::new(re, 0.0),
            los,
        }
    }

    fn sinusoid(f: f64, periods: f64, per_period: usize) -> EnvelopeSeries {
        let dt = 1.0 / (f * per_period as f64);
        let n = (periods * per_period as f64) as usize + 1;
        // a small offset keeps samples off the level exactly
        EnvelopeSeries::new(dt, (0..n).map(|k| 1.0 + 0.5 * (TAU * f * (k as f64 * dt) + 0.1).sin()).collect()).unwrap()
    }

    #[test]
    fn acf_zero_lag_and_static() {
        let mut rng = crate::rng::substream(1, 0);
        let members: Vec<Vec<(Complex64, Complex64)>> = (0..50)
            .map(|_| {
                let n = Complex64::from_polar(rng.random_range(0.1..1.0), rng.random_range(0.0..TAU));
                let l = Complex64::from_polar(2.0, rng.random_range(0.0..TAU));
                vec![(l, n); 20]
            })
            .collect();
        let r = temporal_acf(&members, 5, &[0, 3, 14, -5]).unwrap();
        for v in r {
            assert!((v - Complex64::new(1.0, 0.0)).norm() < 1e-12);
        }
        assert!(temporal_acf(&members, 5, &[15]).is_err());
        assert!(temporal_acf(&members, 5, &[-6]).is_err());
    }

    #[test]
    fn acf_conjugate_symmetry() {
        let mut rng = crate::rng::substream(2, 0);
        let c = |rng: &mut rand_chacha::ChaCha8Rng| Complex64::new(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0));
        let members: Vec<Vec<(Complex64, Complex64)>> =
            (0..30).map(|_| (0..40).map(|_| (c(&mut rng), c(&mut rng))).collect()).collect();
        for (t, d) in [(20usize, 3isize), (30, 11), (10, 10)] {
            let back = temporal_acf(&members, t, &[-d]).unwrap()[0];
            let fwd = temporal_acf(&members, t - d as usize, &[d]).unwrap()[0];
            assert!((back - fwd.conj()).norm() < 1e-10);
        }
    }

    #[test]
    fn acf_rejects_zero_power() {
        let members = vec![vec![(Complex64::default(), Complex64::default()); 4]; 3];
        assert!(temporal_acf(&members, 0, &[1]).is_err());
    }

    #[test]
    fn pdp_examples() {
        let one = Pdp::from_taps(&[tap(1e-7, 1.0, false)], 1e-8, true).unwrap();
        assert_eq!(one.bins, vec![(10, 1.0)]);
        let taps = [tap(5e-7, 0.9, true), tap(5.04e-7, 0.3, false), tap(7e-7, 0.2, false)];
        let nlos = Pdp::from_taps(&taps, 1e-8, false).unwrap();
        assert!((nlos.total_power() - (0.09 + 0.04)).abs() < 1e-15);
        let all = Pdp::from_taps(&taps, 1e-8, true).unwrap();
        assert_eq!(all.bins.len(), 2);
        assert!((all.bins[0].1 - 0.9).abs() < 1e-15);
        assert_eq!(all.dominant().unwrap().1, all.bins[0].1);
    }

    #[test]
    fn correlation_bounds_and_cases() {
        let a = Pdp { resolution: 1.0, bins: vec![(1, 1.0), (3, 2.0)] };
        let b = Pdp { resolution: 1.0, bins: vec![(2, 1.0)] };
        let z = Pdp { resolution: 1.0, bins: vec![] };
        assert!((pdp_correlation(&a, &a) - 1.0).abs() < 1e-15);
        assert_eq!(pdp_correlation(&a, &b), 0.0);
        assert_eq!(pdp_correlation(&z, &z), 0.0);
        let scaled = Pdp { resolution: 1.0, bins: vec![(1, 0.5), (3, 1.0)] };
        assert!((pdp_correlation(&a, &scaled) - 0.5).abs() < 1e-15);
    }

    #[test]
    fn stationary_interval_examples() {
        let same = vec![Pdp { resolution: 1.0, bins: vec![(4, 1.0)] }; 5];
        let si = stationary_interval(&same, 0.1, 0.8).unwrap();
        assert!(si.iter().all(|s| s.censored));
        assert!((si[0].duration - 0.5).abs() < 1e-12 && (si[3].duration - 0.2).abs() < 1e-12);
        let disjoint: Vec<Pdp> = (0..5).map(|k| Pdp { resolution: 1.0, bins: vec![(k, 1.0)] }).collect();
        let si = stationary_interval(&disjoint, 0.1, 0.8).unwrap();
        assert!(si[..4].iter().all(|s| !s.censored && (s.duration - 0.1).abs() < 1e-12));
        assert!(stationary_interval(&same, 0.1, 1.0).is_err());
        assert!(stationary_interval(&same[..1], 0.1, 0.8).is_err());
    }

    #[test]
    fn averaging_groups() {
        let drops: Vec<Pdp> = (0..7).map(|k| Pdp { resolution: 1.0, bins: vec![(k % 2, 2.0)] }).collect();
        let avg = averaged_pdps(&drops, 2).unwrap();
        assert_eq!(avg.len(), 3);
        assert_eq!(avg[0].bins, vec![(0, 1.0), (1, 1.0)]);
    }

    #[test]
    fn sinusoid_lcr_and_afd() {
        let f = 5.0;
        let s = sinusoid(f, 100.0, 200);
        assert!((lcr(&s, 1.0).unwrap() - f).abs() * s.duration() <= 1.0);
        let afd = afd(&s, 1.0).unwrap().unwrap();
        assert!((afd * 2.0 * f - 1.0).abs() < 0.02);
    }

    #[test]
    fn constant_envelope() {
        let s = EnvelopeSeries::new(0.01, vec![2.0; 100]).unwrap();
        assert_eq!(lcr(&s, 1.0).unwrap(), 0.0);
        assert_eq!(lcr(&s, 3.0).unwrap(), 0.0);
        assert_eq!(afd(&s, 1.0).unwrap(), None);
        assert_eq!(afd(&s, 3.0).unwrap(), None);
        assert!(lcr(&s, 0.0).is_err());
    }

    #[test]
    fn ks_distinguishes_distributions() {
        let mut rng = crate::rng::substream(3, 0);
        let rayleigh: Vec<f64> = (0..2000)
            .map(|_| {
                let u: f64 = rng.random_range(0.0..1.0);
                (-(1.0 - u).ln()).sqrt()
            })
            .collect();
        assert!(ks_test(&rayleigh, |x| rayleigh_cdf(x, 1.0)).unwrap().p_value > 0.01);
        assert!(ks_test(&rayleigh, |x| rayleigh_cdf(x, 2.0)).unwrap().p_value < 1e-6);
    }

    #[test]
    fn kolmogorov_tail_known_points() {
        // standard table values of the limiting distribution
        assert!((kolmogorov_tail(1.3581) - 0.05).abs() < 1e-3);
        assert!((kolmogorov_tail(1.6276) - 0.01).abs() < 1e-3);
        assert!((kolmogorov_tail(1.2239) - 0.10).abs() < 1e-3);
        assert!((kolmogorov_tail(0.8276) - 0.50).abs() < 1e-3);
        // both series agree where they meet
        let x = 1.18;
        let lo = {
            let t = -std::f64::consts::PI.powi(2) / (8.0 * x * x);
            1.0 - (TAU).sqrt() / x * (1..=50).map(|k| (((2 * k - 1) as f64).powi(2) * t).exp()).sum::<f64>()
        };
        assert!((lo - kolmogorov_tail(x)).abs() < 1e-12);
    }

    proptest! {
        #[test]
        fn afd_times_lcr_is_time_fraction(vals in proptest::collection::vec(0.01f64..3.0, 3..300), r in 0.05f64..2.5) {
            let s = EnvelopeSeries::new(0.001, vals).unwrap();
            let frac = time_below(&s, r).unwrap() / s.duration();
            if let Some(a) = afd(&s, r).unwrap() {
                prop_assert!((a * lcr(&s, r).unwrap() - frac).abs() <= 1e-9 * frac.max(1e-12));
            }
        }

        #[test]
        fn correlation_in_unit_interval(a in proptest::collection::vec(0.0f64..1.0, 1..20), b in proptest::collection::vec(0.0f64..1.0, 1..20)) {
            let pa = Pdp { resolution: 1.0, bins: a.iter().enumerate().map(|(i, &p)| (i as u64, p)).collect() };
            let pb = Pdp { resolution: 1.0, bins: b.iter().enumerate().map(|(i, &p)| (i as u64 * 2, p)).collect() };
            let e = pdp_correlation(&pa, &pb);
            prop_assert!((0.0..=1.0 + 1e-12).contains(&e));
        }
    }
}
