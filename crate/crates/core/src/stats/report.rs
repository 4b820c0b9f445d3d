//! Statistics configuration, results and their CSV/JSON forms.

use std::fmt::Write as _;

use serde::{Deserialize, Serialize};

use super::{Pdp, StationaryInterval};
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Metric {
    Acf,
    Pdp,
    LcrAfd,
    Si,
}

impl Metric {
    pub const ALL: [Metric; 4] = [Metric::Acf, Metric::Pdp, Metric::LcrAfd, Metric::Si];

    pub fn name(self) -> &'static str {
        match self {
            Metric::Acf => "acf",
            Metric::Pdp => "pdp",
            Metric::LcrAfd => "lcr_afd",
            Metric::Si => "si",
        }
    }

    pub fn valid_names() -> String {
        Metric::ALL.map(Metric::name).join(", ")
    }

    pub fn parse(name: &str) -> Result<Metric> {
        Metric::ALL
            .into_iter()
            .find(|m| m.name() == name.trim())
            .ok_or_else(|| {
                Error::config(
                    "stats.metrics",
                    format!("unknown metric `{name}`; valid names: {}", Metric::valid_names()),
                )
            })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct StatsConfig {
    pub metrics: Vec<Metric>,
    /// Realisations in the ensemble expectation of the autocorrelation.
    pub ensemble: usize,
    /// Transmit and receive element analysed.
    pub pair: [usize; 2],
    pub acf_reference_s: f64,
    pub acf_max_lag_s: f64,
    pub pdp_resolution_s: f64,
    pub pdp_drop_interval_s: f64,
    pub pdp_average_count: usize,
    pub pdp_include_los: bool,
    pub si_threshold: f64,
    /// Envelope levels relative to the RMS envelope.
    pub lcr_levels_rel: Vec<f64>,
}

impl Default for StatsConfig {
    fn default() -> Self {
        StatsConfig {
            metrics: Metric::ALL.to_vec(),
            ensemble: 50,
            pair: [0, 0],
            acf_reference_s: 0.5,
            acf_max_lag_s: 0.05,
            pdp_resolution_s: 1e-8,
            pdp_drop_interval_s: 0.01,
            pdp_average_count: 10,
            pdp_include_los: true,
            si_threshold: 0.8,
            // 20 levels, log-spaced from 0.1 to 3 times the RMS
            lcr_levels_rel: (0..20).map(|i| 0.1 * 30f64.powf(i as f64 / 19.0)).collect(),
        }
    }
}

impl StatsConfig {
    pub fn validate(&self) -> Result<()> {
        if self.ensemble == 0 {
            return Err(Error::config("stats.ensemble", "must be at least 1"));
        }
        if !(self.acf_reference_s >= 0.0) || !(self.acf_max_lag_s >= 0.0) {
            return Err(Error::config("stats.acf", "reference time and lag span must be >= 0"));
        }
        if !(self.pdp_resolution_s > 0.0) || !(self.pdp_drop_interval_s > 0.0) {
            return Err(Error::config("stats.pdp", "resolution and drop interval must be positive"));
        }
        if self.pdp_average_count == 0 {
            return Err(Error::config("stats.pdp_average_count", "must be at least 1"));
        }
        if !(self.si_threshold > 0.0 && self.si_threshold < 1.0) {
            return Err(Error::config("stats.si_threshold", "must lie in (0, 1)"));
        }
        if self.lcr_levels_rel.iter().any(|r| !(*r > 0.0) || !r.is_finite()) {
            return Err(Error::config("stats.lcr_levels_rel", "levels must be positive"));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct AcfResult {
    pub reference_s: f64,
    pub ensemble: usize,
    pub lags_s: Vec<f64>,
    pub re: Vec<f64>,
    pub im: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PdpResult {
    pub resolution_s: f64,
    pub drops: usize,
    pub delays_s: Vec<f64>,
    /// Time-averaged power per delay bin.
    pub power: Vec<f64>,
    pub mean_delay_s: f64,
    pub rms_delay_spread_s: f64,
}

impl PdpResult {
    pub fn from_average(avg: &Pdp, drops: usize) -> Self {
        let total = avg.total_power();
        let delays: Vec<f64> = avg.bins.iter().map(|b| b.0 as f64 * avg.resolution).collect();
        let power: Vec<f64> = avg.bins.iter().map(|b| b.1).collect();
        let (mean, spread) = if total > 0.0 {
            let mean = delays.iter().zip(&power).map(|(d, p)| d * p).sum::<f64>() / total;
            let var = delays.iter().zip(&power).map(|(d, p)| (d - mean).powi(2) * p).sum::<f64>() / total;
            (mean, var.sqrt())
        } else {
            (0.0, 0.0)
        };
        PdpResult {
            resolution_s: avg.resolution,
            drops,
            delays_s: delays,
            power,
            mean_delay_s: mean,
            rms_delay_spread_s: spread,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct LevelCrossingResult {
    pub rms: f64,
    pub levels_rel: Vec<f64>,
    pub lcr_hz: Vec<f64>,
    /// `None` where no fade below the level completed.
    pub afd_s: Vec<Option<f64>>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SiResult {
    pub threshold: f64,
    pub spacing_s: f64,
    pub start_s: Vec<f64>,
    pub duration_s: Vec<f64>,
    pub censored: Vec<bool>,
    pub median_s: f64,
    pub mean_s: f64,
}

impl SiResult {
    pub fn new(threshold: f64, spacing: f64, intervals: &[StationaryInterval]) -> Self {
        let durations: Vec<f64> = intervals.iter().map(|s| s.duration).collect();
        SiResult {
            threshold,
            spacing_s: spacing,
            start_s: intervals.iter().map(|s| s.start).collect(),
            duration_s: durations.clone(),
            censored: intervals.iter().map(|s| s.censored).collect(),
            median_s: median(&durations),
            mean_s: durations.iter().sum::<f64>() / durations.len().max(1) as f64,
        }
    }
}

/// Median of a slice (mean of the two middle values for even lengths); NaN when empty.
pub fn median(values: &[f64]) -> f64 {
    if values.is_empty() {
        return f64::NAN;
    }
    let mut v = values.to_vec();
    v.sort_by(f64::total_cmp);
    let n = v.len();
    if n % 2 == 1 {
        v[n / 2]
    } else {
        0.5 * (v[n / 2 - 1] + v[n / 2])
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize)]
pub struct StatsReport {
    pub seed: u64,
    pub pair: [usize; 2],
    #[serde(skip_serializing_if = "Option::is_none")]
    pub acf: Option<AcfResult>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub pdp: Option<PdpResult>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub lcr_afd: Option<LevelCrossingResult>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub si: Option<SiResult>,
}

fn f(v: f64) -> String {
    format!("{v:.16e}")
}

impl AcfResult {
    pub fn to_csv(&self) -> String {
        let mut s = String::from("dt_s,re,im,abs\n");
        for ((l, re), im) in self.lags_s.iter().zip(&self.re).zip(&self.im) {
            let _ = writeln!(s, "{},{},{},{}", f(*l), f(*re), f(*im), f(re.hypot(*im)));
        }
        s
    }
}

impl PdpResult {
    pub fn to_csv(&self) -> String {
        let mut s = String::from("delay_s,power\n");
        for (d, p) in self.delays_s.iter().zip(&self.power) {
            let _ = writeln!(s, "{},{}", f(*d), f(*p));
        }
        s
    }
}

impl LevelCrossingResult {
    pub fn to_csv(&self) -> String {
        let mut s = String::from("level_rel,level,lcr_hz,afd_s\n");
        for ((r, l), a) in self.levels_rel.iter().zip(&self.lcr_hz).zip(&self.afd_s) {
            let afd = a.map(f).unwrap_or_default();
            let _ = writeln!(s, "{},{},{},{}", f(*r), f(r * self.rms), f(*l), afd);
        }
        s
    }
}

impl SiResult {
    pub fn to_csv(&self) -> String {
        let mut s = String::from("t_s,si_s,censored\n");
        for ((t, d), c) in self.start_s.iter().zip(&self.duration_s).zip(&self.censored) {
            let _ = writeln!(s, "{},{},{}", f(*t), f(*d), c);
        }
        s
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn metric_names() {
        assert_eq!(Metric::parse("lcr_afd").unwrap(), Metric::LcrAfd);
        let err = Metric::parse("psd").unwrap_err().to_string();
        assert!(err.contains("acf, pdp, lcr_afd, si"));
        let levels = StatsConfig::default().lcr_levels_rel;
        assert!((levels[0] - 0.1).abs() < 1e-15 && (levels[19] - 3.0).abs() < 1e-12);
    }

    #[test]
    fn median_cases() {
        assert_eq!(median(&[3.0, 1.0, 2.0]), 2.0);
        assert_eq!(median(&[4.0, 1.0, 2.0, 3.0]), 2.5);
        assert!(median(&[]).is_nan());
    }

    #[test]
    fn pdp_summary() {
        let avg = Pdp { resolution: 1e-8, bins: vec![(10, 1.0), (30, 1.0)] };
        let r = PdpResult::from_average(&avg, 4);
        assert!((r.mean_delay_s - 2e-7).abs() < 1e-20);
        assert!((r.rms_delay_spread_s - 1e-7).abs() < 1e-20);
    }
}
