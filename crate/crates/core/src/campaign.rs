//! Deterministic part of the detector campaign: configuration, channels,
//! time folding and expected counts per bin. Sampling lives in the `wvb`
//! crate.

#[allow(unused_imports)]
use num_traits::Float;
use alloc::format;
use alloc::string::String;
use alloc::vec;
use alloc::vec::Vec;
use core::f64::consts::TAU;
use core::fmt;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::analysis::AnalysisConfig;
use crate::interferometer::{
    empty_interferogram, isolated_path_intensities, real_intensity, ProtocolParams, Y_CHANNEL_PHASE,
};

/// Relative distance to a bin edge below which a time is snapped onto it.
const EDGE_SNAP: f64 = 1e-9;

/// Measurement channel recorded per χ setting.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Channel {
    /// RF on, O beam analyzed along `↑x`.
    Modulated,
    /// RF off, empty interferogram.
    EmptyX,
    /// RF off, interferogram shifted by π/2.
    EmptyY,
    /// Path II blocked.
    #[serde(rename = "path1_only")]
    Path1Only,
    /// Path I blocked.
    #[serde(rename = "path2_only")]
    Path2Only,
}

impl Channel {
    pub const ALL: [Channel; 5] = [
        Channel::Modulated,
        Channel::EmptyX,
        Channel::EmptyY,
        Channel::Path1Only,
        Channel::Path2Only,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Channel::Modulated => "modulated",
            Channel::EmptyX => "empty_x",
            Channel::EmptyY => "empty_y",
            Channel::Path1Only => "path1_only",
            Channel::Path2Only => "path2_only",
        }
    }

    pub fn from_name(name: &str) -> Option<Channel> {
        Channel::ALL.into_iter().find(|c| c.name() == name)
    }

    pub fn index(self) -> usize {
        self as usize
    }
}

impl fmt::Display for Channel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct Datasets {
    pub modulated: bool,
    pub empty_x: bool,
    pub empty_y: bool,
    pub path1_only: bool,
    pub path2_only: bool,
}

impl Default for Datasets {
    fn default() -> Self {
        Self {
            modulated: true,
            empty_x: true,
            empty_y: true,
            path1_only: true,
            path2_only: true,
        }
    }
}

impl Datasets {
    pub fn enabled(&self, channel: Channel) -> bool {
        match channel {
            Channel::Modulated => self.modulated,
            Channel::EmptyX => self.empty_x,
            Channel::EmptyY => self.empty_y,
            Channel::Path1Only => self.path1_only,
            Channel::Path2Only => self.path2_only,
        }
    }

    pub fn channels(&self) -> impl Iterator<Item = Channel> + '_ {
        Channel::ALL.into_iter().filter(|c| self.enabled(*c))
    }
}

/// How detector arrival times map to histogram bins.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize, Default)]
#[serde(tag = "mode", rename_all = "snake_case", deny_unknown_fields)]
pub enum Binning {
    /// `bins_per_period` equal bins covering one RF period.
    #[default]
    Folded,
    /// `bins_per_period` bins of fixed width starting at the period origin;
    /// arrivals in the remainder `period − bins·width` are discarded.
    Truncated { bin_width_s: f64 },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ExperimentConfig {
    pub protocol: ProtocolParams,
    /// Path phases χ in `[0, 2π)`, rad.
    pub chi_grid: Vec<f64>,
    pub bins_per_period: usize,
    /// Expected counts per unit intensity summed over one period.
    pub counts_per_setting: f64,
    pub seed: u64,
    pub datasets: Datasets,
    pub binning: Binning,
    /// Flat background, expected counts per bin.
    pub background: f64,
    /// Write expected counts instead of Poisson draws.
    pub noiseless: bool,
    pub analysis: AnalysisConfig,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        Self {
            protocol: ProtocolParams::default(),
            chi_grid: uniform_chi_grid(12),
            bins_per_period: 8,
            counts_per_setting: 1e6,
            seed: 0x5eed_0001,
            datasets: Datasets::default(),
            binning: Binning::Folded,
            background: 0.0,
            noiseless: false,
            analysis: AnalysisConfig::default(),
        }
    }
}

/// `n` equally spaced phases `k·2π/n`.
pub fn uniform_chi_grid(n: usize) -> Vec<f64> {
    (0..n).map(|k| TAU * k as f64 / n as f64).collect()
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
#[error("invalid config field `{field}`: {message}")]
pub struct ConfigError {
    pub field: String,
    pub message: String,
}

impl ConfigError {
    pub fn new(field: &str, message: impl Into<String>) -> Self {
        Self {
            field: field.into(),
            message: message.into(),
        }
    }
}

impl ExperimentConfig {
    pub fn validate(&self) -> Result<(), ConfigError> {
        self.protocol
            .check()
            .map_err(|(field, msg)| ConfigError::new(field, msg))?;
        if self.chi_grid.is_empty() {
            return Err(ConfigError::new("chi_grid", "must not be empty"));
        }
        for (i, &chi) in self.chi_grid.iter().enumerate() {
            if !(chi.is_finite() && (0.0..TAU).contains(&chi)) {
                return Err(ConfigError::new(
                    "chi_grid",
                    format!("entry {i} = {chi} outside [0, 2π)"),
                ));
            }
            if self.chi_grid[..i].iter().any(|&c| (c - chi).abs() < 1e-12) {
                return Err(ConfigError::new("chi_grid", format!("entry {i} = {chi} is duplicated")));
            }
        }
        if self.bins_per_period < 4 {
            return Err(ConfigError::new("bins_per_period", "must be at least 4"));
        }
        if !(self.counts_per_setting.is_finite() && self.counts_per_setting > 0.0) {
            return Err(ConfigError::new("counts_per_setting", "must be positive"));
        }
        if !(self.background.is_finite() && self.background >= 0.0) {
            return Err(ConfigError::new("background", "must be non-negative"));
        }
        if let Binning::Truncated { bin_width_s } = self.binning {
            let covered = bin_width_s * self.bins_per_period as f64;
            if !(bin_width_s.is_finite() && bin_width_s > 0.0) {
                return Err(ConfigError::new("binning.bin_width_s", "must be positive"));
            }
            if covered > self.protocol.period() * (1.0 + EDGE_SNAP) {
                return Err(ConfigError::new(
                    "binning.bin_width_s",
                    format!("{} bins of {bin_width_s} s exceed the RF period", self.bins_per_period),
                ));
            }
        }
        self.analysis.validate(&self.chi_grid)
    }

    /// Width of one histogram bin, s.
    pub fn bin_width(&self) -> f64 {
        match self.binning {
            Binning::Folded => self.protocol.period() / self.bins_per_period as f64,
            Binning::Truncated { bin_width_s } => bin_width_s,
        }
    }

    /// Bin centers inside one RF period, s.
    pub fn bin_centers(&self) -> Vec<f64> {
        let w = self.bin_width();
        (0..self.bins_per_period).map(|k| (k as f64 + 0.5) * w).collect()
    }

    /// Expected counts per unit intensity in one bin.
    pub fn exposure(&self) -> f64 {
        self.counts_per_setting * self.bin_width() / self.protocol.period()
    }

    /// Bin index of an arrival time under this config's binning; `None` for
    /// the discarded remainder in truncated mode.
    pub fn bin_of(&self, t: f64) -> Option<usize> {
        match self.binning {
            Binning::Folded => Some(fold_time(t, self.protocol.omega, self.bins_per_period)),
            Binning::Truncated { bin_width_s } => {
                fold_time_truncated(t, self.protocol.omega, self.bins_per_period, bin_width_s)
            }
        }
    }

    /// Poisson means `λ_b = max(I(t_b), 0)·exposure + background` for one
    /// (χ, channel) setting.
    pub fn expected_counts(&self, chi: f64, channel: Channel) -> Vec<f64> {
        let exposure = self.exposure();
        self.bin_centers()
            .into_iter()
            .map(|t| channel_intensity(channel, chi, t, &self.protocol).max(0.0) * exposure + self.background)
            .collect()
    }
}

/// Normalized detector intensity for a channel.
pub fn channel_intensity(channel: Channel, chi: f64, t: f64, params: &ProtocolParams) -> f64 {
    match channel {
        Channel::Modulated => real_intensity(chi, t, params),
        Channel::EmptyX => empty_interferogram(chi, params.eta, 0.0),
        Channel::EmptyY => empty_interferogram(chi, params.eta, Y_CHANNEL_PHASE),
        Channel::Path1Only => isolated_path_intensities(t, params).0,
        Channel::Path2Only => isolated_path_intensities(t, params).1,
    }
}

fn snapped_floor(x: f64) -> f64 {
    let r = x.round();
    if (x - r).abs() <= EDGE_SNAP * r.abs().max(1.0) {
        r
    } else {
        x.floor()
    }
}

/// Folds `t` into one RF period and returns its bin among `bins` equal
/// bins. Bins are half-open `[lo, hi)`; a time on an edge belongs to the
/// bin that starts there.
pub fn fold_time(t: f64, omega: f64, bins: usize) -> usize {
    let cycles = t * omega;
    let frac = cycles - snapped_floor(cycles);
    let k = snapped_floor(frac * bins as f64) as i64;
    k.rem_euclid(bins as i64) as usize
}

/// Like [`fold_time`] with fixed-width bins from the period origin; times
/// falling in the uncovered remainder of the period yield `None`.
pub fn fold_time_truncated(t: f64, omega: f64, bins: usize, bin_width: f64) -> Option<usize> {
    let period = 1.0 / omega;
    let cycles = t * omega;
    let tau = (cycles - snapped_floor(cycles)) * period;
    let k = snapped_floor(tau / bin_width);
    if k < 0.0 {
        return None;
    }
    let k = k as usize;
    (k < bins).then_some(k)
}

/// Time-folded histogram for one (χ, channel) setting.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BinnedCounts {
    pub chi: f64,
    pub channel: Channel,
    /// Bin centers within one RF period, s.
    pub bin_centers: Vec<f64>,
    /// Non-negative counts (whole numbers unless generated noiselessly).
    pub counts: Vec<f64>,
    /// Expected counts per unit intensity in each bin.
    pub exposure: f64,
}

impl BinnedCounts {
    pub fn check(&self) -> Result<(), String> {
        if self.bin_centers.len() != self.counts.len() {
            return Err(format!(
                "{} bin centers but {} counts",
                self.bin_centers.len(),
                self.counts.len()
            ));
        }
        if self.counts.iter().any(|c| !(c.is_finite() && *c >= 0.0)) {
            return Err("counts must be finite and non-negative".into());
        }
        if self.bin_centers.windows(2).any(|w| !(w[1] > w[0])) {
            return Err("bin centers must be strictly increasing".into());
        }
        if !(self.exposure.is_finite() && self.exposure > 0.0) {
            return Err("exposure must be positive".into());
        }
        Ok(())
    }

    pub fn total(&self) -> f64 {
        self.counts.iter().sum()
    }

    /// Counts divided by exposure: an estimate of the normalized intensity.
    pub fn normalized(&self) -> Vec<f64> {
        self.counts.iter().map(|c| c / self.exposure).collect()
    }

    /// Poisson standard deviation of [`Self::normalized`], using
    /// `max(count, 1)` as the variance.
    pub fn normalized_sigma(&self) -> Vec<f64> {
        self.counts.iter().map(|c| c.max(1.0).sqrt() / self.exposure).collect()
    }

    /// Histogram of expected counts (no sampling).
    pub fn expected(config: &ExperimentConfig, chi: f64, channel: Channel) -> Self {
        Self {
            chi,
            channel,
            bin_centers: config.bin_centers(),
            counts: config.expected_counts(chi, channel),
            exposure: config.exposure(),
        }
    }
}

/// Expected-count histograms for every (χ, enabled channel) setting,
/// ordered by χ grid then channel.
pub fn expected_campaign(config: &ExperimentConfig) -> Vec<BinnedCounts> {
    let mut out = vec![];
    for &chi in &config.chi_grid {
        for channel in config.datasets.channels() {
            out.push(BinnedCounts::expected(config, chi, channel));
        }
    }
    out
}

/// Whether two phases coincide modulo 2π.
pub fn same_phase(a: f64, b: f64) -> bool {
    let mut d = (a - b) % TAU;
    if d < 0.0 {
        d += TAU;
    }
    d < 1e-9 || TAU - d < 1e-9
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;
    use core::f64::consts::PI;

    #[test]
    fn fold_time_examples() {
        let omega = 60e3;
        let period = 1.0 / omega;
        assert_eq!(fold_time(0.0, omega, 8), 0);
        assert_eq!(fold_time(period, omega, 8), 0);
        assert_eq!(fold_time(period * 1.5 / 8.0, omega, 8), 1);
        assert_eq!(fold_time(period * 3.0 / 8.0, omega, 8), 3);
        assert_eq!(fold_time(period * (7.0 + 1.0 / 8.0), omega, 8), 1);
        assert_eq!(fold_time(period * 0.999, omega, 8), 7);
        assert_eq!(fold_time(-period * 0.01, omega, 8), 7);
    }

    #[test]
    fn fold_time_truncated_discards_remainder() {
        // 3 µs bins in a 16.67 µs period: five full bins, 1.67 µs discarded.
        let omega = 60e3;
        assert_eq!(fold_time_truncated(0.0, omega, 5, 3e-6), Some(0));
        assert_eq!(fold_time_truncated(4.5e-6, omega, 5, 3e-6), Some(1));
        assert_eq!(fold_time_truncated(14.9e-6, omega, 5, 3e-6), Some(4));
        assert_eq!(fold_time_truncated(15.5e-6, omega, 5, 3e-6), None);
        assert_eq!(fold_time_truncated(1.0 / omega + 1e-6, omega, 5, 3e-6), Some(0));
    }

    #[test]
    fn bin_centers_fold_to_their_own_bin() {
        let cfg = ExperimentConfig::default();
        let centers = cfg.bin_centers();
        assert_eq!(centers.len(), 8);
        for (k, &t) in centers.iter().enumerate() {
            assert_eq!(cfg.bin_of(t), Some(k));
        }
        let span = centers[7] - centers[0] + cfg.bin_width();
        assert_abs_diff_eq!(span, cfg.protocol.period(), epsilon = 1e-18);
    }

    #[test]
    fn default_config_is_valid() {
        let cfg = ExperimentConfig::default();
        cfg.validate().unwrap();
        assert_eq!(cfg.chi_grid.len(), 12);
        assert_abs_diff_eq!(cfg.protocol.alpha, PI / 9.0);
        assert_eq!(cfg.protocol.omega, 60e3);
        assert_eq!(cfg.protocol.eta, 0.79);
    }

    #[test]
    fn validation_names_fields() {
        let mut cfg = ExperimentConfig::default();
        cfg.chi_grid.push(7.0);
        assert_eq!(cfg.validate().unwrap_err().field, "chi_grid");

        let mut cfg = ExperimentConfig::default();
        cfg.counts_per_setting = 0.0;
        assert_eq!(cfg.validate().unwrap_err().field, "counts_per_setting");

        let mut cfg = ExperimentConfig::default();
        cfg.bins_per_period = 3;
        assert_eq!(cfg.validate().unwrap_err().field, "bins_per_period");

        let mut cfg = ExperimentConfig::default();
        cfg.bins_per_period = 6;
        cfg.binning = Binning::Truncated { bin_width_s: 3e-6 };
        assert_eq!(cfg.validate().unwrap_err().field, "binning.bin_width_s");
        cfg.bins_per_period = 5;
        cfg.validate().unwrap();
    }

    #[test]
    fn expected_counts_scale_with_exposure() {
        let cfg = ExperimentConfig::default();
        let lam = cfg.expected_counts(0.0, Channel::EmptyX);
        // empty_x at χ = 0: ½(1 + η), spread over 8 bins
        for l in &lam {
            assert_abs_diff_eq!(*l, 0.5 * (1.0 + 0.79) * 1e6 / 8.0, epsilon = 1e-6);
        }
        let total: f64 = cfg.expected_counts(1.0, Channel::Path2Only).iter().sum();
        assert_abs_diff_eq!(total, 0.125 * 1e6, epsilon = 1e-6);
    }

    #[test]
    fn truncated_exposure_uses_bin_fraction() {
        let cfg = ExperimentConfig {
            bins_per_period: 5,
            binning: Binning::Truncated { bin_width_s: 3e-6 },
            ..ExperimentConfig::default()
        };
        assert_abs_diff_eq!(cfg.exposure(), 1e6 * 3e-6 * 60e3, epsilon = 1e-6);
        assert_abs_diff_eq!(cfg.bin_centers()[4], 13.5e-6, epsilon = 1e-18);
    }

    #[test]
    fn channel_names_round_trip() {
        for c in Channel::ALL {
            assert_eq!(Channel::from_name(c.name()), Some(c));
        }
        assert_eq!(Channel::from_name("path3"), None);
    }
}
