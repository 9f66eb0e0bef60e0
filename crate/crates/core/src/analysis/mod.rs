//! Data reduction: visibility extraction, incoherence correction, sine
//! fits at the known RF frequency, weak-value reconstruction referenced to
//! χ = 0, and the commutator check.

use alloc::format;
use alloc::string::String;
use alloc::vec::Vec;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::campaign::{same_phase, Channel, ConfigError, ExperimentConfig};

mod commutator;
mod correction;
mod fit;
mod lsq;
mod pipeline;
mod visibility;
mod weak_value;

pub use commutator::{verify_commutator, CommutatorReport, CommutatorRow, CommutatorSummary};
pub use correction::{correct_intensity, correct_intensity_with_min, incoherent_series, DEFAULT_ETA_MIN};
pub use fit::{fit_counts, fit_sinusoid, SinusoidFit, TimeSeries};
pub use pipeline::{analyze_campaign, CampaignAnalysis, ChiFit};
pub use visibility::{
    extract_visibility, fringe_scan, postselection_probabilities, FringePoint, ProbabilityEstimate,
    VisibilityEstimate,
};
pub use weak_value::{
    propagate_errors, reconstruct_weak_value, weak_value_from_fit, ErrorInputs, ReferencePhase,
    ReconstructionParams, WeakValueErrors, WeakValueEstimate, WeakValueInput,
};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum AnalysisError {
    #[error("need at least {needed} points, got {got}")]
    InsufficientData { needed: usize, got: usize },
    #[error("degenerate fit: {0}")]
    DegenerateFit(String),
    #[error("visibility {eta} at or below {eta_min}; incoherence correction is ill-conditioned")]
    VisibilityZero { eta: f64, eta_min: f64 },
    #[error("visibility {0} outside (0, 1]")]
    InvalidVisibility(f64),
    #[error("histograms are not aligned: {0}")]
    BinMismatch(String),
    #[error("reference setting χ = {chi} unavailable: {reason}")]
    MissingReference { chi: f64, reason: String },
    #[error("χ grids differ between channels: {0}")]
    ChannelMismatch(String),
    #[error("missing channels: {}", format_missing(.0))]
    MissingChannels(Vec<(f64, Channel)>),
}

fn format_missing(missing: &[(f64, Channel)]) -> String {
    let parts: Vec<String> = missing.iter().map(|(chi, c)| format!("{c} at χ={chi}")).collect();
    parts.join(", ")
}

/// Analysis knobs carried in the experiment config.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct AnalysisConfig {
    /// Rotation angle assumed by the analysis; defaults to `protocol.alpha`.
    pub alpha: Option<f64>,
    /// Relative systematic uncertainty on α.
    pub alpha_rel_sys: f64,
    /// Post-selection probability below which a point is excluded.
    pub p_min: f64,
    /// Smallest visibility the incoherence correction accepts.
    pub eta_min: f64,
    /// χ setting whose phase defines zero.
    pub reference_chi: f64,
    /// Acceptance bound on the RMS of lhs − rhs.
    pub rms_bound: f64,
}

impl Default for AnalysisConfig {
    fn default() -> Self {
        Self {
            alpha: None,
            alpha_rel_sys: 0.02,
            p_min: 0.01,
            eta_min: DEFAULT_ETA_MIN,
            reference_chi: 0.0,
            rms_bound: 0.05,
        }
    }
}

impl AnalysisConfig {
    pub fn validate(&self, chi_grid: &[f64]) -> Result<(), ConfigError> {
        if let Some(a) = self.alpha {
            if !(a.is_finite() && a > 0.0) {
                return Err(ConfigError::new("analysis.alpha", "must be positive"));
            }
        }
        if !(self.alpha_rel_sys.is_finite() && self.alpha_rel_sys >= 0.0) {
            return Err(ConfigError::new("analysis.alpha_rel_sys", "must be non-negative"));
        }
        if !(0.0..1.0).contains(&self.p_min) {
            return Err(ConfigError::new("analysis.p_min", "must lie in [0, 1)"));
        }
        if !(self.eta_min > 0.0 && self.eta_min < 1.0) {
            return Err(ConfigError::new("analysis.eta_min", "must lie in (0, 1)"));
        }
        if !(self.rms_bound.is_finite() && self.rms_bound > 0.0) {
            return Err(ConfigError::new("analysis.rms_bound", "must be positive"));
        }
        if !chi_grid.iter().any(|&c| same_phase(c, self.reference_chi)) {
            return Err(ConfigError::new(
                "analysis.reference_chi",
                format!("{} is not in chi_grid", self.reference_chi),
            ));
        }
        Ok(())
    }
}

/// Everything the reduction chain needs to know about the experiment.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AnalysisParams {
    pub alpha: f64,
    pub omega: f64,
    pub delta: f64,
    pub alpha_rel_sys: f64,
    pub p_min: f64,
    pub eta_min: f64,
    pub reference_chi: f64,
}

impl AnalysisParams {
    pub fn from_config(cfg: &ExperimentConfig) -> Self {
        Self {
            alpha: cfg.analysis.alpha.unwrap_or(cfg.protocol.alpha),
            omega: cfg.protocol.omega,
            delta: cfg.protocol.delta,
            alpha_rel_sys: cfg.analysis.alpha_rel_sys,
            p_min: cfg.analysis.p_min,
            eta_min: cfg.analysis.eta_min,
            reference_chi: cfg.analysis.reference_chi,
        }
    }
}
