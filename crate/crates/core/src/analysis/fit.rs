#[allow(unused_imports)]
use num_traits::Float;
use alloc::vec::Vec;

use serde::{Deserialize, Serialize};

use super::lsq::{quad_form, weighted_lsq3};
use super::AnalysisError;
use crate::campaign::BinnedCounts;
use crate::wrap_phase;

/// Sampled signal with per-point standard deviations.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TimeSeries {
    pub chi: f64,
    pub times: Vec<f64>,
    pub values: Vec<f64>,
    pub sigmas: Vec<f64>,
}

impl TimeSeries {
    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    /// Same times and sigmas, different values.
    pub fn with_values(&self, values: Vec<f64>) -> Self {
        Self {
            chi: self.chi,
            times: self.times.clone(),
            values,
            sigmas: self.sigmas.clone(),
        }
    }
}

impl From<&BinnedCounts> for TimeSeries {
    /// Raw counts with Poisson weights `max(count, 1)`.
    fn from(data: &BinnedCounts) -> Self {
        Self {
            chi: data.chi,
            times: data.bin_centers.clone(),
            values: data.counts.clone(),
            sigmas: data.counts.iter().map(|c| c.max(1.0).sqrt()).collect(),
        }
    }
}

/// `y(t) = offset + amplitude · sin(2πωt + δ + phase)`, fitted with ω and δ
/// held fixed.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SinusoidFit {
    pub offset: f64,
    pub amplitude: f64,
    /// In `(−π, π]`.
    pub phase: f64,
    /// Coefficient of `sin θ`.
    pub sin_coeff: f64,
    /// Coefficient of `cos θ`.
    pub cos_coeff: f64,
    /// Covariance of `(offset, sin_coeff, cos_coeff)`.
    pub covariance: [[f64; 3]; 3],
    pub reduced_chi2: f64,
    pub n_points: usize,
}

impl SinusoidFit {
    pub fn sigma_offset(&self) -> f64 {
        self.covariance[0][0].sqrt()
    }

    pub fn amplitude_variance(&self) -> f64 {
        let (a, b) = (self.sin_coeff, self.cos_coeff);
        let r2 = a * a + b * b;
        if r2 == 0.0 {
            return 0.5 * (self.covariance[1][1] + self.covariance[2][2]);
        }
        quad_form(&self.covariance, [0.0, a, b]) / r2
    }

    pub fn sigma_amplitude(&self) -> f64 {
        self.amplitude_variance().sqrt()
    }

    pub fn phase_variance(&self) -> f64 {
        let (a, b) = (self.sin_coeff, self.cos_coeff);
        let r2 = a * a + b * b;
        if r2 == 0.0 {
            return f64::INFINITY;
        }
        quad_form(&self.covariance, [0.0, -b / r2, a / r2])
    }

    pub fn sigma_phase(&self) -> f64 {
        self.phase_variance().sqrt()
    }

    /// Coefficients `(offset, sin, cos)`.
    pub fn coefficients(&self) -> [f64; 3] {
        [self.offset, self.sin_coeff, self.cos_coeff]
    }
}

/// Weighted linear least squares on the basis `{1, sin θ, cos θ}`,
/// `θ = 2πωt + δ`.
pub fn fit_sinusoid(series: &TimeSeries, omega: f64, delta: f64) -> Result<SinusoidFit, AnalysisError> {
    if series.len() < 4 {
        return Err(AnalysisError::InsufficientData {
            needed: 4,
            got: series.len(),
        });
    }
    if series.times.len() != series.len() || series.sigmas.len() != series.len() {
        return Err(AnalysisError::BinMismatch("times/values/sigmas lengths differ".into()));
    }
    let rows: Vec<[f64; 3]> = series
        .times
        .iter()
        .map(|&t| {
            let (s, c) = (core::f64::consts::TAU * omega * t + delta).sin_cos();
            [1.0, s, c]
        })
        .collect();
    let sol = weighted_lsq3(&rows, &series.values, &series.sigmas)?;
    let [offset, a, b] = sol.coef;
    let dof = sol.n.saturating_sub(3).max(1);
    Ok(SinusoidFit {
        offset,
        amplitude: a.hypot(b),
        phase: wrap_phase(b.atan2(a)),
        sin_coeff: a,
        cos_coeff: b,
        covariance: sol.cov,
        reduced_chi2: sol.chi2 / dof as f64,
        n_points: sol.n,
    })
}

/// [`fit_sinusoid`] on raw counts; refuses histograms with no counts.
pub fn fit_counts(data: &BinnedCounts, omega: f64, delta: f64) -> Result<SinusoidFit, AnalysisError> {
    if data.counts.iter().all(|&c| c == 0.0) {
        return Err(AnalysisError::DegenerateFit("histogram has no counts".into()));
    }
    fit_sinusoid(&TimeSeries::from(data), omega, delta)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::campaign::{BinnedCounts, Channel, ExperimentConfig};
    use crate::interferometer::{ideal_intensity, ProtocolParams};
    use alloc::vec;
    use approx::assert_abs_diff_eq;
    use core::f64::consts::{FRAC_PI_2, FRAC_PI_4, PI};

    fn ideal_series(chi: f64, p: &ProtocolParams, n: usize) -> TimeSeries {
        let times: Vec<f64> = (0..n).map(|k| (k as f64 + 0.5) / n as f64 * p.period()).collect();
        let values: Vec<f64> = times.iter().map(|&t| ideal_intensity(chi, t, p)).collect();
        TimeSeries {
            chi,
            sigmas: vec![1e-3; n],
            times,
            values,
        }
    }

    #[test]
    fn recovers_weak_value_modulus_at_chi_zero() {
        let p = ProtocolParams::default();
        let fit = fit_sinusoid(&ideal_series(0.0, &p, 8), p.omega, p.delta).unwrap();
        assert_abs_diff_eq!(fit.amplitude / fit.offset, p.alpha / 2.0, epsilon = 1e-10);
        assert_abs_diff_eq!(fit.phase, 0.0, epsilon = 1e-12);
    }

    #[test]
    fn recovers_weak_value_at_quarter_turn() {
        let p = ProtocolParams::default();
        let fit = fit_sinusoid(&ideal_series(FRAC_PI_2, &p, 8), p.omega, p.delta).unwrap();
        assert_abs_diff_eq!(fit.amplitude / fit.offset / p.alpha, 0.5f64.sqrt(), epsilon = 1e-10);
        assert_abs_diff_eq!(fit.phase, -FRAC_PI_4, epsilon = 1e-12);
    }

    #[test]
    fn delta_is_absorbed_by_the_basis() {
        let p = ProtocolParams {
            delta: 1.1,
            ..ProtocolParams::default()
        };
        let fit = fit_sinusoid(&ideal_series(2.0, &p, 10), p.omega, p.delta).unwrap();
        let w = num_complex::Complex64::new(1.0, 0.0) / (num_complex::Complex64::cis(2.0) + 1.0);
        assert_abs_diff_eq!(fit.phase, w.arg(), epsilon = 1e-12);
    }

    #[test]
    fn flat_counts_have_amplitude_within_three_sigma() {
        let data = BinnedCounts {
            chi: 0.0,
            channel: Channel::Modulated,
            bin_centers: ExperimentConfig::default().bin_centers(),
            counts: vec![1000.0, 1012.0, 987.0, 1003.0, 995.0, 1021.0, 979.0, 1001.0],
            exposure: 1.0,
        };
        let fit = fit_counts(&data, 60e3, 0.0).unwrap();
        assert!(fit.amplitude < 3.0 * fit.sigma_amplitude(), "{fit:?}");
        assert!(fit.amplitude >= 0.0 && fit.phase > -PI && fit.phase <= PI);
    }

    #[test]
    fn empty_histogram_is_degenerate() {
        let data = BinnedCounts {
            chi: 0.0,
            channel: Channel::Modulated,
            bin_centers: ExperimentConfig::default().bin_centers(),
            counts: vec![0.0; 8],
            exposure: 1.0,
        };
        assert!(matches!(fit_counts(&data, 60e3, 0.0), Err(AnalysisError::DegenerateFit(_))));
    }

    #[test]
    fn too_few_points() {
        let p = ProtocolParams::default();
        let s = ideal_series(0.0, &p, 3);
        assert!(matches!(
            fit_sinusoid(&s, p.omega, 0.0),
            Err(AnalysisError::InsufficientData { needed: 4, got: 3 })
        ));
    }

    #[test]
    fn covariance_is_symmetric_psd() {
        let p = ProtocolParams::default();
        let fit = fit_sinusoid(&ideal_series(1.0, &p, 8), p.omega, 0.0).unwrap();
        let c = fit.covariance;
        for i in 0..3 {
            assert!(c[i][i] > 0.0);
            for j in 0..3 {
                assert_eq!(c[i][j], c[j][i]);
                assert!(c[i][j] * c[i][j] <= c[i][i] * c[j][j] * (1.0 + 1e-12));
            }
        }
        // equispaced bins: sin/cos columns are orthogonal with equal weights
        assert_abs_diff_eq!(c[1][1], 2e-6 / 8.0, epsilon = 1e-18);
    }
}
