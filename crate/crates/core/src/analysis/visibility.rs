#[allow(unused_imports)]
use num_traits::Float;
use alloc::vec::Vec;

use serde::{Deserialize, Serialize};

use super::lsq::{quad_form, weighted_lsq3};
use super::AnalysisError;
use crate::campaign::{BinnedCounts, Channel};

/// Time-averaged normalized intensity of one empty-interferometer setting.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FringePoint {
    pub chi: f64,
    pub intensity: f64,
    pub sigma: f64,
}

impl FringePoint {
    pub fn from_counts(data: &BinnedCounts) -> Self {
        let n = data.counts.len().max(1) as f64;
        let total = data.total();
        Self {
            chi: data.chi,
            intensity: total / (data.exposure * n),
            sigma: total.max(1.0).sqrt() / (data.exposure * n),
        }
    }
}

/// Fringe points of one channel, sorted by χ.
pub fn fringe_scan(data: &[BinnedCounts], channel: Channel) -> Vec<FringePoint> {
    let mut pts: Vec<FringePoint> = data
        .iter()
        .filter(|d| d.channel == channel)
        .map(FringePoint::from_counts)
        .collect();
    pts.sort_by(|a, b| a.chi.total_cmp(&b.chi));
    pts
}

/// Fit of `c0 + c1 cos χ + c2 sin χ` to a fringe scan.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct VisibilityEstimate {
    /// `√(c1² + c2²)/c0`, clamped to 1.
    pub eta: f64,
    pub sigma_eta: f64,
    /// Set when the raw estimate exceeded 1.
    pub clamped: bool,
    /// Mean intensity `c0`.
    pub offset: f64,
    /// Fringe phase offset `atan2(c2, c1)`; zero for an aligned interferometer.
    pub fringe_phase: f64,
    pub reduced_chi2: f64,
    pub n_points: usize,
}

pub fn extract_visibility(points: &[FringePoint]) -> Result<VisibilityEstimate, AnalysisError> {
    if points.len() < 3 {
        return Err(AnalysisError::InsufficientData {
            needed: 3,
            got: points.len(),
        });
    }
    let rows: Vec<[f64; 3]> = points
        .iter()
        .map(|p| {
            let (s, c) = p.chi.sin_cos();
            [1.0, c, s]
        })
        .collect();
    let y: Vec<f64> = points.iter().map(|p| p.intensity).collect();
    let sig: Vec<f64> = points.iter().map(|p| p.sigma).collect();
    let sol = weighted_lsq3(&rows, &y, &sig)?;
    let [c0, c1, c2] = sol.coef;
    if !(c0 > 0.0) {
        return Err(AnalysisError::DegenerateFit("fringe offset is not positive".into()));
    }
    let amp = c1.hypot(c2);
    let eta = amp / c0;
    let var = if amp > 0.0 {
        quad_form(&sol.cov, [-eta / c0, c1 / (amp * c0), c2 / (amp * c0)])
    } else {
        0.5 * (sol.cov[1][1] + sol.cov[2][2]) / (c0 * c0)
    };
    let dof = sol.n.saturating_sub(3).max(1);
    Ok(VisibilityEstimate {
        eta: eta.min(1.0),
        sigma_eta: var.sqrt(),
        clamped: eta > 1.0,
        offset: c0,
        fringe_phase: c2.atan2(c1),
        reduced_chi2: sol.chi2 / dof as f64,
        n_points: sol.n,
    })
}

/// Visibility-corrected post-selection probability at one χ.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ProbabilityEstimate {
    pub chi: f64,
    pub p: f64,
    pub sigma: f64,
}

/// `p̂ = ½ + (Î − ½)/η` per χ from the normalized count ratio `Î`; only η
/// comes from the fringe fit.
pub fn postselection_probabilities(points: &[FringePoint], vis: &VisibilityEstimate) -> Vec<ProbabilityEstimate> {
    let eta = vis.eta;
    points
        .iter()
        .map(|pt| {
            let dev = pt.intensity - 0.5;
            let d_int = pt.sigma / eta;
            let d_eta = dev / (eta * eta) * vis.sigma_eta;
            ProbabilityEstimate {
                chi: pt.chi,
                p: 0.5 + dev / eta,
                sigma: d_int.hypot(d_eta),
            }
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::campaign::uniform_chi_grid;
    use crate::interferometer::empty_interferogram;
    use approx::assert_abs_diff_eq;
    use core::f64::consts::FRAC_PI_2;

    fn scan(eta: f64, phase: f64) -> Vec<FringePoint> {
        uniform_chi_grid(12)
            .into_iter()
            .map(|chi| FringePoint {
                chi,
                intensity: empty_interferogram(chi, eta, phase),
                sigma: 1e-3,
            })
            .collect()
    }

    #[test]
    fn recovers_eta() {
        let v = extract_visibility(&scan(0.79, 0.0)).unwrap();
        assert_abs_diff_eq!(v.eta, 0.79, epsilon = 1e-12);
        assert_abs_diff_eq!(v.offset, 0.5, epsilon = 1e-12);
        assert_abs_diff_eq!(v.fringe_phase, 0.0, epsilon = 1e-12);
        assert!(v.sigma_eta > 0.0 && v.sigma_eta < 1e-2);
    }

    #[test]
    fn extreme_visibilities() {
        let one = extract_visibility(&scan(1.0, 0.0)).unwrap();
        assert_abs_diff_eq!(one.eta, 1.0, epsilon = 1e-10);
        let zero = extract_visibility(&scan(0.0, 0.0)).unwrap();
        assert_abs_diff_eq!(zero.eta, 0.0, epsilon = 1e-10);
        assert!(!one.clamped && !zero.clamped);
    }

    #[test]
    fn overshoot_is_clamped_and_flagged() {
        let mut pts = scan(1.0, 0.0);
        for p in &mut pts {
            p.intensity = 0.5 * (1.0 + 1.02 * p.chi.cos());
        }
        let v = extract_visibility(&pts).unwrap();
        assert_eq!(v.eta, 1.0);
        assert!(v.clamped);
    }

    #[test]
    fn phase_offset_is_free() {
        let v = extract_visibility(&scan(0.6, 0.3)).unwrap();
        assert_abs_diff_eq!(v.eta, 0.6, epsilon = 1e-12);
        assert_abs_diff_eq!(v.fringe_phase, 0.3, epsilon = 1e-12);
    }

    #[test]
    fn single_chi_repeated_is_degenerate() {
        let pts = [
            FringePoint { chi: 1.0, intensity: 0.5, sigma: 0.01 },
            FringePoint { chi: 1.0, intensity: 0.51, sigma: 0.01 },
            FringePoint { chi: 1.0, intensity: 0.49, sigma: 0.01 },
        ];
        assert!(matches!(extract_visibility(&pts), Err(AnalysisError::DegenerateFit(_))));
    }

    #[test]
    fn probabilities_undo_contrast() {
        let x = scan(0.79, 0.0);
        let v = extract_visibility(&x).unwrap();
        for p in postselection_probabilities(&x, &v) {
            assert_abs_diff_eq!(p.p, (1.0 + p.chi.cos()) / 2.0, epsilon = 1e-12);
        }
        let y = scan(0.79, FRAC_PI_2);
        for p in postselection_probabilities(&y, &v) {
            assert_abs_diff_eq!(p.p, (1.0 + p.chi.sin()) / 2.0, epsilon = 1e-12);
        }
    }
}
