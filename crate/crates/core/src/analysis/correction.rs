#[allow(unused_imports)]
use num_traits::Float;
use alloc::format;
use alloc::vec::Vec;


use super::{AnalysisError, TimeSeries};
use crate::campaign::BinnedCounts;

pub const DEFAULT_ETA_MIN: f64 = 0.05;

fn aligned(a: &BinnedCounts, b: &BinnedCounts) -> Result<(), AnalysisError> {
    let same = a.bin_centers.len() == b.bin_centers.len()
        && a.counts.len() == b.counts.len()
        && a
            .bin_centers
            .iter()
            .zip(&b.bin_centers)
            .all(|(x, y)| (x - y).abs() <= 1e-9 * x.abs().max(y.abs()).max(1e-12));
    if same {
        Ok(())
    } else {
        Err(AnalysisError::BinMismatch(format!(
            "{} (χ={}) vs {} (χ={})",
            a.channel, a.chi, b.channel, b.chi
        )))
    }
}

/// Normalized `I1 + I2` from the two isolated-path histograms.
pub fn incoherent_series(path1: &BinnedCounts, path2: &BinnedCounts) -> Result<TimeSeries, AnalysisError> {
    aligned(path1, path2)?;
    let (v1, v2) = (path1.normalized(), path2.normalized());
    let (s1, s2) = (path1.normalized_sigma(), path2.normalized_sigma());
    Ok(TimeSeries {
        chi: path1.chi,
        times: path1.bin_centers.clone(),
        values: v1.iter().zip(&v2).map(|(a, b)| a + b).collect(),
        sigmas: s1.iter().zip(&s2).map(|(a, b)| a.hypot(*b)).collect(),
    })
}

/// Removes the incoherent contribution from the measured intensity:
/// `I_corr = (I_m − (1 − η)(I1 + I2)) / η`, with variances combined in
/// quadrature.
pub fn correct_intensity(
    measured: &BinnedCounts,
    path1: &BinnedCounts,
    path2: &BinnedCounts,
    eta: f64,
) -> Result<TimeSeries, AnalysisError> {
    correct_intensity_with_min(measured, path1, path2, eta, DEFAULT_ETA_MIN)
}

pub fn correct_intensity_with_min(
    measured: &BinnedCounts,
    path1: &BinnedCounts,
    path2: &BinnedCounts,
    eta: f64,
    eta_min: f64,
) -> Result<TimeSeries, AnalysisError> {
    if !eta.is_finite() || eta > 1.5 {
        return Err(AnalysisError::InvalidVisibility(eta));
    }
    if eta <= eta_min {
        return Err(AnalysisError::VisibilityZero { eta, eta_min });
    }
    aligned(measured, path1)?;
    let inc = incoherent_series(path1, path2)?;
    let m = measured.normalized();
    let sm = measured.normalized_sigma();
    let q = 1.0 - eta;
    let values: Vec<f64> = m.iter().zip(&inc.values).map(|(m, s)| (m - q * s) / eta).collect();
    let sigmas: Vec<f64> = sm
        .iter()
        .zip(&inc.sigmas)
        .map(|(a, b)| a.hypot(q * b) / eta)
        .collect();
    Ok(TimeSeries {
        chi: measured.chi,
        times: measured.bin_centers.clone(),
        values,
        sigmas,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::campaign::{Channel, ExperimentConfig};
    use crate::interferometer::ideal_intensity;
    use approx::assert_abs_diff_eq;

    fn noiseless(cfg: &ExperimentConfig, chi: f64, ch: Channel) -> BinnedCounts {
        BinnedCounts::expected(cfg, chi, ch)
    }

    #[test]
    fn eta_one_returns_measured() {
        let cfg = ExperimentConfig::default();
        let m = noiseless(&cfg, 0.7, Channel::Modulated);
        let out = correct_intensity(
            &m,
            &noiseless(&cfg, 0.7, Channel::Path1Only),
            &noiseless(&cfg, 0.7, Channel::Path2Only),
            1.0,
        )
        .unwrap();
        for (a, b) in out.values.iter().zip(m.normalized()) {
            assert_abs_diff_eq!(*a, b, epsilon = 1e-15);
        }
    }

    #[test]
    fn recovers_ideal_intensity() {
        let cfg = ExperimentConfig::default();
        for &chi in &cfg.chi_grid {
            let out = correct_intensity(
                &noiseless(&cfg, chi, Channel::Modulated),
                &noiseless(&cfg, chi, Channel::Path1Only),
                &noiseless(&cfg, chi, Channel::Path2Only),
                cfg.protocol.eta,
            )
            .unwrap();
            for (v, t) in out.values.iter().zip(&out.times) {
                let ideal = ideal_intensity(chi, *t, &cfg.protocol);
                assert_abs_diff_eq!(*v, ideal, epsilon = 1e-12);
            }
        }
    }

    #[test]
    fn tiny_visibility_is_refused() {
        let cfg = ExperimentConfig::default();
        let m = noiseless(&cfg, 0.0, Channel::Modulated);
        let p1 = noiseless(&cfg, 0.0, Channel::Path1Only);
        let p2 = noiseless(&cfg, 0.0, Channel::Path2Only);
        assert!(matches!(
            correct_intensity(&m, &p1, &p2, 0.01),
            Err(AnalysisError::VisibilityZero { .. })
        ));
    }

    #[test]
    fn misaligned_bins_are_refused() {
        let cfg = ExperimentConfig::default();
        let m = noiseless(&cfg, 0.0, Channel::Modulated);
        let mut p1 = noiseless(&cfg, 0.0, Channel::Path1Only);
        p1.bin_centers[2] *= 1.01;
        let p2 = noiseless(&cfg, 0.0, Channel::Path2Only);
        assert!(matches!(
            correct_intensity(&m, &p1, &p2, 0.79),
            Err(AnalysisError::BinMismatch(_))
        ));
    }
}
