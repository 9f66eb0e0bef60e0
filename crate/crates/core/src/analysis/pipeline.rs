use alloc::format;
use alloc::vec::Vec;

use serde::{Deserialize, Serialize};

use super::{
    correct_intensity_with_min, extract_visibility, fit_sinusoid, fringe_scan, incoherent_series,
    postselection_probabilities, reconstruct_weak_value, verify_commutator, AnalysisError, AnalysisParams,
    CommutatorReport, ProbabilityEstimate, ReconstructionParams, SinusoidFit, TimeSeries, VisibilityEstimate,
    WeakValueEstimate, WeakValueInput,
};
use crate::campaign::{same_phase, BinnedCounts, Channel};

/// Fit of the corrected modulated series at one χ.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ChiFit {
    pub chi: f64,
    pub fit: SinusoidFit,
    pub corrected: TimeSeries,
}

/// Everything the reduction chain produces for one campaign.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CampaignAnalysis {
    pub params: AnalysisParams,
    pub visibility: VisibilityEstimate,
    pub postselection_x: Vec<ProbabilityEstimate>,
    pub postselection_y: Vec<ProbabilityEstimate>,
    pub fits: Vec<ChiFit>,
    pub weak_values: Vec<WeakValueEstimate>,
}

impl CampaignAnalysis {
    pub fn verify(&self) -> Result<CommutatorReport, AnalysisError> {
        verify_commutator(&self.weak_values, &self.postselection_x, &self.postselection_y)
    }
}

struct Setting<'a> {
    chi: f64,
    by_channel: [Option<&'a BinnedCounts>; 5],
}

fn group(data: &[BinnedCounts]) -> Result<Vec<Setting<'_>>, AnalysisError> {
    let mut settings: Vec<Setting<'_>> = Vec::new();
    for d in data {
        d.check()
            .map_err(|e| AnalysisError::BinMismatch(format!("{} at χ={}: {e}", d.channel, d.chi)))?;
        let slot = match settings.iter_mut().find(|s| same_phase(s.chi, d.chi)) {
            Some(s) => s,
            None => {
                settings.push(Setting {
                    chi: d.chi,
                    by_channel: [None; 5],
                });
                settings.last_mut().unwrap()
            }
        };
        let cell = &mut slot.by_channel[d.channel.index()];
        if cell.is_some() {
            return Err(AnalysisError::ChannelMismatch(format!(
                "{} at χ={} appears twice",
                d.channel, d.chi
            )));
        }
        *cell = Some(d);
    }
    settings.sort_by(|a, b| a.chi.total_cmp(&b.chi));

    let missing: Vec<(f64, Channel)> = settings
        .iter()
        .flat_map(|s| {
            Channel::ALL
                .iter()
                .filter(|c| s.by_channel[c.index()].is_none())
                .map(|&c| (s.chi, c))
                .collect::<Vec<_>>()
        })
        .collect();
    if !missing.is_empty() {
        return Err(AnalysisError::MissingChannels(missing));
    }
    if settings.len() < 3 {
        return Err(AnalysisError::InsufficientData {
            needed: 3,
            got: settings.len(),
        });
    }
    Ok(settings)
}

/// Visibility from the `|+x⟩` empty channel, incoherence correction and a
/// sine fit per χ, then weak values referenced to `params.reference_chi`.
pub fn analyze_campaign(data: &[BinnedCounts], params: &AnalysisParams) -> Result<CampaignAnalysis, AnalysisError> {
    let settings = group(data)?;
    let scan_x = fringe_scan(data, Channel::EmptyX);
    let scan_y = fringe_scan(data, Channel::EmptyY);
    let visibility = extract_visibility(&scan_x)?;
    let eta = visibility.eta;
    if !(eta > params.eta_min) {
        return Err(AnalysisError::VisibilityZero {
            eta,
            eta_min: params.eta_min,
        });
    }
    let postselection_x = postselection_probabilities(&scan_x, &visibility);
    let postselection_y = postselection_probabilities(&scan_y, &visibility);

    let mut fits = Vec::with_capacity(settings.len());
    let mut inputs = Vec::with_capacity(settings.len());
    for s in &settings {
        let get = |c: Channel| s.by_channel[c.index()].expect("grouped");
        let (m, p1, p2) = (get(Channel::Modulated), get(Channel::Path1Only), get(Channel::Path2Only));
        let corrected = correct_intensity_with_min(m, p1, p2, eta, params.eta_min)?;
        let fit = fit_sinusoid(&corrected, params.omega, params.delta)?;

        // the corrected series is linear in 1/η, so is its fit
        let inc = incoherent_series(p1, p2)?;
        let inc_fit = fit_sinusoid(&corrected.with_values(inc.values), params.omega, params.delta)?;
        let by = fit.coefficients();
        let bs = inc_fit.coefficients();
        let eta_derivative = [0, 1, 2].map(|i| -(by[i] - bs[i]) / eta);

        let postselection = *postselection_x
            .iter()
            .find(|p| same_phase(p.chi, s.chi))
            .expect("grouped");
        inputs.push(WeakValueInput {
            chi: s.chi,
            fit,
            eta_derivative,
            postselection,
        });
        fits.push(ChiFit {
            chi: s.chi,
            fit,
            corrected,
        });
    }

    let weak_values = reconstruct_weak_value(
        &inputs,
        &ReconstructionParams {
            alpha: params.alpha,
            alpha_rel_sys: params.alpha_rel_sys,
            p_min: params.p_min,
            reference_chi: params.reference_chi,
            sigma_eta: visibility.sigma_eta,
        },
    )?;

    Ok(CampaignAnalysis {
        params: *params,
        visibility,
        postselection_x,
        postselection_y,
        fits,
        weak_values,
    })
}
