#[allow(unused_imports)]
use num_traits::Float;
use alloc::format;
use alloc::vec::Vec;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use super::lsq::quad_form;
use super::{AnalysisError, ProbabilityEstimate, SinusoidFit};
use crate::campaign::same_phase;

/// Per-χ input to the reconstruction.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct WeakValueInput {
    pub chi: f64,
    /// Fit of the visibility-corrected modulated series.
    pub fit: SinusoidFit,
    /// `∂(offset, sin, cos)/∂η` of that fit.
    pub eta_derivative: [f64; 3],
    /// Post-selection probability onto `|+x⟩`.
    pub postselection: ProbabilityEstimate,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ReconstructionParams {
    pub alpha: f64,
    pub alpha_rel_sys: f64,
    pub p_min: f64,
    pub reference_chi: f64,
    pub sigma_eta: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct WeakValueEstimate {
    pub chi: f64,
    pub re: f64,
    pub im: f64,
    pub sigma_re: f64,
    pub sigma_im: f64,
    pub errors: WeakValueErrors,
    pub postselection_prob: f64,
    pub excluded: bool,
}

impl WeakValueEstimate {
    pub fn value(&self) -> Complex64 {
        Complex64::new(self.re, self.im)
    }
}

/// Phase of the reference fit together with its uncertainty.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ReferencePhase {
    pub phase: f64,
    pub variance: f64,
    /// `∂phase/∂η`.
    pub eta_derivative: f64,
}

impl ReferencePhase {
    pub fn from_fit(fit: &SinusoidFit, eta_derivative: [f64; 3]) -> Self {
        let (a, b) = (fit.sin_coeff, fit.cos_coeff);
        let r2 = a * a + b * b;
        Self {
            phase: fit.phase,
            variance: fit.phase_variance(),
            eta_derivative: if r2 > 0.0 {
                (a * eta_derivative[2] - b * eta_derivative[1]) / r2
            } else {
                0.0
            },
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ErrorInputs {
    pub alpha: f64,
    pub alpha_rel_sys: f64,
    pub sigma_eta: f64,
    pub eta_derivative: [f64; 3],
    /// `None` when the point is the reference itself.
    pub reference: Option<ReferencePhase>,
}

/// One-sigma uncertainties, split into statistical (fit covariance,
/// reference phase, visibility) and systematic (α calibration) parts.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct WeakValueErrors {
    pub stat_re: f64,
    pub stat_im: f64,
    pub sys_re: f64,
    pub sys_im: f64,
}

impl WeakValueErrors {
    pub fn total_re(&self) -> f64 {
        self.stat_re.hypot(self.sys_re)
    }

    pub fn total_im(&self) -> f64 {
        self.stat_im.hypot(self.sys_im)
    }
}

/// `(a + i b) / (offset·α) · e^{−iφ_ref}`.
pub fn weak_value_from_fit(fit: &SinusoidFit, alpha: f64, reference_phase: f64) -> Complex64 {
    Complex64::new(fit.sin_coeff, fit.cos_coeff) / (fit.offset * alpha) * Complex64::cis(-reference_phase)
}

/// First-order propagation of the fit covariance, the reference-phase
/// variance and σ_η into `(Re w, Im w)`, plus the relative α systematic.
pub fn propagate_errors(fit: &SinusoidFit, inputs: &ErrorInputs) -> WeakValueErrors {
    let [c, a, b] = fit.coefficients();
    let alpha = inputs.alpha;
    let ca = c * alpha;
    let (ref_phase, ref_var, ref_deta) = match inputs.reference {
        Some(r) => (r.phase, r.variance, r.eta_derivative),
        None => (fit.phase, 0.0, 0.0),
    };
    let w = weak_value_from_fit(fit, alpha, ref_phase);
    let (re, im) = (w.re, w.im);
    let (s, co) = ref_phase.sin_cos();

    let (g_re, g_im) = if inputs.reference.is_some() {
        ([-re / c, co / ca, s / ca], [-im / c, -s / ca, co / ca])
    } else {
        // the point defines its own phase: re = A/(cα), im ≡ 0
        let amp = a.hypot(b);
        let g = if amp > 0.0 {
            [-re / c, a / (amp * ca), b / (amp * ca)]
        } else {
            [-re / c, 0.0, 0.0]
        };
        (g, [0.0; 3])
    };

    let dot = |g: [f64; 3], v: [f64; 3]| g[0] * v[0] + g[1] * v[1] + g[2] * v[2];
    let de = inputs.eta_derivative;
    let dre_deta = dot(g_re, de) + im * ref_deta;
    let dim_deta = dot(g_im, de) - re * ref_deta;
    let var_re = quad_form(&fit.covariance, g_re) + im * im * ref_var + (dre_deta * inputs.sigma_eta).powi(2);
    let var_im = quad_form(&fit.covariance, g_im) + re * re * ref_var + (dim_deta * inputs.sigma_eta).powi(2);

    WeakValueErrors {
        stat_re: var_re.max(0.0).sqrt(),
        stat_im: var_im.max(0.0).sqrt(),
        sys_re: inputs.alpha_rel_sys * re.abs(),
        sys_im: inputs.alpha_rel_sys * im.abs(),
    }
}

/// Turns per-χ fits into weak values whose phase is referenced to the fit
/// at `reference_chi`. Points with post-selection probability below
/// `p_min` are kept but flagged `excluded`.
pub fn reconstruct_weak_value(
    inputs: &[WeakValueInput],
    params: &ReconstructionParams,
) -> Result<Vec<WeakValueEstimate>, AnalysisError> {
    let reference = inputs
        .iter()
        .find(|x| same_phase(x.chi, params.reference_chi))
        .ok_or_else(|| AnalysisError::MissingReference {
            chi: params.reference_chi,
            reason: "not in the sweep".into(),
        })?;
    if reference.postselection.p < params.p_min {
        return Err(AnalysisError::MissingReference {
            chi: params.reference_chi,
            reason: format!("post-selection probability {} below {}", reference.postselection.p, params.p_min),
        });
    }
    if !(reference.fit.offset > 0.0 && reference.fit.amplitude > 0.0) {
        return Err(AnalysisError::MissingReference {
            chi: params.reference_chi,
            reason: "reference fit has no modulation".into(),
        });
    }
    let ref_phase = ReferencePhase::from_fit(&reference.fit, reference.eta_derivative);

    let mut out: Vec<WeakValueEstimate> = inputs
        .iter()
        .map(|x| {
            let is_ref = same_phase(x.chi, params.reference_chi);
            let phase = if is_ref { x.fit.phase } else { ref_phase.phase };
            let mut w = weak_value_from_fit(&x.fit, params.alpha, phase);
            if is_ref {
                w.im = 0.0;
            }
            let errors = propagate_errors(
                &x.fit,
                &ErrorInputs {
                    alpha: params.alpha,
                    alpha_rel_sys: params.alpha_rel_sys,
                    sigma_eta: params.sigma_eta,
                    eta_derivative: x.eta_derivative,
                    reference: (!is_ref).then_some(ref_phase),
                },
            );
            let finite = w.re.is_finite() && w.im.is_finite() && x.fit.offset > 0.0;
            let excluded = x.postselection.p < params.p_min || !finite;
            let (re, im, errors) = if finite {
                (w.re, w.im, errors)
            } else {
                (0.0, 0.0, WeakValueErrors::default())
            };
            WeakValueEstimate {
                chi: x.chi,
                re,
                im,
                sigma_re: errors.total_re(),
                sigma_im: errors.total_im(),
                errors,
                postselection_prob: x.postselection.p,
                excluded,
            }
        })
        .collect();
    out.sort_by(|a, b| a.chi.total_cmp(&b.chi));
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;
    use core::f64::consts::{FRAC_PI_2, PI};

    fn fit_for(w: Complex64, offset: f64, alpha: f64, rot: f64, var: f64) -> SinusoidFit {
        let z = w * offset * alpha * Complex64::cis(rot);
        SinusoidFit {
            offset,
            amplitude: z.norm(),
            phase: z.arg(),
            sin_coeff: z.re,
            cos_coeff: z.im,
            covariance: [[var, 0.0, 0.0], [0.0, var, 0.0], [0.0, 0.0, var]],
            reduced_chi2: 1.0,
            n_points: 8,
        }
    }

    fn theory(chi: f64) -> Complex64 {
        Complex64::new(1.0, 0.0) / (Complex64::cis(chi) + 1.0)
    }

    fn input(chi: f64, rot: f64, var: f64) -> WeakValueInput {
        let p = (1.0 + chi.cos()) / 2.0;
        WeakValueInput {
            chi,
            fit: fit_for(theory(chi), 0.5 * p, 0.35, rot, var),
            eta_derivative: [0.0; 3],
            postselection: ProbabilityEstimate { chi, p, sigma: 0.0 },
        }
    }

    fn params() -> ReconstructionParams {
        ReconstructionParams {
            alpha: 0.35,
            alpha_rel_sys: 0.0,
            p_min: 0.01,
            reference_chi: 0.0,
            sigma_eta: 0.0,
        }
    }

    #[test]
    fn reference_rotation_is_removed() {
        let inputs: Vec<_> = [0.0, 1.0, FRAC_PI_2, 2.0].iter().map(|&c| input(c, 0.4, 0.0)).collect();
        let out = reconstruct_weak_value(&inputs, &params()).unwrap();
        for e in &out {
            assert_abs_diff_eq!(e.re, theory(e.chi).re, epsilon = 1e-12);
            assert_abs_diff_eq!(e.im, theory(e.chi).im, epsilon = 1e-12);
        }
        assert_abs_diff_eq!(out[0].re, 0.5, epsilon = 1e-12);
    }

    #[test]
    fn orthogonal_point_is_flagged() {
        let mut inputs: Vec<_> = [0.0, 1.0, 2.0].iter().map(|&c| input(c, 0.0, 1e-8)).collect();
        let mut pi = input(0.5, 0.0, 1e-8);
        pi.chi = PI;
        pi.postselection.p = 0.0;
        inputs.push(pi);
        let out = reconstruct_weak_value(&inputs, &params()).unwrap();
        assert!(out.iter().find(|e| e.chi == PI).unwrap().excluded);
        assert_eq!(out.iter().filter(|e| e.excluded).count(), 1);
    }

    #[test]
    fn missing_reference() {
        let inputs: Vec<_> = [1.0, 2.0].iter().map(|&c| input(c, 0.0, 0.0)).collect();
        assert!(matches!(
            reconstruct_weak_value(&inputs, &params()),
            Err(AnalysisError::MissingReference { .. })
        ));
    }

    #[test]
    fn zero_inputs_give_zero_errors() {
        let x = input(1.0, 0.2, 0.0);
        let e = propagate_errors(
            &x.fit,
            &ErrorInputs {
                alpha: 0.35,
                alpha_rel_sys: 0.0,
                sigma_eta: 0.0,
                eta_derivative: [0.1, 0.2, 0.3],
                reference: Some(ReferencePhase { phase: 0.2, variance: 0.0, eta_derivative: 0.5 }),
            },
        );
        assert_eq!(e, WeakValueErrors::default());
    }

    #[test]
    fn alpha_systematic_is_relative() {
        let x = input(1.0, 0.0, 0.0);
        let e = propagate_errors(
            &x.fit,
            &ErrorInputs {
                alpha: 0.35,
                alpha_rel_sys: 0.02,
                sigma_eta: 0.0,
                eta_derivative: [0.0; 3],
                reference: Some(ReferencePhase { phase: 0.0, variance: 0.0, eta_derivative: 0.0 }),
            },
        );
        let w = theory(1.0);
        assert_abs_diff_eq!(e.sys_re.hypot(e.sys_im), 0.02 * w.norm(), epsilon = 1e-14);
    }

    #[test]
    fn reference_point_has_no_imaginary_error() {
        let x = input(0.0, 0.3, 1e-6);
        let e = propagate_errors(
            &x.fit,
            &ErrorInputs {
                alpha: 0.35,
                alpha_rel_sys: 0.0,
                sigma_eta: 0.01,
                eta_derivative: [0.1, 0.2, 0.3],
                reference: None,
            },
        );
        assert_eq!(e.stat_im, 0.0);
        assert!(e.stat_re > 0.0);
    }
}
