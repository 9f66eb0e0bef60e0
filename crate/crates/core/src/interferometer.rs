//! Forward model of the triple-Laue interferometer protocol.
//!
//! Path qubit pre-selected in `(|I⟩ + e^{iχ}|II⟩)/√2`, spin prepared in
//! `|↑z⟩`, an RF spin rotator of strength `α` driven at frequency `ω` in
//! path I, post-selection on `|+x⟩` at the third plate and spin analysis
//! in the O beam.
//!
//! All RF phases are `θ(t) = 2πωt + δ` with `ω` an ordinary frequency in Hz.

#[allow(unused_imports)]
use num_traits::Float;
use core::f64::consts::{FRAC_PI_2, PI, TAU};

use nalgebra::Vector4;
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::qubit::{Operator2, Operator4, QubitState};

/// Physical knobs of a single protocol setting (the path phase `χ` is
/// passed separately).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ProtocolParams {
    /// Spin-rotation angle of the RF flipper, rad.
    pub alpha: f64,
    /// RF drive frequency, Hz.
    pub omega: f64,
    /// RF phase offset, rad.
    pub delta: f64,
    /// Fringe visibility.
    pub eta: f64,
}

impl Default for ProtocolParams {
    fn default() -> Self {
        Self {
            alpha: PI / 9.0,
            omega: 60e3,
            delta: 0.0,
            eta: 0.79,
        }
    }
}

impl ProtocolParams {
    /// Returns the name of the first field that violates its range.
    pub fn check(&self) -> Result<(), (&'static str, &'static str)> {
        if !(self.alpha.is_finite() && (0.0..PI).contains(&self.alpha)) {
            return Err(("protocol.alpha", "must lie in [0, π)"));
        }
        if !(self.omega.is_finite() && self.omega > 0.0) {
            return Err(("protocol.omega", "must be positive"));
        }
        if !self.delta.is_finite() {
            return Err(("protocol.delta", "must be finite"));
        }
        if !(self.eta.is_finite() && (0.0..=1.0).contains(&self.eta)) {
            return Err(("protocol.eta", "must lie in [0, 1]"));
        }
        Ok(())
    }

    /// RF phase `2πωt + δ`.
    pub fn rf_phase(&self, t: f64) -> f64 {
        TAU * self.omega * t + self.delta
    }

    pub fn period(&self) -> f64 {
        1.0 / self.omega
    }
}

/// Spin analyzer setting; each maps to a rank-1 projector.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum SpinChannel {
    UpX,
    DownX,
    UpY,
    DownY,
    UpZ,
    DownZ,
}

impl SpinChannel {
    pub fn state(self) -> QubitState {
        match self {
            SpinChannel::UpX => QubitState::plus_x(),
            SpinChannel::DownX => QubitState::minus_x(),
            SpinChannel::UpY => QubitState::plus_y(),
            SpinChannel::DownY => QubitState::minus_y(),
            SpinChannel::UpZ => QubitState::plus_z(),
            SpinChannel::DownZ => QubitState::minus_z(),
        }
    }

    pub fn projector(self) -> Operator2 {
        self.state().projector()
    }
}

/// Joint path ⊗ spin amplitudes, ordered `(I↑, I↓, II↑, II↓)`. Not
/// necessarily normalized: post-selection only ever shrinks the norm.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PathSpinState(Vector4<Complex64>);

impl PathSpinState {
    pub fn product(path: &QubitState, spin: &QubitState) -> Self {
        Self::from_amplitudes(path.amplitudes(), spin.amplitudes())
    }

    /// Product of raw (possibly unnormalized) path and spin amplitudes.
    pub fn from_amplitudes(path: [Complex64; 2], spin: [Complex64; 2]) -> Self {
        Self(Vector4::new(
            path[0] * spin[0],
            path[0] * spin[1],
            path[1] * spin[0],
            path[1] * spin[1],
        ))
    }

    pub fn amplitudes(&self) -> [Complex64; 4] {
        [self.0[0], self.0[1], self.0[2], self.0[3]]
    }

    pub fn norm_sqr(&self) -> f64 {
        self.0.iter().map(|c| c.norm_sqr()).sum()
    }
}

impl Operator4 {
    pub fn apply(&self, state: &PathSpinState) -> PathSpinState {
        PathSpinState(self.0 * state.0)
    }
}

/// Pre-selected path state `(|I⟩ + e^{iχ}|II⟩)/√2`.
pub fn preselect(chi: f64) -> QubitState {
    QubitState::equal_superposition(chi)
}

/// RF spin rotator `exp(−i(α/2)(cos θ σx + sin θ σy))`, `θ = 2πωt + δ`:
///
/// ```text
/// ⎛ cos(α/2)              −i sin(α/2) e^{−iθ} ⎞
/// ⎝ −i sin(α/2) e^{+iθ}    cos(α/2)           ⎠
/// ```
///
/// The spin-flipped component of `|↑z⟩` picks up `e^{+iθ}`, which is what
/// makes the O-detector signal carry `Im(⟨Π1⟩_w e^{iθ})` at first order.
pub fn rf_unitary(t: f64, params: &ProtocolParams) -> Operator2 {
    let theta = params.rf_phase(t);
    let (s, c) = (params.alpha / 2.0).sin_cos();
    let minus_i = Complex64::new(0.0, -1.0);
    Operator2::from_rows([
        [Complex64::from(c), minus_i * Complex64::from_polar(s, -theta)],
        [minus_i * Complex64::from_polar(s, theta), Complex64::from(c)],
    ])
}

/// `Π1 ⊗ U_RF(t) + Π2 ⊗ 𝟙`.
pub fn interaction_unitary(t: f64, params: &ProtocolParams) -> Operator4 {
    let p1 = QubitState::zero().projector();
    let p2 = QubitState::one().projector();
    p1.tensor(&rf_unitary(t, params)) + p2.tensor(&Operator2::identity())
}

/// Unnormalized state after interaction, path post-selection on `|+x⟩`
/// and spin analysis, for arbitrary path amplitudes (lets a blocked path
/// be modelled by a zero amplitude).
pub fn detector_state(
    path: [Complex64; 2],
    t: f64,
    params: &ProtocolParams,
    channel: SpinChannel,
) -> PathSpinState {
    let up = QubitState::plus_z().amplitudes();
    let psi = PathSpinState::from_amplitudes(path, up);
    let post = QubitState::plus_x().projector().tensor(&channel.projector());
    (post * interaction_unitary(t, params)).apply(&psi)
}

/// `|P_spin (Π_f ⊗ 𝟙) U_int(t) (|ψ_i(χ)⟩ ⊗ |↑z⟩)|²` without any small-α
/// truncation.
pub fn exact_intensity(chi: f64, t: f64, params: &ProtocolParams, channel: SpinChannel) -> f64 {
    detector_state(preselect(chi).amplitudes(), t, params, channel).norm_sqr()
}

/// First-order O-detector intensity
/// `½|⟨+x|ψ_i⟩|² (1 + α Im(⟨Π1⟩_w e^{iθ}))`.
///
/// Written as `½(p + α Im(q e^{iθ}))` with `q = ⟨ψ_i|+x⟩⟨+x|Π1|ψ_i⟩ = p·w`,
/// which stays finite at `χ = π` where the weak value itself diverges.
/// Being a truncation, it dips slightly below zero where `p < α²/4`.
pub fn ideal_intensity(chi: f64, t: f64, params: &ProtocolParams) -> f64 {
    let psi = preselect(chi);
    let plus = QubitState::plus_x();
    let overlap = plus.inner(&psi);
    let p = overlap.norm_sqr();
    let q = overlap.conj() * QubitState::zero().projector().matrix_element(&plus, &psi);
    let modulation = (q * Complex64::cis(params.rf_phase(t))).im;
    0.5 * (p + params.alpha * modulation)
}

/// Intensities of the isolated paths, `(I1(t), I2)`:
/// `I1 = ⅛(1 + α sin θ)`, `I2 = ⅛`.
pub fn isolated_path_intensities(t: f64, params: &ProtocolParams) -> (f64, f64) {
    let i1 = (1.0 + params.alpha * params.rf_phase(t).sin()) / 8.0;
    (i1, 0.125)
}

/// Visibility-degraded intensity `η I_ideal + (1 − η)(I1 + I2)`.
pub fn real_intensity(chi: f64, t: f64, params: &ProtocolParams) -> f64 {
    let (i1, i2) = isolated_path_intensities(t, params);
    params.eta * ideal_intensity(chi, t, params) + (1.0 - params.eta) * (i1 + i2)
}

/// Normalized empty-interferometer intensity `½(1 + η cos(χ − φ))`:
/// the probability of post-selecting `(|I⟩ + e^{iφ}|II⟩)/√2` at reduced
/// contrast. `φ = 0` gives `|⟨+x|ψ_i⟩|²`, `φ = π/2` gives `|⟨+y|ψ_i⟩|²`.
pub fn empty_interferogram(chi: f64, eta: f64, extra_phase: f64) -> f64 {
    0.5 * (1.0 + eta * (chi - extra_phase).cos())
}

/// Phase shift that turns the empty interferogram into the `|+y⟩` channel.
pub const Y_CHANNEL_PHASE: f64 = FRAC_PI_2;

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;
    use core::f64::consts::FRAC_PI_3;

    fn params(alpha: f64) -> ProtocolParams {
        ProtocolParams {
            alpha,
            ..ProtocolParams::default()
        }
    }

    #[test]
    fn preselect_examples() {
        let a = preselect(0.0).amplitudes();
        let b = QubitState::plus_x().amplitudes();
        assert_abs_diff_eq!((a[0] - b[0]).norm() + (a[1] - b[1]).norm(), 0.0, epsilon = 1e-15);
        let a = preselect(FRAC_PI_2).amplitudes();
        let b = QubitState::plus_y().amplitudes();
        assert_abs_diff_eq!((a[0] - b[0]).norm() + (a[1] - b[1]).norm(), 0.0, epsilon = 1e-15);
        assert_abs_diff_eq!(QubitState::plus_x().inner(&preselect(PI)).norm(), 0.0, epsilon = 1e-15);
    }

    #[test]
    fn rf_unitary_examples() {
        let u = rf_unitary(1.3e-5, &params(0.0));
        assert!(u.max_abs_diff(&Operator2::identity()) <= 1e-15);

        let u = rf_unitary(0.0, &params(PI - 1e-15));
        assert_abs_diff_eq!(u.get(0, 0).norm(), 0.0, epsilon = 1e-14);
        assert_abs_diff_eq!(u.get(0, 1).im, -1.0, epsilon = 1e-14);
        assert_abs_diff_eq!(u.get(1, 0).im, -1.0, epsilon = 1e-14);

        for k in 0..50 {
            let p = ProtocolParams {
                alpha: 0.06 * k as f64,
                delta: 0.3 * k as f64,
                ..ProtocolParams::default()
            };
            assert!(rf_unitary(k as f64 * 1.7e-6, &p).is_unitary(1e-12));
        }
    }

    #[test]
    fn rf_unitary_small_alpha_limit() {
        // 𝟙 − i(α/2)(cos θ σx + sin θ σy) + O(α²)
        let p = params(1e-4);
        let t = 3.3e-6;
        let theta = p.rf_phase(t);
        let gen = Operator2::pauli_x() * Complex64::from(theta.cos())
            + Operator2::pauli_y() * Complex64::from(theta.sin());
        let approx = Operator2::identity() - gen * Complex64::new(0.0, p.alpha / 2.0);
        assert!(rf_unitary(t, &p).max_abs_diff(&approx) < 1e-8);
    }

    #[test]
    fn interaction_unitary_examples() {
        assert!(interaction_unitary(2e-6, &params(0.0)).max_abs_diff(&Operator4::identity()) <= 1e-15);
        let u = interaction_unitary(5e-6, &params(0.9));
        assert!(u.is_unitary(1e-12));
        let path_two = PathSpinState::product(&QubitState::one(), &QubitState::from_bloch(0.4, 1.0));
        let out = u.apply(&path_two);
        for (a, b) in out.amplitudes().iter().zip(path_two.amplitudes()) {
            assert_abs_diff_eq!((a - b).norm(), 0.0, epsilon = 1e-15);
        }
    }

    #[test]
    fn exact_intensity_without_rf() {
        let p = params(0.0);
        // ½ from the spin analysis of |↑z⟩ along x, times |⟨+x|ψ_i(0)⟩|² = 1
        assert_abs_diff_eq!(exact_intensity(0.0, 0.0, &p, SpinChannel::UpX), 0.5, epsilon = 1e-15);
        for &chi in &[0.3, 1.9, 4.0] {
            let i0 = exact_intensity(chi, 0.0, &p, SpinChannel::UpX);
            for k in 1..10 {
                let t = k as f64 * 1.1e-6;
                assert_abs_diff_eq!(exact_intensity(chi, t, &p, SpinChannel::UpX), i0, epsilon = 1e-15);
            }
            assert_abs_diff_eq!(i0, 0.25 * (1.0 + chi.cos()), epsilon = 1e-15);
        }
    }

    #[test]
    fn exact_channels_sum_to_path_postselected_norm() {
        let p = params(0.8);
        for &chi in &[0.0, 1.0, 2.5] {
            let t = 4.2e-6;
            let sum = exact_intensity(chi, t, &p, SpinChannel::UpX) + exact_intensity(chi, t, &p, SpinChannel::DownX);
            let sum_z = exact_intensity(chi, t, &p, SpinChannel::UpZ) + exact_intensity(chi, t, &p, SpinChannel::DownZ);
            assert_abs_diff_eq!(sum, sum_z, epsilon = 1e-14);
            assert!(sum <= 1.0 + 1e-12);
        }
    }

    #[test]
    fn exact_tracks_ideal_quadratically_at_pi_over_three() {
        // |exact − ideal| ≤ C α² uniformly in t
        for alpha in [PI / 9.0, PI / 18.0, PI / 36.0] {
            let p = params(alpha);
            let gap = (0..400)
                .map(|k| {
                    let t = k as f64 / 400.0 * p.period();
                    (exact_intensity(FRAC_PI_3, t, &p, SpinChannel::UpX) - ideal_intensity(FRAC_PI_3, t, &p)).abs()
                })
                .fold(0.0, f64::max);
            assert!(gap <= 0.03 * alpha * alpha, "alpha={alpha} gap={gap}");
        }
    }

    #[test]
    fn ideal_intensity_examples() {
        let p = params(PI / 9.0);
        for k in 0..16 {
            let t = k as f64 / 16.0 * p.period();
            let theta = TAU * p.omega * t;
            let expected = 0.5 * (1.0 + PI / 18.0 * theta.sin());
            assert_abs_diff_eq!(ideal_intensity(0.0, t, &p), expected, epsilon = 1e-15);
        }
        let flat = params(0.0);
        assert_abs_diff_eq!(ideal_intensity(1.2, 3e-6, &flat), 0.25 * (1.0 + 1.2f64.cos()), epsilon = 1e-15);
        // time average over a period (exact for a sinusoid sampled on ≥3 equispaced points)
        for &chi in &[0.5, 2.0, 4.4] {
            let n = 24;
            let mean: f64 = (0..n).map(|k| ideal_intensity(chi, k as f64 / n as f64 * p.period(), &p)).sum::<f64>()
                / n as f64;
            assert_abs_diff_eq!(mean, 0.25 * (1.0 + chi.cos()), epsilon = 1e-15);
        }
        assert!(ideal_intensity(PI, 1e-6, &p).abs() < 1e-16);
    }

    #[test]
    fn ideal_modulation_phase_is_weak_value_argument() {
        // sample and project onto sin/cos of θ; phase = atan2(cos-coef, sin-coef)
        let p = params(PI / 9.0);
        for &chi in &[0.7, FRAC_PI_2, 2.2, 4.0, 5.5] {
            let n = 32;
            let (mut s, mut c) = (0.0, 0.0);
            for k in 0..n {
                let t = k as f64 / n as f64 * p.period();
                let th = p.rf_phase(t);
                let y = ideal_intensity(chi, t, &p);
                s += y * th.sin();
                c += y * th.cos();
            }
            let w = Complex64::new(1.0, 0.0) / (Complex64::new(1.0, 0.0) + Complex64::cis(chi));
            assert_abs_diff_eq!(c.atan2(s), w.arg(), epsilon = 1e-12);
        }
    }

    #[test]
    fn real_intensity_examples() {
        let mut p = params(PI / 9.0);
        p.eta = 1.0;
        for k in 0..10 {
            let t = k as f64 * 1.3e-6;
            assert_abs_diff_eq!(real_intensity(1.0, t, &p), ideal_intensity(1.0, t, &p), epsilon = 1e-15);
        }
        let p0 = ProtocolParams { alpha: 0.0, eta: 0.0, ..ProtocolParams::default() };
        for k in 0..10 {
            assert_abs_diff_eq!(real_intensity(2.0, k as f64 * 1e-6, &p0), 0.25, epsilon = 1e-15);
        }
    }

    #[test]
    fn isolated_paths_match_blocked_path_model() {
        // path II blocked: amplitude only on |I⟩; path I blocked: only on |II⟩.
        let h = core::f64::consts::FRAC_1_SQRT_2;
        let zero = Complex64::new(0.0, 0.0);
        for alpha in [PI / 18.0, PI / 36.0] {
            let p = params(alpha);
            for k in 0..20 {
                let t = k as f64 / 20.0 * p.period();
                let (i1, i2) = isolated_path_intensities(t, &p);
                let e1 = detector_state([Complex64::from(h), zero], t, &p, SpinChannel::UpX).norm_sqr();
                let e2 = detector_state([zero, Complex64::from(h)], t, &p, SpinChannel::UpX).norm_sqr();
                assert!((i1 - e1).abs() <= 0.02 * alpha * alpha);
                assert_abs_diff_eq!(i2, e2, epsilon = 1e-15);
            }
        }
    }

    #[test]
    fn isolated_path_extremes() {
        let p = params(0.3);
        let (min, max) = (0..1000)
            .map(|k| isolated_path_intensities(k as f64 / 1000.0 * p.period(), &p).0)
            .fold((f64::MAX, f64::MIN), |(lo, hi), v| (lo.min(v), hi.max(v)));
        assert_abs_diff_eq!(min, (1.0 - 0.3) / 8.0, epsilon = 1e-12);
        assert_abs_diff_eq!(max, (1.0 + 0.3) / 8.0, epsilon = 1e-12);
        let (a, b) = isolated_path_intensities(7e-6, &params(0.0));
        assert_eq!((a, b), (0.125, 0.125));
    }

    #[test]
    fn empty_interferogram_examples() {
        assert_abs_diff_eq!(empty_interferogram(0.0, 1.0, 0.0), 1.0, epsilon = 1e-15);
        for k in 0..24 {
            let chi = k as f64 * TAU / 24.0;
            assert_abs_diff_eq!(
                empty_interferogram(chi, 1.0, Y_CHANNEL_PHASE),
                0.5 * (1.0 + chi.sin()),
                epsilon = 1e-15
            );
            let py = QubitState::plus_y().inner(&preselect(chi)).norm_sqr();
            assert_abs_diff_eq!(empty_interferogram(chi, 1.0, Y_CHANNEL_PHASE), py, epsilon = 1e-15);
            let px = QubitState::plus_x().inner(&preselect(chi)).norm_sqr();
            assert_abs_diff_eq!(empty_interferogram(chi, 1.0, 0.0), px, epsilon = 1e-15);
            assert_eq!(empty_interferogram(chi, 0.0, 0.3), 0.5);
        }
    }

    #[test]
    fn params_validation() {
        assert!(ProtocolParams::default().check().is_ok());
        assert_eq!(params(PI).check().unwrap_err().0, "protocol.alpha");
        let mut p = ProtocolParams::default();
        p.eta = 1.2;
        assert_eq!(p.check().unwrap_err().0, "protocol.eta");
        p.eta = 0.5;
        p.omega = 0.0;
        assert_eq!(p.check().unwrap_err().0, "protocol.omega");
    }
}
