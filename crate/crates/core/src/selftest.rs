//! Built-in consistency suite: the weak-value route to the commutator
//! against brute-force matrix arithmetic, plus the analytic identities the
//! rest of the pipeline relies on.

#[allow(unused_imports)]
use num_traits::Float;
use alloc::vec::Vec;
use core::f64::consts::{PI, TAU};

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::interferometer::{interaction_unitary, rf_unitary, ProtocolParams};
use crate::qubit::{
    commutator_expectation_direct, commutator_via_weak_value_scaled, scalar_identity_sides, weak_value,
    Operator2, QubitState, COMMUTATOR_PREFACTOR,
};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SelftestOptions {
    pub draws: usize,
    pub seed: u64,
    /// Multiplies the commutator prefactor; anything but 1 should fail.
    pub prefactor_scale: f64,
    pub tolerance: f64,
}

impl Default for SelftestOptions {
    fn default() -> Self {
        Self {
            draws: 1000,
            seed: 0x0c0f_fee0,
            prefactor_scale: 1.0,
            tolerance: 1e-12,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CheckOutcome {
    pub name: &'static str,
    pub cases: usize,
    pub max_error: f64,
    pub tolerance: f64,
    pub passed: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SelftestReport {
    pub checks: Vec<CheckOutcome>,
}

impl SelftestReport {
    pub fn passed(&self) -> bool {
        self.checks.iter().all(|c| c.passed)
    }
}

struct Tally {
    name: &'static str,
    cases: usize,
    max_error: f64,
}

impl Tally {
    fn new(name: &'static str) -> Self {
        Self {
            name,
            cases: 0,
            max_error: 0.0,
        }
    }

    fn record(&mut self, err: f64) {
        self.cases += 1;
        // NaN must fail, so don't let f64::max swallow it
        if !(err <= self.max_error) {
            self.max_error = err;
        }
    }

    fn finish(self, tolerance: f64) -> CheckOutcome {
        CheckOutcome {
            name: self.name,
            cases: self.cases,
            passed: self.cases > 0 && self.max_error <= tolerance,
            max_error: self.max_error,
            tolerance,
        }
    }
}

fn random_axis(rng: &mut ChaCha8Rng) -> (f64, f64) {
    let cos_theta: f64 = rng.random_range(-1.0..=1.0);
    let phi: f64 = rng.random_range(0.0..TAU);
    (cos_theta.acos(), phi)
}

fn random_state(rng: &mut ChaCha8Rng) -> QubitState {
    let (theta, phi) = random_axis(rng);
    QubitState::from_bloch(theta, phi).with_global_phase(rng.random_range(0.0..TAU))
}

/// Positive eigenstate of `n·σ` for the Bloch direction `(θ, φ)`, drawn
/// either from the Pauli axes or uniformly.
fn random_dichotomic(rng: &mut ChaCha8Rng) -> QubitState {
    match rng.random_range(0..4u8) {
        0 => QubitState::plus_x(),
        1 => QubitState::plus_y(),
        2 => QubitState::plus_z(),
        _ => {
            let (theta, phi) = random_axis(rng);
            QubitState::from_bloch(theta, phi)
        }
    }
}

fn axis_of(theta: f64, phi: f64) -> [f64; 3] {
    [theta.sin() * phi.cos(), theta.sin() * phi.sin(), theta.cos()]
}

pub fn run_selftest(opts: &SelftestOptions) -> SelftestReport {
    let tol = opts.tolerance;
    let mut rng = ChaCha8Rng::seed_from_u64(opts.seed);
    let one = Operator2::identity();
    let two = Complex64::new(2.0, 0.0);
    let mut checks = Vec::new();

    // ⟨[2Π_A − 𝟙, 2Π_B − 𝟙]⟩ both ways
    let mut oracle = Tally::new("oracle_equivalence");
    let mut antisym = Tally::new("antisymmetry");
    let mut imag = Tally::new("hermitian_commutator_is_imaginary");
    let prefactor = COMMUTATOR_PREFACTOR * opts.prefactor_scale;
    let mut attempts = 0;
    while oracle.cases < opts.draws && attempts < 10 * opts.draws.max(1) {
        attempts += 1;
        let psi = random_state(&mut rng);
        let a_state = random_dichotomic(&mut rng);
        let b_state = random_dichotomic(&mut rng);
        let (pa, pb) = (a_state.projector(), b_state.projector());
        let a = pa * two - one;
        let b = pb * two - one;
        let Ok(via) = commutator_via_weak_value_scaled(&psi, &pa, &b_state, prefactor) else {
            continue;
        };
        let direct = commutator_expectation_direct(&a, &b, &psi);
        oracle.record((via - direct).norm());
        antisym.record((direct + commutator_expectation_direct(&b, &a, &psi)).norm());
        imag.record(direct.re.abs());
    }
    checks.push(oracle.finish(tol));
    checks.push(antisym.finish(tol));
    checks.push(imag.finish(tol));

    // dichotomic observables built from a Bloch axis agree with its eigenstate
    let mut axis = Tally::new("axis_observable_eigenstate");
    for _ in 0..opts.draws.min(200) {
        let (theta, phi) = random_axis(&mut rng);
        let from_axis = Operator2::axis_observable(axis_of(theta, phi));
        let from_state = QubitState::from_bloch(theta, phi).projector() * two - one;
        axis.record(from_axis.max_abs_diff(&from_state));
    }
    checks.push(axis.finish(tol));

    // closed forms on a χ grid that avoids π
    let grid: Vec<f64> = (0..100).map(|k| TAU * (k as f64 + 0.5) / 100.0).collect();
    let mut analytic = Tally::new("analytic_weak_value");
    let mut scalar = Tally::new("scalar_identity");
    let pi1 = QubitState::zero().projector();
    for &chi in &grid {
        let psi = QubitState::equal_superposition(chi);
        match weak_value(&psi, &QubitState::plus_x(), &pi1) {
            Ok(w) => {
                let expect = Complex64::new(1.0, 0.0) / (Complex64::cis(chi) + 1.0);
                // relative near the divergence at π
                analytic.record((w.value - expect).norm() / expect.norm().max(1.0));
                analytic.record((w.postselection_probability - (1.0 + chi.cos()) / 2.0).abs());
            }
            Err(_) => analytic.record(f64::INFINITY),
        }
        match scalar_identity_sides(chi) {
            Ok((lhs, rhs)) => {
                scalar.record((lhs - chi.sin()).abs());
                scalar.record((rhs - chi.sin()).abs());
            }
            Err(_) => scalar.record(f64::INFINITY),
        }
    }
    checks.push(analytic.finish(tol));
    checks.push(scalar.finish(tol));

    let mut phase = Tally::new("global_phase_invariance");
    let mut eigen = Tally::new("eigenstate_weak_value");
    for _ in 0..opts.draws.min(200) {
        let pre = random_state(&mut rng);
        let post = random_state(&mut rng);
        let op = Operator2::axis_observable({
            let (t, p) = random_axis(&mut rng);
            axis_of(t, p)
        });
        if let Ok(w) = weak_value(&pre, &post, &op) {
            let (g1, g2) = (rng.random_range(0.0..TAU), rng.random_range(0.0..TAU));
            match weak_value(&pre.with_global_phase(g1), &post.with_global_phase(g2), &op) {
                Ok(w2) => phase.record((w.value - w2.value).norm() / w.value.norm().max(1.0)),
                Err(_) => phase.record(f64::INFINITY),
            }
        }
        let (theta, phi) = random_axis(&mut rng);
        let up = QubitState::from_bloch(theta, phi);
        let obs = Operator2::axis_observable(axis_of(theta, phi));
        match weak_value(&up, &up, &obs) {
            Ok(w) => eigen.record((w.value - Complex64::new(1.0, 0.0)).norm()),
            Err(_) => eigen.record(f64::INFINITY),
        }
    }
    checks.push(phase.finish(tol));
    checks.push(eigen.finish(tol));

    let mut unitary = Tally::new("interaction_unitarity");
    for _ in 0..opts.draws.min(200) {
        let params = ProtocolParams {
            alpha: rng.random_range(0.0..PI),
            delta: rng.random_range(0.0..TAU),
            ..ProtocolParams::default()
        };
        let t = rng.random_range(0.0..params.period());
        let u = rf_unitary(t, &params);
        unitary.record((u * u.dagger()).max_abs_diff(&one));
        let big = interaction_unitary(t, &params);
        let id4 = crate::qubit::Operator4::identity();
        unitary.record((big * big.dagger()).max_abs_diff(&id4));
    }
    checks.push(unitary.finish(tol));

    SelftestReport { checks }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn default_suite_passes() {
        let rep = run_selftest(&SelftestOptions::default());
        for c in &rep.checks {
            assert!(c.passed, "{c:?}");
        }
        let oracle = rep.checks.iter().find(|c| c.name == "oracle_equivalence").unwrap();
        assert_eq!(oracle.cases, 1000);
    }

    #[test]
    fn perturbed_prefactor_fails() {
        let rep = run_selftest(&SelftestOptions {
            prefactor_scale: 1.0 + 1e-6,
            ..SelftestOptions::default()
        });
        assert!(!rep.passed());
        let failed: Vec<_> = rep.checks.iter().filter(|c| !c.passed).map(|c| c.name).collect();
        assert_eq!(failed, ["oracle_equivalence"]);
    }
}
