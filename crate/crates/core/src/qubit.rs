//! Two-level states, 2×2 / 4×4 operators, weak values and the commutator
//! identity
//!
//! ```text
//! ⟨ψ|[A, B]|ψ⟩ = −8i · |⟨+B|ψ⟩|² · Im⟨Π_A⁺⟩_w^{ψ, +B}
//! ```
//!
//! for dichotomic `A = 2Π_A⁺ − 𝟙`, `B = 2|+B⟩⟨+B| − 𝟙`.
//!
//! Basis convention used throughout the crate: `|I⟩ = |↑z⟩ = (1, 0)`,
//! `|II⟩ = |↓z⟩ = (0, 1)`. Tensor products are path slot first, spin slot
//! second.

#[allow(unused_imports)]
use num_traits::Float;
use core::ops::{Add, Mul, Sub};

use nalgebra::{Matrix2, Matrix4, Vector2};
use num_complex::Complex64;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::ComplexScalar;

/// Default lower bound on `|⟨post|pre⟩|²` below which a weak value is refused.
pub const DEFAULT_POSTSELECTION_EPSILON: f64 = 1e-10;

/// Prefactor `c` in `⟨[A, B]⟩ = c · i · p · Im(w)`.
pub(crate) const COMMUTATOR_PREFACTOR: f64 = -8.0;

const ZERO: Complex64 = Complex64::new(0.0, 0.0);
const ONE: Complex64 = Complex64::new(1.0, 0.0);
const I: Complex64 = Complex64::new(0.0, 1.0);

#[derive(Debug, Clone, Copy, PartialEq, Error)]
pub enum QubitError {
    #[error("post-selection probability {probability:e} below threshold {threshold:e}; weak value diverges")]
    NearOrthogonalPostselection { probability: f64, threshold: f64 },
    #[error("state vector has zero norm")]
    ZeroNorm,
    #[error("non-finite amplitude")]
    NonFinite,
    #[error("operator is not a rank-1 projector")]
    NotAProjector,
}

/// Normalized qubit state `c1|0⟩ + c2|1⟩`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct QubitState(Vector2<Complex64>);

impl QubitState {
    /// Builds a state from amplitudes, normalizing them.
    pub fn new(c1: Complex64, c2: Complex64) -> Result<Self, QubitError> {
        if !(c1.is_finite() && c2.is_finite()) {
            return Err(QubitError::NonFinite);
        }
        let norm = (c1.norm_sqr() + c2.norm_sqr()).sqrt();
        if norm == 0.0 || !norm.is_finite() {
            return Err(QubitError::ZeroNorm);
        }
        Ok(Self(Vector2::new(c1 / norm, c2 / norm)))
    }

    pub fn zero() -> Self {
        Self(Vector2::new(ONE, ZERO))
    }

    pub fn one() -> Self {
        Self(Vector2::new(ZERO, ONE))
    }

    // exact 1/√2 amplitudes; from_bloch would round cos(π/4) and sin(π/4) apart
    pub fn plus_x() -> Self {
        Self::axis(ONE)
    }

    pub fn minus_x() -> Self {
        Self::axis(-ONE)
    }

    pub fn plus_y() -> Self {
        Self::axis(I)
    }

    pub fn minus_y() -> Self {
        Self::axis(-I)
    }

    fn axis(phase: Complex64) -> Self {
        let h = core::f64::consts::FRAC_1_SQRT_2;
        Self(Vector2::new(Complex64::new(h, 0.0), phase * h))
    }

    pub fn plus_z() -> Self {
        Self::zero()
    }

    pub fn minus_z() -> Self {
        Self::one()
    }

    /// `cos(θ/2)|0⟩ + e^{iφ} sin(θ/2)|1⟩`, the +1 eigenstate of `n̂(θ, φ)·σ`.
    pub fn from_bloch(theta: f64, phi: f64) -> Self {
        Self(Vector2::new(
            Complex64::new((theta / 2.0).cos(), 0.0),
            Complex64::from_polar((theta / 2.0).sin(), phi),
        ))
    }

    /// `(|0⟩ + e^{iχ}|1⟩)/√2`.
    pub fn equal_superposition(chi: f64) -> Self {
        let h = core::f64::consts::FRAC_1_SQRT_2;
        Self(Vector2::new(Complex64::new(h, 0.0), Complex64::from_polar(h, chi)))
    }

    pub fn amplitudes(&self) -> [Complex64; 2] {
        [self.0[0], self.0[1]]
    }

    pub fn vector(&self) -> &Vector2<Complex64> {
        &self.0
    }

    /// `⟨self|other⟩`.
    pub fn inner(&self, other: &QubitState) -> Complex64 {
        self.0.dotc(&other.0)
    }

    pub fn norm_sqr(&self) -> f64 {
        self.0.iter().map(|c| c.norm_sqr()).sum()
    }

    pub fn with_global_phase(&self, theta: f64) -> Self {
        Self(self.0 * Complex64::cis(theta))
    }

    /// `|ψ⟩⟨ψ|`.
    pub fn projector(&self) -> Operator2 {
        Operator2(self.0 * self.0.adjoint())
    }
}

/// `|⟨a|b⟩|`-style overlap helper, `⟨a|b⟩`.
pub fn inner(a: &QubitState, b: &QubitState) -> ComplexScalar {
    a.inner(b)
}

pub fn projector_from_state(s: &QubitState) -> Operator2 {
    s.projector()
}

/// Dense 2×2 complex operator.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Operator2(pub(crate) Matrix2<Complex64>);

impl Operator2 {
    /// Row-major construction.
    pub fn from_rows(rows: [[Complex64; 2]; 2]) -> Self {
        Self(Matrix2::new(rows[0][0], rows[0][1], rows[1][0], rows[1][1]))
    }

    pub fn identity() -> Self {
        Self(Matrix2::identity())
    }

    pub fn zeros() -> Self {
        Self(Matrix2::zeros())
    }

    pub fn pauli_x() -> Self {
        Self::from_rows([[ZERO, ONE], [ONE, ZERO]])
    }

    pub fn pauli_y() -> Self {
        Self::from_rows([[ZERO, -I], [I, ZERO]])
    }

    pub fn pauli_z() -> Self {
        Self::from_rows([[ONE, ZERO], [ZERO, -ONE]])
    }

    /// `n̂·σ` for a (not necessarily normalized) real axis; normalized here.
    pub fn axis_observable(axis: [f64; 3]) -> Self {
        let n = (axis[0] * axis[0] + axis[1] * axis[1] + axis[2] * axis[2]).sqrt();
        let [x, y, z] = axis.map(|c| c / n);
        Self::pauli_x() * Complex64::from(x)
            + Self::pauli_y() * Complex64::from(y)
            + Self::pauli_z() * Complex64::from(z)
    }

    /// Dichotomic observable `2P − 𝟙` built from its positive projector.
    pub fn dichotomic(projector: &Operator2) -> Self {
        *projector * Complex64::from(2.0) - Self::identity()
    }

    pub fn get(&self, row: usize, col: usize) -> Complex64 {
        self.0[(row, col)]
    }

    pub fn matrix(&self) -> &Matrix2<Complex64> {
        &self.0
    }

    pub fn dagger(&self) -> Self {
        Self(self.0.adjoint())
    }

    pub fn trace(&self) -> Complex64 {
        self.0.trace()
    }

    /// Unnormalized image `op|s⟩` as raw amplitudes.
    pub fn apply(&self, s: &QubitState) -> [Complex64; 2] {
        let v = self.0 * s.0;
        [v[0], v[1]]
    }

    /// `⟨ψ|op|ψ⟩`.
    pub fn expectation(&self, psi: &QubitState) -> Complex64 {
        psi.0.dotc(&(self.0 * psi.0))
    }

    /// `⟨a|op|b⟩`.
    pub fn matrix_element(&self, a: &QubitState, b: &QubitState) -> Complex64 {
        a.0.dotc(&(self.0 * b.0))
    }

    pub fn commutator(&self, other: &Operator2) -> Self {
        *self * *other - *other * *self
    }

    /// Kronecker product, `self` in the first (path) slot.
    pub fn tensor(&self, other: &Operator2) -> Operator4 {
        Operator4(self.0.kronecker(&other.0))
    }

    pub fn max_abs_diff(&self, other: &Operator2) -> f64 {
        (self.0 - other.0).iter().map(|c| c.norm()).fold(0.0, f64::max)
    }

    pub fn is_unitary(&self, tol: f64) -> bool {
        (self.dagger() * *self).max_abs_diff(&Self::identity()) <= tol
    }

    pub fn is_hermitian(&self, tol: f64) -> bool {
        self.dagger().max_abs_diff(self) <= tol
    }

    /// `P² = P`, `P† = P` and unit trace.
    pub fn is_rank_one_projector(&self, tol: f64) -> bool {
        (*self * *self).max_abs_diff(self) <= tol
            && self.is_hermitian(tol)
            && (self.trace() - ONE).norm() <= tol
    }
}

impl Add for Operator2 {
    type Output = Operator2;
    fn add(self, rhs: Operator2) -> Operator2 {
        Operator2(self.0 + rhs.0)
    }
}

impl Sub for Operator2 {
    type Output = Operator2;
    fn sub(self, rhs: Operator2) -> Operator2 {
        Operator2(self.0 - rhs.0)
    }
}

impl Mul for Operator2 {
    type Output = Operator2;
    fn mul(self, rhs: Operator2) -> Operator2 {
        Operator2(self.0 * rhs.0)
    }
}

impl Mul<Complex64> for Operator2 {
    type Output = Operator2;
    fn mul(self, rhs: Complex64) -> Operator2 {
        Operator2(self.0 * rhs)
    }
}

/// Dense 4×4 complex operator on path ⊗ spin.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Operator4(pub(crate) Matrix4<Complex64>);

impl Operator4 {
    pub fn identity() -> Self {
        Self(Matrix4::identity())
    }

    pub fn get(&self, row: usize, col: usize) -> Complex64 {
        self.0[(row, col)]
    }

    pub fn matrix(&self) -> &Matrix4<Complex64> {
        &self.0
    }

    pub fn dagger(&self) -> Self {
        Self(self.0.adjoint())
    }

    pub fn max_abs_diff(&self, other: &Operator4) -> f64 {
        (self.0 - other.0).iter().map(|c| c.norm()).fold(0.0, f64::max)
    }

    pub fn is_unitary(&self, tol: f64) -> bool {
        (self.dagger() * *self).max_abs_diff(&Self::identity()) <= tol
    }
}

impl Add for Operator4 {
    type Output = Operator4;
    fn add(self, rhs: Operator4) -> Operator4 {
        Operator4(self.0 + rhs.0)
    }
}

impl Mul for Operator4 {
    type Output = Operator4;
    fn mul(self, rhs: Operator4) -> Operator4 {
        Operator4(self.0 * rhs.0)
    }
}

pub fn tensor(a: &Operator2, b: &Operator2) -> Operator4 {
    a.tensor(b)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct WeakValueResult {
    pub value: ComplexScalar,
    pub postselection_probability: f64,
}

/// `⟨post|op|pre⟩ / ⟨post|pre⟩` with the default orthogonality threshold.
pub fn weak_value(
    pre: &QubitState,
    post: &QubitState,
    op: &Operator2,
) -> Result<WeakValueResult, QubitError> {
    weak_value_with_threshold(pre, post, op, DEFAULT_POSTSELECTION_EPSILON)
}

pub fn weak_value_with_threshold(
    pre: &QubitState,
    post: &QubitState,
    op: &Operator2,
    epsilon: f64,
) -> Result<WeakValueResult, QubitError> {
    let overlap = post.inner(pre);
    let probability = overlap.norm_sqr();
    if probability < epsilon {
        return Err(QubitError::NearOrthogonalPostselection {
            probability,
            threshold: epsilon,
        });
    }
    let value = complex_div(op.matrix_element(post, pre), overlap);
    if !value.is_finite() {
        return Err(QubitError::NonFinite);
    }
    Ok(WeakValueResult {
        value,
        postselection_probability: probability,
    })
}

/// Smith's division. Unlike `a * conj(b) / |b|²` it is exact for a real
/// divisor, so `w(χ = 0)` comes out as exactly ½.
fn complex_div(a: Complex64, b: Complex64) -> Complex64 {
    if b.re.abs() >= b.im.abs() {
        let r = b.im / b.re;
        let d = b.re + b.im * r;
        Complex64::new((a.re + a.im * r) / d, (a.im - a.re * r) / d)
    } else {
        let r = b.re / b.im;
        let d = b.re * r + b.im;
        Complex64::new((a.re * r + a.im) / d, (a.im * r - a.re) / d)
    }
}

/// `⟨ψ|(AB − BA)|ψ⟩` by plain matrix arithmetic.
pub fn commutator_expectation_direct(a: &Operator2, b: &Operator2, psi: &QubitState) -> ComplexScalar {
    a.commutator(b).expectation(psi)
}

/// `⟨ψ|[2Π_A − 𝟙, 2|+B⟩⟨+B| − 𝟙]|ψ⟩` from the single weak value
/// `⟨Π_A⟩_w^{ψ,+B}` and the post-selection probability `|⟨+B|ψ⟩|²`.
pub fn commutator_via_weak_value(
    psi: &QubitState,
    proj_a: &Operator2,
    post_b: &QubitState,
) -> Result<ComplexScalar, QubitError> {
    commutator_via_weak_value_scaled(psi, proj_a, post_b, COMMUTATOR_PREFACTOR)
}

pub(crate) fn commutator_via_weak_value_scaled(
    psi: &QubitState,
    proj_a: &Operator2,
    post_b: &QubitState,
    prefactor: f64,
) -> Result<ComplexScalar, QubitError> {
    if !proj_a.is_rank_one_projector(1e-10) {
        return Err(QubitError::NotAProjector);
    }
    let wv = weak_value(psi, post_b, proj_a)?;
    Ok(I * (prefactor * wv.postselection_probability * wv.value.im))
}

/// Both sides of the scalar identity for the path qubit prepared in
/// `(|I⟩ + e^{iχ}|II⟩)/√2`:
///
/// * `lhs = −4 |⟨+x|ψ⟩|² Im⟨Π1⟩_w^{ψ,+x}`
/// * `rhs = 2 |⟨+y|ψ⟩|² − 1`
///
/// Both equal `⟨σy⟩ = sin χ`.
pub fn scalar_identity_sides(chi: f64) -> Result<(f64, f64), QubitError> {
    let psi = QubitState::equal_superposition(chi);
    let wv = weak_value(&psi, &QubitState::plus_x(), &QubitState::zero().projector())?;
    let lhs = COMMUTATOR_PREFACTOR / 2.0 * wv.postselection_probability * wv.value.im;
    let rhs = 2.0 * QubitState::plus_y().inner(&psi).norm_sqr() - 1.0;
    Ok((lhs, rhs))
}
