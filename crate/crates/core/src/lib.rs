//! Core of the weak-value commutator benchmark.
//!
//! Exact two-level algebra and weak values, a forward model of a
//! triple-Laue neutron interferometer with a weak RF spin marker in one
//! path, the deterministic part of the detector campaign model, and the
//! data-reduction chain that turns time-folded histograms back into
//! weak values and a test of `⟨[σz, σx]⟩ = 2i⟨σy⟩`.
//!
//! Everything here is `no_std` with `alloc`; sampling, IO and the CLI
//! live in the `wvb` crate.
#![no_std]
#![warn(missing_debug_implementations)]

extern crate alloc;


pub mod analysis;
pub mod campaign;
pub mod interferometer;
pub mod qubit;
pub mod selftest;

pub use num_complex::Complex64;

/// Universal amplitude type.
pub type ComplexScalar = Complex64;

/// Reduce an angle to `(-π, π]`.
pub fn wrap_phase(phase: f64) -> f64 {
    use core::f64::consts::{PI, TAU};
    let mut p = phase % TAU;
    if p <= -PI {
        p += TAU;
    } else if p > PI {
        p -= TAU;
    }
    p
}
