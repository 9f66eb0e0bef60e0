#[allow(unused_imports)]
use num_traits::Float;
use alloc::format;
use alloc::vec::Vec;

use serde::{Deserialize, Serialize};

use super::{AnalysisError, ProbabilityEstimate, WeakValueEstimate};
use crate::campaign::same_phase;

/// One χ setting of the commutator check:
/// `lhs = −4 p_x Im w` against `rhs = 2 p_y − 1`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CommutatorRow {
    pub chi: f64,
    pub lhs: f64,
    pub sigma_lhs: f64,
    pub rhs: f64,
    pub sigma_rhs: f64,
    /// `sin χ`.
    pub theory: f64,
    pub excluded: bool,
}

impl CommutatorRow {
    pub fn residual(&self) -> f64 {
        self.lhs - self.rhs
    }

    /// `|lhs − rhs| / √(σ_lhs² + σ_rhs²)`.
    pub fn pull(&self) -> f64 {
        self.residual().abs() / self.sigma_lhs.hypot(self.sigma_rhs)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CommutatorSummary {
    /// Over non-excluded rows.
    pub rms_residual: f64,
    pub max_abs_residual: f64,
    pub n_excluded: usize,
    pub n_points: usize,
    /// Largest `|lhs − rhs|` in units of the combined σ.
    pub max_pull: f64,
    /// Largest `|lhs − sin χ| / σ_lhs`.
    pub max_theory_pull: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CommutatorReport {
    pub rows: Vec<CommutatorRow>,
    pub summary: CommutatorSummary,
}

impl CommutatorReport {
    pub fn included(&self) -> impl Iterator<Item = &CommutatorRow> {
        self.rows.iter().filter(|r| !r.excluded)
    }

    /// Whether the RMS residual is within `bound` over at least one point.
    pub fn passes(&self, bound: f64) -> bool {
        self.summary.n_points > 0 && self.summary.rms_residual < bound
    }
}

fn lookup<'a>(
    chi: f64,
    probs: &'a [ProbabilityEstimate],
    name: &str,
) -> Result<&'a ProbabilityEstimate, AnalysisError> {
    probs
        .iter()
        .find(|p| same_phase(p.chi, chi))
        .ok_or_else(|| AnalysisError::ChannelMismatch(format!("no {name} probability at χ={chi}")))
}

/// Compares `−4 p̂_x Im w` with `2 p̂_y − 1` on a common χ grid.
pub fn verify_commutator(
    weak_values: &[WeakValueEstimate],
    p_x: &[ProbabilityEstimate],
    p_y: &[ProbabilityEstimate],
) -> Result<CommutatorReport, AnalysisError> {
    if p_x.len() != weak_values.len() || p_y.len() != weak_values.len() {
        return Err(AnalysisError::ChannelMismatch(format!(
            "{} weak values, {} x probabilities, {} y probabilities",
            weak_values.len(),
            p_x.len(),
            p_y.len()
        )));
    }
    let mut rows = Vec::with_capacity(weak_values.len());
    for w in weak_values {
        let px = lookup(w.chi, p_x, "x")?;
        let py = lookup(w.chi, p_y, "y")?;
        // + 0.0 folds −0 into 0 for χ = 0, where Im w is zero by construction
        let lhs = -4.0 * px.p * w.im + 0.0;
        let sigma_lhs = 4.0 * (w.im * px.sigma).hypot(px.p * w.sigma_im);
        rows.push(CommutatorRow {
            chi: w.chi,
            lhs,
            sigma_lhs,
            rhs: 2.0 * py.p - 1.0,
            sigma_rhs: 2.0 * py.sigma,
            theory: w.chi.sin(),
            excluded: w.excluded,
        });
    }
    rows.sort_by(|a, b| a.chi.total_cmp(&b.chi));

    let mut sum_sq = 0.0;
    let mut max_abs: f64 = 0.0;
    let mut max_pull: f64 = 0.0;
    let mut max_theory_pull: f64 = 0.0;
    let mut n = 0usize;
    for r in rows.iter().filter(|r| !r.excluded) {
        let d = r.residual();
        sum_sq += d * d;
        max_abs = max_abs.max(d.abs());
        if r.sigma_lhs.hypot(r.sigma_rhs) > 0.0 {
            max_pull = max_pull.max(r.pull());
        }
        if r.sigma_lhs > 0.0 {
            max_theory_pull = max_theory_pull.max((r.lhs - r.theory).abs() / r.sigma_lhs);
        }
        n += 1;
    }
    let n_excluded = rows.len() - n;
    Ok(CommutatorReport {
        summary: CommutatorSummary {
            rms_residual: if n > 0 { (sum_sq / n as f64).sqrt() } else { 0.0 },
            max_abs_residual: max_abs,
            n_excluded,
            n_points: n,
            max_pull,
            max_theory_pull,
        },
        rows,
    })
}
