#[allow(unused_imports)]
use num_traits::Float;
use alloc::format;

use nalgebra::{Matrix3, Vector3};

use super::AnalysisError;

/// Weighted linear least-squares solution for a 3-parameter model.
#[derive(Debug, Clone, Copy)]
pub(crate) struct Lsq3 {
    pub coef: [f64; 3],
    /// `(XᵀWX)⁻¹`, i.e. the covariance for known per-point variances.
    pub cov: [[f64; 3]; 3],
    pub chi2: f64,
    pub n: usize,
}

/// Solves `min Σ ((y − x·β)/σ)²` through the normal equations.
pub(crate) fn weighted_lsq3(rows: &[[f64; 3]], y: &[f64], sigma: &[f64]) -> Result<Lsq3, AnalysisError> {
    debug_assert!(rows.len() == y.len() && y.len() == sigma.len());
    let mut normal = Matrix3::<f64>::zeros();
    let mut rhs = Vector3::<f64>::zeros();
    for ((x, &yi), &si) in rows.iter().zip(y).zip(sigma) {
        if !(si.is_finite() && si > 0.0 && yi.is_finite()) {
            return Err(AnalysisError::DegenerateFit(format!("bad point y={yi} σ={si}")));
        }
        let w = 1.0 / (si * si);
        let xv = Vector3::new(x[0], x[1], x[2]);
        normal += xv * xv.transpose() * w;
        rhs += xv * (w * yi);
    }

    // rank check on the unit-diagonal rescaling of XᵀWX
    let diag = normal.diagonal();
    if diag.iter().any(|d| !(*d > 0.0)) {
        return Err(AnalysisError::DegenerateFit("design matrix has an empty column".into()));
    }
    let scale = Matrix3::from_diagonal(&diag.map(|d| 1.0 / d.sqrt()));
    let det = (scale * normal * scale).determinant();
    if !(det > 1e-10) {
        return Err(AnalysisError::DegenerateFit(format!(
            "design matrix is rank-deficient (scaled det {det:e})"
        )));
    }
    let inv = normal
        .try_inverse()
        .ok_or_else(|| AnalysisError::DegenerateFit("normal matrix not invertible".into()))?;
    let inv = (inv + inv.transpose()) * 0.5;
    let beta = inv * rhs;

    let chi2 = rows
        .iter()
        .zip(y)
        .zip(sigma)
        .map(|((x, &yi), &si)| {
            let r = (yi - (x[0] * beta[0] + x[1] * beta[1] + x[2] * beta[2])) / si;
            r * r
        })
        .sum();

    let mut cov = [[0.0; 3]; 3];
    for (i, row) in cov.iter_mut().enumerate() {
        for (j, v) in row.iter_mut().enumerate() {
            *v = inv[(i, j)];
        }
    }
    Ok(Lsq3 {
        coef: [beta[0], beta[1], beta[2]],
        cov,
        chi2,
        n: rows.len(),
    })
}

/// `gᵀ C g` for a gradient over the three parameters.
pub(crate) fn quad_form(cov: &[[f64; 3]; 3], g: [f64; 3]) -> f64 {
    let mut s = 0.0;
    for i in 0..3 {
        for j in 0..3 {
            s += g[i] * cov[i][j] * g[j];
        }
    }
    s
}
