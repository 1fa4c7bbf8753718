//! Trace norm, trace distance, and the Helstrom norm.

use crate::error::{Error, Result};
use crate::linalg::{cx, hermiticity_defect, hermitian_eigenvalues, CMatrix};
use crate::state::{DensityMatrix, HermitianOp};

const HERMITICITY_TOL: f64 = 1e-12;
const WEIGHT_TOL: f64 = 1e-12;

/// Trace norm Σ|λ| for a Hermitian matrix; no validation.
pub(crate) fn trace_norm_hermitian(m: &CMatrix) -> f64 {
    hermitian_eigenvalues(m).into_iter().map(f64::abs).sum()
}

/// Trace norm of a Hermitian operator.
pub fn trace_norm(op: &HermitianOp) -> f64 {
    trace_norm_hermitian(op.matrix())
}

/// Trace norm of a matrix after checking Hermiticity to 1e-12.
pub fn trace_norm_of(m: &CMatrix) -> Result<f64> {
    let defect = hermiticity_defect(m);
    if defect > HERMITICITY_TOL {
        return Err(Error::NotHermitian { defect });
    }
    Ok(trace_norm_hermitian(m))
}

pub(crate) fn trace_distance_matrix(a: &CMatrix, b: &CMatrix) -> f64 {
    0.5 * trace_norm_hermitian(&(a - b))
}

/// Trace distance D(ρ, σ) = ½‖ρ − σ‖₁.
pub fn trace_distance(rho: &DensityMatrix, sigma: &DensityMatrix) -> Result<f64> {
    if rho.dim() != sigma.dim() {
        return Err(Error::DimensionMismatch {
            expected: rho.dim(),
            actual: sigma.dim(),
        });
    }
    Ok(trace_distance_matrix(rho.matrix(), sigma.matrix()))
}

/// Helstrom matrix p₁ρ₁ − p₂ρ₂.
pub(crate) fn helstrom_matrix(rho1: &CMatrix, rho2: &CMatrix, p1: f64, p2: f64) -> CMatrix {
    rho1 * cx(p1, 0.0) - rho2 * cx(p2, 0.0)
}

/// ‖p₁ρ₁ − p₂ρ₂‖₁ for prior weights p₁ + p₂ = 1.
pub fn helstrom_norm(rho1: &DensityMatrix, rho2: &DensityMatrix, p1: f64, p2: f64) -> Result<f64> {
    if rho1.dim() != rho2.dim() {
        return Err(Error::DimensionMismatch {
            expected: rho1.dim(),
            actual: rho2.dim(),
        });
    }
    if p1 < 0.0 || p2 < 0.0 || (p1 + p2 - 1.0).abs() > WEIGHT_TOL {
        return Err(Error::param(
            "weights",
            format!("require p1, p2 >= 0 and p1 + p2 = 1, got ({p1}, {p2})"),
        ));
    }
    Ok(trace_norm_hermitian(&helstrom_matrix(
        rho1.matrix(),
        rho2.matrix(),
        p1,
        p2,
    )))
}
