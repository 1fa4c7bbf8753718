//! Quantum states and Hermitian observables.

use crate::error::{Error, Result};
use crate::linalg::{
    self, basis_ket, cx, hermiticity_defect, min_hermitian_eigenvalue, projector, CMatrix, CVector,
};

/// Validation tolerances for [`DensityMatrix`] construction.
#[derive(Debug, Clone, Copy)]
pub struct StateTolerance {
    pub hermiticity: f64,
    pub trace: f64,
    /// Lower bound on the minimum eigenvalue is `-positivity`.
    pub positivity: f64,
}

impl StateTolerance {
    /// Structural tolerances for exactly-constructed states.
    pub const STRICT: StateTolerance = StateTolerance {
        hermiticity: 1e-12,
        trace: 1e-12,
        positivity: 1e-10,
    };

    /// Looser tolerances for states produced by numerical solvers
    /// (quadrature, contour inversion, Monte Carlo averaging).
    pub const NUMERICAL: StateTolerance = StateTolerance {
        hermiticity: 1e-8,
        trace: 1e-7,
        positivity: 1e-6,
    };
}

/// A d×d density matrix: Hermitian, unit trace, positive semidefinite.
#[derive(Debug, Clone, PartialEq)]
pub struct DensityMatrix {
    data: CMatrix,
}

impl DensityMatrix {
    /// Validates against [`StateTolerance::STRICT`].
    pub fn new(data: CMatrix) -> Result<Self> {
        Self::with_tolerance(data, &StateTolerance::STRICT)
    }

    pub fn with_tolerance(data: CMatrix, tol: &StateTolerance) -> Result<Self> {
        if data.nrows() != data.ncols() || data.nrows() == 0 {
            return Err(Error::InvalidState {
                reason: format!("matrix is {}x{}, expected square nonempty", data.nrows(), data.ncols()),
            });
        }
        let herm = hermiticity_defect(&data);
        if herm > tol.hermiticity {
            return Err(Error::InvalidState {
                reason: format!("hermiticity defect {herm:.3e} exceeds {:.1e}", tol.hermiticity),
            });
        }
        let tr = linalg::trace(&data);
        if (tr.re - 1.0).abs() > tol.trace || tr.im.abs() > tol.trace {
            return Err(Error::InvalidState {
                reason: format!("trace {tr} differs from 1 beyond {:.1e}", tol.trace),
            });
        }
        let min_eig = min_hermitian_eigenvalue(&linalg::hermitize(&data));
        if min_eig < -tol.positivity {
            return Err(Error::InvalidState {
                reason: format!("min eigenvalue {min_eig:.3e} below -{:.1e}", tol.positivity),
            });
        }
        Ok(Self { data })
    }

    pub(crate) fn new_unchecked(data: CMatrix) -> Self {
        Self { data }
    }

    pub fn dim(&self) -> usize {
        self.data.nrows()
    }

    pub fn matrix(&self) -> &CMatrix {
        &self.data
    }

    pub fn into_matrix(self) -> CMatrix {
        self.data
    }

    pub fn trace(&self) -> f64 {
        linalg::trace(&self.data).re
    }

    /// Diagonal entry ⟨i|ρ|i⟩.
    pub fn population(&self, i: usize) -> f64 {
        self.data[(i, i)].re
    }

    pub fn from_ket(ket: &CVector) -> Result<Self> {
        let norm: f64 = ket.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
        if norm <= 0.0 {
            return Err(Error::InvalidState {
                reason: "zero ket".into(),
            });
        }
        let normalized = ket / cx(norm, 0.0);
        Ok(Self::new_unchecked(projector(&normalized)))
    }

    /// |i⟩⟨i| in dimension `dim`.
    pub fn basis(dim: usize, i: usize) -> Self {
        Self::new_unchecked(projector(&basis_ket(dim, i)))
    }

    pub fn maximally_mixed(dim: usize) -> Self {
        Self::new_unchecked(linalg::identity(dim) * cx(1.0 / dim as f64, 0.0))
    }

    /// Qubit pure state cos(θ/2)|0⟩ + e^{iφ} sin(θ/2)|1⟩.
    pub fn qubit_pure(theta: f64, phi: f64) -> Self {
        let ket = CVector::from_vec(vec![
            cx((theta / 2.0).cos(), 0.0),
            cx(0.0, phi).exp() * (theta / 2.0).sin(),
        ]);
        Self::new_unchecked(projector(&ket))
    }
}

/// A Hermitian operator, validated to 1e-12 on construction.
#[derive(Debug, Clone, PartialEq)]
pub struct HermitianOp {
    data: CMatrix,
}

impl HermitianOp {
    pub fn new(data: CMatrix) -> Result<Self> {
        if data.nrows() != data.ncols() {
            return Err(Error::DimensionMismatch {
                expected: data.nrows(),
                actual: data.ncols(),
            });
        }
        let defect = hermiticity_defect(&data);
        if defect > 1e-12 {
            return Err(Error::NotHermitian { defect });
        }
        Ok(Self { data })
    }

    pub fn dim(&self) -> usize {
        self.data.nrows()
    }

    pub fn matrix(&self) -> &CMatrix {
        &self.data
    }
}

/// Which marginal `partial_trace` keeps.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Subsystem {
    System,
    Environment,
}

/// Partial trace of a bipartite operator with index ordering
/// `row = s·d_e + e` (system-major).
pub fn partial_trace_matrix(m: &CMatrix, d_s: usize, d_e: usize, keep: Subsystem) -> Result<CMatrix> {
    if m.nrows() != d_s * d_e || m.ncols() != d_s * d_e {
        return Err(Error::DimensionMismatch {
            expected: d_s * d_e,
            actual: m.nrows(),
        });
    }
    match keep {
        Subsystem::System => {
            let mut out = CMatrix::zeros(d_s, d_s);
            for s1 in 0..d_s {
                for s2 in 0..d_s {
                    let mut acc = cx(0.0, 0.0);
                    for e in 0..d_e {
                        acc += m[(s1 * d_e + e, s2 * d_e + e)];
                    }
                    out[(s1, s2)] = acc;
                }
            }
            Ok(out)
        }
        Subsystem::Environment => {
            let mut out = CMatrix::zeros(d_e, d_e);
            for e1 in 0..d_e {
                for e2 in 0..d_e {
                    let mut acc = cx(0.0, 0.0);
                    for s in 0..d_s {
                        acc += m[(s * d_e + e1, s * d_e + e2)];
                    }
                    out[(e1, e2)] = acc;
                }
            }
            Ok(out)
        }
    }
}

/// Marginal state of a bipartite density matrix.
pub fn partial_trace(rho: &DensityMatrix, d_s: usize, d_e: usize, keep: Subsystem) -> Result<DensityMatrix> {
    let reduced = partial_trace_matrix(rho.matrix(), d_s, d_e, keep)?;
    DensityMatrix::new(reduced)
}

/// Product state ρ_S ⊗ ρ_E.
pub fn tensor_states(a: &DensityMatrix, b: &DensityMatrix) -> DensityMatrix {
    DensityMatrix::new_unchecked(linalg::tensor(a.matrix(), b.matrix()))
}
