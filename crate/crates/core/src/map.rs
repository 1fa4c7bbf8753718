//! Linear maps on operators with three interconvertible representations:
//! a Kraus list, a superoperator acting on column-stacked operators, and a
//! Choi matrix.
//!
//! The Choi matrix is unnormalized, `C = Σ_{ij} |i⟩⟨j| ⊗ Φ[|i⟩⟨j|]`, so a
//! trace-preserving map has `Tr C = d_in`. With column-stacking this is
//! `C = Σ_k vec(K_k) vec(K_k)†` for a Kraus list `{K_k}`.

use crate::error::{Error, Result};
use crate::linalg::{
    self, cx, hermitize, identity, max_abs, min_hermitian_eigenvalue, tensor, unvectorize,
    vectorize, CMatrix,
};
use crate::state::{DensityMatrix, StateTolerance};

/// Default spectral tolerance for complete-positivity checks.
pub const CP_TOL: f64 = 1e-10;

/// Eigenvalues of the Choi matrix below this cutoff are dropped when
/// extracting Kraus operators.
const KRAUS_EIG_CUTOFF: f64 = 1e-14;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Representation {
    Kraus,
    Superoperator,
    Choi,
}

#[derive(Debug, Clone)]
enum MapData {
    Kraus(Vec<CMatrix>),
    Super(CMatrix),
    Choi(CMatrix),
}

/// Diagnostic report from [`QuantumMap::is_cptp`].
#[derive(Debug, Clone, Copy)]
pub struct CptpReport {
    pub cp: bool,
    pub tp: bool,
    pub min_choi_eig: f64,
    pub tp_defect: f64,
}

#[derive(Debug, Clone)]
pub struct QuantumMap {
    dim_in: usize,
    dim_out: usize,
    data: MapData,
}

impl QuantumMap {
    /// Map from a non-empty list of `d_out × d_in` Kraus operators.
    pub fn from_kraus(ops: Vec<CMatrix>) -> Result<Self> {
        let first = ops.first().ok_or_else(|| {
            Error::param("kraus", "empty Kraus list; use QuantumMap::zero for the zero map")
        })?;
        let (dim_out, dim_in) = (first.nrows(), first.ncols());
        if dim_in == 0 || dim_out == 0 {
            return Err(Error::param("kraus", "zero-dimensional Kraus operator"));
        }
        for op in &ops {
            if op.nrows() != dim_out || op.ncols() != dim_in {
                return Err(Error::DimensionMismatch {
                    expected: dim_out * dim_in,
                    actual: op.nrows() * op.ncols(),
                });
            }
        }
        Ok(Self {
            dim_in,
            dim_out,
            data: MapData::Kraus(ops),
        })
    }

    /// Map from its `d_out² × d_in²` superoperator on column-stacked operators.
    pub fn from_superoperator(s: CMatrix) -> Result<Self> {
        let dim_out = int_sqrt(s.nrows()).ok_or_else(|| {
            Error::param("superoperator", format!("row count {} is not a square", s.nrows()))
        })?;
        let dim_in = int_sqrt(s.ncols()).ok_or_else(|| {
            Error::param("superoperator", format!("column count {} is not a square", s.ncols()))
        })?;
        Ok(Self {
            dim_in,
            dim_out,
            data: MapData::Super(s),
        })
    }

    /// Map from its `(d_in·d_out) × (d_in·d_out)` Choi matrix.
    pub fn from_choi(c: CMatrix, dim_in: usize, dim_out: usize) -> Result<Self> {
        if c.nrows() != dim_in * dim_out || c.ncols() != dim_in * dim_out {
            return Err(Error::DimensionMismatch {
                expected: dim_in * dim_out,
                actual: c.nrows(),
            });
        }
        Ok(Self {
            dim_in,
            dim_out,
            data: MapData::Choi(c),
        })
    }

    pub fn identity(dim: usize) -> Self {
        Self {
            dim_in: dim,
            dim_out: dim,
            data: MapData::Kraus(vec![identity(dim)]),
        }
    }

    /// The zero map (empty Kraus list).
    pub fn zero(dim_in: usize, dim_out: usize) -> Self {
        Self {
            dim_in,
            dim_out,
            data: MapData::Kraus(Vec::new()),
        }
    }

    /// Unitary conjugation ρ ↦ UρU†.
    pub fn from_unitary(u: &CMatrix) -> Result<Self> {
        let d = u.nrows();
        let defect = max_abs(&(u.adjoint() * u - identity(d)));
        if defect > 1e-10 {
            return Err(Error::param("unitary", format!("U†U differs from 1 by {defect:.3e}")));
        }
        Self::from_kraus(vec![u.clone()])
    }

    pub fn dim_in(&self) -> usize {
        self.dim_in
    }

    pub fn dim_out(&self) -> usize {
        self.dim_out
    }

    pub fn representation(&self) -> Representation {
        match &self.data {
            MapData::Kraus(_) => Representation::Kraus,
            MapData::Super(_) => Representation::Superoperator,
            MapData::Choi(_) => Representation::Choi,
        }
    }

    /// Superoperator matrix of this map.
    pub fn superoperator(&self) -> CMatrix {
        match &self.data {
            MapData::Kraus(ops) => kraus_to_super(ops, self.dim_in, self.dim_out),
            MapData::Super(s) => s.clone(),
            MapData::Choi(c) => choi_to_super(c, self.dim_in, self.dim_out),
        }
    }

    /// Choi matrix of this map.
    pub fn choi(&self) -> CMatrix {
        match &self.data {
            MapData::Kraus(ops) => kraus_to_choi(ops, self.dim_in, self.dim_out),
            MapData::Super(s) => super_to_choi(s, self.dim_in, self.dim_out),
            MapData::Choi(c) => c.clone(),
        }
    }

    /// Kraus operators; fails with the min Choi eigenvalue when the map is
    /// not completely positive.
    pub fn kraus(&self) -> Result<Vec<CMatrix>> {
        match &self.data {
            MapData::Kraus(ops) => Ok(ops.clone()),
            _ => choi_to_kraus(&self.choi(), self.dim_in, self.dim_out),
        }
    }

    /// Re-express the map in `target` representation.
    pub fn convert(&self, target: Representation) -> Result<Self> {
        let data = match target {
            Representation::Kraus => MapData::Kraus(self.kraus()?),
            Representation::Superoperator => MapData::Super(self.superoperator()),
            Representation::Choi => MapData::Choi(self.choi()),
        };
        Ok(Self {
            dim_in: self.dim_in,
            dim_out: self.dim_out,
            data,
        })
    }

    /// Apply the map to an arbitrary operator.
    pub fn apply_matrix(&self, x: &CMatrix) -> Result<CMatrix> {
        if x.nrows() != self.dim_in || x.ncols() != self.dim_in {
            return Err(Error::DimensionMismatch {
                expected: self.dim_in,
                actual: x.nrows(),
            });
        }
        match &self.data {
            MapData::Kraus(ops) => {
                let mut out = CMatrix::zeros(self.dim_out, self.dim_out);
                for k in ops {
                    out += k * x * k.adjoint();
                }
                Ok(out)
            }
            MapData::Super(s) => Ok(unvectorize(&(s * vectorize(x)), self.dim_out, self.dim_out)),
            MapData::Choi(_) => {
                let s = self.superoperator();
                Ok(unvectorize(&(&s * vectorize(x)), self.dim_out, self.dim_out))
            }
        }
    }

    /// Apply to a state; the output is re-symmetrized and validated, so this
    /// is only meaningful for trace-preserving positive maps.
    pub fn apply(&self, rho: &DensityMatrix) -> Result<DensityMatrix> {
        let out = self.apply_matrix(rho.matrix())?;
        DensityMatrix::with_tolerance(
            hermitize(&out),
            &StateTolerance {
                hermiticity: 1e-12,
                trace: 1e-10,
                positivity: 1e-9,
            },
        )
    }

    /// Composition `self ∘ inner` (apply `inner` first).
    pub fn compose(&self, inner: &Self) -> Result<Self> {
        if self.dim_in != inner.dim_out {
            return Err(Error::DimensionMismatch {
                expected: self.dim_in,
                actual: inner.dim_out,
            });
        }
        let s = self.superoperator() * inner.superoperator();
        Ok(Self {
            dim_in: inner.dim_in,
            dim_out: self.dim_out,
            data: MapData::Super(s),
        })
    }

    /// Max-abs defect of the trace-preservation condition, evaluated on the
    /// native representation.
    pub fn tp_defect(&self) -> f64 {
        match &self.data {
            MapData::Kraus(ops) => {
                let mut acc = CMatrix::zeros(self.dim_in, self.dim_in);
                for k in ops {
                    acc += k.adjoint() * k;
                }
                max_abs(&(acc - identity(self.dim_in)))
            }
            MapData::Super(s) => {
                // TP ⟺ S† vec(1_out) = vec(1_in)
                let lhs = s.adjoint() * vectorize(&identity(self.dim_out));
                let rhs = vectorize(&identity(self.dim_in));
                (lhs - rhs).iter().map(|z| z.norm()).fold(0.0, f64::max)
            }
            MapData::Choi(c) => {
                // TP ⟺ Tr_out C = 1_in
                let mut tr_out = CMatrix::zeros(self.dim_in, self.dim_in);
                for i in 0..self.dim_in {
                    for j in 0..self.dim_in {
                        let mut acc = cx(0.0, 0.0);
                        for a in 0..self.dim_out {
                            acc += c[(i * self.dim_out + a, j * self.dim_out + a)];
                        }
                        tr_out[(i, j)] = acc;
                    }
                }
                max_abs(&(tr_out - identity(self.dim_in)))
            }
        }
    }

    pub fn min_choi_eigenvalue(&self) -> f64 {
        min_hermitian_eigenvalue(&hermitize(&self.choi()))
    }

    /// Complete-positivity and trace-preservation diagnostic.
    pub fn is_cptp(&self, tol: f64) -> CptpReport {
        let min_choi_eig = self.min_choi_eigenvalue();
        let tp_defect = self.tp_defect();
        CptpReport {
            cp: min_choi_eig >= -tol,
            tp: tp_defect <= tol,
            min_choi_eig,
            tp_defect,
        }
    }
}

fn int_sqrt(n: usize) -> Option<usize> {
    let r = (n as f64).sqrt().round() as usize;
    (r * r == n && r > 0).then_some(r)
}

fn kraus_to_super(ops: &[CMatrix], dim_in: usize, dim_out: usize) -> CMatrix {
    let mut s = CMatrix::zeros(dim_out * dim_out, dim_in * dim_in);
    for k in ops {
        s += tensor(&k.map(|z| z.conj()), k);
    }
    s
}

fn kraus_to_choi(ops: &[CMatrix], dim_in: usize, dim_out: usize) -> CMatrix {
    let n = dim_in * dim_out;
    let mut c = CMatrix::zeros(n, n);
    for k in ops {
        let v = vectorize(k);
        c += &v * v.adjoint();
    }
    c
}

/// Reshuffle between superoperator and Choi indices:
/// `C[(i·d_out + a), (j·d_out + b)] = S[(b·d_out + a), (j·d_in + i)]`.
fn super_to_choi(s: &CMatrix, dim_in: usize, dim_out: usize) -> CMatrix {
    let n = dim_in * dim_out;
    let mut c = CMatrix::zeros(n, n);
    for i in 0..dim_in {
        for j in 0..dim_in {
            for a in 0..dim_out {
                for b in 0..dim_out {
                    c[(i * dim_out + a, j * dim_out + b)] = s[(b * dim_out + a, j * dim_in + i)];
                }
            }
        }
    }
    c
}

fn choi_to_super(c: &CMatrix, dim_in: usize, dim_out: usize) -> CMatrix {
    let mut s = CMatrix::zeros(dim_out * dim_out, dim_in * dim_in);
    for i in 0..dim_in {
        for j in 0..dim_in {
            for a in 0..dim_out {
                for b in 0..dim_out {
                    s[(b * dim_out + a, j * dim_in + i)] = c[(i * dim_out + a, j * dim_out + b)];
                }
            }
        }
    }
    s
}

fn choi_to_kraus(c: &CMatrix, dim_in: usize, dim_out: usize) -> Result<Vec<CMatrix>> {
    let (eigvals, eigvecs) = linalg::hermitian_eigen(&hermitize(c));
    let min_eig = eigvals.iter().copied().fold(f64::INFINITY, f64::min);
    if min_eig < -CP_TOL {
        return Err(Error::NotCompletelyPositive { min_choi_eig: min_eig });
    }
    let scale = eigvals.iter().copied().fold(1.0, f64::max);
    let mut ops = Vec::new();
    for (idx, &lambda) in eigvals.iter().enumerate() {
        if lambda > KRAUS_EIG_CUTOFF * scale {
            let col = eigvecs.column(idx) * cx(lambda.sqrt(), 0.0);
            ops.push(unvectorize(&col.into_owned(), dim_out, dim_in));
        }
    }
    if ops.is_empty() {
        // the (numerically) zero map
        ops.push(CMatrix::zeros(dim_out, dim_in));
    }
    Ok(ops)
}
