//! Dense complex linear algebra helpers.
//!
//! Conventions used throughout the crate:
//! * vectorization is column-stacking, so `vec(A X B) = (Bᵀ ⊗ A) vec(X)`;
//! * the Kronecker product uses the row-major block convention,
//!   `(A ⊗ B)[(i·p + k), (j·q + l)] = A[i,j]·B[k,l]`.

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;

pub type CMatrix = DMatrix<Complex64>;
pub type CVector = DVector<Complex64>;

#[inline]
pub fn cx(re: f64, im: f64) -> Complex64 {
    Complex64::new(re, im)
}

pub fn identity(dim: usize) -> CMatrix {
    CMatrix::identity(dim, dim)
}

/// Largest entry magnitude.
pub fn max_abs(m: &CMatrix) -> f64 {
    m.iter().map(|z| z.norm()).fold(0.0, f64::max)
}

/// Max-abs entry of `m − m†`.
pub fn hermiticity_defect(m: &CMatrix) -> f64 {
    let mut defect: f64 = 0.0;
    for i in 0..m.nrows() {
        for j in i..m.ncols() {
            defect = defect.max((m[(i, j)] - m[(j, i)].conj()).norm());
        }
    }
    defect
}

pub fn frobenius_norm(m: &CMatrix) -> f64 {
    m.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt()
}

/// Kronecker product in the row-major block convention.
pub fn tensor(a: &CMatrix, b: &CMatrix) -> CMatrix {
    a.kronecker(b)
}

/// Column-stacking vectorization. nalgebra stores column-major, so this is a
/// plain copy of the backing slice.
pub fn vectorize(m: &CMatrix) -> CVector {
    CVector::from_column_slice(m.as_slice())
}

pub fn unvectorize(v: &CVector, rows: usize, cols: usize) -> CMatrix {
    assert_eq!(v.len(), rows * cols, "unvectorize: length mismatch");
    CMatrix::from_column_slice(rows, cols, v.as_slice())
}

/// Matrix exponential (scaling-and-squaring with Padé approximation).
pub fn expm(m: &CMatrix) -> CMatrix {
    m.exp()
}

/// Eigenvalues of a Hermitian matrix, unordered. The input is assumed
/// Hermitian; callers validate where the spec requires it.
pub fn hermitian_eigenvalues(m: &CMatrix) -> Vec<f64> {
    if m.nrows() == 1 {
        return vec![m[(0, 0)].re];
    }
    if m.nrows() == 2 {
        let mid = 0.5 * (m[(0, 0)].re + m[(1, 1)].re);
        let half_gap = 0.5 * (m[(0, 0)].re - m[(1, 1)].re);
        let disc = (half_gap * half_gap + m[(0, 1)].norm_sqr()).sqrt();
        return vec![mid + disc, mid - disc];
    }
    m.clone().symmetric_eigen().eigenvalues.iter().copied().collect()
}

/// Eigendecomposition of a Hermitian matrix: `(eigenvalues, eigenvectors)`
/// with eigenvectors as columns.
pub fn hermitian_eigen(m: &CMatrix) -> (Vec<f64>, CMatrix) {
    let eig = m.clone().symmetric_eigen();
    (eig.eigenvalues.iter().copied().collect(), eig.eigenvectors)
}

pub fn min_hermitian_eigenvalue(m: &CMatrix) -> f64 {
    hermitian_eigenvalues(m).into_iter().fold(f64::INFINITY, f64::min)
}

/// Solve `A X = B` by LU with partial pivoting. `None` if singular.
pub fn solve(a: &CMatrix, b: &CMatrix) -> Option<CMatrix> {
    a.clone().lu().solve(b)
}

pub fn inverse(a: &CMatrix) -> Option<CMatrix> {
    a.clone().lu().try_inverse()
}

/// 2-norm condition number via singular values; `f64::INFINITY` when singular.
pub fn condition_number(a: &CMatrix) -> f64 {
    let sv = a.clone().svd(false, false).singular_values;
    let smax = sv.iter().copied().fold(0.0, f64::max);
    let smin = sv.iter().copied().fold(f64::INFINITY, f64::min);
    if smin <= 0.0 {
        f64::INFINITY
    } else {
        smax / smin
    }
}

/// `(A + A†)/2`.
pub fn hermitize(m: &CMatrix) -> CMatrix {
    (m + m.adjoint()) * cx(0.5, 0.0)
}

pub fn trace(m: &CMatrix) -> Complex64 {
    (0..m.nrows().min(m.ncols())).map(|i| m[(i, i)]).sum()
}

// ---------------------------------------------------------------------------
// Standard operators and kets
// ---------------------------------------------------------------------------

pub fn sigma_x() -> CMatrix {
    CMatrix::from_row_slice(2, 2, &[cx(0., 0.), cx(1., 0.), cx(1., 0.), cx(0., 0.)])
}

pub fn sigma_y() -> CMatrix {
    CMatrix::from_row_slice(2, 2, &[cx(0., 0.), cx(0., -1.), cx(0., 1.), cx(0., 0.)])
}

pub fn sigma_z() -> CMatrix {
    CMatrix::from_row_slice(2, 2, &[cx(1., 0.), cx(0., 0.), cx(0., 0.), cx(-1., 0.)])
}

/// Lowering operator |0⟩⟨1|.
pub fn sigma_minus() -> CMatrix {
    CMatrix::from_row_slice(2, 2, &[cx(0., 0.), cx(1., 0.), cx(0., 0.), cx(0., 0.)])
}

/// Raising operator |1⟩⟨0|.
pub fn sigma_plus() -> CMatrix {
    CMatrix::from_row_slice(2, 2, &[cx(0., 0.), cx(0., 0.), cx(1., 0.), cx(0., 0.)])
}

pub fn basis_ket(dim: usize, index: usize) -> CVector {
    assert!(index < dim, "basis_ket: index out of range");
    let mut v = CVector::zeros(dim);
    v[index] = cx(1.0, 0.0);
    v
}

pub fn projector(ket: &CVector) -> CMatrix {
    ket * ket.adjoint()
}
