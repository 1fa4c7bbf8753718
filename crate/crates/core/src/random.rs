//! Seeded random states, channels, and models.
//!
//! These generators back the property-test fixtures and the sampling-based
//! certificates (measure candidate pairs, positivity spot checks). They make
//! no claim of uniformity beyond what the constructions give: Ginibre states,
//! Kraus lists from complex Gaussians with trace-preservation enforced by an
//! inverse square root of Σ K†K.

use crate::gksl::{Channel, GKSLModel};
use crate::linalg::{cx, expm, hermitize, identity, CMatrix, CVector};
use crate::map::QuantumMap;
use crate::state::DensityMatrix;
use rand::Rng;
use rand_distr::{Distribution, StandardNormal};

pub fn complex_gaussian_matrix<R: Rng + ?Sized>(rng: &mut R, rows: usize, cols: usize) -> CMatrix {
    CMatrix::from_fn(rows, cols, |_, _| {
        let re: f64 = StandardNormal.sample(rng);
        let im: f64 = StandardNormal.sample(rng);
        cx(re, im)
    })
}

pub fn random_pure_state<R: Rng + ?Sized>(rng: &mut R, dim: usize) -> CVector {
    loop {
        let v = CVector::from_fn(dim, |_, _| {
            let re: f64 = StandardNormal.sample(rng);
            let im: f64 = StandardNormal.sample(rng);
            cx(re, im)
        });
        let norm = v.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
        if norm > 1e-6 {
            return v / cx(norm, 0.0);
        }
    }
}

/// Ginibre state G G†/Tr with `rank` columns in G.
pub fn random_density_matrix<R: Rng + ?Sized>(rng: &mut R, dim: usize, rank: usize) -> DensityMatrix {
    let g = complex_gaussian_matrix(rng, dim, rank.max(1));
    let m = &g * g.adjoint();
    let tr = crate::linalg::trace(&m).re;
    DensityMatrix::new(m * cx(1.0 / tr, 0.0)).expect("Ginibre construction is a state")
}

pub fn random_hermitian<R: Rng + ?Sized>(rng: &mut R, dim: usize) -> CMatrix {
    hermitize(&complex_gaussian_matrix(rng, dim, dim))
}

/// exp(iH) for a random Hermitian H.
pub fn random_unitary<R: Rng + ?Sized>(rng: &mut R, dim: usize) -> CMatrix {
    expm(&(random_hermitian(rng, dim) * cx(0.0, 1.0)))
}

/// Random CPTP map: `n_kraus` complex-Gaussian Kraus operators normalized by
/// M^{-1/2} with M = Σ K†K.
pub fn random_cptp<R: Rng + ?Sized>(rng: &mut R, dim: usize, n_kraus: usize) -> QuantumMap {
    let raw: Vec<CMatrix> = (0..n_kraus.max(1))
        .map(|_| complex_gaussian_matrix(rng, dim, dim))
        .collect();
    let mut total = CMatrix::zeros(dim, dim);
    for k in &raw {
        total += k.adjoint() * k;
    }
    // inverse square root through the Hermitian eigendecomposition
    let (eigvals, eigvecs) = crate::linalg::hermitian_eigen(&hermitize(&total));
    let inv_sqrt_diag = CMatrix::from_fn(dim, dim, |i, j| {
        if i == j {
            cx(1.0 / eigvals[i].max(1e-300).sqrt(), 0.0)
        } else {
            cx(0.0, 0.0)
        }
    });
    let inv_sqrt = &eigvecs * inv_sqrt_diag * eigvecs.adjoint();
    let ops: Vec<CMatrix> = raw.into_iter().map(|k| k * &inv_sqrt).collect();
    QuantumMap::from_kraus(ops).expect("dims fixed")
}

/// Random GKSL model with `n_channels` Frobenius-normalized Lindblad
/// operators and rates drawn uniformly from `rate_range`. Keeping rates O(1)
/// keeps exp(t𝓛) comfortably invertible on desk-scale grids.
pub fn random_gksl<R: Rng + ?Sized>(
    rng: &mut R,
    dim: usize,
    n_channels: usize,
    rate_range: (f64, f64),
) -> GKSLModel {
    let h = random_hermitian(rng, dim) * cx(0.5, 0.0);
    let channels = (0..n_channels)
        .map(|_| {
            let raw = complex_gaussian_matrix(rng, dim, dim);
            let norm = crate::linalg::frobenius_norm(&raw);
            Channel {
                rate: rng.random_range(rate_range.0..rate_range.1),
                operator: raw * cx(1.0 / norm, 0.0),
            }
        })
        .collect();
    GKSLModel::new(h, channels).expect("construction keeps invariants")
}

/// Random unital map that is positive but not completely positive:
/// transpose composed with a random unitary conjugation.
pub fn random_positive_not_cp<R: Rng + ?Sized>(rng: &mut R, dim: usize) -> QuantumMap {
    let u = random_unitary(rng, dim);
    let conj = QuantumMap::from_unitary(&u).expect("unitary");
    let transpose = transpose_map(dim);
    conj.compose(&transpose).expect("dims match")
}

/// The transpose map as a superoperator (positive, not CP).
pub fn transpose_map(dim: usize) -> QuantumMap {
    let d2 = dim * dim;
    let mut s = CMatrix::zeros(d2, d2);
    // vec(Xᵀ)[j·d+i] = vec(X)[i·d+j]
    for i in 0..dim {
        for j in 0..dim {
            s[(j * dim + i, i * dim + j)] = cx(1.0, 0.0);
        }
    }
    let _ = identity(dim);
    QuantumMap::from_superoperator(s).expect("square dims")
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::max_abs;
    use rand_chacha::rand_core::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn random_cptp_passes_cptp() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        for dim in [2, 3] {
            for _ in 0..10 {
                let m = random_cptp(&mut rng, dim, 3);
                let rep = m.is_cptp(1e-10);
                assert!(rep.cp && rep.tp, "defects: {:?}", rep);
            }
        }
    }

    #[test]
    fn transpose_composition_is_positive_not_cp() {
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        let m = random_positive_not_cp(&mut rng, 2);
        let rep = m.is_cptp(1e-10);
        assert!(!rep.cp);
        assert!(rep.tp);
        // positivity on a few pure states
        for _ in 0..20 {
            let ket = random_pure_state(&mut rng, 2);
            let rho = crate::linalg::projector(&ket);
            let out = m.apply_matrix(&rho).unwrap();
            assert!(crate::linalg::min_hermitian_eigenvalue(&hermitize(&out)) > -1e-12);
        }
    }

    #[test]
    fn random_unitary_is_unitary() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let u = random_unitary(&mut rng, 3);
        assert!(max_abs(&(u.adjoint() * &u - identity(3))) < 1e-12);
    }

    #[test]
    fn seeded_generation_is_deterministic() {
        let a = random_density_matrix(&mut ChaCha8Rng::seed_from_u64(9), 3, 3);
        let b = random_density_matrix(&mut ChaCha8Rng::seed_from_u64(9), 3, 3);
        assert_eq!(a.matrix(), b.matrix());
    }
}
