//! Second-order product-integration march for the integro-differential
//! master equation dρ/dt = ∫₀^t K(t−τ)[ρ(τ)] dτ.
//!
//! The sampled kernel is split into a singular part `K_δ·δ(t)` and a regular
//! part sampled on the grid: memory kernels of semi-Markov type generically
//! carry a Markovian δ component (for an exponential waiting time with
//! matched jump and inter-jump maps the kernel is *purely* the δ part), which
//! no grid sampling can represent. The march treats the δ part as a local
//! generator and the regular part by trapezoidal product integration, both
//! implicit in the unknown, so the scheme stays second order.

use crate::error::{Error, Result};
use crate::linalg::{cx, identity, unvectorize, vectorize, CMatrix, CVector};
use crate::state::DensityMatrix;

/// Superoperator kernel sampled on a uniform grid: `K(t) = delta·δ(t) +
/// regular(t)` with `samples[j] = regular(j·step)`.
#[derive(Debug, Clone)]
pub struct SampledKernel {
    pub step: f64,
    pub delta: CMatrix,
    pub samples: Vec<CMatrix>,
}

impl SampledKernel {
    pub fn dim(&self) -> usize {
        (self.delta.nrows() as f64).sqrt().round() as usize
    }

    fn validate(&self, n_steps: usize) -> Result<()> {
        if !(self.step > 0.0) {
            return Err(Error::param("step", "kernel step must be positive"));
        }
        let d2 = self.delta.nrows();
        if self.delta.ncols() != d2 {
            return Err(Error::DimensionMismatch {
                expected: d2,
                actual: self.delta.ncols(),
            });
        }
        if self.samples.len() < n_steps + 1 {
            return Err(Error::param(
                "samples",
                format!("need {} kernel samples, got {}", n_steps + 1, self.samples.len()),
            ));
        }
        for s in &self.samples {
            if s.nrows() != d2 || s.ncols() != d2 {
                return Err(Error::DimensionMismatch {
                    expected: d2,
                    actual: s.nrows(),
                });
            }
        }
        Ok(())
    }
}

/// March `n_steps` uniform steps from ρ0; returns the states at all
/// `n_steps + 1` grid nodes (raw matrices; validation is the caller's
/// choice of tolerance since the defect scales with the step size).
pub fn solve_volterra(
    kernel: &SampledKernel,
    rho0: &DensityMatrix,
    n_steps: usize,
) -> Result<Vec<CMatrix>> {
    kernel.validate(n_steps)?;
    let d = rho0.dim();
    let d2 = d * d;
    if kernel.delta.nrows() != d2 {
        return Err(Error::DimensionMismatch {
            expected: kernel.delta.nrows(),
            actual: d2,
        });
    }
    let h = kernel.step;
    let half_h = cx(0.5 * h, 0.0);

    // implicit matrix: 1 − (h/2)K_δ − (h²/4)K_reg(0)
    let implicit = identity(d2) - &kernel.delta * half_h - &kernel.samples[0] * (half_h * half_h);
    let lu = implicit.lu();

    let mut states: Vec<CVector> = Vec::with_capacity(n_steps + 1);
    let mut derivs: Vec<CVector> = Vec::with_capacity(n_steps + 1);
    states.push(vectorize(rho0.matrix()));
    derivs.push(&kernel.delta * &states[0]);

    for n in 0..n_steps {
        // trapezoidal convolution at t_{n+1}, without the unknown endpoint
        let mut conv = &kernel.samples[n + 1] * &states[0] * cx(0.5, 0.0);
        for j in 1..=n {
            conv += &kernel.samples[n + 1 - j] * &states[j];
        }
        conv *= cx(h, 0.0);
        let rhs_vec = &states[n] + (&derivs[n] + &conv) * half_h;
        let rhs = CMatrix::from_iterator(d2, 1, rhs_vec.iter().copied());
        let next = lu
            .solve(&rhs)
            .ok_or_else(|| Error::param("kernel", "implicit Volterra step is singular"))?;
        let next = CVector::from_iterator(d2, next.iter().copied());
        let deriv = &kernel.delta * &next + &conv + &kernel.samples[0] * &next * half_h;
        states.push(next);
        derivs.push(deriv);
    }

    Ok(states
        .into_iter()
        .map(|v| unvectorize(&v, d, d))
        .collect())
}
