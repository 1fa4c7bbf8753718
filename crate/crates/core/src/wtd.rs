//! Phase-type waiting-time distributions.
//!
//! A phase-type distribution is the absorption time of a transient Markov
//! chain with `m` stages: initial row vector α and subgenerator S (nonpositive
//! diagonal, nonnegative off-diagonal, row sums ≤ 0). Density, survival, and
//! Laplace transform are
//!
//! ```text
//! f(t) = α e^{St} s⃗,   g(t) = α e^{St} 1⃗,   f̂(u) = α (u1 − S)⁻¹ s⃗
//! ```
//!
//! with exit rates s⃗ = −S·1⃗. The class is closed under mixtures and
//! convolutions, and every transform is a rational function of u, which keeps
//! all Laplace-domain formulas of the semi-Markov modules exact.

use crate::error::{Error, Result};
use crate::linalg::{cx, CMatrix};
use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;
use rand::Rng;
use rand_distr::{Distribution, Exp};

const STRUCTURE_TOL: f64 = 1e-12;

#[derive(Debug, Clone, PartialEq)]
pub struct PhaseTypeWTD {
    initial: DVector<f64>,
    subgenerator: DMatrix<f64>,
    exit_rates: DVector<f64>,
}

impl PhaseTypeWTD {
    pub fn new(initial: Vec<f64>, subgenerator: DMatrix<f64>) -> Result<Self> {
        let m = initial.len();
        if m == 0 {
            return Err(Error::param("alpha", "empty initial vector"));
        }
        if subgenerator.nrows() != m || subgenerator.ncols() != m {
            return Err(Error::DimensionMismatch {
                expected: m,
                actual: subgenerator.nrows(),
            });
        }
        let alpha = DVector::from_vec(initial);
        if alpha.iter().any(|&a| a < -STRUCTURE_TOL) {
            return Err(Error::param("alpha", "negative initial probability"));
        }
        let total: f64 = alpha.sum();
        if (total - 1.0).abs() > STRUCTURE_TOL {
            return Err(Error::param(
                "alpha",
                format!("initial probabilities sum to {total}, expected 1"),
            ));
        }
        for i in 0..m {
            if subgenerator[(i, i)] > STRUCTURE_TOL {
                return Err(Error::param("S", format!("positive diagonal at stage {i}")));
            }
            let mut row_sum = 0.0;
            for j in 0..m {
                if i != j && subgenerator[(i, j)] < -STRUCTURE_TOL {
                    return Err(Error::param("S", format!("negative off-diagonal at ({i},{j})")));
                }
                row_sum += subgenerator[(i, j)];
            }
            if row_sum > STRUCTURE_TOL {
                return Err(Error::param("S", format!("row {i} sums to {row_sum} > 0")));
            }
        }
        // a proper distribution needs S invertible (absorption almost surely)
        if subgenerator.clone().lu().try_inverse().is_none() {
            return Err(Error::param("S", "singular subgenerator: absorption is not certain"));
        }
        let exit_rates = -(&subgenerator * DVector::from_element(m, 1.0));
        Ok(Self {
            initial: alpha,
            subgenerator,
            exit_rates,
        })
    }

    pub fn stages(&self) -> usize {
        self.initial.len()
    }

    pub fn initial(&self) -> &DVector<f64> {
        &self.initial
    }

    pub fn subgenerator(&self) -> &DMatrix<f64> {
        &self.subgenerator
    }

    pub fn exit_rates(&self) -> &DVector<f64> {
        &self.exit_rates
    }

    /// Density f(t) = α e^{St} s⃗.
    pub fn density(&self, t: f64) -> f64 {
        if t < 0.0 {
            return 0.0;
        }
        let e = (self.subgenerator.clone() * t).exp();
        (self.initial.transpose() * e * &self.exit_rates)[(0, 0)]
    }

    /// Survival probability g(t) = α e^{St} 1⃗, with g(0) = 1 and ġ = −f.
    pub fn survival(&self, t: f64) -> f64 {
        if t < 0.0 {
            return 1.0;
        }
        let e = (self.subgenerator.clone() * t).exp();
        (self.initial.transpose() * e).sum()
    }

    /// Mean waiting time −α S⁻¹ 1⃗.
    pub fn mean(&self) -> f64 {
        let inv = self
            .subgenerator
            .clone()
            .lu()
            .try_inverse()
            .expect("S invertible by construction");
        -(self.initial.transpose() * inv).sum()
    }

    fn resolvent_apply(&self, u: Complex64, rhs: &DVector<f64>) -> Result<DVector<Complex64>> {
        let m = self.stages();
        let mut a = CMatrix::zeros(m, m);
        for i in 0..m {
            for j in 0..m {
                a[(i, j)] = cx(-self.subgenerator[(i, j)], 0.0);
            }
            a[(i, i)] += u;
        }
        let b = CMatrix::from_fn(m, 1, |i, _| cx(rhs[i], 0.0));
        let x = a.lu().solve(&b).ok_or(Error::ContourPole { u })?;
        Ok(DVector::from_iterator(m, x.iter().copied()))
    }

    /// f̂(u) = α (u1 − S)⁻¹ s⃗ (rational in u).
    pub fn laplace_density(&self, u: Complex64) -> Result<Complex64> {
        let x = self.resolvent_apply(u, &self.exit_rates)?;
        Ok((0..self.stages()).map(|i| cx(self.initial[i], 0.0) * x[i]).sum())
    }

    /// ĝ(u) = α (u1 − S)⁻¹ 1⃗.
    pub fn laplace_survival(&self, u: Complex64) -> Result<Complex64> {
        let ones = DVector::from_element(self.stages(), 1.0);
        let x = self.resolvent_apply(u, &ones)?;
        Ok((0..self.stages()).map(|i| cx(self.initial[i], 0.0) * x[i]).sum())
    }

    /// Draw an absorption time by simulating the stage chain exactly.
    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> f64 {
        let m = self.stages();
        // initial stage from α
        let mut stage = {
            let draw: f64 = rng.random();
            let mut acc = 0.0;
            let mut chosen = m - 1;
            for i in 0..m {
                acc += self.initial[i];
                if draw < acc {
                    chosen = i;
                    break;
                }
            }
            chosen
        };
        let mut total = 0.0;
        loop {
            let hold_rate = -self.subgenerator[(stage, stage)];
            debug_assert!(hold_rate > 0.0, "transient stage must have positive exit rate");
            total += Exp::new(hold_rate).expect("positive rate").sample(rng);
            // absorb or move to the next stage
            let draw: f64 = rng.random::<f64>() * hold_rate;
            let mut acc = self.exit_rates[stage];
            if draw < acc {
                return total;
            }
            let mut next = stage;
            for j in 0..m {
                if j == stage {
                    continue;
                }
                acc += self.subgenerator[(stage, j)];
                if draw < acc {
                    next = j;
                    break;
                }
            }
            stage = next;
        }
    }

    // --- builders ----------------------------------------------------------

    /// Exponential waiting time with rate λ: f(t) = λe^{−λt}.
    pub fn exponential(rate: f64) -> Result<Self> {
        if rate <= 0.0 {
            return Err(Error::param("rate", format!("nonpositive rate {rate}")));
        }
        Self::new(vec![1.0], DMatrix::from_element(1, 1, -rate))
    }

    /// Erlang distribution: convolution of `k` exponentials with rate λ,
    /// f̂(u) = (λ/(u+λ))^k.
    pub fn erlang(k: usize, rate: f64) -> Result<Self> {
        if k == 0 {
            return Err(Error::param("k", "need at least one stage"));
        }
        if rate <= 0.0 {
            return Err(Error::param("rate", format!("nonpositive rate {rate}")));
        }
        let mut s = DMatrix::zeros(k, k);
        for i in 0..k {
            s[(i, i)] = -rate;
            if i + 1 < k {
                s[(i, i + 1)] = rate;
            }
        }
        let mut alpha = vec![0.0; k];
        alpha[0] = 1.0;
        Self::new(alpha, s)
    }

    /// Mixture of exponentials with the given (weight, rate) components.
    pub fn hyperexponential(components: &[(f64, f64)]) -> Result<Self> {
        if components.is_empty() {
            return Err(Error::param("components", "empty mixture"));
        }
        let total: f64 = components.iter().map(|&(w, _)| w).sum();
        if (total - 1.0).abs() > STRUCTURE_TOL {
            return Err(Error::param("components", format!("weights sum to {total}, expected 1")));
        }
        let m = components.len();
        let mut s = DMatrix::zeros(m, m);
        let mut alpha = Vec::with_capacity(m);
        for (i, &(w, rate)) in components.iter().enumerate() {
            if w < 0.0 {
                return Err(Error::param("components", format!("negative weight {w}")));
            }
            if rate <= 0.0 {
                return Err(Error::param("components", format!("nonpositive rate {rate}")));
            }
            s[(i, i)] = -rate;
            alpha.push(w);
        }
        Self::new(alpha, s)
    }

    /// Distribution of the sum of two independent phase-type waiting times:
    /// block construction (α_a, [S_a, s⃗_a α_b; 0, S_b]).
    pub fn convolution(a: &Self, b: &Self) -> Result<Self> {
        let (ma, mb) = (a.stages(), b.stages());
        let m = ma + mb;
        let mut s = DMatrix::zeros(m, m);
        for i in 0..ma {
            for j in 0..ma {
                s[(i, j)] = a.subgenerator[(i, j)];
            }
            for j in 0..mb {
                s[(i, ma + j)] = a.exit_rates[i] * b.initial[j];
            }
        }
        for i in 0..mb {
            for j in 0..mb {
                s[(ma + i, ma + j)] = b.subgenerator[(i, j)];
            }
        }
        let mut alpha = vec![0.0; m];
        alpha[..ma].copy_from_slice(a.initial.as_slice());
        Self::new(alpha, s)
    }

    /// Mixture w·a + (1−w)·b by block-diagonal construction.
    pub fn mixture(w: f64, a: &Self, b: &Self) -> Result<Self> {
        if !(0.0..=1.0).contains(&w) {
            return Err(Error::param("w", format!("mixture weight {w} outside [0,1]")));
        }
        let (ma, mb) = (a.stages(), b.stages());
        let m = ma + mb;
        let mut s = DMatrix::zeros(m, m);
        s.view_mut((0, 0), (ma, ma)).copy_from(&a.subgenerator);
        s.view_mut((ma, ma), (mb, mb)).copy_from(&b.subgenerator);
        let mut alpha = vec![0.0; m];
        for i in 0..ma {
            alpha[i] = w * a.initial[i];
        }
        for i in 0..mb {
            alpha[ma + i] = (1.0 - w) * b.initial[i];
        }
        Self::new(alpha, s)
    }
}
