//! GKSL (Lindblad) generators, semigroup propagation, and the
//! jump / contraction decomposition with its path expansion.

use crate::error::{Error, Result};
use crate::linalg::{
    cx, expm, hermiticity_defect, identity, tensor, trace, CMatrix,
};
use crate::map::QuantumMap;
use crate::state::DensityMatrix;

/// A GKSL model: Hamiltonian plus rate/Lindblad-operator channels (ħ = 1).
#[derive(Debug, Clone)]
pub struct Channel {
    pub rate: f64,
    pub operator: CMatrix,
}

#[derive(Debug, Clone)]
pub struct GKSLModel {
    dim: usize,
    hamiltonian: CMatrix,
    channels: Vec<Channel>,
}

impl GKSLModel {
    pub fn new(hamiltonian: CMatrix, channels: Vec<Channel>) -> Result<Self> {
        let dim = hamiltonian.nrows();
        if hamiltonian.ncols() != dim || dim == 0 {
            return Err(Error::DimensionMismatch {
                expected: dim,
                actual: hamiltonian.ncols(),
            });
        }
        let defect = hermiticity_defect(&hamiltonian);
        if defect > 1e-12 {
            return Err(Error::NotHermitian { defect });
        }
        for (index, ch) in channels.iter().enumerate() {
            if ch.rate < 0.0 {
                return Err(Error::NegativeRate {
                    index,
                    value: ch.rate,
                });
            }
            if ch.operator.nrows() != dim || ch.operator.ncols() != dim {
                return Err(Error::DimensionMismatch {
                    expected: dim,
                    actual: ch.operator.nrows(),
                });
            }
        }
        Ok(Self {
            dim,
            hamiltonian,
            channels,
        })
    }

    /// The trivial model (H = 0, no channels) generating the identity family.
    pub fn trivial(dim: usize) -> Self {
        Self {
            dim,
            hamiltonian: CMatrix::zeros(dim, dim),
            channels: Vec::new(),
        }
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn hamiltonian(&self) -> &CMatrix {
        &self.hamiltonian
    }

    pub fn channels(&self) -> &[Channel] {
        &self.channels
    }

    pub fn is_trivial(&self) -> bool {
        self.channels.is_empty() && self.hamiltonian.iter().all(|z| z.norm() == 0.0)
    }

    /// Superoperator of the generator
    /// `ρ ↦ −i[H,ρ] + Σ_k γ_k (L_k ρ L_k† − ½{L_k†L_k, ρ})`.
    pub fn liouvillian(&self) -> CMatrix {
        let d = self.dim;
        let id = identity(d);
        let mut l = tensor(&id, &self.hamiltonian) - tensor(&self.hamiltonian.transpose(), &id);
        l *= cx(0.0, -1.0);
        for ch in &self.channels {
            let g = cx(ch.rate, 0.0);
            let op = &ch.operator;
            let op_dag_op = op.adjoint() * op;
            l += tensor(&op.map(|z| z.conj()), op) * g;
            l -= (tensor(&id, &op_dag_op) + tensor(&op_dag_op.transpose(), &id)) * (g * cx(0.5, 0.0));
        }
        l
    }

    /// Semigroup propagator Φ(t,0) = exp(t𝓛) as a superoperator map.
    pub fn evolve(&self, t: f64) -> Result<QuantumMap> {
        if t < 0.0 {
            return Err(Error::param("t", format!("negative time {t}")));
        }
        let s = expm(&(self.liouvillian() * cx(t, 0.0)));
        QuantumMap::from_superoperator(s)
    }

    /// Non-Hermitian drift `W = −iH − ½ Σ_k γ_k L_k†L_k` of the
    /// no-jump evolution.
    pub fn drift(&self) -> CMatrix {
        let mut w = &self.hamiltonian * cx(0.0, -1.0);
        for ch in &self.channels {
            w -= ch.operator.adjoint() * &ch.operator * cx(0.5 * ch.rate, 0.0);
        }
        w
    }

    /// Contraction semigroup `ρ ↦ e^{Wt} ρ e^{W†t}`; completely positive and
    /// trace non-increasing.
    pub fn contraction(&self, t: f64) -> Result<QuantumMap> {
        if t < 0.0 {
            return Err(Error::param("t", format!("negative time {t}")));
        }
        let k = expm(&(self.drift() * cx(t, 0.0)));
        QuantumMap::from_kraus(vec![k])
    }

    /// Jump map `ρ ↦ Σ_k γ_k L_k ρ L_k†`.
    pub fn jump(&self) -> QuantumMap {
        let ops: Vec<CMatrix> = self
            .channels
            .iter()
            .map(|ch| &ch.operator * cx(ch.rate.sqrt(), 0.0))
            .collect();
        if ops.is_empty() {
            QuantumMap::zero(self.dim, self.dim)
        } else {
            QuantumMap::from_kraus(ops).expect("validated dims")
        }
    }

    fn apply_jump(&self, x: &CMatrix) -> CMatrix {
        let mut out = CMatrix::zeros(self.dim, self.dim);
        for ch in &self.channels {
            out += &ch.operator * x * ch.operator.adjoint() * cx(ch.rate, 0.0);
        }
        out
    }

    /// Path expansion of exp(t𝓛) truncated at `k_max` jumps:
    /// the zero-jump term `𝓡(t)[ρ0]` plus nested time-ordered integrals with
    /// `k` jump insertions, each evaluated by a fixed-node trapezoidal rule
    /// with `n_quad` nodes on [0, t].
    pub fn dyson(
        &self,
        rho0: &DensityMatrix,
        t: f64,
        k_max: usize,
        n_quad: usize,
    ) -> Result<TruncatedState> {
        if t < 0.0 {
            return Err(Error::param("t", format!("negative time {t}")));
        }
        if n_quad < 2 {
            return Err(Error::param("n_quad", "need at least two quadrature nodes"));
        }
        if rho0.dim() != self.dim {
            return Err(Error::DimensionMismatch {
                expected: self.dim,
                actual: rho0.dim(),
            });
        }
        if t == 0.0 {
            return Ok(TruncatedState {
                matrix: rho0.matrix().clone(),
                trace_deficit: 0.0,
            });
        }
        let n = n_quad;
        let h = t / (n - 1) as f64;
        // powers of the step propagator: e^{W·jh}
        let step = expm(&(self.drift() * cx(h, 0.0)));
        let mut powers = Vec::with_capacity(n);
        powers.push(identity(self.dim));
        for j in 1..n {
            powers.push(&powers[j - 1] * &step);
        }
        let no_jump = |j: usize, x: &CMatrix| -> CMatrix { &powers[j] * x * powers[j].adjoint() };

        let mut level: Vec<CMatrix> = (0..n).map(|j| no_jump(j, rho0.matrix())).collect();
        let mut acc = level[n - 1].clone();
        for _ in 1..=k_max {
            // jump applied to the previous level at every node
            let jumped: Vec<CMatrix> = level.iter().map(|x| self.apply_jump(x)).collect();
            let mut next: Vec<CMatrix> = Vec::with_capacity(n);
            next.push(CMatrix::zeros(self.dim, self.dim));
            for j in 1..n {
                let mut integral = CMatrix::zeros(self.dim, self.dim);
                for (m, jm) in jumped.iter().enumerate().take(j + 1) {
                    let weight = if m == 0 || m == j { 0.5 } else { 1.0 };
                    integral += no_jump(j - m, jm) * cx(weight * h, 0.0);
                }
                next.push(integral);
            }
            acc += &next[n - 1];
            level = next;
        }
        let trace_deficit = 1.0 - trace(&acc).re;
        Ok(TruncatedState {
            matrix: acc,
            trace_deficit,
        })
    }
}

/// A truncated-expansion state: Hermitian and positive semidefinite by
/// construction, with trace 1 − `trace_deficit`.
#[derive(Debug, Clone)]
pub struct TruncatedState {
    pub matrix: CMatrix,
    pub trace_deficit: f64,
}
