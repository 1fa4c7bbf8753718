//! Classical semi-Markov processes on a discrete state space: the
//! generalized master equation in resolvent form, event-driven Monte Carlo,
//! and the diagonal quantum embedding.

use crate::error::{Error, Result};
use crate::gksl::GKSLModel;
use crate::laplace::talbot_invert;
use crate::linalg::{cx, CMatrix};
use crate::map::QuantumMap;
use crate::semimarkov::SemiMarkovModel;
use crate::wtd::PhaseTypeWTD;
use nalgebra::DMatrix;
use rand::Rng;
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

const STRUCTURE_TOL: f64 = 1e-12;

/// Jump chain with stochastic matrix π (π[n][m] = probability of jumping
/// m → n, columns sum to one) and per-site waiting-time distributions.
#[derive(Debug, Clone)]
pub struct ClassicalSemiMarkov {
    transition: DMatrix<f64>,
    wtds: Vec<PhaseTypeWTD>,
}

impl ClassicalSemiMarkov {
    pub fn new(transition: DMatrix<f64>, wtds: Vec<PhaseTypeWTD>) -> Result<Self> {
        let n = transition.nrows();
        if transition.ncols() != n || n == 0 {
            return Err(Error::DimensionMismatch {
                expected: n,
                actual: transition.ncols(),
            });
        }
        if wtds.len() != n {
            return Err(Error::DimensionMismatch {
                expected: n,
                actual: wtds.len(),
            });
        }
        for m in 0..n {
            let mut col_sum = 0.0;
            for row in 0..n {
                if transition[(row, m)] < -STRUCTURE_TOL {
                    return Err(Error::param(
                        "pi",
                        format!("negative entry at ({row},{m})"),
                    ));
                }
                col_sum += transition[(row, m)];
            }
            if (col_sum - 1.0).abs() > STRUCTURE_TOL {
                return Err(Error::param(
                    "pi",
                    format!("column {m} sums to {col_sum}, expected 1"),
                ));
            }
        }
        Ok(Self { transition, wtds })
    }

    pub fn sites(&self) -> usize {
        self.transition.nrows()
    }

    pub fn transition(&self) -> &DMatrix<f64> {
        &self.transition
    }

    pub fn wtds(&self) -> &[PhaseTypeWTD] {
        &self.wtds
    }

    fn validate_p0(&self, p0: &[f64]) -> Result<()> {
        if p0.len() != self.sites() {
            return Err(Error::DimensionMismatch {
                expected: self.sites(),
                actual: p0.len(),
            });
        }
        if p0.iter().any(|&p| p < -STRUCTURE_TOL) {
            return Err(Error::param("P0", "negative probability"));
        }
        let total: f64 = p0.iter().sum();
        if (total - 1.0).abs() > STRUCTURE_TOL {
            return Err(Error::param("P0", format!("probabilities sum to {total}")));
        }
        Ok(())
    }

    /// One-point probabilities P_n(t) on `grid` by Talbot inversion of the
    /// resolvent form `P̂(u) = Ĝ(u)(1 − π Φ̂(u))⁻¹ P₀` with diagonal
    /// Φ̂ = diag f̂_m, Ĝ = diag ĝ_m.
    pub fn gme_solve(&self, p0: &[f64], grid: &[f64], talbot_nodes: usize) -> Result<Vec<Vec<f64>>> {
        self.validate_p0(p0)?;
        let n = self.sites();
        let transform = |u| -> Result<CMatrix> {
            let mut a = CMatrix::zeros(n, n);
            let mut f_hats = Vec::with_capacity(n);
            let mut g_hats = Vec::with_capacity(n);
            for wtd in &self.wtds {
                f_hats.push(wtd.laplace_density(u)?);
                g_hats.push(wtd.laplace_survival(u)?);
            }
            for r in 0..n {
                for c in 0..n {
                    a[(r, c)] = -cx(self.transition[(r, c)], 0.0) * f_hats[c];
                }
                a[(r, r)] += cx(1.0, 0.0);
            }
            let rhs = CMatrix::from_fn(n, 1, |i, _| cx(p0[i], 0.0));
            let mut y = a.lu().solve(&rhs).ok_or(Error::ContourPole { u })?;
            for i in 0..n {
                y[(i, 0)] *= g_hats[i];
            }
            Ok(y)
        };
        let mut out = Vec::with_capacity(grid.len());
        for &t in grid {
            if t < 0.0 {
                return Err(Error::param("grid", format!("negative time {t}")));
            }
            if t == 0.0 {
                out.push(p0.to_vec());
            } else {
                let col = talbot_invert(transform, t, talbot_nodes)?;
                out.push((0..n).map(|i| col[(i, 0)].re).collect());
            }
        }
        Ok(out)
    }

    /// Event-driven simulation; trajectory `i` uses ChaCha stream `i`, with
    /// fixed-order chunked averaging for bit-reproducibility.
    pub fn mc(&self, p0: &[f64], grid: &[f64], n_traj: usize, seed: u64) -> Result<Vec<Vec<f64>>> {
        self.validate_p0(p0)?;
        if n_traj == 0 {
            return Err(Error::param("n_traj", "need at least one trajectory"));
        }
        if grid.is_empty() {
            return Err(Error::param("grid", "empty grid"));
        }
        for w in grid.windows(2) {
            if !(w[1] > w[0]) {
                return Err(Error::param("grid", "grid times must be strictly increasing"));
            }
        }
        let n = self.sites();
        const CHUNK: usize = 1024;
        let n_chunks = n_traj.div_ceil(CHUNK);
        let chunk_counts: Vec<Vec<f64>> = (0..n_chunks)
            .into_par_iter()
            .map(|c| {
                let lo = c * CHUNK;
                let hi = ((c + 1) * CHUNK).min(n_traj);
                let mut counts = vec![0.0; grid.len() * n];
                for traj in lo..hi {
                    let mut rng = ChaCha8Rng::seed_from_u64(seed);
                    rng.set_stream(traj as u64);
                    let mut site = sample_index(&mut rng, p0);
                    let mut next_event = self.wtds[site].sample(&mut rng);
                    for (gi, &t) in grid.iter().enumerate() {
                        while next_event <= t {
                            site = self.sample_destination(&mut rng, site);
                            next_event += self.wtds[site].sample(&mut rng);
                        }
                        counts[gi * n + site] += 1.0;
                    }
                }
                counts
            })
            .collect();
        let mut totals = vec![0.0; grid.len() * n];
        for chunk in &chunk_counts {
            for (t, c) in totals.iter_mut().zip(chunk.iter()) {
                *t += c;
            }
        }
        Ok((0..grid.len())
            .map(|gi| {
                (0..n)
                    .map(|s| totals[gi * n + s] / n_traj as f64)
                    .collect()
            })
            .collect())
    }

    fn sample_destination<R: Rng + ?Sized>(&self, rng: &mut R, from: usize) -> usize {
        let n = self.sites();
        let draw: f64 = rng.random();
        let mut acc = 0.0;
        for to in 0..n {
            acc += self.transition[(to, from)];
            if draw < acc {
                return to;
            }
        }
        n - 1
    }

    /// Diagonal embedding into the quantum semi-Markov form: requires a
    /// site-independent waiting time (the quantum model carries a single f),
    /// ℰ with Kraus operators {√π_nm |n⟩⟨m|}, and a trivial inter-jump
    /// family. Diagonals of the quantum solution then reproduce P_n(t).
    pub fn embed(&self) -> Result<SemiMarkovModel> {
        let n = self.sites();
        let first = &self.wtds[0];
        for (i, wtd) in self.wtds.iter().enumerate().skip(1) {
            let same = wtd.stages() == first.stages()
                && wtd
                    .initial()
                    .iter()
                    .zip(first.initial().iter())
                    .all(|(a, b)| (a - b).abs() <= STRUCTURE_TOL)
                && wtd
                    .subgenerator()
                    .iter()
                    .zip(first.subgenerator().iter())
                    .all(|(a, b)| (a - b).abs() <= STRUCTURE_TOL);
            if !same {
                return Err(Error::UnsupportedEmbedding {
                    reason: format!(
                        "site {i} has a different waiting-time distribution; the quantum \
                         form carries a single f"
                    ),
                });
            }
        }
        let mut kraus = Vec::new();
        for to in 0..n {
            for from in 0..n {
                let p = self.transition[(to, from)];
                if p > 0.0 {
                    let mut k = CMatrix::zeros(n, n);
                    k[(to, from)] = cx(p.sqrt(), 0.0);
                    kraus.push(k);
                }
            }
        }
        SemiMarkovModel::new(
            QuantumMap::from_kraus(kraus)?,
            GKSLModel::trivial(n),
            first.clone(),
        )
    }
}

fn sample_index<R: Rng + ?Sized>(rng: &mut R, probs: &[f64]) -> usize {
    let draw: f64 = rng.random();
    let mut acc = 0.0;
    for (i, &p) in probs.iter().enumerate() {
        acc += p;
        if draw < acc {
            return i;
        }
    }
    probs.len() - 1
}

/// Symmetric two-site flip matrix, the telegraph-process benchmark.
pub fn telegraph_transition() -> DMatrix<f64> {
    DMatrix::from_row_slice(2, 2, &[0.0, 1.0, 1.0, 0.0])
}

/// Cyclic shift on `n` sites.
pub fn cyclic_transition(n: usize) -> DMatrix<f64> {
    DMatrix::from_fn(n, n, |to, from| if to == (from + 1) % n { 1.0 } else { 0.0 })
}
