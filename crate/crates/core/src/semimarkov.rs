//! Quantum semi-Markov dynamics: a CPTP jump transformation applied at
//! renewal times drawn from a phase-type waiting-time distribution,
//! interspersed with a CPTP semigroup evolution.
//!
//! Restricting the waiting time to phase type and the inter-jump family to a
//! GKSL-generated semigroup makes every Laplace-domain object a rational
//! matrix function: with `A = S ⊗ 1_{d²} + 1_m ⊗ 𝓛_F`,
//!
//! ```text
//! f̂ℱ(u) = (α ⊗ 1)(u1 − A)⁻¹(s⃗ ⊗ 1),   ĝℱ(u) = (α ⊗ 1)(u1 − A)⁻¹(1⃗ ⊗ 1)
//! ```
//!
//! which evaluate exactly at any complex u off the spectrum. The solution,
//! the memory kernels in both operator orderings, and the classical
//! generalized master equation all reduce to such evaluations plus a fixed
//! Talbot inversion.

use crate::error::{Error, Result};
use crate::family::{uniform_grid, DynamicsFamily};
use crate::gksl::GKSLModel;
use crate::laplace::{talbot_invert, TalbotConfig};
use crate::linalg::{cx, expm, identity, tensor, unvectorize, vectorize, CMatrix, CVector};
use crate::map::QuantumMap;
use crate::state::{DensityMatrix, StateTolerance};
use crate::volterra::SampledKernel;
use crate::wtd::PhaseTypeWTD;
use num_complex::Complex64;
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

/// Operator ordering of the memory kernel.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum KernelOrdering {
    /// `K̂(u) = (ĝℱ)⁻¹ f̂ℱ ℰ − ((ĝℱ)⁻¹ − u)`
    Micromaser,
    /// `K̂(u) = ℰ f̂ℱ (ĝℱ)⁻¹ − ((ĝℱ)⁻¹ − u)`
    Collision,
}

/// Validation state produced by a truncated series evaluation: trace falls
/// short of one by at most the renewal tail probability.
#[derive(Debug, Clone)]
pub struct SeriesState {
    pub matrix: CMatrix,
    /// 1 − Σ_{k ≤ k_max} P(k jumps by t), computed from the classical renewal
    /// process on the same quadrature.
    pub tail_bound: f64,
}

impl SeriesState {
    pub fn into_state(self, tol: &StateTolerance) -> Result<DensityMatrix> {
        DensityMatrix::with_tolerance(self.matrix, tol)
    }
}

#[derive(Debug, Clone)]
pub struct SemiMarkovModel {
    dim: usize,
    jump: QuantumMap,
    jump_super: CMatrix,
    inter: GKSLModel,
    inter_liouvillian: CMatrix,
    wtd: PhaseTypeWTD,
}

impl SemiMarkovModel {
    /// `jump` must be CPTP; `inter` generates the inter-jump CPTP family
    /// ℱ(t) = exp(t𝓛_F).
    pub fn new(jump: QuantumMap, inter: GKSLModel, wtd: PhaseTypeWTD) -> Result<Self> {
        let dim = inter.dim();
        if jump.dim_in() != dim || jump.dim_out() != dim {
            return Err(Error::DimensionMismatch {
                expected: dim,
                actual: jump.dim_in(),
            });
        }
        let report = jump.is_cptp(1e-8);
        if !report.cp || !report.tp {
            return Err(Error::param(
                "jump",
                format!(
                    "jump transformation must be CPTP (min Choi eig {:.3e}, TP defect {:.3e})",
                    report.min_choi_eig, report.tp_defect
                ),
            ));
        }
        let jump_super = jump.superoperator();
        let inter_liouvillian = inter.liouvillian();
        Ok(Self {
            dim,
            jump,
            jump_super,
            inter,
            inter_liouvillian,
            wtd,
        })
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn jump_map(&self) -> &QuantumMap {
        &self.jump
    }

    pub fn inter_generator(&self) -> &GKSLModel {
        &self.inter
    }

    pub fn wtd(&self) -> &PhaseTypeWTD {
        &self.wtd
    }

    // --- Laplace building blocks --------------------------------------------

    /// `(f̂ℱ(u), ĝℱ(u))` sharing one LU factorization of the stacked
    /// resolvent.
    pub fn transforms(&self, u: Complex64) -> Result<(CMatrix, CMatrix)> {
        let m = self.wtd.stages();
        let d2 = self.dim * self.dim;
        let s_complex = CMatrix::from_fn(m, m, |i, j| cx(self.wtd.subgenerator()[(i, j)], 0.0));
        let mut big = tensor(&s_complex, &identity(d2)) + tensor(&identity(m), &self.inter_liouvillian);
        big = -big;
        for i in 0..m * d2 {
            big[(i, i)] += u;
        }
        // one solve for both right-hand sides [s⃗⊗1 | 1⃗⊗1]
        let mut rhs = CMatrix::zeros(m * d2, 2 * d2);
        for i in 0..m {
            for k in 0..d2 {
                rhs[(i * d2 + k, k)] = cx(self.wtd.exit_rates()[i], 0.0);
                rhs[(i * d2 + k, d2 + k)] = cx(1.0, 0.0);
            }
        }
        let x = big.lu().solve(&rhs).ok_or(Error::ContourPole { u })?;
        let mut f_hat = CMatrix::zeros(d2, d2);
        let mut g_hat = CMatrix::zeros(d2, d2);
        for i in 0..m {
            let alpha = cx(self.wtd.initial()[i], 0.0);
            for r in 0..d2 {
                for c in 0..d2 {
                    f_hat[(r, c)] += alpha * x[(i * d2 + r, c)];
                    g_hat[(r, c)] += alpha * x[(i * d2 + r, d2 + c)];
                }
            }
        }
        Ok((f_hat, g_hat))
    }

    /// Laplace-domain propagator `ρ̂(u)/ρ(0) = (1 − f̂ℱ(u)ℰ)⁻¹ ĝℱ(u)`.
    pub fn resolvent(&self, u: Complex64) -> Result<CMatrix> {
        let (f_hat, g_hat) = self.transforms(u)?;
        let d2 = self.dim * self.dim;
        let a = identity(d2) - f_hat * &self.jump_super;
        a.lu().solve(&g_hat).ok_or(Error::ContourPole { u })
    }

    /// Time-domain propagator superoperator by Talbot inversion.
    pub fn propagator(&self, t: f64, talbot: &TalbotConfig) -> Result<CMatrix> {
        if t < 0.0 {
            return Err(Error::param("t", format!("negative time {t}")));
        }
        if t == 0.0 {
            return Ok(identity(self.dim * self.dim));
        }
        talbot_invert(|u| self.resolvent(u), t, talbot.nodes)
    }

    /// State at time `t` through the Laplace-domain solution.
    pub fn solve_laplace(
        &self,
        rho0: &DensityMatrix,
        t: f64,
        talbot: &TalbotConfig,
    ) -> Result<DensityMatrix> {
        self.check_state_dim(rho0)?;
        let s = self.propagator(t, talbot)?;
        let v = s * vectorize(rho0.matrix());
        let out = crate::linalg::hermitize(&unvectorize(&v, self.dim, self.dim));
        DensityMatrix::with_tolerance(out, &StateTolerance::NUMERICAL)
    }

    /// Tabulated family Φ(t_i, 0) on a uniform grid, one Talbot inversion per
    /// grid point.
    pub fn family(&self, t_max: f64, n_steps: usize, talbot: &TalbotConfig) -> Result<DynamicsFamily> {
        let times = uniform_grid(t_max, n_steps)?;
        let supers = times
            .iter()
            .map(|&t| self.propagator(t, talbot))
            .collect::<Result<Vec<_>>>()?;
        DynamicsFamily::new(self.dim, times, supers)
    }

    /// Memory kernel K̂(u) in the requested operator ordering. Both orderings
    /// are assembled from the same `(f̂ℱ, ĝℱ)` evaluations.
    pub fn memory_kernel(&self, ordering: KernelOrdering, u: Complex64) -> Result<CMatrix> {
        let (f_hat, g_hat) = self.transforms(u)?;
        let d2 = self.dim * self.dim;
        let g_inv = crate::linalg::inverse(&g_hat).ok_or(Error::ContourPole { u })?;
        let mut local = g_inv.clone();
        for i in 0..d2 {
            local[(i, i)] -= u;
        }
        let kernel = match ordering {
            KernelOrdering::Micromaser => &g_inv * f_hat * &self.jump_super - local,
            KernelOrdering::Collision => &self.jump_super * f_hat * g_inv - local,
        };
        Ok(kernel)
    }

    /// The singular (Markovian) part of the memory kernel,
    /// `K_δ = 𝓛_F + f(0)(ℰ − 1)`, shared by both orderings.
    pub fn kernel_delta(&self) -> CMatrix {
        let d2 = self.dim * self.dim;
        let f0 = self.wtd.density(0.0);
        &self.inter_liouvillian + (&self.jump_super - identity(d2)) * cx(f0, 0.0)
    }

    /// Sample the regular part of the memory kernel on a uniform grid,
    /// `K_reg(j·step)` for j = 0..n_steps, by Talbot inversion of
    /// `K̂(u) − K_δ`. The j = 0 value uses the initial-value limit
    /// `lim_{u→∞} u (K̂(u) − K_δ)` with one Richardson step.
    pub fn sample_kernel(
        &self,
        ordering: KernelOrdering,
        step: f64,
        n_steps: usize,
        talbot: &TalbotConfig,
    ) -> Result<SampledKernel> {
        if !(step > 0.0) {
            return Err(Error::param("step", format!("need positive step, got {step}")));
        }
        let delta = self.kernel_delta();
        let regular_transform = |u: Complex64| -> Result<CMatrix> {
            Ok(self.memory_kernel(ordering, u)? - &delta)
        };
        let mut samples = Vec::with_capacity(n_steps + 1);
        // K̂(u) − K_δ is an O(1/u) remainder of O(u) terms, so the roundoff
        // of the limit grows like u²·ε while the Richardson truncation falls
        // like 1/u²; u ~ 1e4 balances the two near 1e-8.
        let u0 = cx(1e4, 0.0);
        let v1 = regular_transform(u0)? * u0;
        let v2 = regular_transform(u0 * 2.0)? * (u0 * 2.0);
        samples.push(v2 * cx(2.0, 0.0) - v1);
        for j in 1..=n_steps {
            samples.push(talbot_invert(&regular_transform, j as f64 * step, talbot.nodes)?);
        }
        Ok(SampledKernel {
            step,
            delta,
            samples,
        })
    }

    // --- time-domain evaluators ----------------------------------------------

    fn check_state_dim(&self, rho0: &DensityMatrix) -> Result<()> {
        if rho0.dim() != self.dim {
            return Err(Error::DimensionMismatch {
                expected: self.dim,
                actual: rho0.dim(),
            });
        }
        Ok(())
    }

    /// Truncated jump expansion on a uniform grid covering [0, t_max]:
    /// the k-jump term is built from the (k−1)-jump term by product
    /// integration with composite Newton–Cotes weights, and the classical
    /// renewal weights ride along on the same quadrature to give the
    /// truncation tail per node.
    pub fn series_trajectory(
        &self,
        rho0: &DensityMatrix,
        t_max: f64,
        n_steps: usize,
        k_max: usize,
    ) -> Result<Vec<SeriesState>> {
        self.check_state_dim(rho0)?;
        let times = uniform_grid(t_max, n_steps)?;
        let h = t_max / n_steps as f64;
        let n = n_steps + 1;
        let d2 = self.dim * self.dim;

        // node data: f, g, and powers of the inter-jump propagator
        let f_vals: Vec<f64> = times.iter().map(|&t| self.wtd.density(t)).collect();
        let g_vals: Vec<f64> = times.iter().map(|&t| self.wtd.survival(t)).collect();
        let trivial_inter = self.inter.is_trivial();
        let mut f_pows: Vec<CMatrix> = Vec::with_capacity(n);
        if !trivial_inter {
            let step_prop = expm(&(&self.inter_liouvillian * cx(h, 0.0)));
            f_pows.push(identity(d2));
            for j in 1..n {
                f_pows.push(&f_pows[j - 1] * &step_prop);
            }
        }
        let apply_f = |lag: usize, v: &CVector| -> CVector {
            if trivial_inter {
                v.clone()
            } else {
                &f_pows[lag] * v
            }
        };

        let weights = quadrature_weights(n_steps, h);
        let v0 = vectorize(rho0.matrix());

        let mut level: Vec<CVector> = (0..n).map(|j| apply_f(j, &v0) * cx(g_vals[j], 0.0)).collect();
        let mut acc: Vec<CVector> = level.clone();
        let mut class_level: Vec<f64> = g_vals.clone();
        let mut class_total: Vec<f64> = g_vals.clone();

        for _ in 1..=k_max {
            let jumped: Vec<CVector> = level.iter().map(|v| &self.jump_super * v).collect();
            let mut next: Vec<CVector> = Vec::with_capacity(n);
            let mut class_next: Vec<f64> = Vec::with_capacity(n);
            for j in 0..n {
                let mut integral = CVector::zeros(d2);
                let mut class_integral = 0.0;
                for (m, w) in weights[j].iter().enumerate() {
                    if *w == 0.0 {
                        continue;
                    }
                    let lag = j - m;
                    let coeff = w * f_vals[lag];
                    if coeff != 0.0 {
                        integral += apply_f(lag, &jumped[m]) * cx(coeff, 0.0);
                        class_integral += coeff * class_level[m];
                    }
                }
                next.push(integral);
                class_next.push(class_integral);
            }
            for j in 0..n {
                acc[j] += &next[j];
                class_total[j] += class_next[j];
            }
            level = next;
            class_level = class_next;
        }

        Ok((0..n)
            .map(|j| SeriesState {
                matrix: crate::linalg::hermitize(&unvectorize(&acc[j], self.dim, self.dim)),
                tail_bound: (1.0 - class_total[j]).max(0.0),
            })
            .collect())
    }

    /// Truncated series at a single time with `n_quad` quadrature nodes.
    pub fn series_evaluate(
        &self,
        rho0: &DensityMatrix,
        t: f64,
        k_max: usize,
        n_quad: usize,
    ) -> Result<SeriesState> {
        self.check_state_dim(rho0)?;
        if t < 0.0 {
            return Err(Error::param("t", format!("negative time {t}")));
        }
        if t == 0.0 {
            return Ok(SeriesState {
                matrix: rho0.matrix().clone(),
                tail_bound: 0.0,
            });
        }
        if n_quad < 2 {
            return Err(Error::param("n_quad", "need at least two quadrature nodes"));
        }
        let mut series = self.series_trajectory(rho0, t, n_quad - 1, k_max)?;
        Ok(series.pop().expect("nonempty grid"))
    }

    /// Monte Carlo estimate of the dynamics on `grid`: per trajectory, jump
    /// times form a renewal process with inter-event density f; ℱ acts in
    /// between and ℰ at the jumps. Trajectory `i` uses ChaCha stream `i`
    /// derived from `seed`, and averaging is chunked in fixed index order, so
    /// results are bit-reproducible independent of thread count.
    pub fn mc_simulate(
        &self,
        rho0: &DensityMatrix,
        grid: &[f64],
        n_traj: usize,
        seed: u64,
    ) -> Result<Vec<DensityMatrix>> {
        self.check_state_dim(rho0)?;
        if n_traj == 0 {
            return Err(Error::param("n_traj", "need at least one trajectory"));
        }
        validate_grid(grid)?;
        let d2 = self.dim * self.dim;
        let trivial_inter = self.inter.is_trivial();
        // per-interval propagators, shared across trajectories
        let mut gap_props: Vec<Option<CMatrix>> = Vec::with_capacity(grid.len());
        let mut prev = 0.0;
        for &t in grid {
            let gap = t - prev;
            gap_props.push((!trivial_inter && gap > 0.0)
                .then(|| expm(&(&self.inter_liouvillian * cx(gap, 0.0)))));
            prev = t;
        }

        const CHUNK: usize = 1024;
        let n_chunks = n_traj.div_ceil(CHUNK);
        let v0 = vectorize(rho0.matrix());
        let chunk_sums: Vec<Vec<CVector>> = (0..n_chunks)
            .into_par_iter()
            .map(|c| {
                let lo = c * CHUNK;
                let hi = ((c + 1) * CHUNK).min(n_traj);
                let mut sums: Vec<CVector> = vec![CVector::zeros(d2); grid.len()];
                for traj in lo..hi {
                    let mut rng = ChaCha8Rng::seed_from_u64(seed);
                    rng.set_stream(traj as u64);
                    let mut v = v0.clone();
                    let mut cursor = 0.0;
                    let mut at_grid_cursor = true;
                    let mut next_jump = self.wtd.sample(&mut rng);
                    for (i, &target) in grid.iter().enumerate() {
                        while next_jump <= target {
                            if !trivial_inter {
                                let prop =
                                    expm(&(&self.inter_liouvillian * cx(next_jump - cursor, 0.0)));
                                v = prop * v;
                            }
                            v = &self.jump_super * v;
                            cursor = next_jump;
                            at_grid_cursor = false;
                            next_jump = cursor + self.wtd.sample(&mut rng);
                        }
                        if !trivial_inter && target > cursor {
                            if at_grid_cursor {
                                if let Some(p) = &gap_props[i] {
                                    v = p * v;
                                }
                            } else {
                                let prop = expm(&(&self.inter_liouvillian * cx(target - cursor, 0.0)));
                                v = prop * v;
                            }
                        }
                        cursor = target;
                        at_grid_cursor = true;
                        sums[i] += &v;
                    }
                }
                sums
            })
            .collect();

        let scale = cx(1.0 / n_traj as f64, 0.0);
        let mut out = Vec::with_capacity(grid.len());
        for i in 0..grid.len() {
            let mut total = CVector::zeros(d2);
            for chunk in &chunk_sums {
                total += &chunk[i];
            }
            let avg = crate::linalg::hermitize(&unvectorize(&(total * scale), self.dim, self.dim));
            out.push(DensityMatrix::with_tolerance(
                avg,
                &StateTolerance {
                    hermiticity: 1e-10,
                    trace: 1e-8,
                    positivity: 1e-8,
                },
            )?);
        }
        Ok(out)
    }
}

fn validate_grid(grid: &[f64]) -> Result<()> {
    if grid.is_empty() {
        return Err(Error::param("grid", "empty grid"));
    }
    if grid[0] < 0.0 {
        return Err(Error::param("grid", "grid times must be nonnegative"));
    }
    for w in grid.windows(2) {
        if !(w[1] > w[0]) {
            return Err(Error::param("grid", "grid times must be strictly increasing"));
        }
    }
    Ok(())
}

/// Product-integration weights for ∫₀^{jh}: composite Simpson where the
/// interval count allows it, with a 3/8 block on odd counts and a trapezoid
/// fallback on a single interval. `weights[j][m]` multiplies the integrand at
/// node m.
fn quadrature_weights(n_steps: usize, h: f64) -> Vec<Vec<f64>> {
    let mut all = Vec::with_capacity(n_steps + 1);
    for j in 0..=n_steps {
        let mut w = vec![0.0; j + 1];
        match j {
            0 => {}
            1 => {
                w[0] = 0.5 * h;
                w[1] = 0.5 * h;
            }
            _ if j % 2 == 0 => {
                simpson_block(&mut w, 0, j, h);
            }
            3 => {
                three_eighths_block(&mut w, 0, h);
            }
            _ => {
                simpson_block(&mut w, 0, j - 3, h);
                three_eighths_block(&mut w, j - 3, h);
            }
        }
        all.push(w);
    }
    all
}

fn simpson_block(w: &mut [f64], start: usize, end: usize, h: f64) {
    let c = h / 3.0;
    w[start] += c;
    w[end] += c;
    let mut m = start + 1;
    while m < end {
        w[m] += if (m - start) % 2 == 1 { 4.0 * c } else { 2.0 * c };
        m += 1;
    }
}

fn three_eighths_block(w: &mut [f64], start: usize, h: f64) {
    let c = 3.0 * h / 8.0;
    w[start] += c;
    w[start + 1] += 3.0 * c;
    w[start + 2] += 3.0 * c;
    w[start + 3] += c;
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::{max_abs, sigma_x, sigma_z};
    use approx::assert_abs_diff_eq;

    fn bit_flip_jump() -> QuantumMap {
        QuantumMap::from_kraus(vec![sigma_x()]).unwrap()
    }

    /// Bit flip at Erlang-2(λ=1) renewal times, trivial inter-jump evolution.
    fn erlang2_bitflip() -> SemiMarkovModel {
        SemiMarkovModel::new(
            bit_flip_jump(),
            GKSLModel::trivial(2),
            PhaseTypeWTD::erlang(2, 1.0).unwrap(),
        )
        .unwrap()
    }

    /// Population difference of the Erlang-2 bit-flip model:
    /// q(t) = e^{−λt}(cos λt + sin λt) from the renewal parity sum.
    fn parity(t: f64) -> f64 {
        (-t).exp() * (t.cos() + t.sin())
    }

    #[test]
    fn quadrature_weights_integrate_cubics() {
        let h = 0.1;
        let weights = quadrature_weights(9, h);
        for j in [2usize, 3, 4, 5, 7, 8, 9] {
            let exact = |p: i32| (j as f64 * h).powi(p + 1) / (p + 1) as f64;
            for p in 0..=3 {
                let num: f64 = weights[j]
                    .iter()
                    .enumerate()
                    .map(|(m, w)| w * (m as f64 * h).powi(p))
                    .sum();
                assert_abs_diff_eq!(num, exact(p), epsilon = 1e-12);
            }
        }
    }

    #[test]
    fn series_zero_jumps_is_survival_times_inter() {
        let model = erlang2_bitflip();
        let rho0 = DensityMatrix::basis(2, 0);
        let t = 0.8;
        let out = model.series_evaluate(&rho0, t, 0, 41).unwrap();
        let expect = rho0.matrix() * cx(model.wtd().survival(t), 0.0);
        assert!(max_abs(&(&out.matrix - &expect)) < 1e-12);
        assert_abs_diff_eq!(
            out.tail_bound,
            1.0 - model.wtd().survival(t),
            epsilon = 1e-12
        );
    }

    #[test]
    fn series_matches_parity_closed_form() {
        let model = erlang2_bitflip();
        let rho0 = DensityMatrix::basis(2, 0);
        let series = model.series_trajectory(&rho0, 4.0, 80, 20).unwrap();
        for (j, s) in series.iter().enumerate() {
            let t = 4.0 * j as f64 / 80.0;
            let expect = 0.5 * (1.0 + parity(t));
            assert_abs_diff_eq!(s.matrix[(0, 0)].re, expect, epsilon = 2e-6);
            // the tail estimate carries the early-node quadrature error; the
            // true renewal tail with k_max = 20 is ~0
            assert!(s.tail_bound < 1e-4, "tail {} at t={}", s.tail_bound, t);
            // state trace and classical weights share the quadrature exactly
            assert_abs_diff_eq!(
                crate::linalg::trace(&s.matrix).re,
                1.0 - s.tail_bound,
                epsilon = 1e-12
            );
        }
        // step refinement drives the tail estimate to the true tail
        let fine = model.series_trajectory(&rho0, 4.0, 640, 20).unwrap();
        assert!(fine.last().unwrap().tail_bound < 1e-7);
        assert_abs_diff_eq!(
            fine.last().unwrap().matrix[(0, 0)].re,
            0.5 * (1.0 + parity(4.0)),
            epsilon = 1e-8
        );
    }

    #[test]
    fn laplace_solution_matches_parity_closed_form() {
        let model = erlang2_bitflip();
        let rho0 = DensityMatrix::basis(2, 0);
        let talbot = TalbotConfig::default();
        for &t in &[0.0, 0.5, 2.0, 5.0] {
            let out = model.solve_laplace(&rho0, t, &talbot).unwrap();
            let expect = 0.5 * (1.0 + parity(t));
            assert_abs_diff_eq!(out.population(0), expect, epsilon = 1e-6);
        }
    }

    #[test]
    fn mc_matches_exponential_parity() {
        // ℱ = 1, ℰ = σ_x·σ_x, f = exponential(λ): population of |0⟩ is
        // ½(1 + e^{−2λt}) by Poisson parity.
        let lambda = 1.3;
        let model = SemiMarkovModel::new(
            bit_flip_jump(),
            GKSLModel::trivial(2),
            PhaseTypeWTD::exponential(lambda).unwrap(),
        )
        .unwrap();
        let rho0 = DensityMatrix::basis(2, 0);
        let grid: Vec<f64> = (0..=10).map(|i| 0.3 * i as f64).collect();
        let nit = 20_000;
        let out = model.mc_simulate(&rho0, &grid, nit, 7).unwrap();
        for (i, &t) in grid.iter().enumerate() {
            let p = 0.5 * (1.0 + (-2.0 * lambda * t).exp());
            let se = (p * (1.0 - p) / nit as f64).sqrt().max(1e-12);
            assert!(
                (out[i].population(0) - p).abs() <= 3.0 * se + 1e-12,
                "t={t}: mc={} closed={p} se={se}",
                out[i].population(0)
            );
        }
    }

    #[test]
    fn mc_identity_jump_is_pure_inter_evolution() {
        // ℰ = identity: jumps act trivially, so the dynamics is exactly ℱ(t).
        let gamma = 0.8;
        let inter = GKSLModel::new(
            CMatrix::zeros(2, 2),
            vec![crate::gksl::Channel {
                rate: gamma,
                operator: sigma_z(),
            }],
        )
        .unwrap();
        let model = SemiMarkovModel::new(
            QuantumMap::identity(2),
            inter.clone(),
            PhaseTypeWTD::exponential(2.0).unwrap(),
        )
        .unwrap();
        let rho0 = DensityMatrix::qubit_pure(std::f64::consts::FRAC_PI_2, 0.0);
        let grid = [0.0, 0.4, 1.0];
        let out = model.mc_simulate(&rho0, &grid, 300, 3).unwrap();
        for (i, &t) in grid.iter().enumerate() {
            let expect = inter.evolve(t).unwrap().apply(&rho0).unwrap();
            assert!(max_abs(&(out[i].matrix() - expect.matrix())) < 1e-10);
        }
    }

    #[test]
    fn mc_is_bit_reproducible() {
        let model = erlang2_bitflip();
        let rho0 = DensityMatrix::basis(2, 0);
        let grid = [0.0, 1.0, 2.0];
        let a = model.mc_simulate(&rho0, &grid, 2000, 42).unwrap();
        let b = model.mc_simulate(&rho0, &grid, 2000, 42).unwrap();
        for (x, y) in a.iter().zip(b.iter()) {
            assert_eq!(x.matrix(), y.matrix());
        }
    }

    #[test]
    fn exponential_identity_kernel_is_markovian() {
        // exponential f with ℱ = 1: both orderings give λ(ℰ − 1), u-independent.
        let lambda = 0.9;
        let model = SemiMarkovModel::new(
            bit_flip_jump(),
            GKSLModel::trivial(2),
            PhaseTypeWTD::exponential(lambda).unwrap(),
        )
        .unwrap();
        let expect = (model.jump_map().superoperator() - identity(4)) * cx(lambda, 0.0);
        for ordering in [KernelOrdering::Micromaser, KernelOrdering::Collision] {
            for &u in &[cx(1.0, 0.0), cx(0.3, 2.0), cx(5.0, -1.0)] {
                let k = model.memory_kernel(ordering, u).unwrap();
                assert!(max_abs(&(&k - &expect)) < 1e-10, "ordering {ordering:?} at u={u}");
            }
        }
        assert!(max_abs(&(model.kernel_delta() - expect)) < 1e-12);
    }

    #[test]
    fn commuting_orderings_coincide_noncommuting_differ() {
        // bit flip commutes with pure dephasing at the superoperator level
        // (Pauli conjugations commute modulo phase), so this pair is a
        // genuine algebraic test of the shared subexpressions
        let pure_dephasing = GKSLModel::new(
            CMatrix::zeros(2, 2),
            vec![crate::gksl::Channel {
                rate: 0.7,
                operator: sigma_z(),
            }],
        )
        .unwrap();
        let commuting = SemiMarkovModel::new(
            bit_flip_jump(),
            pure_dephasing,
            PhaseTypeWTD::erlang(2, 1.0).unwrap(),
        )
        .unwrap();
        let comm = max_abs(
            &(&commuting.jump_super * &commuting.inter_liouvillian
                - &commuting.inter_liouvillian * &commuting.jump_super),
        );
        assert!(comm < 1e-14);
        let u = cx(1.0, 0.0);
        let a = commuting.memory_kernel(KernelOrdering::Micromaser, u).unwrap();
        let b = commuting.memory_kernel(KernelOrdering::Collision, u).unwrap();
        assert!(max_abs(&(&a - &b)) < 1e-10);

        // adding a level splitting makes the generator genuinely
        // noncommuting with the bit flip
        let split_dephasing = GKSLModel::new(
            sigma_z(),
            vec![crate::gksl::Channel {
                rate: 0.7,
                operator: sigma_z(),
            }],
        )
        .unwrap();
        let noncommuting = SemiMarkovModel::new(
            bit_flip_jump(),
            split_dephasing,
            PhaseTypeWTD::erlang(2, 1.0).unwrap(),
        )
        .unwrap();
        let a = noncommuting.memory_kernel(KernelOrdering::Micromaser, u).unwrap();
        let b = noncommuting.memory_kernel(KernelOrdering::Collision, u).unwrap();
        assert!(max_abs(&(&a - &b)) > 1e-3, "distance {}", max_abs(&(&a - &b)));
    }

    #[test]
    fn propagator_family_is_cptp() {
        let model = erlang2_bitflip();
        let fam = model.family(4.0, 20, &TalbotConfig::default()).unwrap();
        assert_eq!(fam.len(), 21);
    }

    #[test]
    fn rejects_non_cptp_jump() {
        let bad = QuantumMap::from_kraus(vec![sigma_x() * cx(1.2, 0.0)]).unwrap();
        assert!(SemiMarkovModel::new(
            bad,
            GKSLModel::trivial(2),
            PhaseTypeWTD::exponential(1.0).unwrap()
        )
        .is_err());
    }
}
