//! Non-Markovianity quantification over tabulated dynamics families:
//! trace-distance and Helstrom-norm revival measures, and P/CP-divisibility
//! certification through intermediate maps.
//!
//! The measures maximize over an infinite set of initial-state pairs (and
//! prior weights, for the Helstrom variant). The search here is a certified
//! lower bound: a deterministic antipodal Bloch grid for qubits, seeded
//! random pure-state pairs in any dimension, and coordinate-wise pattern
//! refinement of the best candidate. The time derivative is realized as
//! forward differences on the grid, so the measure is the telescoping sum of
//! positive increments, exact for trajectories that are piecewise monotone
//! between grid points.

use crate::error::{Error, Result};
use crate::family::DynamicsFamily;
use crate::linalg::{
    condition_number, cx, hermitize, inverse, min_hermitian_eigenvalue, projector, unvectorize,
    vectorize, CMatrix, CVector,
};
use crate::map::QuantumMap;
use crate::metric::{helstrom_matrix, trace_norm_hermitian};
use crate::random::random_pure_state;
use crate::state::DensityMatrix;
use rand::Rng;
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use std::f64::consts::PI;

/// Condition-number threshold above which Φ(t_i, 0) is treated as
/// non-invertible.
pub const DEFAULT_COND_THRESHOLD: f64 = 1e8;

/// Search configuration for the measures.
#[derive(Debug, Clone)]
pub struct OptConfig {
    /// Polar divisions of the antipodal-pair grid (qubits only).
    pub bloch_polar: usize,
    /// Azimuthal divisions of the antipodal-pair grid (qubits only).
    pub bloch_azimuthal: usize,
    /// Random pure-state pairs (any dimension).
    pub random_pairs: usize,
    /// Grid points for the prior weight p₁ in [0,1] (Helstrom measure).
    pub weight_points: usize,
    /// Pattern-search rounds on the best candidate; each round sweeps all
    /// coordinates and then halves the steps.
    pub refine_rounds: usize,
    pub seed: u64,
}

impl Default for OptConfig {
    fn default() -> Self {
        Self {
            bloch_polar: 7,
            bloch_azimuthal: 8,
            random_pairs: 24,
            weight_points: 21,
            refine_rounds: 14,
            seed: 0x6e6d_6561,
        }
    }
}

/// Result of a measure evaluation: the certified lower bound, the best
/// initial pair, its weights, and the grid intervals where the
/// distinguishability increased.
#[derive(Debug, Clone)]
pub struct MeasureResult {
    pub value: f64,
    pub pair: (DensityMatrix, DensityMatrix),
    pub weights: (f64, f64),
    pub revivals: Vec<(f64, f64)>,
}

/// Δ_i = ‖p₁ Φ(t_i)[ρ₁] − p₂ Φ(t_i)[ρ₂]‖₁ along the family grid.
pub fn distinguishability_trajectory(
    family: &DynamicsFamily,
    rho1: &DensityMatrix,
    rho2: &DensityMatrix,
    p1: f64,
    p2: f64,
) -> Result<Vec<(f64, f64)>> {
    if rho1.dim() != family.dim() || rho2.dim() != family.dim() {
        return Err(Error::DimensionMismatch {
            expected: family.dim(),
            actual: rho1.dim(),
        });
    }
    if p1 < 0.0 || p2 < 0.0 || (p1 + p2 - 1.0).abs() > 1e-12 {
        return Err(Error::param("weights", format!("invalid weights ({p1}, {p2})")));
    }
    let h0 = helstrom_matrix(rho1.matrix(), rho2.matrix(), p1, p2);
    let series = trajectory_values(family, &h0);
    Ok(family.times().iter().copied().zip(series).collect())
}

fn trajectory_values(family: &DynamicsFamily, helstrom: &CMatrix) -> Vec<f64> {
    let d = family.dim();
    let v = vectorize(helstrom);
    (0..family.len())
        .map(|i| trace_norm_hermitian(&unvectorize(&(family.superoperator(i) * &v), d, d)))
        .collect()
}

fn positive_increment_sum(series: &[f64]) -> f64 {
    series.windows(2).map(|w| (w[1] - w[0]).max(0.0)).sum()
}

/// BLP measure: revivals of the trace distance, weights fixed at (½, ½),
/// maximized over initial pairs.
pub fn blp_measure(family: &DynamicsFamily, cfg: &OptConfig) -> Result<MeasureResult> {
    measure_impl(family, cfg, false)
}

/// Helstrom-norm measure: revivals of ‖p₁ρ₁ − p₂ρ₂‖₁, maximized over initial
/// pairs and prior weights. Contains the BLP feasible set, so its value is
/// never below the BLP value (up to search tolerance).
pub fn helstrom_measure(family: &DynamicsFamily, cfg: &OptConfig) -> Result<MeasureResult> {
    measure_impl(family, cfg, true)
}

// --- candidate machinery ----------------------------------------------------

#[derive(Clone)]
struct Candidate {
    /// For qubits: [θ, φ] of an antipodal pure pair. Otherwise the raw
    /// re/im components of two kets.
    params: Vec<f64>,
    steps: Vec<f64>,
    antipodal: bool,
    /// Prior weight p₁; refined only in the Helstrom search.
    p1: f64,
}

fn qubit_ket(theta: f64, phi: f64) -> CVector {
    CVector::from_vec(vec![
        cx((theta / 2.0).cos(), 0.0),
        cx(0.0, phi).exp() * (theta / 2.0).sin(),
    ])
}

fn decode_pair(cand: &Candidate, dim: usize) -> (CMatrix, CMatrix) {
    if cand.antipodal {
        let (theta, phi) = (cand.params[0], cand.params[1]);
        let a = qubit_ket(theta, phi);
        let b = qubit_ket(PI - theta, phi + PI);
        (projector(&a), projector(&b))
    } else {
        let ket = |offset: usize| -> CVector {
            let mut v = CVector::from_fn(dim, |i, _| {
                cx(cand.params[offset + 2 * i], cand.params[offset + 2 * i + 1])
            });
            let norm = v.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
            if norm < 1e-9 {
                v = crate::linalg::basis_ket(dim, 0);
            } else {
                v /= cx(norm, 0.0);
            }
            v
        };
        (projector(&ket(0)), projector(&ket(2 * dim)))
    }
}

fn candidate_list(family: &DynamicsFamily, cfg: &OptConfig) -> Vec<Candidate> {
    let dim = family.dim();
    let mut out = Vec::new();
    if dim == 2 {
        let n_theta = cfg.bloch_polar.max(2);
        let n_phi = cfg.bloch_azimuthal.max(1);
        for it in 0..n_theta {
            let theta = 0.5 * PI * it as f64 / (n_theta - 1) as f64;
            let phis = if it == 0 { 1 } else { n_phi };
            for ip in 0..phis {
                let phi = 2.0 * PI * ip as f64 / n_phi as f64;
                out.push(Candidate {
                    params: vec![theta, phi],
                    steps: vec![0.5 * PI / n_theta as f64, PI / n_phi as f64],
                    antipodal: true,
                    p1: 0.5,
                });
            }
        }
    }
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    for _ in 0..cfg.random_pairs {
        let a = random_pure_state(&mut rng, dim);
        let b = random_pure_state(&mut rng, dim);
        let mut params = Vec::with_capacity(4 * dim);
        for v in [&a, &b] {
            for z in v.iter() {
                params.push(z.re);
                params.push(z.im);
            }
        }
        out.push(Candidate {
            steps: vec![0.25; params.len()],
            params,
            antipodal: false,
            p1: 0.5,
        });
    }
    out
}

fn gain_for(family: &DynamicsFamily, cand: &Candidate, p1: f64) -> f64 {
    let (a, b) = decode_pair(cand, family.dim());
    let h0 = helstrom_matrix(&a, &b, p1, 1.0 - p1);
    positive_increment_sum(&trajectory_values(family, &h0))
}

fn measure_impl(family: &DynamicsFamily, cfg: &OptConfig, over_weights: bool) -> Result<MeasureResult> {
    if family.is_empty() {
        return Err(Error::param("family", "empty grid"));
    }
    let weights: Vec<f64> = if over_weights {
        let n = cfg.weight_points.max(3);
        (0..n).map(|i| i as f64 / (n - 1) as f64).collect()
    } else {
        vec![0.5]
    };

    let candidates = candidate_list(family, cfg);
    // deterministic parallel sweep: order-preserving collect, sequential argmax
    let scored: Vec<(f64, f64)> = candidates
        .par_iter()
        .map(|cand| {
            let mut best = (f64::NEG_INFINITY, 0.5);
            for &p in &weights {
                let g = gain_for(family, cand, p);
                if g > best.0 {
                    best = (g, p);
                }
            }
            best
        })
        .collect();
    let mut best_idx = 0;
    for (i, s) in scored.iter().enumerate() {
        if s.0 > scored[best_idx].0 {
            best_idx = i;
        }
    }

    // coordinate-wise pattern refinement of the best candidate
    let mut cand = candidates[best_idx].clone();
    cand.p1 = scored[best_idx].1;
    let mut value = scored[best_idx].0;
    let mut steps = cand.steps.clone();
    let weight_step_init = if over_weights {
        0.5 / (cfg.weight_points.max(3) as f64 - 1.0)
    } else {
        0.0
    };
    let mut weight_step = weight_step_init;
    for _ in 0..cfg.refine_rounds {
        for c in 0..cand.params.len() {
            for sign in [-1.0, 1.0] {
                let mut trial = cand.clone();
                trial.params[c] += sign * steps[c];
                let g = gain_for(family, &trial, cand.p1);
                if g > value {
                    value = g;
                    cand = trial;
                }
            }
        }
        if over_weights {
            for sign in [-1.0, 1.0] {
                let p = (cand.p1 + sign * weight_step).clamp(0.0, 1.0);
                let g = gain_for(family, &cand, p);
                if g > value {
                    value = g;
                    cand.p1 = p;
                }
            }
            weight_step *= 0.5;
        }
        for s in steps.iter_mut() {
            *s *= 0.5;
        }
    }

    let (a, b) = decode_pair(&cand, family.dim());
    let (p1, p2) = (cand.p1, 1.0 - cand.p1);
    let series = trajectory_values(family, &helstrom_matrix(&a, &b, p1, p2));
    let value = positive_increment_sum(&series);
    let mut revivals = Vec::new();
    let times = family.times();
    let mut run_start: Option<usize> = None;
    for i in 0..series.len().saturating_sub(1) {
        if series[i + 1] > series[i] {
            run_start.get_or_insert(i);
        } else if let Some(s) = run_start.take() {
            revivals.push((times[s], times[i]));
        }
    }
    if let Some(s) = run_start {
        revivals.push((times[s], times[series.len() - 1]));
    }
    Ok(MeasureResult {
        value,
        pair: (DensityMatrix::new(a)?, DensityMatrix::new(b)?),
        weights: (p1, p2),
        revivals,
    })
}

// --- divisibility -------------------------------------------------------------

/// Intermediate map Φ(t_j, t_i) = Φ(t_j, 0) Φ(t_i, 0)⁻¹ together with the
/// condition number of the inverted map.
#[derive(Debug, Clone)]
pub struct IntermediateMap {
    pub map: QuantumMap,
    pub condition_number: f64,
}

pub fn intermediate_map(
    family: &DynamicsFamily,
    i: usize,
    j: usize,
    cond_threshold: f64,
) -> Result<IntermediateMap> {
    if j < i || j >= family.len() {
        return Err(Error::param("indices", format!("require i <= j < len, got ({i}, {j})")));
    }
    let s_i = family.superoperator(i);
    let cond = condition_number(s_i);
    if !cond.is_finite() || cond > cond_threshold {
        return Err(Error::NotInvertible { cond });
    }
    let inv = inverse(s_i).ok_or(Error::NotInvertible { cond: f64::INFINITY })?;
    let v = family.superoperator(j) * inv;
    Ok(IntermediateMap {
        map: QuantumMap::from_superoperator(v)?,
        condition_number: cond,
    })
}

#[derive(Debug, Clone, Copy)]
pub struct CpDivisibility {
    pub divisible: bool,
    /// (i, j, min Choi eigenvalue) of the worst consecutive intermediate map.
    pub worst: Option<(usize, usize, f64)>,
}

/// CP-divisibility over consecutive grid steps; composition closes the rest.
pub fn check_cp_divisible(
    family: &DynamicsFamily,
    tol: f64,
    cond_threshold: f64,
) -> Result<CpDivisibility> {
    let mut worst: Option<(usize, usize, f64)> = None;
    for i in 0..family.len().saturating_sub(1) {
        let step = intermediate_map(family, i, i + 1, cond_threshold)?;
        let min_eig = step.map.min_choi_eigenvalue();
        if worst.is_none_or(|w| min_eig < w.2) {
            worst = Some((i, i + 1, min_eig));
        }
    }
    let divisible = worst.is_none_or(|w| w.2 >= -tol);
    Ok(CpDivisibility { divisible, worst })
}

/// Configuration for [`check_p_divisible`].
#[derive(Debug, Clone)]
pub struct PDivConfig {
    pub tol: f64,
    /// Random pure input states per step when dim > 2 (probabilistic
    /// certificate).
    pub state_samples: usize,
    /// Bloch scan resolution for the qubit certificate.
    pub bloch_polar: usize,
    pub bloch_azimuthal: usize,
    pub refine_rounds: usize,
    /// Random (pair, weight) samples for the Helstrom monotonicity
    /// cross-check.
    pub cross_pairs: usize,
    pub cond_threshold: f64,
    pub seed: u64,
}

impl Default for PDivConfig {
    fn default() -> Self {
        Self {
            tol: 1e-8,
            state_samples: 300,
            bloch_polar: 13,
            bloch_azimuthal: 16,
            refine_rounds: 10,
            cross_pairs: 12,
            cond_threshold: DEFAULT_COND_THRESHOLD,
            seed: 0x7064_6976,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PCertificate {
    /// Deterministic Bloch-sphere scan with local refinement (qubits).
    BlochScan,
    /// Random pure-state sampling; probabilistic only.
    Sampled { states: usize },
}

#[derive(Debug, Clone)]
pub struct PDivisibility {
    pub p_divisible: bool,
    /// (step index, min output eigenvalue) of the worst consecutive step.
    pub worst_step: Option<(usize, f64)>,
    pub certificate: PCertificate,
    /// Result of the Kossakowski cross-check: whether the Helstrom norm was
    /// monotone along the family for every sampled pair and weight.
    pub helstrom_monotone: bool,
    /// (grid step, largest increment) over the sampled trajectories.
    pub helstrom_worst: Option<(usize, f64)>,
    /// `p_divisible == helstrom_monotone`.
    pub consistent: bool,
}

fn min_output_eig(step_super: &CMatrix, dim: usize, input: &CMatrix) -> f64 {
    let out = unvectorize(&(step_super * vectorize(input)), dim, dim);
    min_hermitian_eigenvalue(&hermitize(&out))
}

/// Positivity certification of every consecutive intermediate map, plus the
/// Helstrom-monotonicity cross-check implied by the Kossakowski connection.
pub fn check_p_divisible(family: &DynamicsFamily, cfg: &PDivConfig) -> Result<PDivisibility> {
    let dim = family.dim();
    let mut worst_step: Option<(usize, f64)> = None;
    let certificate = if dim == 2 {
        PCertificate::BlochScan
    } else {
        PCertificate::Sampled {
            states: cfg.state_samples,
        }
    };
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    for i in 0..family.len().saturating_sub(1) {
        let step = intermediate_map(family, i, i + 1, cfg.cond_threshold)?;
        let s = step.map.superoperator();
        let min_eig = if dim == 2 {
            qubit_min_output_eig(&s, cfg)
        } else {
            let mut min_eig = f64::INFINITY;
            for _ in 0..cfg.state_samples {
                let ket = random_pure_state(&mut rng, dim);
                min_eig = min_eig.min(min_output_eig(&s, dim, &projector(&ket)));
            }
            min_eig
        };
        if worst_step.is_none_or(|w| min_eig < w.1) {
            worst_step = Some((i, min_eig));
        }
    }
    let p_divisible = worst_step.is_none_or(|w| w.1 >= -cfg.tol);

    // Kossakowski cross-check: P-divisibility should coincide with
    // monotonicity of the Helstrom norm over pairs and weights.
    let mut helstrom_worst: Option<(usize, f64)> = None;
    let mut probes: Vec<(CMatrix, CMatrix, f64)> = Vec::new();
    if dim == 2 {
        for (theta, phi) in [(0.0, 0.0), (0.5 * PI, 0.0), (0.5 * PI, 0.5 * PI)] {
            let a = projector(&qubit_ket(theta, phi));
            let b = projector(&qubit_ket(PI - theta, phi + PI));
            for p in [0.5, 0.3, 0.7] {
                probes.push((a.clone(), b.clone(), p));
            }
        }
    }
    for _ in 0..cfg.cross_pairs {
        let a = projector(&random_pure_state(&mut rng, dim));
        let b = projector(&random_pure_state(&mut rng, dim));
        let p: f64 = rng.random_range(0.1..0.9);
        probes.push((a, b, p));
    }
    for (a, b, p) in &probes {
        let series = trajectory_values(family, &helstrom_matrix(a, b, *p, 1.0 - *p));
        for (i, w) in series.windows(2).enumerate() {
            let inc = w[1] - w[0];
            if helstrom_worst.is_none_or(|h| inc > h.1) {
                helstrom_worst = Some((i, inc));
            }
        }
    }
    let helstrom_monotone = helstrom_worst.is_none_or(|h| h.1 <= cfg.tol);

    Ok(PDivisibility {
        p_divisible,
        worst_step,
        certificate,
        helstrom_monotone,
        helstrom_worst,
        consistent: p_divisible == helstrom_monotone,
    })
}

fn qubit_min_output_eig(step_super: &CMatrix, cfg: &PDivConfig) -> f64 {
    let eval = |theta: f64, phi: f64| -> f64 {
        min_output_eig(step_super, 2, &projector(&qubit_ket(theta, phi)))
    };
    let mut best = (f64::INFINITY, 0.0, 0.0);
    for it in 0..cfg.bloch_polar.max(2) {
        let theta = PI * it as f64 / (cfg.bloch_polar.max(2) - 1) as f64;
        for ip in 0..cfg.bloch_azimuthal.max(1) {
            let phi = 2.0 * PI * ip as f64 / cfg.bloch_azimuthal.max(1) as f64;
            let v = eval(theta, phi);
            if v < best.0 {
                best = (v, theta, phi);
            }
        }
    }
    let (mut value, mut theta, mut phi) = best;
    let mut step = PI / cfg.bloch_polar.max(2) as f64;
    for _ in 0..cfg.refine_rounds {
        for (dt, dp) in [(1.0, 0.0), (-1.0, 0.0), (0.0, 1.0), (0.0, -1.0)] {
            let v = eval(theta + dt * step, phi + dp * step);
            if v < value {
                value = v;
                theta += dt * step;
                phi += dp * step;
            }
        }
        step *= 0.5;
    }
    value
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::family::uniform_grid;
    use crate::gksl::{Channel, GKSLModel};
    use crate::linalg::{identity, max_abs, sigma_minus, tensor};
    use approx::assert_abs_diff_eq;

    fn damping_model() -> GKSLModel {
        GKSLModel::new(
            CMatrix::zeros(2, 2),
            vec![Channel {
                rate: 1.0,
                operator: sigma_minus(),
            }],
        )
        .unwrap()
    }

    fn damping_family(t_max: f64, n: usize) -> DynamicsFamily {
        DynamicsFamily::from_gksl(&damping_model(), &uniform_grid(t_max, n).unwrap()).unwrap()
    }

    fn identity_family(n: usize) -> DynamicsFamily {
        let times = uniform_grid(1.0, n).unwrap();
        let supers = times.iter().map(|_| identity(4)).collect();
        DynamicsFamily::new(2, times, supers).unwrap()
    }

    fn quick_cfg() -> OptConfig {
        OptConfig {
            bloch_polar: 5,
            bloch_azimuthal: 6,
            random_pairs: 6,
            weight_points: 11,
            refine_rounds: 8,
            seed: 1,
        }
    }

    #[test]
    fn trajectory_examples() {
        let fam = identity_family(5);
        let a = DensityMatrix::basis(2, 0);
        let b = DensityMatrix::qubit_pure(1.0, 0.3);
        let series = distinguishability_trajectory(&fam, &a, &b, 0.5, 0.5).unwrap();
        let first = series[0].1;
        for (_, v) in &series {
            assert_abs_diff_eq!(*v, first, epsilon = 1e-13);
        }
        // equal states: identically zero
        let series = distinguishability_trajectory(&fam, &a, &a, 0.5, 0.5).unwrap();
        for (_, v) in &series {
            assert_abs_diff_eq!(*v, 0.0, epsilon = 1e-14);
        }
        // damping semigroup with the antipodal z pair: D(t) = e^{−t}
        let fam = damping_family(2.0, 20);
        let series = distinguishability_trajectory(
            &fam,
            &DensityMatrix::basis(2, 1),
            &DensityMatrix::basis(2, 0),
            0.5,
            0.5,
        )
        .unwrap();
        for (t, v) in &series {
            assert_abs_diff_eq!(*v, (-t).exp(), epsilon = 1e-10);
        }
    }

    #[test]
    fn semigroup_measures_vanish() {
        let fam = damping_family(3.0, 30);
        let cfg = quick_cfg();
        let blp = blp_measure(&fam, &cfg).unwrap();
        assert!(blp.value.abs() < 1e-9, "blp = {}", blp.value);
        assert!(blp.revivals.is_empty());
        let hel = helstrom_measure(&fam, &cfg).unwrap();
        assert!(hel.value.abs() < 1e-9, "helstrom = {}", hel.value);
    }

    #[test]
    fn unitary_family_measure_vanishes() {
        let h = crate::linalg::sigma_x() * cx(0.8, 0.0);
        let model = GKSLModel::new(h, vec![]).unwrap();
        let fam = DynamicsFamily::from_gksl(&model, &uniform_grid(2.0, 16).unwrap()).unwrap();
        let blp = blp_measure(&fam, &quick_cfg()).unwrap();
        assert!(blp.value.abs() < 1e-10);
    }

    #[test]
    fn helstrom_at_least_blp() {
        let fam = damping_family(2.0, 16);
        let cfg = quick_cfg();
        let blp = blp_measure(&fam, &cfg).unwrap();
        let hel = helstrom_measure(&fam, &cfg).unwrap();
        assert!(hel.value >= blp.value - 1e-9);
    }

    #[test]
    fn intermediate_map_identities() {
        let fam = damping_family(2.0, 10);
        let step = intermediate_map(&fam, 3, 3, DEFAULT_COND_THRESHOLD).unwrap();
        assert!(max_abs(&(step.map.superoperator() - identity(4))) < 1e-10);
        let from_zero = intermediate_map(&fam, 0, 4, DEFAULT_COND_THRESHOLD).unwrap();
        assert!(max_abs(&(from_zero.map.superoperator() - fam.superoperator(4))) < 1e-10);
        // semigroup law: Φ(t_j, t_i) = exp((t_j−t_i)𝓛)
        let step = intermediate_map(&fam, 2, 7, DEFAULT_COND_THRESHOLD).unwrap();
        let dt = fam.times()[7] - fam.times()[2];
        let expect = damping_model().evolve(dt).unwrap().superoperator();
        assert!(max_abs(&(step.map.superoperator() - expect)) < 1e-8);
        assert!(intermediate_map(&fam, 5, 2, DEFAULT_COND_THRESHOLD).is_err());
    }

    #[test]
    fn non_invertible_family_reports_condition_number() {
        // completely depolarizing at t > 0: rank-deficient superoperator
        let times = vec![0.0, 1.0, 2.0];
        let depol = {
            let id = identity(2);
            let mixed = vectorize(&(id.clone() * cx(0.5, 0.0)));
            &mixed * vectorize(&id).adjoint()
        };
        let fam = DynamicsFamily::new(2, times, vec![identity(4), depol.clone(), depol]).unwrap();
        match intermediate_map(&fam, 1, 2, DEFAULT_COND_THRESHOLD) {
            Err(Error::NotInvertible { cond }) => assert!(cond > DEFAULT_COND_THRESHOLD),
            other => panic!("expected NotInvertible, got {other:?}"),
        }
    }

    #[test]
    fn semigroup_is_cp_and_p_divisible() {
        let fam = damping_family(2.0, 12);
        let cp = check_cp_divisible(&fam, 1e-9, DEFAULT_COND_THRESHOLD).unwrap();
        assert!(cp.divisible, "worst: {:?}", cp.worst);
        let p = check_p_divisible(&fam, &PDivConfig::default()).unwrap();
        assert!(p.p_divisible);
        assert!(p.helstrom_monotone);
        assert!(p.consistent);
        assert_eq!(p.certificate, PCertificate::BlochScan);

        let idf = identity_family(4);
        assert!(check_cp_divisible(&idf, 1e-9, DEFAULT_COND_THRESHOLD).unwrap().divisible);
    }

    #[test]
    fn transpose_step_is_p_but_not_cp() {
        // family: identity, strong depolarizing D, transpose∘D; the
        // intermediate step D → T∘D is the transpose map: positive, not CP.
        let p = 0.8;
        let id = identity(2);
        let depol_super = identity(4) * cx(1.0 - p, 0.0)
            + &vectorize(&(id.clone() * cx(0.5 * p, 0.0))) * vectorize(&id).adjoint();
        let transpose = crate::random::transpose_map(2).superoperator();
        let fam = DynamicsFamily::new(
            2,
            vec![0.0, 1.0, 2.0],
            vec![identity(4), depol_super.clone(), &transpose * &depol_super],
        )
        .unwrap();
        let cp = check_cp_divisible(&fam, 1e-9, DEFAULT_COND_THRESHOLD).unwrap();
        assert!(!cp.divisible);
        let (i, j, eig) = cp.worst.unwrap();
        assert_eq!((i, j), (1, 2));
        assert!(eig < -0.1);
        let pdiv = check_p_divisible(&fam, &PDivConfig::default()).unwrap();
        assert!(pdiv.p_divisible, "worst: {:?}", pdiv.worst_step);
        assert!(pdiv.helstrom_monotone);
        assert!(pdiv.consistent);
    }

    #[test]
    fn measures_unitarily_invariant() {
        let fam = damping_family(2.0, 12);
        let u = crate::linalg::expm(&(crate::random::random_hermitian(
            &mut ChaCha8Rng::seed_from_u64(2),
            2,
        ) * cx(0.0, 1.0)));
        let rotated = fam.conjugated_by(&u).unwrap();
        // trace-norm unitary invariance: the rotated family at rotated pairs
        // reproduces the original trajectories exactly
        let r1 = DensityMatrix::basis(2, 1);
        let r2 = DensityMatrix::qubit_pure(1.1, 0.7);
        let rot = |r: &DensityMatrix| {
            DensityMatrix::new_unchecked(&u * r.matrix() * u.adjoint())
        };
        let orig = distinguishability_trajectory(&fam, &r1, &r2, 0.3, 0.7).unwrap();
        let conj = distinguishability_trajectory(&rotated, &rot(&r1), &rot(&r2), 0.3, 0.7).unwrap();
        for ((_, a), (_, b)) in orig.iter().zip(conj.iter()) {
            assert_abs_diff_eq!(a, b, epsilon = 1e-12);
        }
        let cfg = quick_cfg();
        let a = blp_measure(&fam, &cfg).unwrap().value;
        let b = blp_measure(&rotated, &cfg).unwrap().value;
        assert_abs_diff_eq!(a, b, epsilon = 1e-9);
        let _ = tensor(&identity(2), &identity(2));
    }
}
