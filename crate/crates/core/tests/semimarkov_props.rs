//! Cross-method agreement and structural properties of the semi-Markov
//! solvers: series, Laplace, Volterra, Monte Carlo, and the classical
//! correspondence.

use nalgebra::DMatrix;
use oqdyn_core::classical::{telegraph_transition, ClassicalSemiMarkov};
use oqdyn_core::gksl::Channel;
use oqdyn_core::linalg::{cx, max_abs, sigma_x, sigma_z, CMatrix};
use oqdyn_core::volterra::solve_volterra;
use oqdyn_core::{
    DensityMatrix, GKSLModel, KernelOrdering, PhaseTypeWTD, QuantumMap, SemiMarkovModel,
    StateTolerance, TalbotConfig,
};

fn erlang2_bitflip() -> SemiMarkovModel {
    SemiMarkovModel::new(
        QuantumMap::from_kraus(vec![sigma_x()]).unwrap(),
        GKSLModel::trivial(2),
        PhaseTypeWTD::erlang(2, 1.0).unwrap(),
    )
    .unwrap()
}

/// GKSL model with Σ_k γ_k L_k†L_k ∝ 1, so the path expansion matches a
/// semi-Markov model with exponential waiting time exactly: ℰ = 𝒥/λ and
/// ℱ the unitary part.
fn matched_pair() -> (GKSLModel, SemiMarkovModel) {
    let gamma = 0.8;
    let h = sigma_z() * cx(0.5, 0.0);
    let gksl = GKSLModel::new(
        h.clone(),
        vec![Channel {
            rate: gamma,
            operator: sigma_x(),
        }],
    )
    .unwrap();
    let semi = SemiMarkovModel::new(
        QuantumMap::from_kraus(vec![sigma_x()]).unwrap(),
        GKSLModel::new(h, vec![]).unwrap(),
        PhaseTypeWTD::exponential(gamma).unwrap(),
    )
    .unwrap();
    (gksl, semi)
}

#[test]
fn matched_exponential_model_reduces_to_semigroup() {
    let (gksl, semi) = matched_pair();
    let rho0 = DensityMatrix::qubit_pure(1.2, 0.4);
    let talbot = TalbotConfig::default();
    for &t in &[0.3, 1.0, 2.5] {
        let exact = gksl.evolve(t).unwrap().apply(&rho0).unwrap();
        let laplace = semi.solve_laplace(&rho0, t, &talbot).unwrap();
        assert!(
            max_abs(&(laplace.matrix() - exact.matrix())) < 1e-5,
            "laplace vs semigroup at t={t}"
        );
        let series = semi.series_evaluate(&rho0, t, 18, 161).unwrap();
        assert!(
            max_abs(&(&series.matrix - exact.matrix())) < 1e-5,
            "series vs semigroup at t={t}"
        );
    }

    // the memory kernel is u-independent and equals the GKSL generator
    let k1 = semi.memory_kernel(KernelOrdering::Micromaser, cx(1.0, 0.0)).unwrap();
    let k2 = semi.memory_kernel(KernelOrdering::Collision, cx(7.0, 3.0)).unwrap();
    assert!(max_abs(&(&k1 - &k2)) < 1e-9);
    assert!(max_abs(&(&k1 - gksl.liouvillian())) < 1e-9);

    // the Volterra march on the (purely δ) kernel reproduces the semigroup
    let h_step = 1e-3;
    let n = 1000;
    let kernel = semi
        .sample_kernel(KernelOrdering::Micromaser, h_step, n, &TalbotConfig { nodes: 24 })
        .unwrap();
    assert!(max_abs(&kernel.samples[n / 2]) < 1e-6, "regular part should vanish");
    let states = solve_volterra(&kernel, &rho0, n).unwrap();
    let exact = gksl.evolve(h_step * n as f64).unwrap().apply(&rho0).unwrap();
    assert!(max_abs(&(&states[n] - exact.matrix())) < 5e-5);

    // path expansion ↔ jump expansion correspondence
    let dyson = gksl.dyson(&rho0, 0.5, 6, 257).unwrap();
    let exact = gksl.evolve(0.5).unwrap().apply(&rho0).unwrap();
    assert!(max_abs(&(&dyson.matrix - exact.matrix())) < 1e-6);
}

#[test]
fn cross_method_agreement_on_erlang2_bitflip() {
    let model = erlang2_bitflip();
    let rho0 = DensityMatrix::basis(2, 0);
    let talbot = TalbotConfig::default();
    let t_max = 4.0;
    let n = 800;
    let h = t_max / n as f64;

    let series = model.series_trajectory(&rho0, t_max, n, 25).unwrap();
    let kernel = model
        .sample_kernel(KernelOrdering::Micromaser, h, n, &TalbotConfig { nodes: 24 })
        .unwrap();
    let volterra = solve_volterra(&kernel, &rho0, n).unwrap();
    for j in (0..=n).step_by(100) {
        let t = h * j as f64;
        let laplace = model.solve_laplace(&rho0, t, &talbot).unwrap();
        assert!(
            max_abs(&(&series[j].matrix - laplace.matrix())) < 1e-4,
            "series vs laplace at t={t}"
        );
        assert!(
            max_abs(&(&volterra[j] - laplace.matrix())) < 1e-4,
            "volterra vs laplace at t={t}"
        );
    }

    let grid: Vec<f64> = (1..=8).map(|i| 0.5 * i as f64).collect();
    let n_traj = 20_000;
    let mc = model.mc_simulate(&rho0, &grid, n_traj, 11).unwrap();
    for (i, &t) in grid.iter().enumerate() {
        let exact = model.solve_laplace(&rho0, t, &talbot).unwrap();
        let p = exact.population(0);
        let se = (p * (1.0 - p) / n_traj as f64).sqrt().max(1e-6);
        assert!(
            (mc[i].population(0) - p).abs() <= 3.0 * se,
            "mc vs laplace at t={t}: {} vs {p}",
            mc[i].population(0)
        );
    }
}

#[test]
fn nontrivial_inter_jump_evolution_cross_check() {
    // dephasing with level splitting between bit-flip jumps
    let inter = GKSLModel::new(
        sigma_z() * cx(0.6, 0.0),
        vec![Channel {
            rate: 0.4,
            operator: sigma_z(),
        }],
    )
    .unwrap();
    let model = SemiMarkovModel::new(
        QuantumMap::from_kraus(vec![sigma_x()]).unwrap(),
        inter,
        PhaseTypeWTD::erlang(2, 1.2).unwrap(),
    )
    .unwrap();
    let rho0 = DensityMatrix::qubit_pure(1.0, 0.2);
    let talbot = TalbotConfig::default();
    for &t in &[0.5, 1.5, 3.0] {
        let laplace = model.solve_laplace(&rho0, t, &talbot).unwrap();
        let series = model.series_evaluate(&rho0, t, 20, 241).unwrap();
        assert!(
            max_abs(&(&series.matrix - laplace.matrix())) < 1e-4,
            "series vs laplace at t={t}"
        );
    }
    // Monte Carlo against the Laplace solution
    let grid = [0.8, 2.0];
    let n_traj = 8_000;
    let mc = model.mc_simulate(&rho0, &grid, n_traj, 5).unwrap();
    for (i, &t) in grid.iter().enumerate() {
        let exact = model.solve_laplace(&rho0, t, &talbot).unwrap();
        let se = (0.25 / n_traj as f64).sqrt();
        assert!(
            (mc[i].population(0) - exact.population(0)).abs() <= 3.0 * se,
            "mc vs laplace at t={t}"
        );
    }
}

#[test]
fn both_kernel_orderings_induce_physical_dynamics() {
    let inter = GKSLModel::new(
        sigma_z(),
        vec![Channel {
            rate: 0.7,
            operator: sigma_z(),
        }],
    )
    .unwrap();
    let model = SemiMarkovModel::new(
        QuantumMap::from_kraus(vec![sigma_x()]).unwrap(),
        inter,
        PhaseTypeWTD::erlang(2, 1.0).unwrap(),
    )
    .unwrap();
    // the ordering difference lives in the coherence sector, so start from a
    // superposition
    let rho0 = DensityMatrix::qubit_pure(1.2, 0.3);
    let n = 1200;
    let h = 3.0 / n as f64;
    let tol = StateTolerance {
        hermiticity: 1e-8,
        trace: 1e-6,
        positivity: 1e-6,
    };
    let mut runs = Vec::new();
    for ordering in [KernelOrdering::Micromaser, KernelOrdering::Collision] {
        let kernel = model
            .sample_kernel(ordering, h, n, &TalbotConfig { nodes: 32 })
            .unwrap();
        let states = solve_volterra(&kernel, &rho0, n).unwrap();
        for s in states.iter().step_by(120) {
            DensityMatrix::with_tolerance(s.clone(), &tol)
                .unwrap_or_else(|e| panic!("{ordering:?} produced invalid state: {e}"));
        }
        runs.push(states);
    }
    // the two orderings are genuinely different dynamics here
    let separation = runs[0]
        .iter()
        .zip(runs[1].iter())
        .map(|(a, b)| max_abs(&(a - b)))
        .fold(0.0, f64::max);
    assert!(separation > 1e-4, "orderings separated by only {separation:.3e}");
}

#[test]
fn renewal_partial_sums_are_monotone_and_exhaustive() {
    let model = erlang2_bitflip();
    let rho0 = DensityMatrix::basis(2, 0);
    let t = 3.0;
    let mut last_total = 0.0;
    for k_max in [0, 1, 2, 4, 8, 16, 24] {
        let out = model.series_evaluate(&rho0, t, k_max, 301).unwrap();
        let total = 1.0 - out.tail_bound;
        assert!(total >= last_total - 1e-12, "partial sums not monotone");
        last_total = total;
    }
    assert!(last_total > 1.0 - 1e-8, "renewal decomposition incomplete: {last_total}");
}

#[test]
fn classical_embedding_matches_gme_diagonals() {
    let wtd = PhaseTypeWTD::erlang(2, 1.0).unwrap();
    let classical =
        ClassicalSemiMarkov::new(telegraph_transition(), vec![wtd.clone(), wtd.clone()]).unwrap();
    let quantum = classical.embed().unwrap();
    let grid: Vec<f64> = (0..=10).map(|i| 0.4 * i as f64).collect();
    let gme = classical.gme_solve(&[1.0, 0.0], &grid, 32).unwrap();
    let rho0 = DensityMatrix::basis(2, 0);
    let talbot = TalbotConfig::default();
    for (i, &t) in grid.iter().enumerate() {
        let q = quantum.solve_laplace(&rho0, t, &talbot).unwrap();
        for site in 0..2 {
            assert!(
                (q.population(site) - gme[i][site]).abs() < 1e-8,
                "diagonal mismatch at t={t}, site {site}: {} vs {}",
                q.population(site),
                gme[i][site]
            );
        }
    }

    // three-site cyclic embedding stays consistent as well
    let cyc = ClassicalSemiMarkov::new(
        oqdyn_core::classical::cyclic_transition(3),
        vec![
            PhaseTypeWTD::erlang(2, 1.0).unwrap(),
            PhaseTypeWTD::erlang(2, 1.0).unwrap(),
            PhaseTypeWTD::erlang(2, 1.0).unwrap(),
        ],
    )
    .unwrap();
    let qcyc = cyc.embed().unwrap();
    let p0 = [1.0, 0.0, 0.0];
    let gme = cyc.gme_solve(&p0, &[1.3], 32).unwrap();
    let q = qcyc
        .solve_laplace(&DensityMatrix::basis(3, 0), 1.3, &talbot)
        .unwrap();
    for site in 0..3 {
        assert!((q.population(site) - gme[0][site]).abs() < 1e-8);
    }
}

#[test]
fn classical_mc_matches_gme_within_three_sigma() {
    let model = ClassicalSemiMarkov::new(
        telegraph_transition(),
        vec![
            PhaseTypeWTD::erlang(2, 1.0).unwrap(),
            PhaseTypeWTD::erlang(2, 1.0).unwrap(),
        ],
    )
    .unwrap();
    let grid = [0.7, 1.8, 3.5];
    let n_traj = 30_000;
    let mc = model.mc(&[1.0, 0.0], &grid, n_traj, 23).unwrap();
    let gme = model.gme_solve(&[1.0, 0.0], &grid, 32).unwrap();
    for (sim, exact) in mc.iter().zip(gme.iter()) {
        let p = exact[0];
        let se = (p * (1.0 - p) / n_traj as f64).sqrt();
        assert!((sim[0] - p).abs() <= 3.0 * se, "{} vs {p}", sim[0]);
    }
}

#[test]
fn delta_kernel_limit_collapses_to_volterra_identity() {
    // K ≡ 0 and the pure-δ kernel are both exactly representable
    let zero = oqdyn_core::SampledKernel {
        step: 0.05,
        delta: CMatrix::zeros(4, 4),
        samples: vec![CMatrix::zeros(4, 4); 41],
    };
    let rho0 = DensityMatrix::qubit_pure(0.7, 1.0);
    let states = solve_volterra(&zero, &rho0, 40).unwrap();
    for s in &states {
        assert!(max_abs(&(s - rho0.matrix())) < 1e-13);
    }
    let _ = DMatrix::<f64>::identity(2, 2);
}
