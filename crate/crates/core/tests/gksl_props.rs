//! Random-model properties of the GKSL semigroup machinery.

use oqdyn_core::family::uniform_grid;
use oqdyn_core::linalg::{cx, max_abs, unvectorize, vectorize, CMatrix};
use oqdyn_core::metric::trace_distance;
use oqdyn_core::random::{random_density_matrix, random_gksl};
use oqdyn_core::{DynamicsFamily, DensityMatrix};
use rand::Rng;
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;

#[test]
fn semigroup_preserves_trace_and_positivity() {
    let mut rng = ChaCha8Rng::seed_from_u64(201);
    for _ in 0..30 {
        let model = random_gksl(&mut rng, 2, 2, (0.1, 0.5));
        let t: f64 = rng.random_range(0.0..5.0);
        let map = model.evolve(t).unwrap();
        let rho = random_density_matrix(&mut rng, 2, 2);
        let out = map.apply(&rho).unwrap();
        assert!((out.trace() - 1.0).abs() < 1e-10);
        // complete positivity of exp(t𝓛)
        let report = map.is_cptp(1e-9);
        assert!(report.cp, "min Choi eig {}", report.min_choi_eig);
        assert!(report.tp, "tp defect {}", report.tp_defect);
    }
}

#[test]
fn semigroup_trajectories_are_monotone() {
    let mut rng = ChaCha8Rng::seed_from_u64(202);
    for _ in 0..20 {
        let model = random_gksl(&mut rng, 2, 2, (0.1, 0.5));
        let family = DynamicsFamily::from_gksl(&model, &uniform_grid(5.0, 60).unwrap()).unwrap();
        let rho = random_density_matrix(&mut rng, 2, 2);
        let sigma = random_density_matrix(&mut rng, 2, 1);
        let mut last = f64::INFINITY;
        for i in 0..family.len() {
            let a = apply_super(family.superoperator(i), rho.matrix());
            let b = apply_super(family.superoperator(i), sigma.matrix());
            let d = trace_distance(
                &DensityMatrix::with_tolerance(a, &loose()).unwrap(),
                &DensityMatrix::with_tolerance(b, &loose()).unwrap(),
            )
            .unwrap();
            assert!(d <= last + 1e-10, "distinguishability revived on a semigroup");
            last = d;
        }
    }
}

#[test]
fn generator_recovered_by_finite_difference() {
    let mut rng = ChaCha8Rng::seed_from_u64(203);
    for _ in 0..10 {
        let model = random_gksl(&mut rng, 2, 2, (0.1, 0.5));
        let l = model.liouvillian();
        let h = 1e-5;
        let phi = model.evolve(h).unwrap().superoperator();
        let approx = (phi - oqdyn_core::linalg::identity(4)) * cx(1.0 / h, 0.0);
        let fro = oqdyn_core::linalg::frobenius_norm(&l);
        assert!(
            max_abs(&(approx - &l)) <= h * fro * fro + 1e-9,
            "finite-difference generator mismatch"
        );
    }
}

#[test]
fn generator_splits_into_drift_and_jump() {
    // 𝓛[ρ] = (d/dt 𝓡(t))|₀[ρ] + 𝒥[ρ] by second-order forward differences
    let mut rng = ChaCha8Rng::seed_from_u64(204);
    for _ in 0..10 {
        let model = random_gksl(&mut rng, 2, 2, (0.1, 0.5));
        let rho = random_density_matrix(&mut rng, 2, 2);
        let h = 3e-5;
        let r = |t: f64| -> CMatrix {
            model
                .contraction(t)
                .unwrap()
                .apply_matrix(rho.matrix())
                .unwrap()
        };
        let deriv = (r(0.0) * cx(-3.0, 0.0) + r(h) * cx(4.0, 0.0) - r(2.0 * h)) * cx(0.5 / h, 0.0);
        let jump = model.jump().apply_matrix(rho.matrix()).unwrap();
        let lhs = unvectorize(&(model.liouvillian() * vectorize(rho.matrix())), 2, 2);
        assert!(max_abs(&(lhs - (deriv + jump))) < 1e-8);
    }
}

#[test]
fn dyson_expansion_converges_with_truncation_order() {
    let mut rng = ChaCha8Rng::seed_from_u64(205);
    let model = random_gksl(&mut rng, 2, 2, (0.2, 0.5));
    let rho = random_density_matrix(&mut rng, 2, 2);
    let t = 0.4;
    let exact = model.evolve(t).unwrap().apply(&rho).unwrap();
    let mut errors = Vec::new();
    for k_max in [0, 1, 2, 4] {
        let approx = model.dyson(&rho, t, k_max, 257).unwrap();
        errors.push(max_abs(&(approx.matrix - exact.matrix())));
    }
    for w in errors.windows(2) {
        assert!(w[1] <= w[0] * 0.9 + 1e-12, "errors not decreasing: {errors:?}");
    }
    assert!(errors.last().unwrap() < &1e-5);
}

fn apply_super(s: &CMatrix, rho: &CMatrix) -> CMatrix {
    oqdyn_core::linalg::hermitize(&unvectorize(&(s * vectorize(rho)), 2, 2))
}

fn loose() -> oqdyn_core::StateTolerance {
    oqdyn_core::StateTolerance {
        hermiticity: 1e-9,
        trace: 1e-9,
        positivity: 1e-8,
    }
}
