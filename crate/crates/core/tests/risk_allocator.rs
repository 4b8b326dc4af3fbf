use alterego_core::allocator::{drift_weights, kkt_residuals, solve_long_only_mv, AllocationProblem, Weights};
use alterego_core::risk::{linear_shrinkage, nonlinear_shrinkage, rolling_mean, sample_covariance, ReturnWindow};
use nalgebra::{DMatrix, DVector};
use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

fn window(seed: u64, n: usize, k: usize) -> ReturnWindow {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let cols: Vec<Vec<f64>> = (0..n)
        .map(|a| {
            (0..k)
                .map(|_| {
                    let z: f64 = StandardNormal.sample(&mut rng);
                    0.0003 * a as f64 + 0.01 * (1.0 + 0.2 * a as f64) * z
                })
                .collect()
        })
        .collect();
    ReturnWindow::from_columns((0..n).map(|a| format!("A{a}")).collect(), cols).unwrap()
}

fn min_eigen(m: &DMatrix<f64>) -> f64 {
    m.clone().symmetric_eigenvalues().min()
}

fn random_problem(seed: u64, n: usize) -> AllocationProblem {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut z = || -> f64 { StandardNormal.sample(&mut rng) };
    let a = DMatrix::from_fn(n, n, |_, _| 0.2 * z());
    let sigma = &a * a.transpose() / n as f64 + DMatrix::from_diagonal_element(n, n, 1e-3);
    let mu = DVector::from_fn(n, |_, _| 0.03 * z());
    AllocationProblem {
        assets: (0..n).map(|i| format!("A{i}")).collect(),
        mu,
        sigma,
        gamma: 1.0,
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(40))]

    #[test]
    fn estimators_are_symmetric_psd_and_shrunk_ones_pd(seed in any::<u64>(), n in 2usize..12, k in 30usize..80) {
        let w = window(seed, n, k);
        let s = sample_covariance(&w).unwrap();
        let l = linear_shrinkage(&w).unwrap();
        let nl = nonlinear_shrinkage(&s, k).unwrap();
        for c in [&s.matrix, &l.matrix, &nl.matrix] {
            prop_assert!((c - c.transpose()).amax() <= 1e-12 * c.amax());
        }
        prop_assert!(min_eigen(&s.matrix) >= -1e-12 * s.matrix.amax());
        prop_assert!(min_eigen(&l.matrix) > 0.0);
        prop_assert!(min_eigen(&nl.matrix) > 0.0);
    }

    #[test]
    fn scaling_returns_scales_moments(seed in any::<u64>(), n in 2usize..8, c in 0.1f64..10.0) {
        let w = window(seed, n, 60);
        let ws = w.scaled(c);
        let (m, ms) = (rolling_mean(&w).unwrap(), rolling_mean(&ws).unwrap());
        prop_assert!((&ms.values - &m.values * c).amax() <= 1e-12 * (c * m.values.amax()).max(1e-300));
        for (a, b) in [
            (sample_covariance(&w).unwrap(), sample_covariance(&ws).unwrap()),
            (linear_shrinkage(&w).unwrap(), linear_shrinkage(&ws).unwrap()),
        ] {
            let rel = (&b.matrix - &a.matrix * (c * c)).amax() / (c * c * a.matrix.amax());
            prop_assert!(rel <= 1e-12, "relative gap {rel}");
        }
    }

    #[test]
    fn solver_is_feasible_and_kkt_certified(seed in any::<u64>(), n in 1usize..9) {
        let p = random_problem(seed, n);
        let w = solve_long_only_mv(&p).unwrap();
        prop_assert!(w.w.iter().all(|x| *x >= 0.0));
        prop_assert!(w.w.sum() <= 1.0 + 1e-10);
        prop_assert!(w.cash() >= -1e-10);
        prop_assert!(kkt_residuals(&p, &w.w).max() <= 1e-8);
    }

    #[test]
    fn joint_scaling_keeps_the_support(seed in any::<u64>(), n in 2usize..6, c in 0.2f64..5.0) {
        let p = random_problem(seed, n);
        let q = AllocationProblem { mu: &p.mu * c, sigma: &p.sigma * c, ..p.clone() };
        let (a, b) = (solve_long_only_mv(&p).unwrap(), solve_long_only_mv(&q).unwrap());
        for (x, y) in a.w.iter().zip(b.w.iter()) {
            prop_assert!((x - y).abs() <= 1e-7, "{x} vs {y}");
        }
    }

    #[test]
    fn drift_keeps_weights_long_and_budget_whole(
        raw in prop::collection::vec(0.0f64..1.0, 2..8),
        rets in prop::collection::vec(-0.5f64..0.5, 8),
    ) {
        let n = raw.len() - 1;
        let total: f64 = raw.iter().sum::<f64>().max(1e-9);
        let w = Weights {
            assets: (0..n).map(|i| format!("A{i}")).collect(),
            w: DVector::from_iterator(n, raw[..n].iter().map(|v| v / total)),
        };
        let d = drift_weights(&w, &rets[..n]).unwrap();
        prop_assert!(d.w.iter().all(|x| *x >= 0.0));
        prop_assert!(d.w.sum() <= 1.0 + 1e-12 && d.cash() >= -1e-12);
    }
}
