use proptest::prelude::*;

use ftc_core::matkit::{
    consensus_product_residual, doubly_stochastic_residual, kron, matmul, ordered_product, spectral_deviation,
    DenseMatrix, PermutationMap,
};
use ftc_core::optim::{consensus_error, generate_problem, mean_vector};
use ftc_core::topology::{build_sequence, prime_factorize, GraphFamily, MultiBaseCode};

fn matrix(rows: usize, cols: usize) -> impl Strategy<Value = DenseMatrix> {
    prop::collection::vec(-2.0f64..2.0, rows * cols).prop_map(move |d| DenseMatrix::new(rows, cols, d).unwrap())
}

fn permutation(n: usize) -> impl Strategy<Value = PermutationMap> {
    Just((0..n).collect::<Vec<_>>()).prop_shuffle().prop_map(|v| PermutationMap::new(v).unwrap())
}

/// Convex combination of permutation matrices (doubly stochastic by construction).
fn doubly_stochastic(n: usize) -> impl Strategy<Value = DenseMatrix> {
    (prop::collection::vec(permutation(n), 1..4), prop::collection::vec(0.05f64..1.0, 3)).prop_map(move |(perms, w)| {
        let total: f64 = w[..perms.len()].iter().sum();
        let mut m = DenseMatrix::zeros(n, n);
        for (p, wi) in perms.iter().zip(&w) {
            for (i, &j) in p.as_slice().iter().enumerate() {
                m.set(j, i, m.get(j, i) + wi / total);
            }
        }
        m
    })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn kron_mixed_product((a, b, c, d) in (matrix(2, 3), matrix(3, 2), matrix(3, 2), matrix(2, 3))) {
        let lhs = matmul(&kron(&a, &b).unwrap(), &kron(&c, &d).unwrap()).unwrap();
        let rhs = kron(&matmul(&a, &c).unwrap(), &matmul(&b, &d).unwrap()).unwrap();
        prop_assert!(lhs.max_abs_diff(&rhs).unwrap() <= 1e-12);
    }

    #[test]
    fn products_stay_doubly_stochastic(ws in prop::collection::vec(doubly_stochastic(6), 1..5)) {
        for w in &ws {
            prop_assert!(doubly_stochastic_residual(w).max() <= 1e-12);
        }
        let prod = ordered_product(&ws).unwrap();
        prop_assert!(doubly_stochastic_residual(&prod).max() <= 1e-12);
    }

    #[test]
    fn spectral_deviation_is_at_most_one(w in doubly_stochastic(7)) {
        let rho = spectral_deviation(&w, 1e-12, 10_000).unwrap();
        prop_assert!((0.0..=1.0 + 1e-9).contains(&rho));
    }

    #[test]
    fn mixing_preserves_the_mean(w in doubly_stochastic(5), x in prop::collection::vec(prop::collection::vec(-5.0f64..5.0, 3), 5)) {
        let mixed: Vec<Vec<f64>> = (0..5)
            .map(|i| (0..3).map(|c| (0..5).map(|j| w.get(j, i) * x[j][c]).sum()).collect())
            .collect();
        let (before, after) = (mean_vector(&x), mean_vector(&mixed));
        for (a, b) in before.iter().zip(&after) {
            prop_assert!((a - b).abs() <= 1e-12);
        }
        prop_assert!(consensus_error(&mixed, &after) <= consensus_error(&x, &before) + 1e-12);
    }

    #[test]
    fn consensus_error_ignores_agent_order(x in prop::collection::vec(prop::collection::vec(-5.0f64..5.0, 2), 6), p in permutation(6)) {
        let reordered: Vec<Vec<f64>> = p.as_slice().iter().map(|&i| x[i].clone()).collect();
        let m = mean_vector(&x);
        prop_assert!((consensus_error(&x, &m) - consensus_error(&reordered, &m)).abs() <= 1e-12);
    }

    #[test]
    fn hypercuboid_any_order_is_exact(n in 2usize..=200, order_seed in any::<u64>()) {
        let w = build_sequence(GraphFamily::PPeerHyperCuboid, n).unwrap().weights();
        let mut order: Vec<usize> = (0..w.len()).collect();
        let mut s = order_seed;
        for i in (1..order.len()).rev() {
            s = s.wrapping_mul(6364136223846793005).wrapping_add(1442695040888963407);
            order.swap(i, (s >> 33) as usize % (i + 1));
        }
        let reordered: Vec<DenseMatrix> = order.iter().map(|&i| w[i].clone()).collect();
        prop_assert!(consensus_product_residual(&reordered).unwrap() <= 1e-12);
    }

    #[test]
    fn multibase_round_trip(n in 2usize..=500, frac in 0.0f64..1.0) {
        let bases = prime_factorize(n).unwrap();
        let i = ((n as f64) * frac) as usize % n;
        let code = MultiBaseCode::encode(i, &bases).unwrap();
        prop_assert_eq!(code.decode(), i);
    }

    #[test]
    fn objective_is_bounded_below(seed in any::<u64>(), x in prop::collection::vec(-50.0f64..50.0, 3)) {
        let p = generate_problem(3, 4, 3, 1.0, 0.5, seed).unwrap();
        prop_assert!(p.global_objective(&x).unwrap() >= 0.0);
    }
}
