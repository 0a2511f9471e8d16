use ftc_core::matkit::consensus_product_residual;
use ftc_core::topology::{build_sequence, GraphFamily, FTC_TOL};
use ftc_core::DenseMatrix;
use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn all_orders(k: usize) -> Vec<Vec<usize>> {
    if k == 0 {
        return vec![vec![]];
    }
    all_orders(k - 1)
        .into_iter()
        .flat_map(|p| {
            (0..=p.len()).map(move |pos| {
                let mut q = p.clone();
                q.insert(pos, k - 1);
                q
            })
        })
        .collect()
}

#[test]
fn every_claimed_sequence_survives_reordering() {
    let mut rng = ChaCha8Rng::seed_from_u64(12);
    let mut checked = 0;
    for n in 2..=72usize {
        for family in [GraphFamily::OnePeerExponential, GraphFamily::OnePeerHyperCube, GraphFamily::PPeerHyperCuboid] {
            let Ok(seq) = build_sequence(family, n) else { continue };
            if !seq.ftc_claimed {
                continue;
            }
            let w = seq.weights();
            let orders = if w.len() <= 4 {
                all_orders(w.len())
            } else {
                let mut base: Vec<usize> = (0..w.len()).collect();
                // cyclic rotations plus random shuffles
                let mut orders: Vec<Vec<usize>> = (0..w.len())
                    .map(|r| {
                        let mut o = base.clone();
                        o.rotate_left(r);
                        o
                    })
                    .collect();
                for _ in 0..20 {
                    base.shuffle(&mut rng);
                    orders.push(base.clone());
                }
                orders
            };
            for order in orders {
                let reordered: Vec<DenseMatrix> = order.iter().map(|&i| w[i].clone()).collect();
                let r = consensus_product_residual(&reordered).unwrap();
                assert!(r <= FTC_TOL, "{family} n={n} order {order:?}: {r:e}");
                checked += 1;
            }
        }
    }
    assert!(checked > 500);
}

#[test]
fn claims_follow_family_rules() {
    for n in 2..=72usize {
        assert_eq!(build_sequence(GraphFamily::OnePeerExponential, n).unwrap().ftc_claimed, n.is_power_of_two());
        assert!(build_sequence(GraphFamily::PPeerHyperCuboid, n).unwrap().ftc_claimed);
        assert!(!build_sequence(GraphFamily::StaticHyperCuboid, n).unwrap().ftc_claimed);
    }
}
