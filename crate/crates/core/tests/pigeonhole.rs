mod common;

use microset_core::moran::MoranTree;
use microset_core::pigeonhole::{good_cylinder, reverse_furstenberg, verify_antifrostman, PigeonholeResult};
use microset_core::seqgen::BranchingSeq;
use microset_core::symtree::SymbolTree;
use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

/// Full binary tree to `split`, then a single branch to `depth`.
fn half_branching(split: usize, depth: usize) -> SymbolTree {
    let mut links = Vec::new();
    let mut width = 1;
    for level in 0..depth {
        let kids: Vec<(u32, u32)> = if level < split {
            (0..width as u32).flat_map(|p| [(p, 1), (p, 2)]).collect()
        } else {
            (0..width as u32).map(|p| (p, 1)).collect()
        };
        width = kids.len();
        links.push(kids);
    }
    SymbolTree::from_parent_links(2, 0.5, links).unwrap()
}

fn assert_exhaustive(tree: &SymbolTree, r: &PigeonholeResult) {
    let brute = common::brute_ratio_profile(tree, &r.code, r.k, r.ell);
    for (j, &b) in brute.iter().enumerate() {
        assert!(b >= r.threshold(j) * (1.0 - 1e-12), "j = {j}: {b}");
    }
}

#[test]
fn full_binary_root_is_heavy() {
    let t = SymbolTree::full(2, 0.5, 22).unwrap();
    let r = reverse_furstenberg(&t, 1.0, 1.1, 2, 22).unwrap();
    assert_eq!(r.n, 0);
    assert!(verify_antifrostman(&t, &r));
}

#[test]
fn half_branching_descends_into_the_sparse_part() {
    let k = 18;
    let t = half_branching(k / 2, k);
    let ell = k / 6;
    let r = reverse_furstenberg(&t, 0.5, 0.6, ell, k).unwrap();
    assert!(r.n + ell >= k / 2, "{}", r.n);
    assert!(verify_antifrostman(&t, &r));
    assert_exhaustive(&t, &r);
    // a cylinder in the full part fails
    let mut sibling = r.clone();
    sibling.code = vec![1; 1];
    sibling.n = 1;
    assert!(!verify_antifrostman(&t, &sibling));
}

#[test]
fn alternating_moran_tree_gives_an_aligned_cylinder() {
    let seq = BranchingSeq::periodic(&[1, 0], 32).unwrap();
    let tree = MoranTree::new(1, 0.5, seq.bits().iter().map(|&b| b == 1).collect())
        .unwrap()
        .materialize(1 << 18)
        .unwrap()
        .tree;
    // fewest ones in a window of g >= 2 levels, per level: 1/3 from `0 1 0`
    let bits = seq.bits();
    let oracle = (2..=32)
        .flat_map(|g| (0..=32 - g).map(move |p| bits[p..p + g].iter().filter(|&&b| b == 1).count() as f64 / g as f64))
        .fold(f64::INFINITY, f64::min);
    assert_eq!(oracle, 1.0 / 3.0);
    let est = tree.lower_dim_estimate(2).unwrap().value;
    assert!((est - oracle).abs() < 1e-12, "{est}");
    // s = (1/3 + 3/2) / 2 and k0 = 8: the witness needs a gap g > 11 whose
    // cylinder holds fewer than 2^((g - 11) s) nodes, which takes g near 30
    let g = good_cylinder(&tree, 1.5, 3, 2).unwrap();
    assert!(verify_antifrostman(&tree, &g.result));
    assert!(g.result.n >= 3 && g.result.k >= g.result.n + 3);
    assert_exhaustive(&tree, &g.result);
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn descent_is_sound(seed in any::<u64>(), alphabet in 2u32..=4, k in 6usize..=16, quarter in any::<bool>(), p in 0.0f64..0.7, ell in 1usize..=3, extra in 0.05f64..1.0) {
        let rho = if quarter { 0.25 } else { 0.5 };
        let tree = common::random_tree(&mut ChaCha8Rng::seed_from_u64(seed), alphabet, rho, k, p, 1000);
        let s = ((tree.level_len(k) as f64).ln() / (k as f64 * (1.0 / rho).ln()) * (1.0 + 1e-9) + 1e-9).max(0.01);
        let t = (s + extra).max(k as f64 * s / (k - ell) as f64 * (1.0 + 1e-9));
        let r = reverse_furstenberg(&tree, s, t, ell, k).unwrap();
        prop_assert!(r.n + ell <= k);
        prop_assert!(r.descent.len() <= k);
        prop_assert!(r.descent.iter().all(|step| step.level + ell <= k));
        prop_assert!(verify_antifrostman(&tree, &r));
        assert_exhaustive(&tree, &r);
    }

    #[test]
    fn good_cylinders_sit_deep_enough(seed in any::<u64>(), k in 10usize..=18, p in 0.0f64..0.5, ell in 1usize..=3) {
        let tree = common::random_tree(&mut ChaCha8Rng::seed_from_u64(seed), 2, 0.5, k, p, 1000);
        let est = tree.lower_dim_estimate(2).unwrap().value;
        if let Ok(g) = good_cylinder(&tree, est + 0.3, ell, 2) {
            prop_assert!(g.result.n >= ell && g.result.k >= g.result.n + ell);
            prop_assert!(verify_antifrostman(&tree, &g.result));
        }
    }
}
