use ktree::marginals::{marginal_tree, projection_gap, MarginalTree, Subtree};
use ktree::rng::replicate;
use ktree::treegrow::GrowingTree;
use proptest::prelude::*;

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn edge_and_leaf_counts(k in 2usize..6, n in 0u64..80, seed in any::<u64>()) {
        let t = GrowingTree::grown(k, n, &mut replicate(seed, 0)).unwrap();
        prop_assert_eq!(t.edge_count() as u64, k as u64 * n + 1);
        prop_assert_eq!(t.leaf_count() as u64, (k as u64 - 1) * n + 1);
        prop_assert_eq!(t.root_split().map(|s| s.total()).unwrap_or(0), n.saturating_sub(1));
    }

    #[test]
    fn json_round_trip(k in 2usize..5, n in 0u64..60, seed in any::<u64>()) {
        let t = GrowingTree::grown(k, n, &mut replicate(seed, 0)).unwrap();
        prop_assert_eq!(GrowingTree::from_json(&t.to_json()).unwrap(), t);
    }

    #[test]
    fn pruning_keeps_a_smaller_tree(k in 3usize..6, n in 0u64..60, seed in any::<u64>()) {
        let t = GrowingTree::grown(k, n, &mut replicate(seed, 0)).unwrap();
        for kp in 2..k {
            let p = t.prune_labels(kp).unwrap();
            prop_assert_eq!(p.tree.step_count(), p.retained_internal);
            prop_assert!(p.retained_internal <= n);
            prop_assert_eq!(p.tree.edge_count() as u64, kp as u64 * p.retained_internal + 1);
        }
    }

    #[test]
    fn marginal_gap_shrinks_with_p(n in 1u64..40, seed in any::<u64>()) {
        let t = GrowingTree::grown(2, n, &mut replicate(seed, 0)).unwrap();
        let whole = MarginalTree::from_growing(&t);
        let mut last = f64::INFINITY;
        for p in 0..=n {
            let gap = projection_gap(&whole, &Subtree::spanned(&whole, p + 1)).unwrap();
            prop_assert!(gap <= last + 1e-12);
            last = gap;
            prop_assert!(marginal_tree(&t, p).unwrap().tree_height() <= whole.tree_height() + 1e-12);
        }
        prop_assert!(last.abs() < 1e-12);
    }
}
