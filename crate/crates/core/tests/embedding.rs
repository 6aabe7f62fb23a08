use metric_repair::embed::{sample_frt_tree_seeded, stretch_statistics};
use metric_repair::gen::{gen_random, RandomSpec};
use metric_repair::{Constraint, Distance, MetricKind, ProfileExpr};
use proptest::prelude::*;

fn metric(seed: u64, n: usize, kind: MetricKind) -> metric_repair::MetricView {
    gen_random(&RandomSpec::new(n, vec![1], kind, seed))
        .unwrap()
        .resolve()
        .unwrap()
        .metric
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn sampled_trees_dominate(
        seed in any::<u64>(),
        n in 1usize..12,
        graph in any::<bool>(),
    ) {
        let m = metric(seed, n, if graph { MetricKind::Graph } else { MetricKind::Matrix });
        let t = sample_frt_tree_seeded(&m, seed ^ 0x5eed).unwrap();
        let d = t.tree().original_distances();
        for u in 0..n {
            for v in 0..n {
                prop_assert!(m.dist(u, v) <= d.dist(u, v) + 1e-9, "{u} {v}");
            }
        }
    }

    #[test]
    fn leaves_are_the_points_and_clusters_stay_empty(seed in any::<u64>(), n in 1usize..12) {
        let m = metric(seed, n, MetricKind::Matrix);
        let t = sample_frt_tree_seeded(&m, seed).unwrap();
        let tree = t.tree();
        prop_assert_eq!(tree.n_original(), n);
        prop_assert_eq!(tree.root(), n);
        let rooted = tree.rooted();
        for v in 0..tree.n_vertices() {
            prop_assert_eq!(rooted.children[v].is_empty(), v < n, "vertex {}", v);
        }
        let g = t.extend_constraint(&Constraint::uniform(ProfileExpr::any()), 2);
        for v in tree.synthetic_vertices() {
            prop_assert!(g.allows(v, &[0, 0]));
            prop_assert!(!g.allows(v, &[0, 1]));
        }
    }

    #[test]
    fn same_seed_same_tree(seed in any::<u64>(), n in 1usize..10) {
        let m = metric(seed, n, MetricKind::Graph);
        prop_assert_eq!(
            sample_frt_tree_seeded(&m, seed).unwrap(),
            sample_frt_tree_seeded(&m, seed).unwrap()
        );
    }
}

#[test]
fn stretch_is_at_least_one_and_logarithmic_on_average() {
    for seed in 0..5 {
        let m = metric(seed, 10, MetricKind::Matrix);
        let s = stretch_statistics(&m, 100, seed).unwrap();
        assert!(s.min >= 1.0 - 1e-9);
        assert!(s.mean <= 8.0 * 10f64.log2(), "mean stretch {}", s.mean);
    }
}
