mod common;

use metric_repair::approx::{make_non_inventive, repair_general, ApproxConfig, OpenCell, OpenDatabase};
use metric_repair::gen::{gen_random, ConstraintTemplate, RandomSpec};
use metric_repair::{check_consistency, repair_cost, AttributeWeights, Constraint, MetricKind, ProfileExpr};
use proptest::prelude::*;

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn repairs_are_consistent_and_priced_in_the_original_metric(
        seed in any::<u64>(),
        n in 1usize..7,
        cells in prop::collection::vec(0usize..3, 1..4),
        graph in any::<bool>(),
    ) {
        let kind = if graph { MetricKind::Graph } else { MetricKind::Matrix };
        let inst = gen_random(&RandomSpec::new(n, cells, kind, seed)).unwrap().resolve().unwrap();
        let cfg = ApproxConfig { trials: Some(4), seed, ..ApproxConfig::default() };
        let out = repair_general(&inst.db, &inst.metric, &inst.constraint, &inst.weights, &cfg).unwrap();
        for t in &out.trials {
            prop_assert!(t.cost <= t.tree_cost + 1e-9 * (1.0 + t.tree_cost));
        }
        if let Some(r) = out.repair {
            let e = inst.db.apply(&r.assignment).unwrap();
            prop_assert!(check_consistency(&e, &inst.constraint).is_empty());
            let c = repair_cost(&inst.db, &r.assignment, &inst.metric, &inst.weights).unwrap();
            prop_assert!(common::close(c, r.cost));
            let best = out.trials.iter().map(|t| t.cost).fold(f64::INFINITY, f64::min);
            prop_assert!(common::close(best, r.cost));
        }
    }

    #[test]
    fn more_trials_never_hurt(seed in any::<u64>(), n in 2usize..7) {
        let inst = gen_random(&RandomSpec::new(n, vec![2, 2], MetricKind::Matrix, seed))
            .unwrap()
            .resolve()
            .unwrap();
        let mut last = f64::INFINITY;
        for k in 1..=5 {
            let cfg = ApproxConfig { trials: Some(k), seed, ..ApproxConfig::default() };
            let out = repair_general(&inst.db, &inst.metric, &inst.constraint, &inst.weights, &cfg).unwrap();
            let Some(r) = out.repair else { break };
            prop_assert!(r.cost <= last + 1e-12);
            last = r.cost;
        }
    }

    #[test]
    fn non_inventive_stays_in_values_and_keeps_coincidences(
        xs in prop::collection::vec((0usize..2, -20i32..20), 1..7),
        targets in prop::collection::vec(-25i32..25, 1..4),
        picks in prop::collection::vec(0usize..4, 7),
        ws in (1u32..20, 1u32..20),
    ) {
        let cells: Vec<OpenCell<i32>> = xs
            .iter()
            .enumerate()
            .map(|(i, &(a, x))| OpenCell { id: format!("c{i}"), attr: a, value: x })
            .collect();
        let db = OpenDatabase::new(2, cells).unwrap();
        // inclusion of A1 in A2 is closed under addition
        let gamma = Constraint::uniform(ProfileExpr::Incl(0, 1));
        let weights = AttributeWeights::finite(&[ws.0 as f64 / 10.0, ws.1 as f64 / 10.0]).unwrap();
        let dist = |a: &i32, b: &i32| (a - b).abs() as f64;
        let e0: Vec<i32> = (0..xs.len()).map(|i| targets[picks[i] % targets.len()]).collect();
        prop_assume!(db.satisfies(&e0, &gamma));
        let out = make_non_inventive(&db, &e0, dist, &gamma, &weights).unwrap();
        let vals = db.values();
        prop_assert!(out.iter().all(|v| vals.contains(v)));
        prop_assert!(db.satisfies(&out, &gamma));
        for i in 0..e0.len() {
            for j in 0..e0.len() {
                if e0[i] == e0[j] {
                    prop_assert_eq!(out[i], out[j]);
                }
            }
        }
        let c0 = db.cost(&e0, dist, &weights).unwrap();
        let c1 = db.cost(&out, dist, &weights).unwrap();
        prop_assert!(c1 <= 2.0 * c0 + 1e-9, "{} > 2 * {}", c1, c0);
    }
}

#[test]
fn non_inventive_refuses_constraints_not_closed_under_addition() {
    let db = OpenDatabase::new(
        1,
        vec![
            OpenCell { id: "a".into(), attr: 0, value: 0 },
            OpenCell { id: "b".into(), attr: 0, value: 4 },
        ],
    )
    .unwrap();
    let gamma = Constraint::uniform(ProfileExpr::Key(0));
    let w = AttributeWeights::uniform(1, 1.0);
    let r = make_non_inventive(&db, &[1, 3], |a: &i32, b: &i32| (a - b).abs() as f64, &gamma, &w);
    assert!(matches!(r, Err(metric_repair::RepairError::Refused(_))));
}

#[test]
fn trial_count_follows_epsilon() {
    assert_eq!(ApproxConfig::default().trial_count(), 7);
    let cfg = ApproxConfig { epsilon: 0.5, ..ApproxConfig::default() };
    assert_eq!(cfg.trial_count(), 1);
    let inst = gen_random(&RandomSpec {
        template: ConstraintTemplate::Any,
        ..RandomSpec::new(3, vec![2], MetricKind::Matrix, 3)
    })
    .unwrap()
    .resolve()
    .unwrap();
    // a consistent instance stops after the first trial
    let out = repair_general(&inst.db, &inst.metric, &inst.constraint, &inst.weights, &ApproxConfig::default())
        .unwrap();
    assert_eq!(out.trials.len(), 1);
    assert_eq!(out.repair.unwrap().cost, 0.0);
}
