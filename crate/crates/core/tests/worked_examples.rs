mod common;

use metric_repair::approx::{repair_general, ApproxConfig};
use metric_repair::instance::{Instance, InstanceFile};
use metric_repair::oracle::{brute_force_optimal, OracleBudget};
use metric_repair::tree_solver::solve_exact;
use metric_repair::{check_consistency, repair_cost};
use serde_json::json;

const PID_POINTS: [&str; 8] = ["437", "487", "987", "481", "719", "199", "779", "799"];

fn hamming(points: &[&str]) -> serde_json::Value {
    let d: Vec<Vec<usize>> = points
        .iter()
        .map(|a| {
            points
                .iter()
                .map(|b| a.chars().zip(b.chars()).filter(|(x, y)| x != y).count())
                .collect()
        })
        .collect();
    json!({ "kind": "matrix", "points": points, "dist": d })
}

fn pid(metric: serde_json::Value) -> Instance {
    let cells = [
        ("p1", "P.pid", "437"),
        ("p2", "P.pid", "487"),
        ("p3", "P.pid", "719"),
        ("p4", "P.pid", "799"),
        ("r1", "R.pid", "779"),
        ("r2", "R.pid", "437"),
        ("r3", "R.pid", "199"),
        ("v1", "V.pid", "719"),
        ("v2", "V.pid", "481"),
        ("v3", "V.pid", "987"),
    ];
    let doc = json!({
        "signature": ["P.pid", "R.pid", "V.pid"],
        "weights": { "P.pid": "locked", "R.pid": 1, "V.pid": 1.1 },
        "metric": metric,
        "constraint": { "kind": "uniform",
            "expr": { "and": [{ "key": 2 }, { "incl": [3, 2] }, { "key": 1 }, { "incl": [2, 1] }] } },
        "cells": cells.iter().map(|(i, a, v)| json!({ "id": i, "attr": a, "value": v })).collect::<Vec<_>>(),
    });
    InstanceFile::from_json(&doc.to_string()).unwrap().resolve().unwrap()
}

fn nurse(metric: serde_json::Value) -> Instance {
    let base = json!([{ "incl": [1, 2] }, { "incl": [2, 1] }]);
    let capped = |k: usize| {
        let mut xs = base.as_array().unwrap().clone();
        xs.push(json!({ "le": [1, k] }));
        json!({ "and": xs })
    };
    let doc = json!({
        "signature": ["V.nurse", "U.nurse"],
        "weights": { "V.nurse": 1, "U.nurse": "locked" },
        "metric": metric,
        "constraint": { "kind": "pointwise", "expr": { "and": base },
            "overrides": { "078": capped(5), "017": capped(1) } },
        "cells": [
            { "id": "v018", "attr": 1, "value": "018" },
            { "id": "v017", "attr": 1, "value": "017" },
            { "id": "v078", "attr": 1, "value": "078" },
            { "id": "u078", "attr": 2, "value": "078" },
            { "id": "u017", "attr": 2, "value": "017" },
        ],
    });
    InstanceFile::from_json(&doc.to_string()).unwrap().resolve().unwrap()
}

fn by_names(inst: &Instance, moves: &[(&str, &str)]) -> Vec<usize> {
    let mut names = inst.assignment_names(&inst.db.cells().iter().map(|c| c.value).collect::<Vec<_>>());
    for (id, to) in moves {
        names.insert(id.to_string(), to.to_string());
    }
    inst.assignment_from_names(&names).unwrap()
}

#[test]
fn pid_discrete_exact_cost() {
    let inst = pid(json!({ "kind": "discrete", "points": PID_POINTS }));
    assert!(!check_consistency(&inst.db, &inst.constraint).is_empty());
    let r = solve_exact(&inst.db, &inst.metric, &inst.constraint, &inst.weights)
        .unwrap()
        .unwrap();
    assert!((r.cost - 4.2).abs() <= 1e-9, "{}", r.cost);
    let naive = common::naive_optimum(&inst.db, &inst.metric, &inst.constraint, &inst.weights, None);
    assert!(common::close(naive.unwrap(), r.cost));
}

#[test]
fn pid_discrete_repair_priced_under_hamming() {
    let inst = pid(hamming(&PID_POINTS));
    let e2 = by_names(&inst, &[("r1", "719"), ("r3", "799"), ("v3", "437"), ("v2", "799")]);
    assert!(check_consistency(&inst.db.apply(&e2).unwrap(), &inst.constraint).is_empty());
    let c = repair_cost(&inst.db, &e2, &inst.metric, &inst.weights).unwrap();
    assert!((c - 7.5).abs() <= 1e-9, "{c}");
}

#[test]
fn pid_hamming_oracle_matches_plain_enumeration() {
    let inst = pid(hamming(&PID_POINTS));
    let r = brute_force_optimal(
        &inst.db,
        &inst.metric,
        &inst.constraint,
        &inst.weights,
        None,
        OracleBudget::default(),
    )
    .unwrap()
    .unwrap();
    let naive = common::naive_optimum(&inst.db, &inst.metric, &inst.constraint, &inst.weights, None);
    assert!(common::close(naive.unwrap(), r.cost));
    // three unit R moves and two unit V moves beat any two-plus-three split
    assert!((r.cost - 5.2).abs() <= 1e-9, "{}", r.cost);
}

#[test]
fn pid_hamming_approx_is_consistent_and_dominates_optimum() {
    let inst = pid(hamming(&PID_POINTS));
    let cfg = ApproxConfig {
        seed: 7,
        ..ApproxConfig::default()
    };
    let out = repair_general(&inst.db, &inst.metric, &inst.constraint, &inst.weights, &cfg).unwrap();
    assert_eq!(out.trials.len(), 7);
    let r = out.repair.unwrap();
    assert!(check_consistency(&inst.db.apply(&r.assignment).unwrap(), &inst.constraint).is_empty());
    assert!(r.cost >= 5.2 - 1e-9);
    assert!(r.cost <= 5.2 * 2.0 * 3.0);
    for t in &out.trials {
        let c = t.cost;
        assert!(c <= t.tree_cost + 1e-9);
    }
}

fn check_nurse(inst: &Instance, r: &metric_repair::Repair) {
    assert!((r.cost - 1.0).abs() <= 1e-9);
    let names = inst.assignment_names(&r.assignment);
    assert_eq!(names["v018"], "078");
    assert_eq!(r.changed_cells(&inst.db).len(), 1);
}

#[test]
fn nurse_discrete_moves_to_roomy_point() {
    let inst = nurse(json!({ "kind": "discrete", "points": ["018", "017", "078"] }));
    let r = solve_exact(&inst.db, &inst.metric, &inst.constraint, &inst.weights)
        .unwrap()
        .unwrap();
    check_nurse(&inst, &r);
}

#[test]
fn nurse_hamming_moves_to_roomy_point() {
    let inst = nurse(hamming(&["018", "017", "078"]));
    let r = brute_force_optimal(
        &inst.db,
        &inst.metric,
        &inst.constraint,
        &inst.weights,
        None,
        OracleBudget::default(),
    )
    .unwrap()
    .unwrap();
    check_nurse(&inst, &r);
    let out = repair_general(
        &inst.db,
        &inst.metric,
        &inst.constraint,
        &inst.weights,
        &ApproxConfig::default(),
    )
    .unwrap();
    check_nurse(&inst, &out.repair.unwrap());
}

#[test]
fn nurse_capped_point_is_illegal_target() {
    let inst = nurse(json!({ "kind": "discrete", "points": ["018", "017", "078"] }));
    let e = by_names(&inst, &[("v018", "017")]);
    assert_eq!(
        check_consistency(&inst.db.apply(&e).unwrap(), &inst.constraint),
        vec![inst.metric.point("017").unwrap()]
    );
}
