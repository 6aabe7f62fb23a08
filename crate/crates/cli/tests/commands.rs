use std::collections::BTreeMap;
use std::path::{Path, PathBuf};
use std::process::Command;

use metric_repair::instance::InstanceFile;
use metric_repair::{check_consistency, repair_cost, Distance};
use serde_json::Value;

fn fixture(name: &str) -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("tests/fixtures").join(name)
}

fn run(args: &[&str]) -> (i32, Value) {
    let out = Command::new(env!("CARGO_BIN_EXE_metric-repair"))
        .args(args)
        .output()
        .unwrap();
    let text = String::from_utf8(out.stdout).unwrap();
    let json = serde_json::from_str(&text).unwrap_or_else(|e| panic!("{e}: {text}"));
    (out.status.code().unwrap(), json)
}

fn path(p: &Path) -> &str {
    p.to_str().unwrap()
}

fn scratch(name: &str, text: &str) -> PathBuf {
    let dir = std::env::temp_dir().join(format!("metric-repair-commands-{}", std::process::id()));
    std::fs::create_dir_all(&dir).unwrap();
    let p = dir.join(name);
    std::fs::write(&p, text).unwrap();
    p
}

/// Rechecks a reported repair against the instance file.
fn revalidate(file: &Path, out: &Value) {
    let inst = InstanceFile::from_json(&std::fs::read_to_string(file).unwrap())
        .unwrap()
        .resolve()
        .unwrap();
    let names: BTreeMap<String, String> = serde_json::from_value(out["assignment"].clone()).unwrap();
    let assignment = inst.assignment_from_names(&names).unwrap();
    let repaired = inst.db.apply(&assignment).unwrap();
    assert!(check_consistency(&repaired, &inst.constraint).is_empty());
    let cost = repair_cost(&inst.db, &assignment, &inst.metric, &inst.weights).unwrap();
    assert!((cost - out["cost"].as_f64().unwrap()).abs() <= 1e-9);
    if let Some(tau) = inst.tau {
        for (c, &to) in inst.db.cells().iter().zip(&assignment) {
            assert!(inst.metric.dist(c.value, to) <= inst.weights.cost_weight(c.attr) * tau + 1e-9);
        }
    }
}

#[test]
fn discrete_instance_uses_tree_solver() {
    let f = fixture("pid_discrete.json");
    let (code, out) = run(&["repair", path(&f)]);
    assert_eq!(code, 0);
    assert_eq!(out["status"], "repaired");
    assert_eq!(out["solver"], "tree_exact");
    assert_eq!(out["cost"].as_f64().unwrap(), 4.2);
    revalidate(&f, &out);
}

#[test]
fn matrix_instance_uses_approximation_with_seeded_trials() {
    let f = fixture("pid_hamming.json");
    let (code, out) = run(&["repair", path(&f), "--seed", "7", "--epsilon", "0.01"]);
    assert_eq!(code, 0);
    assert_eq!(out["solver"], "frt_approx");
    assert_eq!(out["trials"], 7);
    assert_eq!(out["seed"], 7);
    assert_eq!(out["diagnostics"]["trial_costs"].as_array().unwrap().len(), 7);
    let cost = out["cost"].as_f64().unwrap();
    // the exhaustive optimum is 5.2; 6.2 is the recorded result for this seed
    assert!(cost >= 5.2 - 1e-9);
    assert_eq!(cost, 6.2);
    revalidate(&f, &out);

    let (_, oracle) = run(&["oracle", path(&f)]);
    assert_eq!(oracle["solver"], "oracle");
    assert_eq!(oracle["cost"].as_f64().unwrap(), 5.2);
}

#[test]
fn trials_flag_overrides_epsilon() {
    let f = fixture("pid_hamming.json");
    let (_, out) = run(&["repair", path(&f), "--trials", "2", "--epsilon", "0.5"]);
    assert_eq!(out["trials"], 2);
}

#[test]
fn pointwise_caps_choose_the_roomy_point() {
    for name in ["nurse_discrete.json", "nurse_hamming.json"] {
        let f = fixture(name);
        let (code, out) = run(&["repair", path(&f)]);
        assert_eq!(code, 0);
        assert_eq!(out["assignment"]["v018"], "078");
        assert_eq!(out["changed_cells"], serde_json::json!(["v018"]));
        revalidate(&f, &out);
    }
}

#[test]
fn bounded_graph_without_cover_has_no_repair() {
    let (code, out) = run(&["repair", path(&fixture("x3c_infeasible.json"))]);
    assert_eq!(code, 1);
    assert_eq!(out["status"], "no_repair");
    assert_eq!(out["solver"], "bounded_oracle");
}

#[test]
fn bounded_general_metric_over_budget_is_refused() {
    let (code, out) = run(&["repair", path(&fixture("x3c_infeasible.json")), "--budget", "10"]);
    assert_eq!(code, 3);
    assert_eq!(out["status"], "error");
    assert!(out["diagnostics"]["message"].as_str().unwrap().contains("oracle"));
}

#[test]
fn bounded_line_uses_dp_and_respects_bounds() {
    let dir_file = {
        let out = Command::new(env!("CARGO_BIN_EXE_metric-repair"))
            .args(["gen", "random", "--points", "5", "--cells", "2,2", "--tau", "3", "--seed", "4"])
            .output()
            .unwrap();
        scratch("bounded_line.json", &String::from_utf8(out.stdout).unwrap())
    };
    let (code, out) = run(&["repair", path(&dir_file)]);
    assert_eq!(out["solver"], "bounded_line");
    if code == 0 {
        revalidate(&dir_file, &out);
    } else {
        assert_eq!(code, 1);
    }
}

#[test]
fn full_line_flag_reports_coordinates() {
    let text = r#"{
        "signature": ["A", "B"],
        "metric": {"kind": "line", "points": ["a", "b"], "coords": [0, 5]},
        "constraint": {"kind": "uniform", "expr": {"and": [{"incl": [1, 2]}, {"incl": [2, 1]}]}},
        "cells": [{"id": "x", "attr": 1, "value": "a"}, {"id": "y", "attr": 2, "value": "b"}],
        "tau": 2.5
    }"#;
    let f = scratch("full_line.json", text);
    let (code, out) = run(&["repair", path(&f), "--full-line"]);
    assert_eq!(code, 0);
    assert_eq!(out["solver"], "bounded_full_line");
    assert_eq!(out["cost"].as_f64().unwrap(), 5.0);
    assert_eq!(out["diagnostics"]["coordinates"]["x"].as_f64().unwrap(), 2.5);
    assert_eq!(out["diagnostics"]["coordinates"]["y"].as_f64().unwrap(), 2.5);
    // on the two given points alone no repair stays within the bound
    let (code, _) = run(&["repair", path(&f)]);
    assert_eq!(code, 1);
}

#[test]
fn malformed_json_reports_line_and_column() {
    let f = scratch("broken.json", "{\n  \"signature\": [\"A\",\n}");
    let (code, out) = run(&["repair", path(&f)]);
    assert_eq!(code, 2);
    assert_eq!(out["status"], "error");
    assert_eq!(out["diagnostics"]["line"], 3);
    assert!(out["diagnostics"]["column"].as_u64().unwrap() >= 1);
}

#[test]
fn unknown_point_is_invalid_input() {
    let text = r#"{
        "signature": ["A"],
        "metric": {"kind": "discrete", "points": ["a"]},
        "constraint": {"kind": "uniform", "expr": {"key": 1}},
        "cells": [{"id": "x", "attr": "A", "value": "zz"}]
    }"#;
    let (code, _) = run(&["repair", path(&scratch("unknown.json", text))]);
    assert_eq!(code, 2);
}

#[test]
fn validate_reports_violations() {
    let (code, out) = run(&["validate", path(&fixture("pid_discrete.json"))]);
    assert_eq!(code, 0);
    assert_eq!(out["report"]["consistent"], false);
    assert!(out["report"]["violating_points"]
        .as_array()
        .unwrap()
        .contains(&Value::from("779")));

    let bad = r#"{
        "signature": ["A"],
        "metric": {"kind": "matrix", "points": ["a", "b", "c"],
                   "dist": [[0, 1, 5], [1, 0, 1], [5, 1, 0]]},
        "constraint": {"kind": "uniform", "expr": {"key": 1}},
        "cells": []
    }"#;
    let (code, out) = run(&["validate", path(&scratch("triangle.json", bad))]);
    assert_eq!(code, 2);
    assert!(!out["report"]["metric_violations"].as_array().unwrap().is_empty());
}

#[test]
fn embed_stats_reports_stretch_at_least_one() {
    let (code, out) = run(&["embed-stats", path(&fixture("pid_hamming.json")), "--samples", "30"]);
    assert_eq!(code, 0);
    assert_eq!(out["samples"], 30);
    assert!(out["min"].as_f64().unwrap() >= 1.0 - 1e-9);
    assert_eq!(out["pairs"].as_array().unwrap().len(), 28);
}

#[test]
fn generators_emit_loadable_instances() {
    for args in [
        vec!["gen", "random", "--template", "foreign-key", "--metric", "tree"],
        vec!["gen", "x3c", "--elements", "3", "--set", "1,2,3"],
        vec!["gen", "sat", "--clause", "1,-2", "--clause", "2"],
        vec!["gen", "apx3sc", "--elements", "3", "--set", "1,2,3"],
    ] {
        let out = Command::new(env!("CARGO_BIN_EXE_metric-repair")).args(&args).output().unwrap();
        assert!(out.status.success(), "{args:?}");
        let file = InstanceFile::from_json(&String::from_utf8(out.stdout).unwrap()).unwrap();
        file.resolve().unwrap();
    }
}
