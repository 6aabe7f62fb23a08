//! Approximate repairs on general metrics.
//!
//! [`repair_general`] solves exactly on several sampled dominating trees and
//! keeps the candidate that is cheapest under the original distances.
//! [`repair_infinite`] restricts an arbitrary (possibly infinite) space to the
//! values already used by the database; [`make_non_inventive`] turns any
//! repair into one over those values at most doubling its cost.

use crate::embed::sample_frt_tree_seeded;
use crate::error::{RepairError, Result};
use crate::metric::{Distance, DistanceMatrix};
use crate::model::{repair_cost, AttributeWeights, Cell, Constraint, Database, Repair};
use crate::rng::SplitMix64;
use crate::tree_solver::solve_tree;
use crate::validate::require_closed_uniform;

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ApproxConfig {
    /// Failure probability, in `(0, 1)`.
    pub epsilon: f64,
    /// Overrides the count derived from `epsilon`.
    pub trials: Option<usize>,
    pub seed: u64,
}

impl Default for ApproxConfig {
    fn default() -> Self {
        ApproxConfig {
            epsilon: 0.01,
            trials: None,
            seed: 0,
        }
    }
}

impl ApproxConfig {
    pub fn validate(&self) -> Result<()> {
        if self.trials.is_none() && !(self.epsilon > 0.0 && self.epsilon < 1.0) {
            return Err(RepairError::input(format!(
                "epsilon must lie in (0, 1), got {}",
                self.epsilon
            )));
        }
        if self.trials == Some(0) {
            return Err(RepairError::input("at least one trial is required"));
        }
        Ok(())
    }

    /// `ceil(log2(1/epsilon))`, at least 1, unless overridden.
    pub fn trial_count(&self) -> usize {
        self.trials
            .unwrap_or_else(|| ((1.0 / self.epsilon).log2().ceil() as usize).max(1))
    }

    /// Seed of trial `k` is the `k`-th output of SplitMix64 started at the
    /// master seed.
    pub fn trial_seeds(&self) -> Vec<u64> {
        let mut rng = SplitMix64::new(self.seed);
        (0..self.trial_count()).map(|_| rng.next_u64()).collect()
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct TrialRecord {
    pub seed: u64,
    /// Cost under the original metric.
    pub cost: f64,
    /// Cost under the sampled tree; never below `cost`.
    pub tree_cost: f64,
}

#[derive(Clone, Debug, PartialEq)]
pub struct ApproxOutcome {
    /// `None` when no repair exists.
    pub repair: Option<Repair>,
    pub trials: Vec<TrialRecord>,
    /// Index into `trials` of the returned candidate.
    pub best_trial: Option<usize>,
    pub planned_trials: usize,
}

pub fn repair_general<M: Distance + ?Sized>(
    db: &Database,
    metric: &M,
    gamma: &Constraint,
    weights: &AttributeWeights,
    cfg: &ApproxConfig,
) -> Result<ApproxOutcome> {
    cfg.validate()?;
    if metric.len() != db.n_points() {
        return Err(RepairError::input(format!(
            "metric has {} points, database expects {}",
            metric.len(),
            db.n_points()
        )));
    }
    gamma.validate(db.q())?;
    if let Some(&v) = gamma.overrides().keys().find(|&&v| v >= db.n_points()) {
        return Err(RepairError::input(format!("constraint override for unknown point {v}")));
    }
    let seeds = cfg.trial_seeds();
    let mut out = ApproxOutcome {
        repair: None,
        trials: Vec::new(),
        best_trial: None,
        planned_trials: seeds.len(),
    };
    for &seed in &seeds {
        let tree = sample_frt_tree_seeded(metric, seed)?;
        let extended = tree.extend_constraint(gamma, db.q());
        let Some(candidate) = solve_tree(db, tree.tree(), &extended, weights)? else {
            // feasibility does not depend on the metric
            return Ok(out);
        };
        let cost = repair_cost(db, &candidate.assignment, metric, weights)?;
        if cost > candidate.cost + 1e-9 * (1.0 + candidate.cost.abs()) {
            return Err(RepairError::Internal(format!(
                "sampled tree shrinks distances: cost {cost} exceeds tree cost {}",
                candidate.cost
            )));
        }
        out.trials.push(TrialRecord {
            seed,
            cost,
            tree_cost: candidate.cost,
        });
        if out.repair.as_ref().map_or(true, |r| cost < r.cost) {
            out.best_trial = Some(out.trials.len() - 1);
            out.repair = Some(Repair {
                assignment: candidate.assignment,
                cost,
            });
        }
        if cost == 0.0 {
            break;
        }
    }
    Ok(out)
}

/// A cell over an arbitrary value type.
#[derive(Clone, Debug, PartialEq)]
pub struct OpenCell<V> {
    pub id: String,
    pub attr: usize,
    pub value: V,
}

/// A database whose values come from a space that need not be enumerated.
#[derive(Clone, Debug, PartialEq)]
pub struct OpenDatabase<V> {
    pub q: usize,
    pub cells: Vec<OpenCell<V>>,
}

impl<V: Clone + PartialEq> OpenDatabase<V> {
    pub fn new(q: usize, cells: Vec<OpenCell<V>>) -> Result<Self> {
        if let Some(c) = cells.iter().find(|c| c.attr >= q) {
            return Err(RepairError::input(format!(
                "cell `{}` has attribute {} but the signature has {q}",
                c.id,
                c.attr + 1
            )));
        }
        Ok(OpenDatabase { q, cells })
    }

    /// Distinct values in order of first appearance.
    pub fn values(&self) -> Vec<V> {
        distinct(self.cells.iter().map(|c| &c.value))
    }

    pub fn attribute_counts(&self) -> Vec<usize> {
        let mut n = vec![0; self.q];
        for c in &self.cells {
            n[c.attr] += 1;
        }
        n
    }

    pub fn cost(
        &self,
        assignment: &[V],
        dist: impl Fn(&V, &V) -> f64,
        weights: &AttributeWeights,
    ) -> Result<f64> {
        if assignment.len() != self.cells.len() {
            return Err(RepairError::input("assignment length differs from cell count"));
        }
        let mut total = 0.0;
        for (c, e) in self.cells.iter().zip(assignment) {
            if c.value != *e {
                if weights.is_locked(c.attr) {
                    return Err(RepairError::LockedCellMoved { cell: c.id.clone() });
                }
                total += weights.cost_weight(c.attr) * dist(&c.value, e);
            }
        }
        Ok(total)
    }

    /// Whether every occupied value of `assignment` has an allowed profile
    /// under the uniform constraint `gamma`.
    pub fn satisfies(&self, assignment: &[V], gamma: &Constraint) -> bool {
        distinct(assignment.iter()).iter().all(|v| {
            let mut p = vec![0; self.q];
            for (c, e) in self.cells.iter().zip(assignment) {
                if e == v {
                    p[c.attr] += 1;
                }
            }
            gamma.default_expr().contains(&p)
        })
    }
}

fn distinct<'a, V: Clone + PartialEq + 'a>(it: impl Iterator<Item = &'a V>) -> Vec<V> {
    let mut out: Vec<V> = Vec::new();
    for v in it {
        if !out.contains(v) {
            out.push(v.clone());
        }
    }
    out
}

fn check_open_preconditions<V: Clone + PartialEq>(
    db: &OpenDatabase<V>,
    gamma: &Constraint,
) -> Result<()> {
    if !gamma.is_uniform() {
        return Err(RepairError::Refused(
            "restricting to the database's own values needs a uniform constraint".into(),
        ));
    }
    gamma.validate(db.q)?;
    require_closed_uniform(gamma.default_expr(), &db.attribute_counts())
}

/// Moves every cell sitting on a value absent from `db` to the original value
/// of the cell at that value that started closest to it. The result costs
/// at most twice `e0` and only uses values of `db`.
pub fn make_non_inventive<V: Clone + PartialEq>(
    db: &OpenDatabase<V>,
    e0: &[V],
    dist: impl Fn(&V, &V) -> f64,
    gamma: &Constraint,
    weights: &AttributeWeights,
) -> Result<Vec<V>> {
    check_open_preconditions(db, gamma)?;
    if e0.len() != db.cells.len() {
        return Err(RepairError::input("repair length differs from cell count"));
    }
    if !db.satisfies(e0, gamma) {
        return Err(RepairError::input("the input repair is not consistent"));
    }
    db.cost(e0, &dist, weights)?;
    let original = db.values();
    let mut out = e0.to_vec();
    for v in distinct(e0.iter()) {
        if original.contains(&v) {
            continue;
        }
        let group: Vec<usize> = (0..e0.len()).filter(|&i| e0[i] == v).collect();
        let mut best = group[0];
        let mut best_d = dist(&db.cells[best].value, &v);
        for &i in &group[1..] {
            let d = dist(&db.cells[i].value, &v);
            if d < best_d {
                best = i;
                best_d = d;
            }
        }
        let target = db.cells[best].value.clone();
        for &i in &group {
            out[i] = target.clone();
        }
    }
    Ok(out)
}

#[derive(Clone, Debug, PartialEq)]
pub struct InfiniteOutcome<V> {
    /// The finite point set used, `Vals(D)` in order of first appearance.
    pub points: Vec<V>,
    pub assignment: Option<Vec<V>>,
    pub approx: ApproxOutcome,
}

/// Approximate repair over an arbitrary space, searching only among the
/// values already present in `db`.
pub fn repair_infinite<V: Clone + PartialEq>(
    db: &OpenDatabase<V>,
    dist: impl Fn(&V, &V) -> f64,
    gamma: &Constraint,
    weights: &AttributeWeights,
    cfg: &ApproxConfig,
) -> Result<InfiniteOutcome<V>> {
    check_open_preconditions(db, gamma)?;
    let points = db.values();
    let (finite, matrix) = materialize(db, &points, &dist)?;
    let approx = repair_general(&finite, &matrix, gamma, weights, cfg)?;
    let assignment = approx
        .repair
        .as_ref()
        .map(|r| r.assignment.iter().map(|&i| points[i].clone()).collect());
    Ok(InfiniteOutcome {
        points,
        assignment,
        approx,
    })
}

/// The finite database over `points` (indices) and its distance matrix.
pub fn materialize<V: Clone + PartialEq>(
    db: &OpenDatabase<V>,
    points: &[V],
    dist: impl Fn(&V, &V) -> f64,
) -> Result<(Database, DistanceMatrix)> {
    let matrix = DistanceMatrix::from_fn(points.len(), |u, v| {
        if u == v {
            0.0
        } else {
            dist(&points[u], &points[v])
        }
    });
    for u in 0..points.len() {
        for v in u + 1..points.len() {
            let d = matrix.dist(u, v);
            if !(d > 0.0 && d.is_finite()) {
                return Err(RepairError::metric(format!(
                    "distinct values at positions {u} and {v} have distance {d}"
                )));
            }
        }
    }
    let cells = db
        .cells
        .iter()
        .map(|c| {
            let v = points
                .iter()
                .position(|p| *p == c.value)
                .ok_or_else(|| RepairError::input(format!("value of cell `{}` not listed", c.id)))?;
            Ok(Cell::new(c.id.clone(), c.attr, v))
        })
        .collect::<Result<Vec<_>>>()?;
    Ok((Database::new(db.q, points.len(), cells)?, matrix))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::ProfileExpr;

    fn line(xs: &[(usize, f64)]) -> OpenDatabase<f64> {
        OpenDatabase::new(
            2,
            xs.iter()
                .enumerate()
                .map(|(i, &(a, v))| OpenCell {
                    id: format!("c{i}"),
                    attr: a,
                    value: v,
                })
                .collect(),
        )
        .unwrap()
    }

    fn abs(a: &f64, b: &f64) -> f64 {
        (a - b).abs()
    }

    #[test]
    fn trial_count_from_epsilon() {
        let cfg = ApproxConfig::default();
        assert_eq!(cfg.trial_count(), 7);
        assert_eq!(
            ApproxConfig {
                epsilon: 0.5,
                ..cfg
            }
            .trial_count(),
            1
        );
        assert_eq!(
            ApproxConfig {
                trials: Some(3),
                ..cfg
            }
            .trial_seeds()
            .len(),
            3
        );
    }

    #[test]
    fn merge_at_invented_midpoint_goes_to_an_endpoint() {
        let db = line(&[(0, 0.0), (1, 10.0)]);
        let gamma = Constraint::uniform(ProfileExpr::Incl(0, 1));
        let w = AttributeWeights::uniform(2, 1.0);
        let e0 = vec![5.0, 5.0];
        let out = make_non_inventive(&db, &e0, abs, &gamma, &w).unwrap();
        assert_eq!(out, vec![0.0, 0.0]);
        let cost = db.cost(&out, abs, &w).unwrap();
        assert_eq!(cost, 10.0);
        assert!(cost <= 2.0 * db.cost(&e0, abs, &w).unwrap());
    }

    #[test]
    fn non_inventive_input_is_unchanged() {
        let db = line(&[(0, 0.0), (1, 3.0)]);
        let gamma = Constraint::uniform(ProfileExpr::Incl(0, 1));
        let e0 = vec![3.0, 3.0];
        let out =
            make_non_inventive(&db, &e0, abs, &gamma, &AttributeWeights::uniform(2, 1.0)).unwrap();
        assert_eq!(out, e0);
    }

    #[test]
    fn key_constraint_is_refused() {
        let db = line(&[(0, 0.0), (0, 1.0)]);
        let gamma = Constraint::uniform(ProfileExpr::Key(0));
        let err = make_non_inventive(
            &db,
            &[0.0, 1.0],
            abs,
            &gamma,
            &AttributeWeights::uniform(2, 1.0),
        )
        .unwrap_err();
        assert!(matches!(err, RepairError::Refused(_)));
    }

    #[test]
    fn consistent_database_costs_nothing() {
        let db = Database::new(1, 3, vec![Cell::new("a", 0, 0), Cell::new("b", 0, 2)]).unwrap();
        let m = DistanceMatrix::from_fn(3, |u, v| (u as f64 - v as f64).abs());
        let out = repair_general(
            &db,
            &m,
            &Constraint::uniform(ProfileExpr::Key(0)),
            &AttributeWeights::uniform(1, 1.0),
            &ApproxConfig::default(),
        )
        .unwrap();
        assert_eq!(out.repair, Some(Repair::identity(&db)));
        assert_eq!(out.trials.len(), 1);
    }

    #[test]
    fn infeasible_stops_after_one_trial() {
        let db = Database::new(1, 1, vec![Cell::new("a", 0, 0), Cell::new("b", 0, 0)]).unwrap();
        let m = DistanceMatrix::from_fn(1, |_, _| 0.0);
        let out = repair_general(
            &db,
            &m,
            &Constraint::uniform(ProfileExpr::Key(0)),
            &AttributeWeights::uniform(1, 1.0),
            &ApproxConfig::default(),
        )
        .unwrap();
        assert!(out.repair.is_none());
        assert!(out.trials.is_empty());
    }

    #[test]
    fn infinite_uses_only_original_values() {
        let db = line(&[(0, 0.0), (0, 4.0), (1, 9.0)]);
        let gamma = Constraint::uniform(ProfileExpr::Incl(0, 1));
        let out = repair_infinite(
            &db,
            abs,
            &gamma,
            &AttributeWeights::uniform(2, 1.0),
            &ApproxConfig::default(),
        )
        .unwrap();
        let a = out.assignment.unwrap();
        assert!(a.iter().all(|v| db.values().contains(v)));
        assert!(db.satisfies(&a, &gamma));
    }
}
