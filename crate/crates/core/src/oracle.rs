//! Exhaustive search for optimal repairs of tiny instances.
//!
//! Movable cells are assigned in id order, each trying its admissible points
//! in index order, so the first optimum found in this order is returned.
//! The search prunes branches whose partial cost cannot beat the incumbent,
//! and checks a point as soon as no later cell can reach it.

use crate::error::{RepairError, Result};
use crate::metric::Distance;
use crate::model::{AttributeWeights, Constraint, Database, Repair};

/// Tolerance for comparing candidate costs.
const EPS: f64 = 1e-12;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct OracleBudget {
    /// Largest accepted number of candidate assignments.
    pub max_assignments: u128,
}

impl Default for OracleBudget {
    fn default() -> Self {
        OracleBudget {
            max_assignments: 5_000_000,
        }
    }
}

/// Points cell `c` may move to: all of them, or those within `w * tau`.
fn admissible<M: Distance + ?Sized>(
    metric: &M,
    from: usize,
    weight: f64,
    tau: Option<f64>,
) -> Vec<usize> {
    (0..metric.len())
        .filter(|&v| match tau {
            None => true,
            Some(t) if t.is_infinite() => true,
            Some(t) => metric.dist(from, v) <= weight * t + 1e-9,
        })
        .collect()
}

/// Number of assignments the search may visit, saturating.
pub fn search_space<M: Distance + ?Sized>(
    db: &Database,
    metric: &M,
    weights: &AttributeWeights,
    tau: Option<f64>,
) -> u128 {
    db.cells()
        .iter()
        .filter(|c| !weights.is_locked(c.attr))
        .map(|c| admissible(metric, c.value, weights.cost_weight(c.attr), tau).len() as u128)
        .fold(1u128, |acc, k| acc.saturating_mul(k))
}

pub fn brute_force_optimal<M: Distance + ?Sized>(
    db: &Database,
    metric: &M,
    gamma: &Constraint,
    weights: &AttributeWeights,
    tau: Option<f64>,
    budget: OracleBudget,
) -> Result<Option<Repair>> {
    brute_force_optimal_with_bound(db, metric, gamma, weights, tau, budget, None)
}

/// As [`brute_force_optimal`], but only repairs costing at most `upper`
/// (up to rounding) are considered. With `upper` the cost of some known
/// repair, the result is still optimal and the search much smaller.
pub fn brute_force_optimal_with_bound<M: Distance + ?Sized>(
    db: &Database,
    metric: &M,
    gamma: &Constraint,
    weights: &AttributeWeights,
    tau: Option<f64>,
    budget: OracleBudget,
    upper: Option<f64>,
) -> Result<Option<Repair>> {
    if metric.len() != db.n_points() {
        return Err(RepairError::input(format!(
            "metric has {} points, database expects {}",
            metric.len(),
            db.n_points()
        )));
    }
    if weights.len() != db.q() {
        return Err(RepairError::input("weights do not match the signature"));
    }
    gamma.validate(db.q())?;
    if let Some(t) = tau {
        if !(t >= 0.0) {
            return Err(RepairError::input(format!("tau must be nonnegative, got {t}")));
        }
    }
    let required = search_space(db, metric, weights, tau);
    if required > budget.max_assignments {
        return Err(RepairError::BudgetExceeded {
            required,
            budget: budget.max_assignments,
        });
    }

    let mut order: Vec<usize> = (0..db.len())
        .filter(|&i| !weights.is_locked(db.cells()[i].attr))
        .collect();
    order.sort_by(|&a, &b| db.cells()[a].id.cmp(&db.cells()[b].id));
    let options: Vec<Vec<(usize, f64)>> = order
        .iter()
        .map(|&i| {
            let c = &db.cells()[i];
            let w = weights.cost_weight(c.attr);
            admissible(metric, c.value, w, tau)
                .into_iter()
                .map(|v| (v, if v == c.value { 0.0 } else { w * metric.dist(c.value, v) }))
                .collect()
        })
        .collect();

    let n = db.n_points();
    let mut last_reach: Vec<Option<usize>> = vec![None; n];
    for (k, opts) in options.iter().enumerate() {
        for &(v, _) in opts {
            last_reach[v] = Some(k);
        }
    }
    let mut final_at: Vec<Vec<usize>> = vec![Vec::new(); order.len()];
    let mut profiles = db.locked_offsets(weights);
    for v in 0..n {
        match last_reach[v] {
            Some(k) => final_at[k].push(v),
            None => {
                if !gamma.allows(v, &profiles[v]) {
                    return Ok(None);
                }
            }
        }
    }

    let mut search = Search {
        order: &order,
        options: &options,
        final_at: &final_at,
        attrs: order.iter().map(|&i| db.cells()[i].attr).collect(),
        gamma,
        current: vec![0; order.len()],
        best: None,
        best_cost: upper.map_or(f64::INFINITY, |u| u + 1e-9 * (1.0 + u.abs())),
    };
    search.run(0, 0.0, &mut profiles);

    Ok(search.best.map(|chosen| {
        let mut assignment: Vec<usize> = db.cells().iter().map(|c| c.value).collect();
        for (k, &i) in order.iter().enumerate() {
            assignment[i] = chosen[k];
        }
        Repair {
            assignment,
            cost: search.best_cost,
        }
    }))
}

struct Search<'a> {
    order: &'a [usize],
    options: &'a [Vec<(usize, f64)>],
    final_at: &'a [Vec<usize>],
    attrs: Vec<usize>,
    gamma: &'a Constraint,
    current: Vec<usize>,
    best: Option<Vec<usize>>,
    best_cost: f64,
}

impl Search<'_> {
    fn run(&mut self, k: usize, partial: f64, profiles: &mut [Vec<usize>]) {
        if k == self.order.len() {
            if partial < self.best_cost - EPS || (self.best.is_none() && partial <= self.best_cost) {
                self.best_cost = partial;
                self.best = Some(self.current.clone());
            }
            return;
        }
        let a = self.attrs[k];
        for &(v, c) in &self.options[k] {
            let total = partial + c;
            let beats = if self.best.is_none() {
                total <= self.best_cost
            } else {
                total < self.best_cost - EPS
            };
            if !beats {
                continue;
            }
            profiles[v][a] += 1;
            if self.final_at[k].iter().all(|&u| self.gamma.allows(u, &profiles[u])) {
                self.current[k] = v;
                self.run(k + 1, total, profiles);
            }
            profiles[v][a] -= 1;
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::metric::DistanceMatrix;
    use crate::model::{Cell, ProfileExpr};

    fn line(n: usize) -> DistanceMatrix {
        DistanceMatrix::from_fn(n, |u, v| (u as f64 - v as f64).abs())
    }

    #[test]
    fn consistent_is_identity() {
        let db = Database::new(1, 3, vec![Cell::new("a", 0, 0), Cell::new("b", 0, 2)]).unwrap();
        let r = brute_force_optimal(
            &db,
            &line(3),
            &Constraint::uniform(ProfileExpr::Key(0)),
            &AttributeWeights::uniform(1, 1.0),
            None,
            OracleBudget::default(),
        )
        .unwrap()
        .unwrap();
        assert_eq!(r, Repair::identity(&db));
    }

    #[test]
    fn key_split_moves_one_step() {
        let db = Database::new(1, 3, vec![Cell::new("a", 0, 1), Cell::new("b", 0, 1)]).unwrap();
        let r = brute_force_optimal(
            &db,
            &line(3),
            &Constraint::uniform(ProfileExpr::Key(0)),
            &AttributeWeights::uniform(1, 1.0),
            None,
            OracleBudget::default(),
        )
        .unwrap()
        .unwrap();
        assert_eq!(r.cost, 1.0);
        // id order: `a` tries point 0 first
        assert_eq!(r.assignment, vec![0, 1]);
    }

    #[test]
    fn budget_is_enforced() {
        let cells = (0..6).map(|i| Cell::new(format!("c{i}"), 0, 0)).collect();
        let db = Database::new(1, 10, cells).unwrap();
        let err = brute_force_optimal(
            &db,
            &line(10),
            &Constraint::uniform(ProfileExpr::any()),
            &AttributeWeights::uniform(1, 1.0),
            None,
            OracleBudget {
                max_assignments: 1000,
            },
        )
        .unwrap_err();
        assert_eq!(
            err,
            RepairError::BudgetExceeded {
                required: 1_000_000,
                budget: 1000
            }
        );
    }

    #[test]
    fn tau_limits_moves() {
        let db = Database::new(1, 3, vec![Cell::new("a", 0, 0), Cell::new("b", 0, 0)]).unwrap();
        let key = Constraint::uniform(ProfileExpr::Key(0));
        let w = AttributeWeights::uniform(1, 1.0);
        let b = OracleBudget::default();
        assert!(brute_force_optimal(&db, &line(3), &key, &w, Some(0.5), b)
            .unwrap()
            .is_none());
        assert_eq!(
            brute_force_optimal(&db, &line(3), &key, &w, Some(1.0), b)
                .unwrap()
                .unwrap()
                .cost,
            1.0
        );
    }

    #[test]
    fn upper_bound_keeps_optimum() {
        let db = Database::new(1, 3, vec![Cell::new("a", 0, 1), Cell::new("b", 0, 1)]).unwrap();
        let key = Constraint::uniform(ProfileExpr::Key(0));
        let w = AttributeWeights::uniform(1, 1.0);
        let b = OracleBudget::default();
        let r = brute_force_optimal_with_bound(&db, &line(3), &key, &w, None, b, Some(1.0))
            .unwrap()
            .unwrap();
        assert_eq!(r.cost, 1.0);
        assert!(brute_force_optimal_with_bound(&db, &line(3), &key, &w, None, b, Some(0.5))
            .unwrap()
            .is_none());
    }
}
