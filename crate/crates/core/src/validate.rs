//! Instance diagnostics and the closure-under-addition test.
//!
//! Closure under addition is undecidable in general for intensional
//! expressions, so it is tested on profiles bounded by the database's own
//! attribute counts: for every pair `p, p'` of allowed profiles with
//! `p_j, p'_j <= max(n_j, 1)`, the sum `p + p'` must be allowed too.

use serde::Serialize;

use crate::error::{RepairError, Result};
use crate::grid::Shape;
use crate::instance::Instance;
use crate::metric::AxiomViolation;
use crate::model::{check_consistency, ProfileExpr};

/// Profiles enumerated per closure check are capped at this many.
const CLOSURE_PROFILE_LIMIT: usize = 4096;

#[derive(Clone, Debug, PartialEq, Serialize)]
#[serde(tag = "verdict", rename_all = "snake_case")]
pub enum ClosureVerdict {
    /// No counterexample among profiles bounded by `caps`.
    Closed { caps: Vec<usize> },
    NotClosed { left: Vec<usize>, right: Vec<usize> },
}

impl ClosureVerdict {
    pub fn is_closed(&self) -> bool {
        matches!(self, ClosureVerdict::Closed { .. })
    }
}

/// Per-attribute caps `max(n_j, 1)`, shrunk (largest first) until the grid
/// has at most [`CLOSURE_PROFILE_LIMIT`] profiles.
pub fn closure_caps(counts: &[usize]) -> Vec<usize> {
    let mut caps: Vec<usize> = counts.iter().map(|&n| n.max(1)).collect();
    while caps.iter().map(|&c| c + 1).product::<usize>() > CLOSURE_PROFILE_LIMIT {
        let j = (0..caps.len()).max_by_key(|&j| caps[j]).unwrap();
        if caps[j] == 1 {
            break;
        }
        caps[j] -= 1;
    }
    caps
}

pub fn closure_under_addition(expr: &ProfileExpr, caps: &[usize]) -> ClosureVerdict {
    let shape = Shape::new(caps);
    let mut allowed: Vec<Vec<usize>> = Vec::new();
    shape.for_each_below(caps, |_, p| {
        if expr.contains(p) {
            allowed.push(p.to_vec());
        }
    });
    let mut sum = vec![0; caps.len()];
    for (a, p) in allowed.iter().enumerate() {
        for p2 in &allowed[a..] {
            for j in 0..caps.len() {
                sum[j] = p[j] + p2[j];
            }
            if !expr.contains(&sum) {
                return ClosureVerdict::NotClosed {
                    left: p.clone(),
                    right: p2.clone(),
                };
            }
        }
    }
    ClosureVerdict::Closed {
        caps: caps.to_vec(),
    }
}

/// Refuses unless `expr` allows the zero profile and passes the bounded
/// closure test for a database with attribute counts `counts`.
pub fn require_closed_uniform(expr: &ProfileExpr, counts: &[usize]) -> Result<()> {
    if !expr.contains(&vec![0; counts.len()]) {
        return Err(RepairError::Refused(
            "the constraint must allow the empty profile".into(),
        ));
    }
    match closure_under_addition(expr, &closure_caps(counts)) {
        ClosureVerdict::Closed { .. } => Ok(()),
        ClosureVerdict::NotClosed { left, right } => Err(RepairError::Refused(format!(
            "the constraint is not closed under addition: {left:?} and {right:?} are allowed \
             but their sum is not"
        ))),
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ValidationReport {
    pub points: usize,
    pub cells: usize,
    pub metric_kind: String,
    pub metric_violations: Vec<String>,
    pub consistent: bool,
    /// Names of points whose profile is not allowed.
    pub violating_points: Vec<String>,
    pub uniform: bool,
    /// Only for uniform constraints.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub closure: Option<ClosureVerdict>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub tau: Option<f64>,
}

impl ValidationReport {
    pub fn is_valid(&self) -> bool {
        self.metric_violations.is_empty()
    }
}

pub fn validate_instance(inst: &Instance) -> ValidationReport {
    let metric_violations = inst
        .metric
        .axiom_violations(1e-9)
        .iter()
        .map(|v| describe(v, inst))
        .collect();
    let violating = check_consistency(&inst.db, &inst.constraint);
    let uniform = inst.constraint.is_uniform();
    ValidationReport {
        points: inst.metric.names().len(),
        cells: inst.db.len(),
        metric_kind: format!("{:?}", inst.metric.kind()).to_lowercase(),
        metric_violations,
        consistent: violating.is_empty(),
        violating_points: violating
            .iter()
            .map(|&v| inst.metric.name(v).to_string())
            .collect(),
        uniform,
        closure: uniform.then(|| {
            closure_under_addition(
                inst.constraint.default_expr(),
                &closure_caps(&inst.db.attribute_counts()),
            )
        }),
        tau: inst.tau,
    }
}

fn describe(v: &AxiomViolation, inst: &Instance) -> String {
    let n = |i: usize| inst.metric.name(i);
    match v {
        AxiomViolation::NonzeroDiagonal { point, value } => {
            format!("d({0}, {0}) is {value}, not zero", n(*point))
        }
        AxiomViolation::Asymmetric { u, v } => format!("d({}, {}) is not symmetric", n(*u), n(*v)),
        AxiomViolation::Negative { u, v } => format!("d({}, {}) is negative", n(*u), n(*v)),
        AxiomViolation::Coincident { u, v } => {
            format!("distinct points {} and {} are at distance 0", n(*u), n(*v))
        }
        AxiomViolation::Triangle { a, b, c, excess } => format!(
            "d({}, {}) exceeds d({}, {}) + d({}, {}) by {excess}",
            n(*a),
            n(*c),
            n(*a),
            n(*b),
            n(*b),
            n(*c)
        ),
    }
}
