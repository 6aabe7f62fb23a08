//! JSON instance files.
//!
//! Attribute indices inside constraint expressions are 1-based against the
//! signature order. Cells name their attribute either by name or by 1-based
//! index, and their value by point name.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::error::{RepairError, Result};
use crate::metric::{build_metric, MetricSpec, MetricView};
use crate::model::{
    AttributeWeights, Cell, Constraint, Database, Profile, ProfileExpr, Signature, Weight,
};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct InstanceFile {
    pub signature: Vec<String>,
    /// Missing attributes default to weight 1.
    #[serde(default)]
    pub weights: BTreeMap<String, WeightRepr>,
    pub metric: MetricSpec,
    pub constraint: ConstraintFile,
    pub cells: Vec<CellRecord>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub tau: Option<f64>,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum WeightRepr {
    Finite(f64),
    Locked(LockedTag),
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum LockedTag {
    Locked,
}

impl From<Weight> for WeightRepr {
    fn from(w: Weight) -> Self {
        match w {
            Weight::Finite(x) => WeightRepr::Finite(x),
            Weight::Locked => WeightRepr::Locked(LockedTag::Locked),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ConstraintKind {
    Uniform,
    Pointwise,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ConstraintFile {
    pub kind: ConstraintKind,
    pub expr: ExprRepr,
    /// Point name to expression; only for `pointwise`.
    #[serde(default, skip_serializing_if = "BTreeMap::is_empty")]
    pub overrides: BTreeMap<String, ExprRepr>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ExprRepr {
    Key(usize),
    Incl([usize; 2]),
    /// `[attribute, bound]`
    Le([usize; 2]),
    Ge([usize; 2]),
    Set(Vec<Vec<usize>>),
    And(Vec<ExprRepr>),
    Or(Vec<ExprRepr>),
    Not(Box<ExprRepr>),
}

impl ExprRepr {
    pub fn resolve(&self, q: usize) -> Result<ProfileExpr> {
        let attr = |j: usize| {
            if (1..=q).contains(&j) {
                Ok(j - 1)
            } else {
                Err(RepairError::input(format!(
                    "attribute index {j} out of range 1..={q}"
                )))
            }
        };
        Ok(match self {
            ExprRepr::Key(j) => ProfileExpr::Key(attr(*j)?),
            ExprRepr::Incl([l, j]) => ProfileExpr::Incl(attr(*l)?, attr(*j)?),
            ExprRepr::Le([j, k]) => ProfileExpr::Le(attr(*j)?, *k),
            ExprRepr::Ge([j, k]) => ProfileExpr::Ge(attr(*j)?, *k),
            ExprRepr::Set(ps) => {
                for p in ps {
                    if p.len() != q {
                        return Err(RepairError::input(format!(
                            "explicit profile {p:?} does not have length {q}"
                        )));
                    }
                }
                ProfileExpr::Set(ps.iter().cloned().map(Profile).collect())
            }
            ExprRepr::And(es) => {
                ProfileExpr::And(es.iter().map(|e| e.resolve(q)).collect::<Result<_>>()?)
            }
            ExprRepr::Or(es) => {
                ProfileExpr::Or(es.iter().map(|e| e.resolve(q)).collect::<Result<_>>()?)
            }
            ExprRepr::Not(e) => ProfileExpr::Not(Box::new(e.resolve(q)?)),
        })
    }
}

impl From<&ProfileExpr> for ExprRepr {
    fn from(e: &ProfileExpr) -> Self {
        match e {
            ProfileExpr::Key(j) => ExprRepr::Key(j + 1),
            ProfileExpr::Incl(l, j) => ExprRepr::Incl([l + 1, j + 1]),
            ProfileExpr::Le(j, k) => ExprRepr::Le([j + 1, *k]),
            ProfileExpr::Ge(j, k) => ExprRepr::Ge([j + 1, *k]),
            ProfileExpr::Set(ps) => ExprRepr::Set(ps.iter().map(|p| p.0.clone()).collect()),
            ProfileExpr::And(es) => ExprRepr::And(es.iter().map(Into::into).collect()),
            ProfileExpr::Or(es) => ExprRepr::Or(es.iter().map(Into::into).collect()),
            ProfileExpr::Not(e) => ExprRepr::Not(Box::new(e.as_ref().into())),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum AttrRef {
    Index(usize),
    Name(String),
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CellRecord {
    pub id: String,
    pub attr: AttrRef,
    pub value: String,
}

/// A resolved, validated instance.
#[derive(Clone, Debug)]
pub struct Instance {
    pub signature: Signature,
    pub weights: AttributeWeights,
    pub metric: MetricView,
    pub constraint: Constraint,
    pub db: Database,
    pub tau: Option<f64>,
}

impl InstanceFile {
    pub fn from_json(text: &str) -> serde_json::Result<Self> {
        serde_json::from_str(text)
    }

    pub fn to_json_pretty(&self) -> String {
        serde_json::to_string_pretty(self).expect("instance files always serialize")
    }

    pub fn resolve(&self) -> Result<Instance> {
        let signature = Signature::new(self.signature.iter().cloned())?;
        let q = signature.len();
        for name in self.weights.keys() {
            if signature.index_of(name).is_none() {
                return Err(RepairError::input(format!(
                    "weight given for unknown attribute `{name}`"
                )));
            }
        }
        let weights = AttributeWeights::new(
            signature
                .attributes()
                .iter()
                .map(|a| match self.weights.get(a) {
                    None => Weight::Finite(1.0),
                    Some(WeightRepr::Finite(x)) => Weight::Finite(*x),
                    Some(WeightRepr::Locked(_)) => Weight::Locked,
                })
                .collect(),
        )?;
        let metric = build_metric(&self.metric)?;
        let point = |name: &str| {
            metric
                .point(name)
                .ok_or_else(|| RepairError::input(format!("unknown point `{name}`")))
        };

        let default = self.constraint.expr.resolve(q)?;
        let mut constraint = Constraint::uniform(default);
        if self.constraint.kind == ConstraintKind::Uniform && !self.constraint.overrides.is_empty() {
            return Err(RepairError::input(
                "a uniform constraint cannot have point overrides",
            ));
        }
        for (name, e) in &self.constraint.overrides {
            constraint.set_override(point(name)?, e.resolve(q)?);
        }

        let cells = self
            .cells
            .iter()
            .map(|c| {
                let attr = match &c.attr {
                    AttrRef::Index(j) if (1..=q).contains(j) => j - 1,
                    AttrRef::Index(j) => {
                        return Err(RepairError::input(format!(
                            "cell `{}` has attribute index {j} outside 1..={q}",
                            c.id
                        )))
                    }
                    AttrRef::Name(a) => signature.index_of(a).ok_or_else(|| {
                        RepairError::input(format!("cell `{}` has unknown attribute `{a}`", c.id))
                    })?,
                };
                Ok(Cell::new(c.id.clone(), attr, point(&c.value)?))
            })
            .collect::<Result<Vec<_>>>()?;
        let db = Database::new(q, metric.names().len(), cells)?;

        if let Some(t) = self.tau {
            if !(t >= 0.0) {
                return Err(RepairError::input(format!("tau must be nonnegative, got {t}")));
            }
        }
        Ok(Instance {
            signature,
            weights,
            metric,
            constraint,
            db,
            tau: self.tau,
        })
    }
}

impl Instance {
    /// Cell positions to point indices, from a map cell id to point name.
    pub fn assignment_from_names(&self, by_id: &BTreeMap<String, String>) -> Result<Vec<usize>> {
        self.db
            .cells()
            .iter()
            .map(|c| {
                let name = by_id
                    .get(&c.id)
                    .ok_or_else(|| RepairError::input(format!("no point for cell `{}`", c.id)))?;
                self.metric
                    .point(name)
                    .ok_or_else(|| RepairError::input(format!("unknown point `{name}`")))
            })
            .collect()
    }

    /// Cell id to point name.
    pub fn assignment_names(&self, assignment: &[usize]) -> BTreeMap<String, String> {
        self.db
            .cells()
            .iter()
            .zip(assignment)
            .map(|(c, &v)| (c.id.clone(), self.metric.name(v).to_string()))
            .collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    const SMALL: &str = r#"{
        "signature": ["A", "B"],
        "weights": {"A": 2, "B": "locked"},
        "metric": {"kind": "line", "points": ["p", "q"], "coords": [0, 3]},
        "constraint": {"kind": "pointwise", "expr": {"incl": [1, 2]},
                       "overrides": {"q": {"and": [{"key": 1}, {"le": [1, 4]}]}}},
        "cells": [{"id": "a", "attr": "A", "value": "p"},
                  {"id": "b", "attr": 2, "value": "q"}]
    }"#;

    #[test]
    fn resolves_names_and_indices() {
        let f = InstanceFile::from_json(SMALL).unwrap();
        let inst = f.resolve().unwrap();
        assert_eq!(inst.weights.get(0), Weight::Finite(2.0));
        assert!(inst.weights.is_locked(1));
        assert_eq!(inst.db.cells()[1].attr, 1);
        assert_eq!(inst.db.cells()[1].value, 1);
        assert_eq!(
            inst.constraint.expr_at(1),
            &ProfileExpr::And(vec![ProfileExpr::Key(0), ProfileExpr::Le(0, 4)])
        );
        assert_eq!(inst.constraint.expr_at(0), &ProfileExpr::Incl(0, 1));
    }

    #[test]
    fn round_trips() {
        let f = InstanceFile::from_json(SMALL).unwrap();
        let again = InstanceFile::from_json(&f.to_json_pretty()).unwrap();
        assert_eq!(f, again);
    }

    #[test]
    fn expr_repr_is_one_based() {
        let e = ProfileExpr::Not(Box::new(ProfileExpr::Incl(0, 2)));
        let r = ExprRepr::from(&e);
        assert_eq!(serde_json::to_string(&r).unwrap(), r#"{"not":{"incl":[1,3]}}"#);
        assert_eq!(r.resolve(3).unwrap(), e);
        assert!(ExprRepr::Key(0).resolve(2).is_err());
    }

    #[test]
    fn rejects_bad_references() {
        let bad_point = SMALL.replace(r#""value": "q""#, r#""value": "zz""#);
        assert!(InstanceFile::from_json(&bad_point).unwrap().resolve().is_err());
        let bad_attr = SMALL.replace(r#""attr": 2"#, r#""attr": 3"#);
        assert!(InstanceFile::from_json(&bad_attr).unwrap().resolve().is_err());
        assert!(InstanceFile::from_json(r#"{"signature": []}"#).is_err());
    }
}
