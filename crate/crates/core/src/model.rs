//! Signatures, cells, databases, coincidence constraints and repairs.

use std::collections::{BTreeMap, HashSet};

use crate::error::{RepairError, Result};
use crate::metric::Distance;

/// Absolute tolerance for every cost and distance comparison.
pub const COST_TOLERANCE: f64 = 1e-9;

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Signature {
    attributes: Vec<String>,
}

impl Signature {
    pub fn new<S: Into<String>>(attributes: impl IntoIterator<Item = S>) -> Result<Self> {
        let attributes: Vec<String> = attributes.into_iter().map(Into::into).collect();
        if attributes.is_empty() {
            return Err(RepairError::input("signature needs at least one attribute"));
        }
        let mut seen = HashSet::new();
        for a in &attributes {
            if !seen.insert(a.as_str()) {
                return Err(RepairError::input(format!("duplicate attribute `{a}`")));
            }
        }
        Ok(Signature { attributes })
    }

    pub fn len(&self) -> usize {
        self.attributes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.attributes.is_empty()
    }

    pub fn attributes(&self) -> &[String] {
        &self.attributes
    }

    pub fn index_of(&self, name: &str) -> Option<usize> {
        self.attributes.iter().position(|a| a == name)
    }
}

/// Per-attribute movement weight. `Locked` cells never move.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum Weight {
    Finite(f64),
    Locked,
}

#[derive(Clone, Debug, PartialEq)]
pub struct AttributeWeights(Vec<Weight>);

impl AttributeWeights {
    pub fn new(weights: Vec<Weight>) -> Result<Self> {
        for (j, w) in weights.iter().enumerate() {
            if let Weight::Finite(x) = w {
                if !x.is_finite() || *x < 0.0 {
                    return Err(RepairError::input(format!(
                        "weight of attribute {} must be finite and nonnegative, got {x}",
                        j + 1
                    )));
                }
            }
        }
        Ok(AttributeWeights(weights))
    }

    pub fn uniform(q: usize, w: f64) -> Self {
        AttributeWeights(vec![Weight::Finite(w); q])
    }

    pub fn finite(ws: &[f64]) -> Result<Self> {
        Self::new(ws.iter().map(|&w| Weight::Finite(w)).collect())
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn get(&self, j: usize) -> Weight {
        self.0[j]
    }

    pub fn is_locked(&self, j: usize) -> bool {
        matches!(self.0[j], Weight::Locked)
    }

    /// Weight used in cost sums. Locked attributes report 0 since their
    /// cells contribute nothing.
    pub fn cost_weight(&self, j: usize) -> f64 {
        match self.0[j] {
            Weight::Finite(w) => w,
            Weight::Locked => 0.0,
        }
    }

    pub fn movable_mask(&self) -> Vec<bool> {
        self.0.iter().map(|w| matches!(w, Weight::Finite(_))).collect()
    }

    pub fn as_slice(&self) -> &[Weight] {
        &self.0
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Cell {
    pub id: String,
    /// Attribute index into the signature (0-based).
    pub attr: usize,
    /// Point index into the instance metric.
    pub value: usize,
}

impl Cell {
    pub fn new(id: impl Into<String>, attr: usize, value: usize) -> Self {
        Cell {
            id: id.into(),
            attr,
            value,
        }
    }
}

/// A finite set of cells over the points `0..n_points` of a metric.
#[derive(Clone, Debug, PartialEq)]
pub struct Database {
    q: usize,
    n_points: usize,
    cells: Vec<Cell>,
    by_point: Vec<Vec<usize>>,
}

impl Database {
    pub fn new(q: usize, n_points: usize, cells: Vec<Cell>) -> Result<Self> {
        let mut ids = HashSet::new();
        let mut by_point = vec![Vec::new(); n_points];
        for (i, c) in cells.iter().enumerate() {
            if !ids.insert(c.id.as_str()) {
                return Err(RepairError::input(format!("duplicate cell id `{}`", c.id)));
            }
            if c.attr >= q {
                return Err(RepairError::input(format!(
                    "cell `{}` has attribute index {} outside the signature",
                    c.id, c.attr
                )));
            }
            if c.value >= n_points {
                return Err(RepairError::input(format!(
                    "cell `{}` sits on unknown point {}",
                    c.id, c.value
                )));
            }
            by_point[c.value].push(i);
        }
        Ok(Database {
            q,
            n_points,
            cells,
            by_point,
        })
    }

    pub fn q(&self) -> usize {
        self.q
    }

    pub fn n_points(&self) -> usize {
        self.n_points
    }

    pub fn cells(&self) -> &[Cell] {
        &self.cells
    }

    pub fn len(&self) -> usize {
        self.cells.len()
    }

    pub fn is_empty(&self) -> bool {
        self.cells.is_empty()
    }

    /// Indices of the cells sitting on point `v`.
    pub fn cells_at(&self, v: usize) -> &[usize] {
        &self.by_point[v]
    }

    /// Distinct occupied points, ascending.
    pub fn values(&self) -> Vec<usize> {
        (0..self.n_points)
            .filter(|&v| !self.by_point[v].is_empty())
            .collect()
    }

    /// Number of cells per attribute.
    pub fn attribute_counts(&self) -> Vec<usize> {
        let mut n = vec![0; self.q];
        for c in &self.cells {
            n[c.attr] += 1;
        }
        n
    }

    /// Per-point profile of the locked cells only.
    pub fn locked_offsets(&self, weights: &AttributeWeights) -> Vec<Vec<usize>> {
        let mut off = vec![vec![0; self.q]; self.n_points];
        for c in &self.cells {
            if weights.is_locked(c.attr) {
                off[c.value][c.attr] += 1;
            }
        }
        off
    }

    /// The database obtained by moving every cell to `assignment[i]`.
    pub fn apply(&self, assignment: &[usize]) -> Result<Database> {
        if assignment.len() != self.cells.len() {
            return Err(RepairError::input(format!(
                "assignment covers {} cells, database has {}",
                assignment.len(),
                self.cells.len()
            )));
        }
        let cells = self
            .cells
            .iter()
            .zip(assignment)
            .map(|(c, &v)| Cell::new(c.id.clone(), c.attr, v))
            .collect();
        Database::new(self.q, self.n_points, cells)
    }

    /// All coincidence profiles at once, indexed by point.
    pub fn profiles(&self) -> Vec<Profile> {
        let mut out = vec![vec![0usize; self.q]; self.n_points];
        for c in &self.cells {
            out[c.value][c.attr] += 1;
        }
        out.into_iter().map(Profile).collect()
    }
}

/// Per-attribute cell counts at one point.
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Profile(pub Vec<usize>);

impl Profile {
    pub fn zero(q: usize) -> Self {
        Profile(vec![0; q])
    }

    pub fn counts(&self) -> &[usize] {
        &self.0
    }
}

impl From<Vec<usize>> for Profile {
    fn from(v: Vec<usize>) -> Self {
        Profile(v)
    }
}

/// Intensional description of a (possibly infinite) set of profiles.
///
/// Attribute indices are 0-based here; the JSON format is 1-based.
/// `And(vec![])` is the full set and `Or(vec![])` the empty one.
#[derive(Clone, Debug, PartialEq)]
pub enum ProfileExpr {
    /// `count_j <= 1`
    Key(usize),
    /// `count_l == 0 || count_j > 0`
    Incl(usize, usize),
    /// `count_j <= k`
    Le(usize, usize),
    /// `count_j >= k`
    Ge(usize, usize),
    Set(Vec<Profile>),
    And(Vec<ProfileExpr>),
    Or(Vec<ProfileExpr>),
    Not(Box<ProfileExpr>),
}

impl ProfileExpr {
    pub fn any() -> Self {
        ProfileExpr::And(Vec::new())
    }

    pub fn zero_only(q: usize) -> Self {
        ProfileExpr::Set(vec![Profile::zero(q)])
    }

    /// `key(j) ∧ incl(l, j)`
    pub fn foreign_key(l: usize, j: usize) -> Self {
        ProfileExpr::And(vec![ProfileExpr::Key(j), ProfileExpr::Incl(l, j)])
    }

    pub fn contains(&self, p: &[usize]) -> bool {
        match self {
            ProfileExpr::Key(j) => p[*j] <= 1,
            ProfileExpr::Incl(l, j) => p[*l] == 0 || p[*j] > 0,
            ProfileExpr::Le(j, k) => p[*j] <= *k,
            ProfileExpr::Ge(j, k) => p[*j] >= *k,
            ProfileExpr::Set(ps) => ps.iter().any(|s| s.0 == p),
            ProfileExpr::And(es) => es.iter().all(|e| e.contains(p)),
            ProfileExpr::Or(es) => es.iter().any(|e| e.contains(p)),
            ProfileExpr::Not(e) => !e.contains(p),
        }
    }

    /// Checks attribute indices and explicit profile lengths against `q`.
    pub fn validate(&self, q: usize) -> Result<()> {
        let check = |j: usize| {
            if j < q {
                Ok(())
            } else {
                Err(RepairError::input(format!(
                    "constraint refers to attribute {} but the signature has {q}",
                    j + 1
                )))
            }
        };
        match self {
            ProfileExpr::Key(j) | ProfileExpr::Le(j, _) | ProfileExpr::Ge(j, _) => check(*j),
            ProfileExpr::Incl(l, j) => check(*l).and(check(*j)),
            ProfileExpr::Set(ps) => {
                for p in ps {
                    if p.0.len() != q {
                        return Err(RepairError::input(format!(
                            "explicit profile {:?} does not have length {q}",
                            p.0
                        )));
                    }
                }
                Ok(())
            }
            ProfileExpr::And(es) | ProfileExpr::Or(es) => es.iter().try_for_each(|e| e.validate(q)),
            ProfileExpr::Not(e) => e.validate(q),
        }
    }
}

/// Allowed profiles per point: a default expression plus point overrides.
#[derive(Clone, Debug, PartialEq)]
pub struct Constraint {
    default: ProfileExpr,
    overrides: BTreeMap<usize, ProfileExpr>,
}

impl Constraint {
    pub fn uniform(expr: ProfileExpr) -> Self {
        Constraint {
            default: expr,
            overrides: BTreeMap::new(),
        }
    }

    pub fn with_override(mut self, v: usize, expr: ProfileExpr) -> Self {
        self.overrides.insert(v, expr);
        self
    }

    pub fn set_override(&mut self, v: usize, expr: ProfileExpr) {
        self.overrides.insert(v, expr);
    }

    pub fn default_expr(&self) -> &ProfileExpr {
        &self.default
    }

    pub fn overrides(&self) -> &BTreeMap<usize, ProfileExpr> {
        &self.overrides
    }

    pub fn is_uniform(&self) -> bool {
        self.overrides.is_empty()
    }

    pub fn expr_at(&self, v: usize) -> &ProfileExpr {
        self.overrides.get(&v).unwrap_or(&self.default)
    }

    pub fn allows(&self, v: usize, p: &[usize]) -> bool {
        self.expr_at(v).contains(p)
    }

    pub fn validate(&self, q: usize) -> Result<()> {
        self.default.validate(q)?;
        self.overrides.values().try_for_each(|e| e.validate(q))
    }
}

/// A reassignment of every cell (by position in the database) to a point.
#[derive(Clone, Debug, PartialEq)]
pub struct Repair {
    pub assignment: Vec<usize>,
    pub cost: f64,
}

impl Repair {
    pub fn identity(db: &Database) -> Self {
        Repair {
            assignment: db.cells().iter().map(|c| c.value).collect(),
            cost: 0.0,
        }
    }

    /// Positions of the cells whose point changed.
    pub fn changed_cells(&self, db: &Database) -> Vec<usize> {
        db.cells()
            .iter()
            .zip(&self.assignment)
            .enumerate()
            .filter(|(_, (c, &v))| c.value != v)
            .map(|(i, _)| i)
            .collect()
    }
}

pub fn profile_of(db: &Database, v: usize) -> Result<Profile> {
    if v >= db.n_points() {
        return Err(RepairError::input(format!("unknown point {v}")));
    }
    let mut counts = vec![0; db.q()];
    for &i in db.cells_at(v) {
        counts[db.cells()[i].attr] += 1;
    }
    Ok(Profile(counts))
}

pub fn eval_membership(gamma: &Constraint, v: usize, p: &Profile) -> bool {
    gamma.allows(v, &p.0)
}

/// Points whose profile is not allowed, ascending. Empty points count too.
pub fn check_consistency(db: &Database, gamma: &Constraint) -> Vec<usize> {
    db.profiles()
        .iter()
        .enumerate()
        .filter(|(v, p)| !gamma.allows(*v, &p.0))
        .map(|(v, _)| v)
        .collect()
}

/// Weighted movement `Σ w(λ(c)) · δ(D(c), E(c))`.
pub fn repair_cost<M: Distance + ?Sized>(
    db: &Database,
    assignment: &[usize],
    metric: &M,
    weights: &AttributeWeights,
) -> Result<f64> {
    if assignment.len() != db.len() {
        return Err(RepairError::input(format!(
            "assignment covers {} cells, database has {}",
            assignment.len(),
            db.len()
        )));
    }
    let mut total = 0.0;
    for (c, &to) in db.cells().iter().zip(assignment) {
        if to >= metric.len() {
            return Err(RepairError::input(format!(
                "cell `{}` assigned to unknown point {to}",
                c.id
            )));
        }
        if c.value == to {
            continue;
        }
        match weights.get(c.attr) {
            Weight::Locked => return Err(RepairError::LockedCellMoved { cell: c.id.clone() }),
            Weight::Finite(w) => total += w * metric.dist(c.value, to),
        }
    }
    Ok(total)
}
