//! Instance generators: seeded random instances, and the set-cover, exact
//! cover and satisfiability constructions used as hard fixtures.
//!
//! Every generator emits an [`InstanceFile`], so the output can be written to
//! disk and fed to any solver.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::error::{RepairError, Result};
use crate::instance::{
    AttrRef, CellRecord, ConstraintFile, ConstraintKind, InstanceFile, WeightRepr,
};
use crate::metric::{shortest_paths, MetricKind, MetricSpec};
use crate::model::ProfileExpr;
use crate::rng::SplitMix64;
use crate::tree::TreeEdge;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ConstraintTemplate {
    Any,
    /// key on the first attribute
    Key,
    /// first attribute included in the second
    Inclusion,
    /// key on the second attribute plus inclusion of the first in it
    ForeignKey,
    /// conjunction of random inclusions; closed under addition
    Closed,
    /// random boolean combination of atoms
    Mixed,
    /// `Mixed` default with random cardinality caps at some points
    Pointwise,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RandomSpec {
    pub n_points: usize,
    pub cells_per_attr: Vec<usize>,
    pub metric: MetricKind,
    pub template: ConstraintTemplate,
    /// Weights are drawn uniformly from this range and rounded to 0.1.
    pub weight_range: (f64, f64),
    /// 0-based attributes whose cells may not move.
    #[serde(default)]
    pub locked: Vec<usize>,
    #[serde(default)]
    pub tau: Option<f64>,
    pub seed: u64,
}

impl RandomSpec {
    pub fn new(n_points: usize, cells_per_attr: Vec<usize>, metric: MetricKind, seed: u64) -> Self {
        RandomSpec {
            n_points,
            cells_per_attr,
            metric,
            template: ConstraintTemplate::Mixed,
            weight_range: (0.5, 2.0),
            locked: Vec::new(),
            tau: None,
            seed,
        }
    }

    fn validate(&self) -> Result<()> {
        if self.n_points == 0 || self.cells_per_attr.is_empty() {
            return Err(RepairError::input("a random instance needs points and attributes"));
        }
        let (lo, hi) = self.weight_range;
        if !(lo >= 0.0 && lo <= hi && hi.is_finite()) {
            return Err(RepairError::input(format!("bad weight range [{lo}, {hi}]")));
        }
        if let Some(&j) = self.locked.iter().find(|&&j| j >= self.cells_per_attr.len()) {
            return Err(RepairError::input(format!("locked attribute {} does not exist", j + 1)));
        }
        Ok(())
    }
}

fn attribute_names(q: usize) -> Vec<String> {
    (1..=q).map(|j| format!("A{j}")).collect()
}

fn unit_weights(sig: &[String]) -> BTreeMap<String, WeightRepr> {
    sig.iter().map(|a| (a.clone(), WeightRepr::Finite(1.0))).collect()
}

fn uniform(expr: &ProfileExpr) -> ConstraintFile {
    ConstraintFile {
        kind: ConstraintKind::Uniform,
        expr: expr.into(),
        overrides: BTreeMap::new(),
    }
}

fn random_tree_edges(rng: &mut SplitMix64, n: usize, max_w: u64) -> Vec<(usize, usize, f64)> {
    (1..n)
        .map(|v| (rng.below(v as u64) as usize, v, (1 + rng.below(max_w)) as f64))
        .collect()
}

fn random_metric(rng: &mut SplitMix64, kind: MetricKind, n: usize) -> MetricSpec {
    let points: Vec<String> = (1..=n).map(|i| format!("p{i}")).collect();
    let named = |edges: Vec<(usize, usize, f64)>| -> Vec<(String, String, f64)> {
        edges
            .into_iter()
            .map(|(u, v, w)| (points[u].clone(), points[v].clone(), w))
            .collect()
    };
    match kind {
        MetricKind::Line => {
            let mut pool: Vec<usize> = (0..3 * n).collect();
            rng.shuffle(&mut pool);
            let coords = pool[..n].iter().map(|&x| x as f64).collect();
            MetricSpec::Line {
                points: points.clone(),
                coords,
            }
        }
        MetricKind::Discrete => MetricSpec::Discrete {
            points: points.clone(),
        },
        MetricKind::Tree => MetricSpec::Tree {
            edges: named(random_tree_edges(rng, n, 4)),
            points: points.clone(),
        },
        MetricKind::Graph | MetricKind::Matrix => {
            let mut edges = random_tree_edges(rng, n, 5);
            if n >= 3 {
                for _ in 0..n / 2 {
                    let u = rng.below(n as u64) as usize;
                    let v = rng.below(n as u64) as usize;
                    if u != v {
                        edges.push((u, v, (1 + rng.below(5)) as f64));
                    }
                }
            }
            if kind == MetricKind::Graph {
                MetricSpec::Graph {
                    edges: named(edges),
                    points: points.clone(),
                }
            } else {
                let te: Vec<TreeEdge> = edges.iter().map(|&(u, v, w)| TreeEdge::new(u, v, w)).collect();
                MetricSpec::Matrix {
                    dist: shortest_paths(n, &te).rows(),
                    points: points.clone(),
                }
            }
        }
    }
}

fn random_atom(rng: &mut SplitMix64, q: usize) -> ProfileExpr {
    let j = rng.below(q as u64) as usize;
    let k = rng.below(q as u64) as usize;
    match rng.below(4) {
        0 => ProfileExpr::Key(j),
        1 if j != k => ProfileExpr::Incl(j, k),
        1 => ProfileExpr::Key(j),
        2 => ProfileExpr::Le(j, 1 + rng.below(2) as usize),
        _ => ProfileExpr::Incl(j, (j + 1) % q),
    }
}

fn random_expr(rng: &mut SplitMix64, q: usize) -> ProfileExpr {
    let a = random_atom(rng, q);
    let b = random_atom(rng, q);
    match rng.below(4) {
        0 => a,
        1 => ProfileExpr::Or(vec![a, b]),
        _ => ProfileExpr::And(vec![a, b]),
    }
}

fn template_expr(rng: &mut SplitMix64, t: ConstraintTemplate, q: usize) -> ProfileExpr {
    let second = 1 % q;
    match t {
        ConstraintTemplate::Any => ProfileExpr::any(),
        ConstraintTemplate::Key => ProfileExpr::Key(0),
        ConstraintTemplate::Inclusion => ProfileExpr::Incl(0, second),
        ConstraintTemplate::ForeignKey => ProfileExpr::foreign_key(0, second),
        ConstraintTemplate::Closed => {
            let k = 1 + rng.below(2) as usize;
            ProfileExpr::And(
                (0..k)
                    .map(|_| {
                        let l = rng.below(q as u64) as usize;
                        ProfileExpr::Incl(l, (l + 1 + rng.below(q as u64) as usize) % q)
                    })
                    .collect(),
            )
        }
        ConstraintTemplate::Mixed | ConstraintTemplate::Pointwise => random_expr(rng, q),
    }
}

/// A random instance, fully determined by `spec`.
pub fn gen_random(spec: &RandomSpec) -> Result<InstanceFile> {
    spec.validate()?;
    let mut rng = SplitMix64::new(spec.seed);
    let q = spec.cells_per_attr.len();
    let n = spec.n_points;
    let signature = attribute_names(q);
    let metric = random_metric(&mut rng, spec.metric, n);
    let points = metric.points().to_vec();

    let (lo, hi) = spec.weight_range;
    let weights = signature
        .iter()
        .enumerate()
        .map(|(j, a)| {
            let w = if spec.locked.contains(&j) {
                WeightRepr::Locked(crate::instance::LockedTag::Locked)
            } else {
                let x = lo + (hi - lo) * rng.next_f64();
                WeightRepr::Finite(((x * 10.0).round() / 10.0).max(lo))
            };
            (a.clone(), w)
        })
        .collect();

    let default = template_expr(&mut rng, spec.template, q);
    let mut constraint = uniform(&default);
    if spec.template == ConstraintTemplate::Pointwise {
        constraint.kind = ConstraintKind::Pointwise;
        for p in &points {
            if rng.below(3) == 0 {
                let j = rng.below(q as u64) as usize;
                let cap = rng.below(3) as usize;
                let e = ProfileExpr::And(vec![default.clone(), ProfileExpr::Le(j, cap)]);
                constraint.overrides.insert(p.clone(), (&e).into());
            }
        }
    }

    let mut cells = Vec::new();
    for (j, &m) in spec.cells_per_attr.iter().enumerate() {
        for k in 1..=m {
            cells.push(CellRecord {
                id: format!("c{}_{k}", j + 1),
                attr: AttrRef::Name(signature[j].clone()),
                value: points[rng.below(n as u64) as usize].clone(),
            });
        }
    }
    Ok(InstanceFile {
        signature,
        weights,
        metric,
        constraint,
        cells,
        tau: spec.tau,
    })
}

fn check_triples(n_x: usize, sets: &[[usize; 3]]) -> Result<()> {
    for (i, s) in sets.iter().enumerate() {
        if s.iter().any(|&x| x >= n_x) {
            return Err(RepairError::input(format!(
                "set {} mentions an element outside 1..={n_x}",
                i + 1
            )));
        }
        if s[0] == s[1] || s[1] == s[2] || s[0] == s[2] {
            return Err(RepairError::input(format!("set {} repeats an element", i + 1)));
        }
    }
    Ok(())
}

fn xname(i: usize) -> String {
    format!("x{:02}", i + 1)
}

fn sname(i: usize) -> String {
    format!("s{:02}", i + 1)
}

/// Set cover with sets of size 3 as repair: elements `0..n_x` and the sets
/// become points, plus a hub `r`; unit edges join `r` to every set and every
/// set to its elements. One `A1` cell sits on each element, one `A2` cell
/// per set on `r`, and `A1` must be included in `A2`. A cover of size `p`
/// corresponds to a repair of cost `n_x + p`.
pub fn gen_apx_3sc(n_x: usize, sets: &[[usize; 3]]) -> Result<InstanceFile> {
    check_triples(n_x, sets)?;
    let mut points: Vec<String> = (0..n_x).map(xname).collect();
    points.extend((0..sets.len()).map(sname));
    points.push("r".into());
    let mut edges = Vec::new();
    for (i, s) in sets.iter().enumerate() {
        edges.push(("r".to_string(), sname(i), 1.0));
        for &x in s {
            edges.push((sname(i), xname(x), 1.0));
        }
    }
    let signature = attribute_names(2);
    let mut cells: Vec<CellRecord> = (0..n_x)
        .map(|x| CellRecord {
            id: format!("a{:02}", x + 1),
            attr: AttrRef::Index(1),
            value: xname(x),
        })
        .collect();
    cells.extend((0..sets.len()).map(|i| CellRecord {
        id: format!("b{:02}", i + 1),
        attr: AttrRef::Index(2),
        value: "r".into(),
    }));
    let mut spec = MetricSpec::Graph { points, edges };
    connect_isolated(&mut spec);
    Ok(InstanceFile {
        weights: unit_weights(&signature),
        signature,
        metric: spec,
        constraint: uniform(&ProfileExpr::Incl(0, 1)),
        cells,
        tau: None,
    })
}

/// Exact cover by 3-sets as bounded repair: elements and sets are points,
/// with unit edges between a set and its elements; one cell per element,
/// every point must hold zero or three cells, and `tau = 1`.
pub fn gen_x3c_bounded(n_x: usize, sets: &[[usize; 3]]) -> Result<InstanceFile> {
    if n_x % 3 != 0 {
        return Err(RepairError::input(format!(
            "exact cover needs a multiple of 3 elements, got {n_x}"
        )));
    }
    check_triples(n_x, sets)?;
    let mut points: Vec<String> = (0..n_x).map(xname).collect();
    points.extend((0..sets.len()).map(sname));
    let edges = sets
        .iter()
        .enumerate()
        .flat_map(|(i, s)| s.iter().map(move |&x| (sname(i), xname(x), 1.0)))
        .collect();
    let signature = vec!["A1".to_string()];
    let gamma = ProfileExpr::Set(vec![vec![0].into(), vec![3].into()]);
    let mut spec = MetricSpec::Graph { points, edges };
    connect_isolated(&mut spec);
    Ok(InstanceFile {
        weights: unit_weights(&signature),
        signature,
        metric: spec,
        constraint: uniform(&gamma),
        cells: (0..n_x)
            .map(|x| CellRecord {
                id: format!("c{:02}", x + 1),
                attr: AttrRef::Index(1),
                value: xname(x),
            })
            .collect(),
        tau: Some(1.0),
    })
}

/// A literal: variable index (0-based) and polarity.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Literal {
    pub var: usize,
    pub positive: bool,
}

impl Literal {
    /// From DIMACS style: `3` is `x3`, `-3` is `not x3`.
    pub fn from_dimacs(l: i64) -> Result<Self> {
        if l == 0 {
            return Err(RepairError::input("literal 0 is not a variable"));
        }
        Ok(Literal {
            var: l.unsigned_abs() as usize - 1,
            positive: l > 0,
        })
    }
}

pub fn parse_cnf(clauses: &[Vec<i64>]) -> Result<Vec<Vec<Literal>>> {
    clauses
        .iter()
        .map(|c| c.iter().map(|&l| Literal::from_dimacs(l)).collect())
        .collect()
}

/// Satisfiability as bounded repair: clause points `f_j`, variable points
/// `x_i` and literal points `x_i^T`, `x_i^F`. Each `x_i` is joined to its two
/// literal points and each clause to the literal points it contains. One
/// `A1` cell per clause, one `A2` cell per variable, `A1` included in `A2`,
/// `tau = 1`.
pub fn gen_sat_bounded(n_vars: usize, cnf: &[Vec<Literal>]) -> Result<InstanceFile> {
    if let Some(j) = cnf.iter().position(Vec::is_empty) {
        return Err(RepairError::input(format!("clause {} is empty", j + 1)));
    }
    if let Some(l) = cnf.iter().flatten().find(|l| l.var >= n_vars) {
        return Err(RepairError::input(format!(
            "literal on variable {} but only {n_vars} variables",
            l.var + 1
        )));
    }
    let fname = |j: usize| format!("f{:02}", j + 1);
    let lit = |i: usize, b: bool| format!("x{:02}{}", i + 1, if b { "T" } else { "F" });
    let mut points: Vec<String> = (0..cnf.len()).map(fname).collect();
    for i in 0..n_vars {
        points.push(xname(i));
        points.push(lit(i, true));
        points.push(lit(i, false));
    }
    let mut edges = Vec::new();
    for i in 0..n_vars {
        edges.push((xname(i), lit(i, true), 1.0));
        edges.push((xname(i), lit(i, false), 1.0));
    }
    for (j, clause) in cnf.iter().enumerate() {
        let mut seen = Vec::new();
        for l in clause {
            if !seen.contains(l) {
                seen.push(*l);
                edges.push((fname(j), lit(l.var, l.positive), 1.0));
            }
        }
    }
    let signature = attribute_names(2);
    let mut cells: Vec<CellRecord> = (0..cnf.len())
        .map(|j| CellRecord {
            id: fname(j),
            attr: AttrRef::Index(1),
            value: fname(j),
        })
        .collect();
    cells.extend((0..n_vars).map(|i| CellRecord {
        id: xname(i),
        attr: AttrRef::Index(2),
        value: xname(i),
    }));
    let mut spec = MetricSpec::Graph { points, edges };
    connect_isolated(&mut spec);
    Ok(InstanceFile {
        weights: unit_weights(&signature),
        signature,
        metric: spec,
        constraint: uniform(&ProfileExpr::Incl(0, 1)),
        cells,
        tau: Some(1.0),
    })
}

/// Graph metrics must be connected. Components are chained with edges of
/// length 3, which no cell can cross under `tau = 1` and which cost more
/// than any detour in the set-cover graph.
fn connect_isolated(spec: &mut MetricSpec) {
    let MetricSpec::Graph { points, edges } = spec else {
        return;
    };
    let n = points.len();
    let index: BTreeMap<&str, usize> = points.iter().enumerate().map(|(i, p)| (p.as_str(), i)).collect();
    let mut parent: Vec<usize> = (0..n).collect();
    fn find(p: &mut [usize], x: usize) -> usize {
        let mut r = x;
        while p[r] != r {
            r = p[r];
        }
        p[x] = r;
        r
    }
    for (a, b, _) in edges.iter() {
        let (u, v) = (index[a.as_str()], index[b.as_str()]);
        let (ru, rv) = (find(&mut parent, u), find(&mut parent, v));
        parent[ru] = rv;
    }
    let mut extra = Vec::new();
    for v in 1..n {
        let (r0, rv) = (find(&mut parent, 0), find(&mut parent, v));
        if r0 != rv {
            parent[rv] = r0;
            extra.push((points[0].clone(), points[v].clone(), 3.0));
        }
    }
    edges.extend(extra);
}
