//! Finite metrics: construction from the supported representations,
//! distance queries and axiom checks.

use std::collections::HashMap;

use serde::{Deserialize, Serialize};

use crate::error::{RepairError, Result};
use crate::tree::{TreeEdge, TreeMetric};

/// Distance queries over the points `0..len()`.
pub trait Distance {
    fn len(&self) -> usize;
    fn dist(&self, u: usize, v: usize) -> f64;

    fn is_empty(&self) -> bool {
        self.len() == 0
    }
}

/// Dense symmetric distance table.
#[derive(Clone, Debug, PartialEq)]
pub struct DistanceMatrix {
    n: usize,
    data: Vec<f64>,
}

impl DistanceMatrix {
    pub fn from_fn(n: usize, mut f: impl FnMut(usize, usize) -> f64) -> Self {
        let mut data = Vec::with_capacity(n * n);
        for u in 0..n {
            for v in 0..n {
                data.push(f(u, v));
            }
        }
        DistanceMatrix { n, data }
    }

    pub fn from_rows(rows: &[Vec<f64>]) -> Result<Self> {
        let n = rows.len();
        if rows.iter().any(|r| r.len() != n) {
            return Err(RepairError::metric("distance matrix is not square"));
        }
        Ok(DistanceMatrix {
            n,
            data: rows.iter().flatten().copied().collect(),
        })
    }

    pub fn rows(&self) -> Vec<Vec<f64>> {
        self.data.chunks(self.n.max(1)).map(<[f64]>::to_vec).take(self.n).collect()
    }
}

impl Distance for DistanceMatrix {
    fn len(&self) -> usize {
        self.n
    }

    fn dist(&self, u: usize, v: usize) -> f64 {
        self.data[u * self.n + v]
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum MetricKind {
    Matrix,
    Graph,
    Line,
    Discrete,
    Tree,
}

/// The metric section of an instance file.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase", deny_unknown_fields)]
pub enum MetricSpec {
    Matrix {
        points: Vec<String>,
        dist: Vec<Vec<f64>>,
    },
    Graph {
        points: Vec<String>,
        edges: Vec<(String, String, f64)>,
    },
    Line {
        points: Vec<String>,
        coords: Vec<f64>,
    },
    Discrete {
        points: Vec<String>,
    },
    Tree {
        points: Vec<String>,
        edges: Vec<(String, String, f64)>,
    },
}

impl MetricSpec {
    pub fn kind(&self) -> MetricKind {
        match self {
            MetricSpec::Matrix { .. } => MetricKind::Matrix,
            MetricSpec::Graph { .. } => MetricKind::Graph,
            MetricSpec::Line { .. } => MetricKind::Line,
            MetricSpec::Discrete { .. } => MetricKind::Discrete,
            MetricSpec::Tree { .. } => MetricKind::Tree,
        }
    }

    pub fn points(&self) -> &[String] {
        match self {
            MetricSpec::Matrix { points, .. }
            | MetricSpec::Graph { points, .. }
            | MetricSpec::Line { points, .. }
            | MetricSpec::Discrete { points }
            | MetricSpec::Tree { points, .. } => points,
        }
    }
}

/// A finite metric with named points.
///
/// Distances are materialized; the originating representation is kept so
/// solvers can dispatch on it (line coordinates, tree structure).
#[derive(Clone, Debug)]
pub struct MetricView {
    names: Vec<String>,
    index: HashMap<String, usize>,
    dist: DistanceMatrix,
    kind: MetricKind,
    coords: Option<Vec<f64>>,
    tree: Option<TreeMetric>,
}

impl Distance for MetricView {
    fn len(&self) -> usize {
        self.names.len()
    }

    fn dist(&self, u: usize, v: usize) -> f64 {
        self.dist.dist(u, v)
    }
}

impl MetricView {
    pub fn names(&self) -> &[String] {
        &self.names
    }

    pub fn name(&self, v: usize) -> &str {
        &self.names[v]
    }

    pub fn point(&self, name: &str) -> Option<usize> {
        self.index.get(name).copied()
    }

    pub fn kind(&self) -> MetricKind {
        self.kind
    }

    /// Coordinates, for line metrics.
    pub fn coords(&self) -> Option<&[f64]> {
        self.coords.as_deref()
    }

    /// The defining tree, for tree metrics.
    pub fn tree(&self) -> Option<&TreeMetric> {
        self.tree.as_ref()
    }

    pub fn matrix(&self) -> &DistanceMatrix {
        &self.dist
    }

    /// A matrix-kind metric; shape and sign checks only.
    pub fn from_matrix(names: Vec<String>, dist: DistanceMatrix) -> Result<Self> {
        if dist.len() != names.len() {
            return Err(RepairError::metric(format!(
                "{} points but a {}x{} distance matrix",
                names.len(),
                dist.len(),
                dist.len()
            )));
        }
        let index = name_index(&names)?;
        check_matrix(&names, &dist)?;
        Ok(MetricView {
            names,
            index,
            dist,
            kind: MetricKind::Matrix,
            coords: None,
            tree: None,
        })
    }

    pub fn line(names: Vec<String>, coords: Vec<f64>) -> Result<Self> {
        build_metric(&MetricSpec::Line {
            points: names,
            coords,
        })
    }

    pub fn discrete(names: Vec<String>) -> Result<Self> {
        build_metric(&MetricSpec::Discrete { points: names })
    }

    /// Metric-axiom violations, within absolute tolerance `tol`.
    pub fn axiom_violations(&self, tol: f64) -> Vec<AxiomViolation> {
        axiom_violations(&self.dist, tol)
    }
}

#[derive(Clone, Debug, PartialEq)]
pub enum AxiomViolation {
    NonzeroDiagonal { point: usize, value: f64 },
    Asymmetric { u: usize, v: usize },
    Negative { u: usize, v: usize },
    /// Two distinct points at distance zero.
    Coincident { u: usize, v: usize },
    Triangle { a: usize, b: usize, c: usize, excess: f64 },
}

pub fn axiom_violations<M: Distance + ?Sized>(m: &M, tol: f64) -> Vec<AxiomViolation> {
    let n = m.len();
    let mut out = Vec::new();
    for u in 0..n {
        let d = m.dist(u, u);
        if d.abs() > tol {
            out.push(AxiomViolation::NonzeroDiagonal { point: u, value: d });
        }
        for v in u + 1..n {
            let (a, b) = (m.dist(u, v), m.dist(v, u));
            if (a - b).abs() > tol {
                out.push(AxiomViolation::Asymmetric { u, v });
            }
            if a < -tol || b < -tol {
                out.push(AxiomViolation::Negative { u, v });
            } else if a <= tol {
                out.push(AxiomViolation::Coincident { u, v });
            }
        }
    }
    for a in 0..n {
        for c in 0..n {
            if a == c {
                continue;
            }
            for b in 0..n {
                let excess = m.dist(a, c) - m.dist(a, b) - m.dist(b, c);
                if excess > tol {
                    out.push(AxiomViolation::Triangle { a, b, c, excess });
                }
            }
        }
    }
    out
}

fn name_index(names: &[String]) -> Result<HashMap<String, usize>> {
    let mut index = HashMap::with_capacity(names.len());
    for (i, n) in names.iter().enumerate() {
        if index.insert(n.clone(), i).is_some() {
            return Err(RepairError::metric(format!("duplicate point `{n}`")));
        }
    }
    Ok(index)
}

fn check_matrix(names: &[String], m: &DistanceMatrix) -> Result<()> {
    let n = m.len();
    for u in 0..n {
        for v in 0..n {
            let d = m.dist(u, v);
            if !d.is_finite() || d < 0.0 {
                return Err(RepairError::metric(format!(
                    "distance between `{}` and `{}` is {d}",
                    names[u], names[v]
                )));
            }
            if (d - m.dist(v, u)).abs() > 1e-9 {
                return Err(RepairError::metric(format!(
                    "asymmetric distance between `{}` and `{}`",
                    names[u], names[v]
                )));
            }
            if u == v && d != 0.0 {
                return Err(RepairError::metric(format!(
                    "nonzero self-distance at `{}`",
                    names[u]
                )));
            }
            if u != v && d == 0.0 {
                return Err(RepairError::metric(format!(
                    "distinct points `{}` and `{}` at distance zero",
                    names[u], names[v]
                )));
            }
        }
    }
    Ok(())
}

fn resolve_edges(
    index: &HashMap<String, usize>,
    edges: &[(String, String, f64)],
) -> Result<Vec<TreeEdge>> {
    edges
        .iter()
        .map(|(a, b, w)| {
            let u = *index
                .get(a)
                .ok_or_else(|| RepairError::metric(format!("edge endpoint `{a}` is not a point")))?;
            let v = *index
                .get(b)
                .ok_or_else(|| RepairError::metric(format!("edge endpoint `{b}` is not a point")))?;
            if !w.is_finite() || *w < 0.0 {
                return Err(RepairError::metric(format!(
                    "edge `{a}`-`{b}` has invalid weight {w}"
                )));
            }
            Ok(TreeEdge { u, v, weight: *w })
        })
        .collect()
}

/// All-pairs shortest paths by Floyd–Warshall. Unreachable pairs stay infinite.
pub fn shortest_paths(n: usize, edges: &[TreeEdge]) -> DistanceMatrix {
    let mut d = vec![f64::INFINITY; n * n];
    for v in 0..n {
        d[v * n + v] = 0.0;
    }
    for e in edges {
        let (i, j) = (e.u * n + e.v, e.v * n + e.u);
        if e.weight < d[i] {
            d[i] = e.weight;
            d[j] = e.weight;
        }
    }
    for k in 0..n {
        for i in 0..n {
            let dik = d[i * n + k];
            if dik.is_infinite() {
                continue;
            }
            for j in 0..n {
                let cand = dik + d[k * n + j];
                if cand < d[i * n + j] {
                    d[i * n + j] = cand;
                }
            }
        }
    }
    DistanceMatrix { n, data: d }
}

pub fn build_metric(spec: &MetricSpec) -> Result<MetricView> {
    let names = spec.points().to_vec();
    if names.is_empty() {
        return Err(RepairError::metric("metric has no points"));
    }
    let index = name_index(&names)?;
    let n = names.len();
    let mut coords = None;
    let mut tree = None;
    let dist = match spec {
        MetricSpec::Matrix { dist, .. } => {
            let m = DistanceMatrix::from_rows(dist)?;
            if m.len() != n {
                return Err(RepairError::metric(format!(
                    "{n} points but a {}x{} distance matrix",
                    m.len(),
                    m.len()
                )));
            }
            check_matrix(&names, &m)?;
            m
        }
        MetricSpec::Graph { edges, .. } => {
            let edges = resolve_edges(&index, edges)?;
            let m = shortest_paths(n, &edges);
            if let Some(v) = (0..n).find(|&v| m.dist(0, v).is_infinite()) {
                return Err(RepairError::metric(format!(
                    "graph is disconnected: `{}` is unreachable from `{}`",
                    names[v], names[0]
                )));
            }
            check_matrix(&names, &m)?;
            m
        }
        MetricSpec::Line { coords: xs, .. } => {
            if xs.len() != n {
                return Err(RepairError::metric(format!(
                    "{n} points but {} coordinates",
                    xs.len()
                )));
            }
            if let Some(x) = xs.iter().find(|x| !x.is_finite()) {
                return Err(RepairError::metric(format!("coordinate {x} is not finite")));
            }
            let m = DistanceMatrix::from_fn(n, |u, v| (xs[u] - xs[v]).abs());
            check_matrix(&names, &m)?;
            coords = Some(xs.clone());
            m
        }
        MetricSpec::Discrete { .. } => {
            DistanceMatrix::from_fn(n, |u, v| if u == v { 0.0 } else { 1.0 })
        }
        MetricSpec::Tree { edges, .. } => {
            let edges = resolve_edges(&index, edges)?;
            let t = TreeMetric::new(n, n, edges, 0)?;
            let m = t.original_distances();
            check_matrix(&names, &m)?;
            tree = Some(t);
            m
        }
    };
    Ok(MetricView {
        names,
        index,
        dist,
        kind: spec.kind(),
        coords,
        tree,
    })
}
