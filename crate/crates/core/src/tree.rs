//! Weighted trees as metrics, casts of line and discrete metrics into trees,
//! and normalization to full binary shape.
//!
//! Vertices `0..n_original` are the points of the metric being represented;
//! vertices from `n_original` on are synthetic and must never hold cells.

use std::collections::{BTreeMap, VecDeque};

use crate::error::{RepairError, Result};
use crate::metric::{Distance, DistanceMatrix};
use crate::model::{Constraint, ProfileExpr};

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct TreeEdge {
    pub u: usize,
    pub v: usize,
    pub weight: f64,
}

impl TreeEdge {
    pub fn new(u: usize, v: usize, weight: f64) -> Self {
        TreeEdge { u, v, weight }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct TreeMetric {
    n_original: usize,
    n_vertices: usize,
    edges: Vec<TreeEdge>,
    root: usize,
}

/// Parent/children view of a [`TreeMetric`] from its root.
#[derive(Clone, Debug)]
pub struct RootedTree {
    pub root: usize,
    pub parent: Vec<Option<usize>>,
    /// Weight of the edge to the parent; 0 at the root.
    pub parent_weight: Vec<f64>,
    /// Children in ascending vertex order.
    pub children: Vec<Vec<usize>>,
    /// Vertices in preorder; reversed, a valid postorder.
    pub preorder: Vec<usize>,
}

impl TreeMetric {
    pub fn new(n_original: usize, n_vertices: usize, edges: Vec<TreeEdge>, root: usize) -> Result<Self> {
        if n_vertices == 0 || n_original > n_vertices {
            return Err(RepairError::metric("tree needs at least one vertex"));
        }
        if root >= n_vertices {
            return Err(RepairError::metric(format!("root {root} is not a vertex")));
        }
        if edges.len() + 1 != n_vertices {
            return Err(RepairError::metric(format!(
                "a tree on {n_vertices} vertices needs {} edges, got {}",
                n_vertices - 1,
                edges.len()
            )));
        }
        for e in &edges {
            if e.u >= n_vertices || e.v >= n_vertices || e.u == e.v {
                return Err(RepairError::metric(format!("bad tree edge {}-{}", e.u, e.v)));
            }
            if !e.weight.is_finite() || e.weight < 0.0 {
                return Err(RepairError::metric(format!(
                    "tree edge {}-{} has invalid weight {}",
                    e.u, e.v, e.weight
                )));
            }
        }
        let t = TreeMetric {
            n_original,
            n_vertices,
            edges,
            root,
        };
        // n-1 edges and connected implies acyclic
        let reached = t.rooted().preorder.len();
        if reached != n_vertices {
            return Err(RepairError::metric("tree edges do not form a connected acyclic graph"));
        }
        Ok(t)
    }

    pub fn n_original(&self) -> usize {
        self.n_original
    }

    pub fn n_vertices(&self) -> usize {
        self.n_vertices
    }

    pub fn edges(&self) -> &[TreeEdge] {
        &self.edges
    }

    pub fn root(&self) -> usize {
        self.root
    }

    pub fn synthetic_vertices(&self) -> std::ops::Range<usize> {
        self.n_original..self.n_vertices
    }

    fn adjacency(&self) -> Vec<Vec<(usize, f64)>> {
        let mut adj = vec![Vec::new(); self.n_vertices];
        for e in &self.edges {
            adj[e.u].push((e.v, e.weight));
            adj[e.v].push((e.u, e.weight));
        }
        for a in &mut adj {
            a.sort_by_key(|&(v, _)| v);
        }
        adj
    }

    pub fn rooted(&self) -> RootedTree {
        let adj = self.adjacency();
        let n = self.n_vertices;
        let mut parent = vec![None; n];
        let mut parent_weight = vec![0.0; n];
        let mut children = vec![Vec::new(); n];
        let mut seen = vec![false; n];
        let mut preorder = Vec::with_capacity(n);
        let mut stack = vec![self.root];
        seen[self.root] = true;
        while let Some(v) = stack.pop() {
            preorder.push(v);
            for &(u, w) in adj[v].iter().rev() {
                if !seen[u] {
                    seen[u] = true;
                    parent[u] = Some(v);
                    parent_weight[u] = w;
                    stack.push(u);
                }
            }
        }
        for &v in &preorder {
            if let Some(p) = parent[v] {
                children[p].push(v);
            }
        }
        for c in &mut children {
            c.sort_unstable();
        }
        RootedTree {
            root: self.root,
            parent,
            parent_weight,
            children,
            preorder,
        }
    }

    /// Path lengths from `src` to every vertex.
    pub fn distances_from(&self, src: usize) -> Vec<f64> {
        let adj = self.adjacency();
        let mut d = vec![f64::NAN; self.n_vertices];
        d[src] = 0.0;
        let mut queue = VecDeque::from([src]);
        while let Some(v) = queue.pop_front() {
            for &(u, w) in &adj[v] {
                if d[u].is_nan() {
                    d[u] = d[v] + w;
                    queue.push_back(u);
                }
            }
        }
        d
    }

    /// Path lengths between all vertices, synthetic ones included.
    pub fn all_distances(&self) -> DistanceMatrix {
        let rows: Vec<Vec<f64>> = (0..self.n_vertices).map(|v| self.distances_from(v)).collect();
        DistanceMatrix::from_fn(self.n_vertices, |u, v| rows[u][v])
    }

    /// Path lengths between original points.
    pub fn original_distances(&self) -> DistanceMatrix {
        let rows: Vec<Vec<f64>> = (0..self.n_original).map(|v| self.distances_from(v)).collect();
        DistanceMatrix::from_fn(self.n_original, |u, v| rows[u][v])
    }

    /// Every vertex has zero or two children.
    pub fn is_full_binary(&self) -> bool {
        self.rooted().children.iter().all(|c| c.is_empty() || c.len() == 2)
    }
}

/// A tree standing in for another metric, plus the vertices that must stay
/// empty.
#[derive(Clone, Debug, PartialEq)]
pub struct CastResult {
    pub tree: TreeMetric,
    pub synthetic: Vec<usize>,
}

impl CastResult {
    pub fn constraint_overrides(&self, q: usize) -> BTreeMap<usize, ProfileExpr> {
        self.synthetic
            .iter()
            .map(|&v| (v, ProfileExpr::zero_only(q)))
            .collect()
    }

    /// `gamma` with zero-profile-only overrides at the synthetic vertices.
    pub fn extend_constraint(&self, gamma: &Constraint, q: usize) -> Constraint {
        let mut out = gamma.clone();
        for (v, e) in self.constraint_overrides(q) {
            out.set_override(v, e);
        }
        out
    }
}

/// Path tree over the points ordered by coordinate; edge weights are the gaps.
/// Coordinates are given per point, in any order, and must be distinct.
pub fn line_to_tree(coords: &[f64]) -> Result<CastResult> {
    if coords.is_empty() {
        return Err(RepairError::metric("line has no points"));
    }
    let mut order: Vec<usize> = (0..coords.len()).collect();
    order.sort_by(|&a, &b| coords[a].total_cmp(&coords[b]));
    let mut edges = Vec::with_capacity(coords.len() - 1);
    for w in order.windows(2) {
        let gap = coords[w[1]] - coords[w[0]];
        if gap <= 0.0 {
            return Err(RepairError::metric(format!(
                "duplicate line value {}",
                coords[w[0]]
            )));
        }
        edges.push(TreeEdge::new(w[0], w[1], gap));
    }
    let n = coords.len();
    Ok(CastResult {
        tree: TreeMetric::new(n, n, edges, 0)?,
        synthetic: Vec::new(),
    })
}

/// Star with a synthetic center at distance 1/2 from every point.
pub fn discrete_to_star(n_points: usize) -> Result<CastResult> {
    if n_points == 0 {
        return Err(RepairError::metric("discrete metric has no points"));
    }
    let center = n_points;
    let edges = (0..n_points).map(|v| TreeEdge::new(v, center, 0.5)).collect();
    Ok(CastResult {
        tree: TreeMetric::new(n_points, n_points + 1, edges, 0)?,
        synthetic: vec![center],
    })
}

/// Reshapes `tree` so every internal vertex has exactly two children.
///
/// Vertices with more children get a right-leaning chain of zero-weight
/// synthetic vertices; vertices with a single child get a zero-weight
/// synthetic leaf. New vertices are appended after the existing ones and
/// receive zero-profile-only overrides in the returned constraint. Distances
/// between existing vertices are unchanged.
pub fn binarize(tree: &TreeMetric, gamma: &Constraint, q: usize) -> (TreeMetric, Constraint) {
    let rooted = tree.rooted();
    let mut next = tree.n_vertices;
    let mut edges = Vec::with_capacity(tree.n_vertices * 2);
    let mut gamma = gamma.clone();
    let mut fresh = |gamma: &mut Constraint| {
        let v = next;
        next += 1;
        gamma.set_override(v, ProfileExpr::zero_only(q));
        v
    };
    for &v in &rooted.preorder {
        let kids = &rooted.children[v];
        match kids.len() {
            0 => {}
            1 => {
                let c = kids[0];
                edges.push(TreeEdge::new(v, c, rooted.parent_weight[c]));
                let pad = fresh(&mut gamma);
                edges.push(TreeEdge::new(v, pad, 0.0));
            }
            _ => {
                let mut attach = v;
                for (k, &c) in kids.iter().enumerate() {
                    edges.push(TreeEdge::new(attach, c, rooted.parent_weight[c]));
                    let remaining = kids.len() - k - 1;
                    if remaining >= 2 {
                        let s = fresh(&mut gamma);
                        edges.push(TreeEdge::new(attach, s, 0.0));
                        attach = s;
                    }
                }
            }
        }
    }
    let out = TreeMetric::new(tree.n_original, next, edges, tree.root)
        .expect("binarization preserves tree shape");
    (out, gamma)
}

/// Distances between original points of a tree, as a [`Distance`].
impl Distance for TreeMetric {
    fn len(&self) -> usize {
        self.n_vertices
    }

    fn dist(&self, u: usize, v: usize) -> f64 {
        self.distances_from(u)[v]
    }
}
