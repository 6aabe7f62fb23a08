//! Exact optimal repair on tree metrics.
//!
//! The tree is made full binary, then processed bottom-up. For vertex `v` and
//! a count vector `t` (how many movable cells of each attribute end up inside
//! the subtree `T_v`), `Opt_v(t)` is the least cost of such a placement, where
//! cells leaving `T_v` are charged up to `v` and cells entering it are charged
//! from `v`. An internal vertex chooses its own local profile `i` and the
//! targets `t1`, `t2` of its two children with `i + t1 + t2 = t`; the child
//! edge is crossed by `|n_j[T_c] - t_c_j|` cells of attribute `j` in one
//! direction or the other.
//!
//! Locked cells never move: they are excluded from the count vectors and added
//! back as fixed offsets whenever a profile is tested against the constraint.

use crate::error::{RepairError, Result};
use crate::grid::Shape;
use crate::metric::{Distance, MetricKind, MetricView};
use crate::model::{AttributeWeights, Constraint, Database, Repair};
use crate::tree::{binarize, discrete_to_star, line_to_tree, CastResult, RootedTree, TreeMetric};

/// Movable cell counts per subtree: `counts[u][j] = n_j[T_u]`.
#[derive(Clone, Debug, PartialEq)]
pub struct SubtreeCounts {
    pub counts: Vec<Vec<usize>>,
}

pub fn subtree_counts(
    db: &Database,
    tree: &TreeMetric,
    weights: &AttributeWeights,
) -> Result<SubtreeCounts> {
    let rooted = tree.rooted();
    subtree_counts_rooted(db, tree, &rooted, weights)
}

fn subtree_counts_rooted(
    db: &Database,
    tree: &TreeMetric,
    rooted: &RootedTree,
    weights: &AttributeWeights,
) -> Result<SubtreeCounts> {
    if db.n_points() != tree.n_original() {
        return Err(RepairError::input(format!(
            "database is over {} points but the tree has {} original vertices",
            db.n_points(),
            tree.n_original()
        )));
    }
    let mut counts = vec![vec![0usize; db.q()]; tree.n_vertices()];
    for c in db.cells() {
        if !weights.is_locked(c.attr) {
            counts[c.value][c.attr] += 1;
        }
    }
    for &v in rooted.preorder.iter().rev() {
        if let Some(p) = rooted.parent[v] {
            for j in 0..db.q() {
                counts[p][j] += counts[v][j];
            }
        }
    }
    Ok(SubtreeCounts { counts })
}

/// How an entry of the table was obtained. Indices refer to the table shape.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum ChoiceRecord {
    Unreachable,
    Leaf,
    Internal {
        local: usize,
        left: usize,
        right: usize,
    },
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct TableEntry {
    /// `None` means no placement exists.
    pub cost: Option<f64>,
    pub choice: ChoiceRecord,
}

impl TableEntry {
    const INFEASIBLE: TableEntry = TableEntry {
        cost: None,
        choice: ChoiceRecord::Unreachable,
    };
}

/// One child as seen from its parent during a merge.
#[derive(Clone, Copy, Debug)]
pub struct ChildTable<'a> {
    pub entries: &'a [TableEntry],
    /// Movable counts inside the child's subtree.
    pub counts: &'a [usize],
    /// Length of the edge to the parent.
    pub edge: f64,
}

impl ChildTable<'_> {
    /// Child optimum plus the cost of moving the surplus or deficit across
    /// the parent edge.
    fn with_edge(&self, shape: &Shape, weights: &[f64]) -> Vec<Option<f64>> {
        let mut out = vec![None; shape.size()];
        shape.for_each_below(shape.bounds(), |idx, t| {
            if let Some(c) = self.entries[idx].cost {
                let crossing: f64 = t
                    .iter()
                    .zip(self.counts)
                    .zip(weights)
                    .map(|((&tj, &nj), &w)| w * tj.abs_diff(nj) as f64)
                    .sum();
                out[idx] = Some(c + crossing * self.edge);
            }
        });
        out
    }
}

/// Row of a leaf: 0 where the profile (with offsets) is legal, else infeasible.
pub fn leaf_row(local_legal: &[bool]) -> Vec<TableEntry> {
    local_legal
        .iter()
        .map(|&ok| {
            if ok {
                TableEntry {
                    cost: Some(0.0),
                    choice: ChoiceRecord::Leaf,
                }
            } else {
                TableEntry::INFEASIBLE
            }
        })
        .collect()
}

/// Row of an internal vertex from its two children.
///
/// `local_legal[i]` says whether keeping profile `i` at the vertex itself is
/// allowed. Ties go to the lexicographically smallest `(i, t1)`, which also
/// fixes `t2`.
pub fn combine_internal(
    shape: &Shape,
    local_legal: &[bool],
    left: ChildTable<'_>,
    right: ChildTable<'_>,
    weights: &[f64],
) -> Vec<TableEntry> {
    let c1 = left.with_edge(shape, weights);
    let c2 = right.with_edge(shape, weights);
    let mut row = vec![TableEntry::INFEASIBLE; shape.size()];
    let mut rest = vec![0usize; shape.dims()];
    shape.for_each_below(shape.bounds(), |ti, t| {
        let mut best = TableEntry::INFEASIBLE;
        shape.for_each_below(t, |ii, i| {
            if !local_legal[ii] {
                return;
            }
            for j in 0..t.len() {
                rest[j] = t[j] - i[j];
            }
            let ri = ti - ii;
            shape.for_each_below(&rest, |l1, _| {
                // flat indices are linear, so t2 = rest - t1 is ri - l1
                let l2 = ri - l1;
                if let (Some(a), Some(b)) = (c1[l1], c2[l2]) {
                    let cost = a + b;
                    if best.cost.map_or(true, |bc| cost < bc) {
                        best = TableEntry {
                            cost: Some(cost),
                            choice: ChoiceRecord::Internal {
                                local: ii,
                                left: l1,
                                right: l2,
                            },
                        };
                    }
                }
            });
        });
        row[ti] = best;
    });
    row
}

/// The complete dynamic-programming table over a full binary tree.
#[derive(Clone, Debug)]
pub struct PlacementTable {
    shape: Shape,
    tree: TreeMetric,
    rooted: RootedTree,
    counts: SubtreeCounts,
    rows: Vec<Vec<TableEntry>>,
    weights: Vec<f64>,
}

impl PlacementTable {
    /// `tree` must be full binary (see [`binarize`]) with `gamma` covering
    /// its synthetic vertices.
    pub fn build(
        db: &Database,
        tree: &TreeMetric,
        gamma: &Constraint,
        weights: &AttributeWeights,
    ) -> Result<Self> {
        if weights.len() != db.q() {
            return Err(RepairError::input("weights do not match the signature"));
        }
        let rooted = tree.rooted();
        let counts = subtree_counts_rooted(db, tree, &rooted, weights)?;
        let shape = Shape::new(&counts.counts[tree.root()]);
        let offsets = db.locked_offsets(weights);
        let q = db.q();
        let cost_weights: Vec<f64> = (0..q).map(|j| weights.cost_weight(j)).collect();

        let mut rows: Vec<Vec<TableEntry>> = vec![Vec::new(); tree.n_vertices()];
        let mut profile = vec![0usize; q];
        for &v in rooted.preorder.iter().rev() {
            let mut legal = vec![false; shape.size()];
            shape.for_each_below(shape.bounds(), |idx, t| {
                for j in 0..q {
                    profile[j] = t[j] + offsets.get(v).map_or(0, |o| o[j]);
                }
                legal[idx] = gamma.allows(v, &profile);
            });
            let kids = &rooted.children[v];
            rows[v] = match kids.len() {
                0 => leaf_row(&legal),
                2 => {
                    let (a, b) = (kids[0], kids[1]);
                    combine_internal(
                        &shape,
                        &legal,
                        ChildTable {
                            entries: &rows[a],
                            counts: &counts.counts[a],
                            edge: rooted.parent_weight[a],
                        },
                        ChildTable {
                            entries: &rows[b],
                            counts: &counts.counts[b],
                            edge: rooted.parent_weight[b],
                        },
                        &cost_weights,
                    )
                }
                k => {
                    return Err(RepairError::input(format!(
                        "vertex {v} has {k} children; binarize the tree first"
                    )))
                }
            };
        }
        Ok(PlacementTable {
            shape,
            tree: tree.clone(),
            rooted,
            counts,
            rows,
            weights: cost_weights,
        })
    }

    pub fn shape(&self) -> &Shape {
        &self.shape
    }

    pub fn tree(&self) -> &TreeMetric {
        &self.tree
    }

    pub fn counts(&self) -> &SubtreeCounts {
        &self.counts
    }

    pub fn row(&self, v: usize) -> &[TableEntry] {
        &self.rows[v]
    }

    /// `Opt_root(n_1, ..., n_q)`: the optimal repair cost, if any repair exists.
    pub fn optimum(&self) -> Option<f64> {
        self.rows[self.tree.root()][self.shape.last()].cost
    }

    /// Per-vertex placement profiles along the optimal choice trail.
    pub fn placements(&self) -> Option<Vec<Vec<usize>>> {
        self.optimum()?;
        let mut target = vec![usize::MAX; self.tree.n_vertices()];
        let mut place = vec![vec![0; self.shape.dims()]; self.tree.n_vertices()];
        target[self.tree.root()] = self.shape.last();
        for &v in &self.rooted.preorder {
            let entry = self.rows[v][target[v]];
            match entry.choice {
                ChoiceRecord::Unreachable => return None,
                ChoiceRecord::Leaf => place[v] = self.shape.decode(target[v]),
                ChoiceRecord::Internal { local, left, right } => {
                    place[v] = self.shape.decode(local);
                    let kids = &self.rooted.children[v];
                    target[kids[0]] = left;
                    target[kids[1]] = right;
                }
            }
        }
        Some(place)
    }
}

/// Turns the count-level optimum into a cell-to-point assignment.
///
/// Per attribute, each vertex first matches its own cells to its own slots,
/// then pairs surplus cells and open slots bubbling up from its children.
/// A subtree never passes up both cells and slots, so every edge is crossed
/// in one direction only and the total equals the table optimum.
pub fn reconstruct_assignment(table: &PlacementTable, db: &Database) -> Result<Repair> {
    let optimum = table
        .optimum()
        .ok_or_else(|| RepairError::Internal("no finite optimum to reconstruct".into()))?;
    let place = table
        .placements()
        .ok_or_else(|| RepairError::Internal("broken choice trail".into()))?;
    let rooted = &table.rooted;
    let n = table.tree.n_vertices();
    let mut assignment: Vec<usize> = db.cells().iter().map(|c| c.value).collect();

    for j in 0..db.q() {
        if table.shape.bounds()[j] == 0 {
            continue;
        }
        let mut local_cells: Vec<Vec<usize>> = vec![Vec::new(); n];
        for (i, c) in db.cells().iter().enumerate() {
            if c.attr == j {
                local_cells[c.value].push(i);
            }
        }
        let mut up_cells: Vec<Vec<usize>> = vec![Vec::new(); n];
        let mut up_slots: Vec<Vec<usize>> = vec![Vec::new(); n];
        for &v in rooted.preorder.iter().rev() {
            let mut cells = std::mem::take(&mut local_cells[v]);
            let mut slots = vec![v; place[v][j]];
            for &c in &rooted.children[v] {
                cells.append(&mut up_cells[c]);
                slots.append(&mut up_slots[c]);
            }
            let k = cells.len().min(slots.len());
            for (&cell, &slot) in cells[..k].iter().zip(&slots[..k]) {
                assignment[cell] = slot;
            }
            up_cells[v] = cells.split_off(k);
            up_slots[v] = slots.split_off(k);
        }
        let root = table.tree.root();
        if !up_cells[root].is_empty() || !up_slots[root].is_empty() {
            return Err(RepairError::Internal(format!(
                "attribute {}: {} cells and {} slots left unmatched",
                j + 1,
                up_cells[root].len(),
                up_slots[root].len()
            )));
        }
    }

    if let Some((i, &v)) = assignment
        .iter()
        .enumerate()
        .find(|(_, &v)| v >= table.tree.n_original())
    {
        return Err(RepairError::Internal(format!(
            "cell `{}` placed on synthetic vertex {v}",
            db.cells()[i].id
        )));
    }

    let mut cost = 0.0;
    let mut from_cache: Vec<Option<Vec<f64>>> = vec![None; n];
    for (c, &to) in db.cells().iter().zip(&assignment) {
        if c.value != to {
            let d = from_cache[c.value].get_or_insert_with(|| table.tree.distances_from(c.value));
            cost += table.weights[c.attr] * d[to];
        }
    }
    if (cost - optimum).abs() > 1e-9 * (1.0 + optimum.abs()) {
        return Err(RepairError::Internal(format!(
            "reconstructed cost {cost} differs from table optimum {optimum}"
        )));
    }
    Ok(Repair { assignment, cost })
}

/// Optimal repair over a tree metric, or `None` when no repair exists.
///
/// The database lives on the tree's original vertices. The reported cost is
/// measured in the tree.
pub fn solve_tree(
    db: &Database,
    tree: &TreeMetric,
    gamma: &Constraint,
    weights: &AttributeWeights,
) -> Result<Option<Repair>> {
    if db.n_points() != tree.n_original() {
        return Err(RepairError::input(format!(
            "database values must lie on the {} original tree vertices, database has {} points",
            tree.n_original(),
            db.n_points()
        )));
    }
    gamma.validate(db.q())?;
    let (binary, gamma) = binarize(tree, gamma, db.q());
    let table = PlacementTable::build(db, &binary, &gamma, weights)?;
    if table.optimum().is_none() {
        return Ok(None);
    }
    reconstruct_assignment(&table, db).map(Some)
}

/// Solves on a cast tree, extending `gamma` to the cast's synthetic vertices.
pub fn solve_cast(
    db: &Database,
    cast: &CastResult,
    gamma: &Constraint,
    weights: &AttributeWeights,
) -> Result<Option<Repair>> {
    let gamma = cast.extend_constraint(gamma, db.q());
    solve_tree(db, &cast.tree, &gamma, weights)
}

/// The tree standing in for a line, discrete or tree metric.
pub fn tree_cast(metric: &MetricView) -> Result<CastResult> {
    match metric.kind() {
        MetricKind::Line => line_to_tree(metric.coords().expect("line metric has coordinates")),
        MetricKind::Discrete => discrete_to_star(metric.len()),
        MetricKind::Tree => Ok(CastResult {
            tree: metric.tree().expect("tree metric keeps its tree").clone(),
            synthetic: Vec::new(),
        }),
        kind => Err(RepairError::Refused(format!(
            "{kind:?} metrics are not tree metrics; use the approximation"
        ))),
    }
}

/// Exact repair for line, discrete and tree metrics.
pub fn solve_exact(
    db: &Database,
    metric: &MetricView,
    gamma: &Constraint,
    weights: &AttributeWeights,
) -> Result<Option<Repair>> {
    let cast = tree_cast(metric)?;
    solve_cast(db, &cast, gamma, weights)
}
