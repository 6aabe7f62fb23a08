//! Optimal repairs on the line when every cell `c` may move at most
//! `w(c) * tau`.
//!
//! In an optimal bounded repair the cells of one attribute keep their
//! left-to-right order, so the cells assigned to the first `r` points form a
//! per-attribute prefix. `V[r][P]` is the least cost of placing exactly the
//! prefix `P` on the first `r` points (in coordinate order) so that each of
//! these points, including the empty ones, is legal. The step from `r - 1`
//! to `r` puts a suffix `P \ P''` on point `r`.

use crate::error::{RepairError, Result};
use crate::grid::Shape;
use crate::model::{AttributeWeights, Cell, Constraint, Database, Repair};
use crate::validate::require_closed_uniform;

/// Values closer than this are treated as one candidate point.
pub const VALUE_TOLERANCE: f64 = 1e-9;

/// Whether the cells `cells` (positions in `db`) may all sit together at `v`,
/// next to the locked cells already there.
pub fn contracted_satisfies(
    db: &Database,
    cells: &[usize],
    gamma: &Constraint,
    weights: &AttributeWeights,
    v: usize,
) -> bool {
    let mut p = db
        .locked_offsets(weights)
        .get(v)
        .cloned()
        .unwrap_or_else(|| vec![0; db.q()]);
    for &i in cells {
        let a = db.cells()[i].attr;
        if !weights.is_locked(a) {
            p[a] += 1;
        }
    }
    gamma.allows(v, &p)
}

fn movement_bound(weights: &AttributeWeights, j: usize, tau: f64) -> f64 {
    if tau.is_infinite() {
        f64::INFINITY
    } else {
        weights.cost_weight(j) * tau
    }
}

/// The filled table, kept for inspection and reconstruction.
#[derive(Clone, Debug)]
pub struct BoundedTable {
    shape: Shape,
    /// Points in ascending coordinate order.
    order: Vec<usize>,
    /// Per attribute, cell positions in prefix order.
    sorted: Vec<Vec<usize>>,
    /// `values[r][prefix]`, `r` in `0..=n`.
    values: Vec<Vec<Option<f64>>>,
    pred: Vec<Vec<usize>>,
}

impl BoundedTable {
    pub fn build(
        db: &Database,
        coords: &[f64],
        gamma: &Constraint,
        weights: &AttributeWeights,
        tau: f64,
    ) -> Result<Self> {
        if coords.len() != db.n_points() {
            return Err(RepairError::input(format!(
                "{} coordinates for {} points",
                coords.len(),
                db.n_points()
            )));
        }
        if !(tau >= 0.0) {
            return Err(RepairError::input(format!("tau must be nonnegative, got {tau}")));
        }
        if weights.len() != db.q() {
            return Err(RepairError::input("weights do not match the signature"));
        }
        gamma.validate(db.q())?;
        let q = db.q();
        let mut order: Vec<usize> = (0..db.n_points()).collect();
        order.sort_by(|&a, &b| coords[a].total_cmp(&coords[b]));

        let mut sorted: Vec<Vec<usize>> = vec![Vec::new(); q];
        for (i, c) in db.cells().iter().enumerate() {
            if !weights.is_locked(c.attr) {
                sorted[c.attr].push(i);
            }
        }
        let cells = db.cells();
        for s in &mut sorted {
            s.sort_by(|&a, &b| {
                coords[cells[a].value]
                    .total_cmp(&coords[cells[b].value])
                    .then_with(|| cells[a].id.cmp(&cells[b].id))
            });
        }
        let counts: Vec<usize> = sorted.iter().map(Vec::len).collect();
        let shape = Shape::new(&counts);
        let offsets = db.locked_offsets(weights);
        let bounds: Vec<f64> = (0..q).map(|j| movement_bound(weights, j, tau)).collect();

        let size = shape.size();
        let mut values = vec![vec![None; size]; order.len() + 1];
        let mut pred = vec![vec![usize::MAX; size]; order.len() + 1];
        values[0][0] = Some(0.0);

        let mut cum = vec![Vec::new(); q];
        let mut bad = vec![Vec::new(); q];
        let mut suffix = vec![0usize; q];
        let mut profile = vec![0usize; q];
        for (r, &v) in order.iter().enumerate() {
            let x = coords[v];
            // per attribute: prefix sums of movement cost to x and of cells
            // that cannot reach x
            for j in 0..q {
                cum[j].clear();
                bad[j].clear();
                cum[j].push(0.0);
                bad[j].push(0usize);
                let (mut c, mut b) = (0.0, 0usize);
                for &i in &sorted[j] {
                    let d = (coords[cells[i].value] - x).abs();
                    c += weights.cost_weight(j) * d;
                    b += (d > bounds[j] + VALUE_TOLERANCE) as usize;
                    cum[j].push(c);
                    bad[j].push(b);
                }
            }
            let (done, rest) = values.split_at_mut(r + 1);
            let prev = &done[r];
            let next = &mut rest[0];
            let pred_r = &mut pred[r + 1];
            shape.for_each_below(shape.bounds(), |ti, t| {
                let mut best: Option<(f64, usize)> = None;
                shape.for_each_below(t, |pi, p| {
                    let Some(base) = prev[pi] else { return };
                    let mut cost = base;
                    for j in 0..q {
                        if bad[j][t[j]] != bad[j][p[j]] {
                            return;
                        }
                        suffix[j] = t[j] - p[j];
                        cost += cum[j][t[j]] - cum[j][p[j]];
                    }
                    for j in 0..q {
                        profile[j] = suffix[j] + offsets[v][j];
                    }
                    if !gamma.allows(v, &profile) {
                        return;
                    }
                    if best.map_or(true, |(b, _)| cost < b) {
                        best = Some((cost, pi));
                    }
                });
                if let Some((c, pi)) = best {
                    next[ti] = Some(c);
                    pred_r[ti] = pi;
                }
            });
        }
        Ok(BoundedTable {
            shape,
            order,
            sorted,
            values,
            pred,
        })
    }

    pub fn shape(&self) -> &Shape {
        &self.shape
    }

    /// `V[r][prefix]`, with `prefix` giving a cell count per attribute.
    pub fn value(&self, r: usize, prefix: &[usize]) -> Option<f64> {
        self.values[r][self.shape.index(prefix)]
    }

    pub fn n_points(&self) -> usize {
        self.order.len()
    }

    pub fn optimum(&self) -> Option<f64> {
        self.values[self.order.len()][self.shape.last()]
    }

    pub fn reconstruct(&self, db: &Database) -> Option<Repair> {
        let cost = self.optimum()?;
        let mut assignment: Vec<usize> = db.cells().iter().map(|c| c.value).collect();
        let mut cur = self.shape.last();
        for r in (1..=self.order.len()).rev() {
            let p = self.pred[r][cur];
            let (hi, lo) = (self.shape.decode(cur), self.shape.decode(p));
            for (j, s) in self.sorted.iter().enumerate() {
                for &i in &s[lo[j]..hi[j]] {
                    assignment[i] = self.order[r - 1];
                }
            }
            cur = p;
        }
        debug_assert_eq!(cur, 0);
        Some(Repair { assignment, cost })
    }
}

/// Optimal bounded repair on the finite line with point coordinates `coords`,
/// or `None` when none exists.
pub fn solve_bounded_line(
    db: &Database,
    coords: &[f64],
    gamma: &Constraint,
    weights: &AttributeWeights,
    tau: f64,
) -> Result<Option<Repair>> {
    Ok(BoundedTable::build(db, coords, gamma, weights, tau)?.reconstruct(db))
}

/// `Vals(D)` together with `v ± w(A) * tau` for every value `v` and every
/// movable attribute `A` that has cells; sorted, near-duplicates merged.
pub fn candidate_values_full_line(
    values: &[f64],
    attributes: &[usize],
    weights: &AttributeWeights,
    tau: f64,
) -> Vec<f64> {
    let mut out: Vec<f64> = values.to_vec();
    for &a in attributes {
        if weights.is_locked(a) {
            continue;
        }
        let s = weights.cost_weight(a) * tau;
        for &v in values {
            out.push(v - s);
            out.push(v + s);
        }
    }
    out.sort_by(f64::total_cmp);
    out.dedup_by(|b, a| (*b - *a).abs() <= VALUE_TOLERANCE);
    out
}

#[derive(Clone, Debug, PartialEq)]
pub struct LineRepair {
    /// New coordinate per cell.
    pub coords: Vec<f64>,
    pub cost: f64,
}

/// A cell on the real line.
#[derive(Clone, Debug, PartialEq)]
pub struct LineCell {
    pub id: String,
    pub attr: usize,
    pub x: f64,
}

/// Optimal bounded repair over the whole real line. `gamma` must be uniform,
/// allow the empty profile and be closed under addition.
pub fn solve_bounded_full_line(
    q: usize,
    cells: &[LineCell],
    gamma: &Constraint,
    weights: &AttributeWeights,
    tau: f64,
) -> Result<Option<LineRepair>> {
    if !gamma.is_uniform() {
        return Err(RepairError::Refused(
            "the full-line solver needs a uniform constraint".into(),
        ));
    }
    if !(tau >= 0.0 && tau.is_finite()) {
        return Err(RepairError::input(format!("tau must be finite and nonnegative, got {tau}")));
    }
    let mut counts = vec![0; q];
    for c in cells {
        if c.attr >= q {
            return Err(RepairError::input(format!("cell `{}` has no attribute {}", c.id, c.attr + 1)));
        }
        if !c.x.is_finite() {
            return Err(RepairError::input(format!("cell `{}` has a non-finite value", c.id)));
        }
        counts[c.attr] += 1;
    }
    gamma.validate(q)?;
    require_closed_uniform(gamma.default_expr(), &counts)?;

    let values: Vec<f64> = cells.iter().map(|c| c.x).collect();
    let attributes: Vec<usize> = (0..q).filter(|&j| counts[j] > 0).collect();
    let cand = candidate_values_full_line(&values, &attributes, weights, tau);
    let locate = |x: f64| {
        cand.iter()
            .position(|&c| (c - x).abs() <= VALUE_TOLERANCE)
            .expect("every database value is a candidate")
    };
    let db = Database::new(
        q,
        cand.len(),
        cells
            .iter()
            .map(|c| Cell::new(c.id.clone(), c.attr, locate(c.x)))
            .collect(),
    )?;
    let Some(r) = solve_bounded_line(&db, &cand, gamma, weights, tau)? else {
        return Ok(None);
    };
    let coords: Vec<f64> = cells
        .iter()
        .zip(db.cells().iter().zip(&r.assignment))
        .map(|(c, (dc, &v))| if dc.value == v { c.x } else { cand[v] })
        .collect();
    Ok(Some(LineRepair { coords, cost: r.cost }))
}
