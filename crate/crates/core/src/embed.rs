//! Random dominating trees for finite metrics (hierarchical decomposition
//! with a random permutation and a random radius scale).
//!
//! Distances are first divided by the minimum positive distance. With
//! `beta = 2^U`, `U ~ Uniform[0, 1)`, the level-`i` clusters are obtained by
//! assigning every point of a parent cluster to the first permutation point
//! within distance `beta * 2^(i-1)`. The root holds every point; level 0
//! consists of singletons, which are the original points themselves.
//!
//! The edge from a level-`i` cluster to its parent has length `2^(i+1)`
//! (times the minimum distance). Two points first separated at level `i`
//! are within `beta * 2^(i+1) < 2^(i+2)` of each other and `2^(i+3) - 4`
//! apart in the tree, so the tree never shrinks a distance.

use crate::error::{RepairError, Result};
use crate::metric::Distance;
use crate::model::Constraint;
use crate::rng::SplitMix64;
use crate::tree::{CastResult, TreeEdge, TreeMetric};

/// A sampled tree over the points `0..n`, with synthetic cluster vertices
/// from `n` on; the root is `n`.
#[derive(Clone, Debug, PartialEq)]
pub struct EmbeddedTree {
    pub cast: CastResult,
    /// Generator state the sample was drawn from.
    pub seed: u64,
    pub beta: f64,
    pub permutation: Vec<usize>,
}

impl EmbeddedTree {
    pub fn tree(&self) -> &TreeMetric {
        &self.cast.tree
    }

    /// `gamma` with only the zero profile allowed at cluster vertices.
    pub fn extend_constraint(&self, gamma: &Constraint, q: usize) -> Constraint {
        self.cast.extend_constraint(gamma, q)
    }
}

pub fn sample_frt_tree<M: Distance + ?Sized>(
    metric: &M,
    rng: &mut SplitMix64,
) -> Result<EmbeddedTree> {
    let n = metric.len();
    if n == 0 {
        return Err(RepairError::metric("cannot embed an empty metric"));
    }
    let seed = rng.state();
    let permutation = rng.permutation(n);
    let beta = 2f64.powf(rng.next_f64());

    if n == 1 {
        let tree = TreeMetric::new(1, 2, vec![TreeEdge::new(1, 0, 1.0)], 1)?;
        return Ok(EmbeddedTree {
            cast: CastResult {
                tree,
                synthetic: vec![1],
            },
            seed,
            beta,
            permutation,
        });
    }

    let mut dmin = f64::INFINITY;
    let mut dmax: f64 = 0.0;
    for u in 0..n {
        for v in u + 1..n {
            let d = metric.dist(u, v);
            if !(d > 0.0) || !d.is_finite() {
                return Err(RepairError::metric(format!(
                    "distance between points {u} and {v} is {d}; expected positive and finite"
                )));
            }
            dmin = dmin.min(d);
            dmax = dmax.max(d);
        }
    }
    let scaled = |u: usize, v: usize| metric.dist(u, v) / dmin;
    let top = (dmax / dmin).log2().ceil().max(0.0) as i32 + 1;

    let mut edges = Vec::with_capacity(2 * n);
    let mut next = n + 1;
    let mut clusters: Vec<(usize, Vec<usize>)> = vec![(n, (0..n).collect())];
    for level in (0..top).rev() {
        let radius = beta * 2f64.powi(level - 1);
        let edge = 2f64.powi(level + 1) * dmin;
        let mut refined = Vec::new();
        for (parent, members) in &clusters {
            // center rank -> members, ordered by center rank
            let mut groups: Vec<(usize, Vec<usize>)> = Vec::new();
            for &u in members {
                let rank = permutation
                    .iter()
                    .position(|&p| scaled(u, p) <= radius)
                    .expect("a point is within any positive radius of itself");
                match groups.iter_mut().find(|(r, _)| *r == rank) {
                    Some((_, g)) => g.push(u),
                    None => groups.push((rank, vec![u])),
                }
            }
            groups.sort_by_key(|(r, _)| *r);
            for (_, g) in groups {
                let vertex = if level == 0 {
                    debug_assert_eq!(g.len(), 1);
                    g[0]
                } else {
                    next += 1;
                    next - 1
                };
                edges.push(TreeEdge::new(*parent, vertex, edge));
                refined.push((vertex, g));
            }
        }
        clusters = refined;
    }
    let tree = TreeMetric::new(n, next, edges, n)?;
    Ok(EmbeddedTree {
        cast: CastResult {
            synthetic: tree.synthetic_vertices().collect(),
            tree,
        },
        seed,
        beta,
        permutation,
    })
}

pub fn sample_frt_tree_seeded<M: Distance + ?Sized>(metric: &M, seed: u64) -> Result<EmbeddedTree> {
    sample_frt_tree(metric, &mut SplitMix64::new(seed))
}

/// Empirical stretch `d_T(u, v) / d(u, v)` over sampled trees.
#[derive(Clone, Debug, PartialEq)]
pub struct StretchReport {
    pub samples: usize,
    /// Unordered pairs `(u, v)`, `u < v`, in lexicographic order.
    pub pairs: Vec<(usize, usize)>,
    /// Mean over samples, per pair.
    pub pair_mean: Vec<f64>,
    /// Max over samples, per pair.
    pub pair_max: Vec<f64>,
    /// Mean of `pair_mean`.
    pub mean: f64,
    pub max: f64,
    pub min: f64,
}

impl StretchReport {
    /// `mean / log2 n`: the empirical constant in front of the logarithm.
    pub fn log_constant(&self, n_points: usize) -> f64 {
        self.mean / (n_points.max(2) as f64).log2()
    }
}

/// Samples `n_samples` trees from a stream seeded by `seed`.
pub fn stretch_statistics<M: Distance + ?Sized>(
    metric: &M,
    n_samples: usize,
    seed: u64,
) -> Result<StretchReport> {
    if n_samples == 0 {
        return Err(RepairError::input("at least one sample is required"));
    }
    let n = metric.len();
    let pairs: Vec<(usize, usize)> = (0..n)
        .flat_map(|u| (u + 1..n).map(move |v| (u, v)))
        .collect();
    let mut sum = vec![0.0; pairs.len()];
    let mut pair_max = vec![0.0f64; pairs.len()];
    let mut min = f64::INFINITY;
    let mut rng = SplitMix64::new(seed);
    for _ in 0..n_samples {
        let t = sample_frt_tree(metric, &mut rng)?;
        let dt = t.tree().original_distances();
        for (k, &(u, v)) in pairs.iter().enumerate() {
            let s = dt.dist(u, v) / metric.dist(u, v);
            sum[k] += s;
            pair_max[k] = pair_max[k].max(s);
            min = min.min(s);
        }
    }
    let pair_mean: Vec<f64> = sum.iter().map(|s| s / n_samples as f64).collect();
    let mean = if pairs.is_empty() {
        1.0
    } else {
        pair_mean.iter().sum::<f64>() / pairs.len() as f64
    };
    let max = pair_max.iter().copied().fold(1.0, f64::max);
    Ok(StretchReport {
        samples: n_samples,
        pairs,
        pair_mean,
        pair_max,
        mean,
        max,
        min: if min.is_finite() { min } else { 1.0 },
    })
}
