#![allow(dead_code)]

use metric_repair::{check_consistency, AttributeWeights, Constraint, Database, Distance};

/// Cheapest repair by plain enumeration of every assignment of the movable
/// cells, without pruning. Returns the cost only.
pub fn naive_optimum<M: Distance + ?Sized>(
    db: &Database,
    metric: &M,
    gamma: &Constraint,
    weights: &AttributeWeights,
    tau: Option<f64>,
) -> Option<f64> {
    let n = metric.len();
    let movable: Vec<usize> = (0..db.len())
        .filter(|&i| !weights.is_locked(db.cells()[i].attr))
        .collect();
    let options: Vec<Vec<usize>> = movable
        .iter()
        .map(|&i| {
            let c = &db.cells()[i];
            (0..n)
                .filter(|&v| match tau {
                    Some(t) => metric.dist(c.value, v) <= weights.cost_weight(c.attr) * t + 1e-9,
                    None => true,
                })
                .collect()
        })
        .collect();
    if options.iter().any(Vec::is_empty) {
        return None;
    }
    let mut digits = vec![0usize; movable.len()];
    let mut assignment: Vec<usize> = db.cells().iter().map(|c| c.value).collect();
    let mut best: Option<f64> = None;
    loop {
        for (k, &i) in movable.iter().enumerate() {
            assignment[i] = options[k][digits[k]];
        }
        let e = db.apply(&assignment).unwrap();
        if check_consistency(&e, gamma).is_empty() {
            let cost: f64 = db
                .cells()
                .iter()
                .zip(&assignment)
                .map(|(c, &to)| {
                    if to == c.value {
                        0.0
                    } else {
                        weights.cost_weight(c.attr) * metric.dist(c.value, to)
                    }
                })
                .sum();
            if best.map_or(true, |b| cost < b) {
                best = Some(cost);
            }
        }
        let mut k = 0;
        loop {
            if k == digits.len() {
                return best;
            }
            digits[k] += 1;
            if digits[k] < options[k].len() {
                break;
            }
            digits[k] = 0;
            k += 1;
        }
    }
}

/// Whether some subfamily of `sets` partitions `0..n`.
pub fn has_exact_cover(n: usize, sets: &[[usize; 3]]) -> bool {
    (0u32..1 << sets.len()).any(|mask| {
        let mut seen = vec![0u32; n];
        for (i, s) in sets.iter().enumerate() {
            if mask >> i & 1 == 1 {
                for &x in s {
                    seen[x] += 1;
                }
            }
        }
        seen.iter().all(|&c| c == 1)
    })
}

/// Size of a smallest subfamily of `sets` covering `0..n`.
pub fn min_cover(n: usize, sets: &[[usize; 3]]) -> Option<u32> {
    (0u32..1 << sets.len())
        .filter(|mask| {
            let mut seen = vec![false; n];
            for (i, s) in sets.iter().enumerate() {
                if mask >> i & 1 == 1 {
                    for &x in s {
                        seen[x] = true;
                    }
                }
            }
            seen.iter().all(|&b| b)
        })
        .map(u32::count_ones)
        .min()
}

/// Truth-table satisfiability for DIMACS-style signed literals.
pub fn satisfiable(n_vars: usize, clauses: &[Vec<i64>]) -> bool {
    (0u32..1 << n_vars).any(|bits| {
        clauses.iter().all(|cl| {
            cl.iter().any(|&l| {
                let v = (l.unsigned_abs() - 1) as u32;
                (bits >> v & 1 == 1) == (l > 0)
            })
        })
    })
}

pub fn close(a: f64, b: f64) -> bool {
    (a - b).abs() <= 1e-9 * (1.0 + a.abs().max(b.abs()))
}
