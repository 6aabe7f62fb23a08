//! Mixed-radix indexing of count vectors.
//!
//! Both dynamic programs tabulate over vectors `(t_1, ..., t_q)` with
//! `0 <= t_j <= bound_j`. Attribute 0 is the most significant digit, so
//! increasing flat indices enumerate vectors in lexicographic order.

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Shape {
    bounds: Vec<usize>,
    strides: Vec<usize>,
    size: usize,
}

impl Shape {
    pub fn new(bounds: &[usize]) -> Self {
        let mut strides = vec![0; bounds.len()];
        let mut size = 1usize;
        for j in (0..bounds.len()).rev() {
            strides[j] = size;
            size = size
                .checked_mul(bounds[j] + 1)
                .expect("count table size overflows usize");
        }
        Shape {
            bounds: bounds.to_vec(),
            strides,
            size,
        }
    }

    pub fn bounds(&self) -> &[usize] {
        &self.bounds
    }

    pub fn dims(&self) -> usize {
        self.bounds.len()
    }

    /// Number of vectors in the box `[0, bounds]`.
    pub fn size(&self) -> usize {
        self.size
    }

    pub fn index(&self, v: &[usize]) -> usize {
        debug_assert_eq!(v.len(), self.bounds.len());
        v.iter().zip(&self.strides).map(|(x, s)| x * s).sum()
    }

    pub fn decode(&self, mut idx: usize) -> Vec<usize> {
        let mut out = vec![0; self.bounds.len()];
        for (j, s) in self.strides.iter().enumerate() {
            out[j] = idx / s;
            idx %= s;
        }
        out
    }

    pub fn last(&self) -> usize {
        self.size - 1
    }

    /// Calls `f(index, vector)` for every vector in the sub-box `[0, upper]`
    /// in lexicographic order. `upper` must lie inside the shape.
    pub fn for_each_below(&self, upper: &[usize], mut f: impl FnMut(usize, &[usize])) {
        let q = self.bounds.len();
        let mut cur = vec![0usize; q];
        let mut idx = 0usize;
        loop {
            f(idx, &cur);
            // odometer increment, last digit fastest
            let mut j = q;
            loop {
                if j == 0 {
                    return;
                }
                j -= 1;
                if cur[j] < upper[j] {
                    cur[j] += 1;
                    idx += self.strides[j];
                    break;
                }
                idx -= cur[j] * self.strides[j];
                cur[j] = 0;
            }
        }
    }
}
