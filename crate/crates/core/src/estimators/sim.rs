//! Per-replication trackers used by the empirical routes.

use smallvec::SmallVec;

/// Componentwise argmax of a batch, kept with the winning observations.
/// An observation that is the strict maximum in some coordinate is exactly
/// one that is not dominated by the maximum of the others.
#[derive(Clone, Debug)]
pub(crate) struct ArgmaxTracker {
    dim: usize,
    idx: SmallVec<[u64; 8]>,
    best: SmallVec<[f64; 8]>,
    // row j: the observation currently holding the max of coordinate j
    rows: Vec<f64>,
    n: u64,
}

impl ArgmaxTracker {
    pub(crate) fn new(dim: usize) -> Self {
        Self {
            dim,
            idx: SmallVec::from_elem(0, dim),
            best: SmallVec::from_elem(f64::NEG_INFINITY, dim),
            rows: vec![0.0; dim * dim],
            n: 0,
        }
    }

    /// Returns `(simple, complete)` record status of `x`.
    #[inline]
    pub(crate) fn push(&mut self, x: &[f64]) -> (bool, bool) {
        self.n += 1;
        let mut any = false;
        let mut all = true;
        for j in 0..self.dim {
            if x[j] > self.best[j] {
                any = true;
                self.best[j] = x[j];
                self.idx[j] = self.n;
                self.rows[j * self.dim..(j + 1) * self.dim].copy_from_slice(x);
            } else {
                all = false;
            }
        }
        (any, all)
    }

    /// Champion among the observations so far: the common argmax of every
    /// coordinate, if there is one.
    pub(crate) fn champion(&self) -> Option<&[f64]> {
        let first = self.idx[0];
        (self.n > 0 && self.idx.iter().all(|&i| i == first)).then(|| &self.rows[..self.dim])
    }

    /// Distinct observations that hold at least one coordinate maximum.
    pub(crate) fn for_each_max_holder(&self, mut f: impl FnMut(&[f64])) {
        for j in 0..self.dim {
            if self.idx[..j].contains(&self.idx[j]) {
                continue;
            }
            f(&self.rows[j * self.dim..(j + 1) * self.dim]);
        }
    }
}
