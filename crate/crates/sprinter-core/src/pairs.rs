//! Canonical indexing of candidate pairwise interactions.
//!
//! The candidate set contains every ordered pair `(a, b)` with `a <= b`,
//! squares included, for a total of `q = p (p + 1) / 2` columns. Flat
//! indices enumerate pairs row by row: `(0,0), (0,1), ..., (0,p-1),
//! (1,1), ..., (p-1,p-1)`.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// A candidate interaction: column indices `a <= b` (0-based).
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct PairIndex {
    pub a: usize,
    pub b: usize,
}

impl PairIndex {
    pub fn new(a: usize, b: usize) -> Self {
        if a <= b {
            PairIndex { a, b }
        } else {
            PairIndex { a: b, b: a }
        }
    }

    /// Number of candidate interactions for `p` main effects.
    pub fn count(p: usize) -> usize {
        p * (p + 1) / 2
    }

    /// Flat index in `[0, q)` for main-effect dimension `p`.
    pub fn flat(&self, p: usize) -> usize {
        debug_assert!(self.b < p);
        // pairs (0,0)..(0,p-1) occupy the first p slots, (1,1).. the next p-1, ...
        self.a * p - self.a * (self.a + 1) / 2 + self.b
    }

    /// Inverse of [`PairIndex::flat`] in O(1): row `a` is the largest root
    /// of the triangular row-start equation, found by a float estimate plus
    /// an exact integer fix-up.
    pub fn from_flat(flat: usize, p: usize) -> Result<Self> {
        if flat >= Self::count(p) {
            return Err(Error::InvalidInput(format!(
                "flat index {flat} out of range for p = {p}"
            )));
        }
        // row a starts at R(a) = a(2p - a + 1)/2
        let row_start = |a: usize| a * (2 * p - a + 1) / 2;
        let t = (2 * p + 1) as f64;
        let mut a = ((t - (t * t - 8.0 * flat as f64).sqrt()) / 2.0) as usize;
        a = a.min(p - 1);
        while a > 0 && row_start(a) > flat {
            a -= 1;
        }
        while a + 1 < p && row_start(a + 1) <= flat {
            a += 1;
        }
        Ok(PairIndex { a, b: a + (flat - row_start(a)) })
    }

    pub fn is_square(&self) -> bool {
        self.a == self.b
    }
}

/// Iterator over all pairs in flat order.
pub fn all_pairs(p: usize) -> impl Iterator<Item = PairIndex> {
    (0..p).flat_map(move |a| (a..p).map(move |b| PairIndex { a, b }))
}

/// Fills `out` with the elementwise product of two columns.
pub fn product_column(xa: &[f64], xb: &[f64], out: &mut Vec<f64>) {
    out.clear();
    out.extend(xa.iter().zip(xb).map(|(&u, &v)| u * v));
}
