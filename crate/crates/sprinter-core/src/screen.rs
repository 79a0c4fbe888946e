//! The interaction screen: one pass over all q = p(p+1)/2 candidate
//! products, solving a one-dimensional offset MLE for each and keeping the
//! strongest utilities in a bounded min-heap.
//!
//! Interaction columns are materialized on the fly, one per worker, so the
//! scan needs O(n) scratch per worker plus O(m) for the heap. The result is
//! bitwise independent of the worker count: the flat index range is split
//! into fixed-size chunks, each chunk reports its local winners, and a
//! single deterministic merge finalizes.

use std::cmp::Ordering;
use std::collections::BinaryHeap;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::data::ColMatrix;
use crate::error::{Error, Result};
use crate::family::{Family, FamilyKind};
use crate::pairs::{product_column, PairIndex};

/// Bound on the 1-D coefficient; the minimizer is searched inside [-B, B].
pub const GAMMA_BOUND: f64 = 50.0;

/// Score tolerance at the returned solution (in |mean score| units).
pub const SCORE_TOL: f64 = 1e-9;

const CHUNK: usize = 8192;

/// Screening selection rule.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum SelectionRule {
    /// Keep the m candidates with the largest |gamma|.
    TopM(usize),
    /// Keep every candidate with |gamma| strictly above the threshold.
    Threshold(f64),
}

/// Result of a screening pass. `selected` is sorted by |gamma| descending,
/// ties broken by smaller flat index first.
#[derive(Debug, Clone)]
pub struct ScreenResult {
    pub selected: Vec<(PairIndex, f64)>,
    pub rule: SelectionRule,
    /// Effective m after clamping to q (top-m mode only).
    pub m_effective: Option<usize>,
    pub n_scanned: usize,
    pub newton_failures: usize,
    /// p of the design that was screened; needed to interpret flat indices.
    pub p: usize,
}

/// `floor(n / ln n)`, the default screening budget, never below 1.
pub fn default_m(n: usize) -> usize {
    assert!(n >= 2, "default_m needs n >= 2");
    ((n as f64) / (n as f64).ln()).floor().max(1.0) as usize
}

/// Outcome of one safeguarded Newton solve.
#[derive(Debug, Clone, Copy)]
pub struct Newton1d {
    pub gamma: f64,
    pub converged: bool,
    pub iterations: usize,
}

/// Minimizes a smooth convex function on [-bound, bound] given a callback
/// returning (objective, score, curvature) at a point. Newton steps are
/// kept inside the current score bracket, falling back to its midpoint when
/// they leave it, and halved toward the previous iterate whenever the
/// objective fails to decrease.
pub fn safeguarded_newton_1d<F>(mut eval: F, bound: f64, max_iter: usize) -> Newton1d
where
    F: FnMut(f64) -> (f64, f64, f64),
{
    let mut lo = -bound;
    let mut hi = bound;
    // the bound endpoints are probed lazily, only when a Newton step
    // tries to leave the interval
    let mut lo_probed = false;
    let mut hi_probed = false;
    let mut gamma = 0.0;
    let (mut obj, mut score, mut curv) = eval(gamma);
    for it in 0..max_iter {
        if score.abs() < SCORE_TOL {
            return Newton1d { gamma, converged: true, iterations: it + 1 };
        }
        if score > 0.0 {
            hi = gamma;
        } else {
            lo = gamma;
        }
        let newton = gamma - score / curv.max(1e-300);
        let cand = if newton.is_finite() && newton > lo && newton < hi {
            newton
        } else if newton >= hi && hi == bound && !hi_probed {
            hi_probed = true;
            bound
        } else if newton <= lo && lo == -bound && !lo_probed {
            lo_probed = true;
            -bound
        } else {
            0.5 * (lo + hi)
        };
        let (mut obj_c, mut score_c, mut curv_c) = eval(cand);
        // minimizer beyond the box: return the clamped endpoint
        if cand == bound && score_c <= 0.0 {
            return Newton1d { gamma: bound, converged: score_c.abs() < SCORE_TOL, iterations: it + 2 };
        }
        if cand == -bound && score_c >= 0.0 {
            return Newton1d { gamma: -bound, converged: score_c.abs() < SCORE_TOL, iterations: it + 2 };
        }
        let mut cand = cand;
        let mut halvings = 0;
        while obj_c > obj + 1e-14 * (1.0 + obj.abs()) && halvings < 30 {
            cand = 0.5 * (cand + gamma);
            (obj_c, score_c, curv_c) = eval(cand);
            halvings += 1;
        }
        if (cand - gamma).abs() < 1e-15 * (1.0 + gamma.abs()) {
            return Newton1d { gamma: cand, converged: score_c.abs() < 1e-6, iterations: it + 2 };
        }
        gamma = cand;
        obj = obj_c;
        score = score_c;
        curv = curv_c;
    }
    Newton1d { gamma, converged: score.abs() < 1e-6, iterations: max_iter }
}

/// One-dimensional offset MLE: the gamma minimizing
/// `mean_i [ b(offset_i + z_i gamma) - (offset_i + z_i gamma) y_i ]`.
///
/// A z column that is identically zero returns 0. The gaussian family has
/// the closed form `z'(y - offset) / z'z`.
pub fn fit_1d_offset_mle(family: Family, z: &[f64], y: &[f64], offset: &[f64]) -> Newton1d {
    debug_assert_eq!(z.len(), y.len());
    debug_assert_eq!(z.len(), offset.len());
    let zz: f64 = z.iter().map(|&v| v * v).sum();
    if zz == 0.0 {
        return Newton1d { gamma: 0.0, converged: true, iterations: 0 };
    }
    if family.kind == FamilyKind::Gaussian {
        let num: f64 = z.iter().zip(y).zip(offset).map(|((&zi, &yi), &oi)| zi * (yi - oi)).sum();
        let gamma = (num / zz).clamp(-GAMMA_BOUND, GAMMA_BOUND);
        return Newton1d { gamma, converged: gamma.abs() < GAMMA_BOUND, iterations: 1 };
    }
    let n = z.len() as f64;
    let eval = |g: f64| {
        let mut obj = 0.0;
        let mut score = 0.0;
        let mut curv = 0.0;
        for i in 0..z.len() {
            let t = offset[i] + z[i] * g;
            let (b, mu, w) = family.cumulant_mean_variance(t);
            obj += b - family.clamp_theta(t) * y[i];
            score += z[i] * (mu - y[i]);
            curv += z[i] * z[i] * w;
        }
        (obj / n, score / n, curv / n)
    };
    safeguarded_newton_1d(eval, GAMMA_BOUND, 100)
}

/// A screening candidate with the deterministic tie order: larger |gamma|
/// wins, equal |gamma| resolved in favor of the smaller flat index.
#[derive(Debug, Clone, Copy)]
struct Cand {
    abs: f64,
    flat: usize,
    gamma: f64,
}

impl Cand {
    fn better_than(&self, other: &Cand) -> bool {
        match self.abs.total_cmp(&other.abs) {
            Ordering::Greater => true,
            Ordering::Less => false,
            Ordering::Equal => self.flat < other.flat,
        }
    }
}

impl PartialEq for Cand {
    fn eq(&self, other: &Self) -> bool {
        self.abs == other.abs && self.flat == other.flat
    }
}
impl Eq for Cand {}

// BinaryHeap is a max-heap; this ordering puts the WORST candidate on top
// so pushing and popping maintains the best m seen so far.
impl Ord for Cand {
    fn cmp(&self, other: &Self) -> Ordering {
        match other.abs.total_cmp(&self.abs) {
            Ordering::Equal => self.flat.cmp(&other.flat),
            ord => ord,
        }
    }
}
impl PartialOrd for Cand {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

fn sort_candidates(cands: &mut [Cand]) {
    cands.sort_unstable_by(|a, b| match b.abs.total_cmp(&a.abs) {
        Ordering::Equal => a.flat.cmp(&b.flat),
        ord => ord,
    });
}

/// Generic selection core shared by the GLM and ordinal screens.
///
/// `utility(flat, scratch)` must fill `scratch` as it sees fit and return
/// the candidate utility plus a convergence flag, or `None` to exclude the
/// candidate; it is called exactly once per flat index.
pub fn screen_select<F>(
    q: usize,
    rule: SelectionRule,
    workers: Option<usize>,
    utility: F,
) -> (Vec<(usize, f64)>, usize)
where
    F: Fn(usize, &mut Vec<f64>) -> Option<(f64, bool)> + Sync,
{
    let m_eff = match rule {
        SelectionRule::TopM(m) => Some(m.min(q)),
        SelectionRule::Threshold(_) => None,
    };

    let run = || {
        let n_chunks = q.div_ceil(CHUNK);
        let per_chunk: Vec<(Vec<Cand>, usize)> = (0..n_chunks)
            .into_par_iter()
            .map(|c| {
                let start = c * CHUNK;
                let end = (start + CHUNK).min(q);
                let mut scratch: Vec<f64> = Vec::new();
                let mut failures = 0usize;
                match rule {
                    SelectionRule::TopM(_) => {
                        let m = m_eff.unwrap();
                        let mut heap: BinaryHeap<Cand> = BinaryHeap::with_capacity(m + 1);
                        for flat in start..end {
                            let Some((gamma, ok)) = utility(flat, &mut scratch) else {
                                continue;
                            };
                            if !ok {
                                failures += 1;
                            }
                            let cand = Cand { abs: gamma.abs(), flat, gamma };
                            if heap.len() < m {
                                heap.push(cand);
                            } else if let Some(worst) = heap.peek() {
                                if cand.better_than(worst) {
                                    heap.pop();
                                    heap.push(cand);
                                }
                            }
                        }
                        let mut v: Vec<Cand> = heap.into_vec();
                        sort_candidates(&mut v);
                        (v, failures)
                    }
                    SelectionRule::Threshold(eta) => {
                        let mut v = Vec::new();
                        for flat in start..end {
                            let Some((gamma, ok)) = utility(flat, &mut scratch) else {
                                continue;
                            };
                            if !ok {
                                failures += 1;
                            }
                            if gamma.abs() > eta {
                                v.push(Cand { abs: gamma.abs(), flat, gamma });
                            }
                        }
                        (v, failures)
                    }
                }
            })
            .collect();

        let failures: usize = per_chunk.iter().map(|(_, f)| f).sum();
        let mut all: Vec<Cand> = per_chunk.into_iter().flat_map(|(v, _)| v).collect();
        sort_candidates(&mut all);
        if let Some(m) = m_eff {
            all.truncate(m);
        }
        (all.into_iter().map(|c| (c.flat, c.gamma)).collect::<Vec<_>>(), failures)
    };

    match workers {
        Some(k) => {
            let pool = rayon::ThreadPoolBuilder::new()
                .num_threads(k.max(1))
                .build()
                .expect("failed to build worker pool");
            pool.install(run)
        }
        None => run(),
    }
}

/// Steps 2-3 in one pass: solve the 1-D offset MLE for every candidate
/// product of columns of `x` and retain the winners under `rule`.
///
/// `x` is expected to be sample-standardized; interaction columns are the
/// plain elementwise products of its columns and are deliberately not
/// re-standardized.
pub fn screen(
    family: Family,
    x: &ColMatrix,
    y: &[f64],
    offset: &[f64],
    rule: SelectionRule,
    workers: Option<usize>,
) -> Result<ScreenResult> {
    screen_with_squares(family, x, y, offset, rule, workers, true)
}

/// [`screen`] with square candidates `x_a^2` optionally excluded.
#[allow(clippy::too_many_arguments)]
pub fn screen_with_squares(
    family: Family,
    x: &ColMatrix,
    y: &[f64],
    offset: &[f64],
    rule: SelectionRule,
    workers: Option<usize>,
    include_squares: bool,
) -> Result<ScreenResult> {
    if x.n_rows() != y.len() || offset.len() != y.len() {
        return Err(Error::Dimension("screen: inconsistent row counts".into()));
    }
    match rule {
        SelectionRule::TopM(m) if m == 0 => {
            return Err(Error::InvalidInput("top-m screening needs m >= 1".into()))
        }
        SelectionRule::Threshold(eta) if !(eta >= 0.0) => {
            return Err(Error::InvalidInput("threshold must be >= 0".into()))
        }
        _ => {}
    }
    let p = x.n_cols();
    let q = PairIndex::count(p);

    let (selected_flat, failures) = screen_select(q, rule, workers, |flat, scratch| {
        let pair = PairIndex::from_flat(flat, p).expect("flat in range");
        if !include_squares && pair.is_square() {
            return None;
        }
        product_column(x.col(pair.a), x.col(pair.b), scratch);
        let out = fit_1d_offset_mle(family, scratch, y, offset);
        Some((out.gamma, out.converged))
    });

    let selected = selected_flat
        .into_iter()
        .map(|(flat, gamma)| (PairIndex::from_flat(flat, p).unwrap(), gamma))
        .collect();
    Ok(ScreenResult {
        selected,
        rule,
        m_effective: match rule {
            SelectionRule::TopM(m) => Some(m.min(q)),
            SelectionRule::Threshold(_) => None,
        },
        n_scanned: q,
        newton_failures: failures,
        p,
    })
}
