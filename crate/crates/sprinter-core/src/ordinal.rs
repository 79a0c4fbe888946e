//! Proportional-odds (cumulative logit) regression with an elastic-net
//! penalty, plus its interaction-screening pipeline.
//!
//! The model for k+1 ordered categories is
//!
//! ```text
//! logit P(Y <= t | x) = c_t - x' b,    t = 1..k,  c nondecreasing,
//! ```
//!
//! so a larger linear predictor `x' b` shifts mass toward higher
//! categories. All categories share `b`; only the cutpoints differ.
//!
//! The per-observation design in the stacked parametrization is
//! `X_i = (I_k | -1_k x_i')`, which makes both the score and the Fisher
//! information collapse into small closed-form blocks:
//!
//! ```text
//! U_i = (V_i ; -x_i [1' V_i]),
//! I_i = [ W_i            -(W_i 1) x_i'          ]
//!       [ -x_i (W_i 1)'   x_i [1' W_i 1] x_i'   ]
//! ```
//!
//! with `V_i` the k-vector gradient in the cumulative logits and `W_i` the
//! tridiagonal k-by-k Fisher block. The structured path never materializes
//! the nk-by-(k+p) stacked design; the naive path does exactly that, one
//! observation at a time, and exists as the reference for correctness and
//! timing comparisons.

use std::collections::BTreeMap;

use crate::data::{ColMatrix, Dataset};
use crate::error::{Error, Result};
use crate::family::Family;
use crate::model::{expand_to_raw, ordinal_probs, InteractionModel};
use crate::pairs::{product_column, PairIndex};
use crate::screen::{safeguarded_newton_1d, screen_select, SelectionRule, GAMMA_BOUND};
use crate::simulate::derive_rng;
use crate::solver::cv_fold_assignment;
use rand::RngCore;

/// Probabilities are floored here when a category collapses numerically.
pub const PROB_FLOOR: f64 = 1e-12;

/// A fitted penalized proportional-odds model at one penalty weight.
/// Coefficients are on the scale of the matrix passed to the fitter.
#[derive(Debug, Clone)]
pub struct OrdinalFit {
    pub cutpoints: Vec<f64>,
    pub coefs: BTreeMap<usize, f64>,
    pub lambda: f64,
    pub alpha: f64,
    pub converged: bool,
    pub n_iter: usize,
    /// Count of probability-floor events during fitting.
    pub floored: usize,
}

impl OrdinalFit {
    pub fn coef(&self, j: usize) -> f64 {
        self.coefs.get(&j).copied().unwrap_or(0.0)
    }

    /// Linear predictor `x' b (+ offset)`.
    pub fn linear_predictor(&self, x: &ColMatrix, offset: Option<&[f64]>) -> Vec<f64> {
        let mut lp = vec![0.0; x.n_rows()];
        if let Some(o) = offset {
            lp.copy_from_slice(o);
        }
        for (&j, &b) in &self.coefs {
            for (t, &v) in lp.iter_mut().zip(x.col(j)) {
                *t += b * v;
            }
        }
        lp
    }
}

/// Validates a category vector and returns k (so categories span 1..=k+1).
pub fn validate_categories(y: &[usize]) -> Result<usize> {
    let max = *y.iter().max().ok_or_else(|| Error::InvalidInput("empty response".into()))?;
    if max < 2 {
        return Err(Error::FamilyMismatch(
            "ordinal response must contain at least 2 categories".into(),
        ));
    }
    let mut counts = vec![0usize; max];
    for &c in y {
        if c == 0 || c > max {
            return Err(Error::FamilyMismatch(format!("category {c} outside 1..={max}")));
        }
        counts[c - 1] += 1;
    }
    if let Some(missing) = counts.iter().position(|&c| c == 0) {
        return Err(Error::FamilyMismatch(format!(
            "category {} has zero training occurrences",
            missing + 1
        )));
    }
    Ok(max - 1)
}

/// Per-observation pieces: `dprime[t] = delta_t (1 - delta_t)` for the k
/// cumulative probabilities and the k+1 floored category probabilities.
struct ObsBlocks {
    dprime: Vec<f64>,
    prob: Vec<f64>,
    floored: bool,
}

impl ObsBlocks {
    fn with_capacity(k: usize) -> Self {
        ObsBlocks {
            dprime: Vec::with_capacity(k),
            prob: Vec::with_capacity(k + 1),
            floored: false,
        }
    }
}

fn obs_blocks(cutpoints: &[f64], lp: f64, blocks: &mut ObsBlocks) {
    let k = cutpoints.len();
    blocks.dprime.clear();
    blocks.prob.clear();
    blocks.floored = false;
    let mut prev = 0.0;
    for t in 0..k {
        let d = 1.0 / (1.0 + (-(cutpoints[t] - lp)).exp());
        blocks.dprime.push(d * (1.0 - d));
        let mut pt = d - prev;
        if pt < PROB_FLOOR {
            pt = PROB_FLOOR;
            blocks.floored = true;
        }
        blocks.prob.push(pt);
        prev = d;
    }
    let mut last = 1.0 - prev;
    if last < PROB_FLOOR {
        last = PROB_FLOOR;
        blocks.floored = true;
    }
    blocks.prob.push(last);
}

/// Nonzero entries of V_i: `V_t = dprime_t (1{t=y} - 1{t=y-1}) / p_y`,
/// which touches at most the two cutpoints adjacent to category y.
#[inline]
fn v_entries(blocks: &ObsBlocks, y: usize) -> (Option<(usize, f64)>, Option<(usize, f64)>) {
    let py = blocks.prob[y - 1];
    let k = blocks.dprime.len();
    let pos = if y <= k { Some((y - 1, blocks.dprime[y - 1] / py)) } else { None };
    let neg = if y >= 2 { Some((y - 2, -blocks.dprime[y - 2] / py)) } else { None };
    (pos, neg)
}

/// Tridiagonal Fisher block: `diag[t]` and the upper off-diagonal `off[t]`
/// between t and t+1.
fn w_tridiag(blocks: &ObsBlocks, diag: &mut Vec<f64>, off: &mut Vec<f64>) {
    let k = blocks.dprime.len();
    diag.clear();
    off.clear();
    for t in 0..k {
        let d = blocks.dprime[t];
        diag.push(d * d * (1.0 / blocks.prob[t] + 1.0 / blocks.prob[t + 1]));
        if t + 1 < k {
            off.push(-blocks.dprime[t] * blocks.dprime[t + 1] / blocks.prob[t + 1]);
        }
    }
}

/// Per-observation summaries driving the quadratic model: `t_i = 1'V_i`,
/// `g_cols[t][i] = (W_i 1)_t`, `s_i = 1'W_i 1`.
struct QuadPieces {
    t_i: Vec<f64>,
    s_i: Vec<f64>,
    g_cols: Vec<Vec<f64>>,
    /// Aggregated cutpoint block sum_i W_i, dense k x k.
    cc: Vec<f64>,
    /// Aggregated cutpoint score sum_i V_i.
    u_c: Vec<f64>,
    floored: usize,
}

fn quad_pieces(lp: &[f64], y: &[usize], cutpoints: &[f64]) -> QuadPieces {
    let n = lp.len();
    let k = cutpoints.len();
    let mut blocks = ObsBlocks::with_capacity(k);
    let mut diag = Vec::with_capacity(k);
    let mut off = Vec::with_capacity(k.saturating_sub(1));
    let mut out = QuadPieces {
        t_i: vec![0.0; n],
        s_i: vec![0.0; n],
        g_cols: vec![vec![0.0; n]; k],
        cc: vec![0.0; k * k],
        u_c: vec![0.0; k],
        floored: 0,
    };
    for i in 0..n {
        obs_blocks(cutpoints, lp[i], &mut blocks);
        if blocks.floored {
            out.floored += 1;
        }
        let (pos, neg) = v_entries(&blocks, y[i]);
        let mut ti = 0.0;
        if let Some((t, v)) = pos {
            out.u_c[t] += v;
            ti += v;
        }
        if let Some((t, v)) = neg {
            out.u_c[t] += v;
            ti += v;
        }
        out.t_i[i] = ti;
        w_tridiag(&blocks, &mut diag, &mut off);
        let mut si = 0.0;
        for t in 0..k {
            out.cc[t * k + t] += diag[t];
            let mut gt = diag[t];
            if t + 1 < k {
                out.cc[t * k + t + 1] += off[t];
                out.cc[(t + 1) * k + t] += off[t];
                gt += off[t];
            }
            if t > 0 {
                gt += off[t - 1];
            }
            out.g_cols[t][i] = gt;
            si += gt;
        }
        out.s_i[i] = si;
    }
    out
}

/// Full-data score and information in structured block form. Sums run over
/// observations (not means).
#[derive(Debug, Clone)]
pub struct ScoreInfo {
    pub k: usize,
    pub p: usize,
    /// Score of the log-likelihood: k cutpoint entries, then p for b.
    pub score: Vec<f64>,
    /// k x k cutpoint block (dense, row-major).
    pub info_cc: Vec<f64>,
    /// k x p cross block (row-major).
    pub info_cb: Vec<f64>,
    /// p x p coefficient block (row-major).
    pub info_bb: Vec<f64>,
    pub floored: usize,
}

impl ScoreInfo {
    /// Assembles the (k+p) x (k+p) dense information matrix.
    pub fn dense_info(&self) -> Vec<f64> {
        let (k, p) = (self.k, self.p);
        let d = k + p;
        let mut out = vec![0.0; d * d];
        for i in 0..k {
            for j in 0..k {
                out[i * d + j] = self.info_cc[i * k + j];
            }
            for j in 0..p {
                out[i * d + k + j] = self.info_cb[i * p + j];
                out[(k + j) * d + i] = self.info_cb[i * p + j];
            }
        }
        for i in 0..p {
            for j in 0..p {
                out[(k + i) * d + (k + j)] = self.info_bb[i * p + j];
            }
        }
        out
    }
}

fn linear_predictor(x: &ColMatrix, coefs: &[f64], offset: Option<&[f64]>) -> Vec<f64> {
    let n = x.n_rows();
    let mut lp = vec![0.0; n];
    if let Some(o) = offset {
        lp.copy_from_slice(o);
    }
    for (j, &b) in coefs.iter().enumerate() {
        if b != 0.0 {
            for (t, &v) in lp.iter_mut().zip(x.col(j)) {
                *t += b * v;
            }
        }
    }
    lp
}

/// Structured evaluation: O(nk) for the small blocks plus one weighted
/// gram for the p x p block, never touching the stacked design.
pub fn ordinal_score_info(
    x: &ColMatrix,
    y: &[usize],
    cutpoints: &[f64],
    coefs: &[f64],
    offset: Option<&[f64]>,
) -> Result<ScoreInfo> {
    let n = x.n_rows();
    let p = x.n_cols();
    let k = cutpoints.len();
    if y.len() != n || coefs.len() != p {
        return Err(Error::Dimension("ordinal_score_info: shape mismatch".into()));
    }
    if let Some(o) = offset {
        if o.len() != n {
            return Err(Error::Dimension("offset length != n".into()));
        }
    }
    let lp = linear_predictor(x, coefs, offset);
    let qp = quad_pieces(&lp, y, cutpoints);

    let mut score = vec![0.0; k + p];
    score[..k].copy_from_slice(&qp.u_c);
    // score b-block: -sum_i t_i x_i
    for j in 0..p {
        let col = x.col(j);
        let mut s = 0.0;
        for i in 0..n {
            s += qp.t_i[i] * col[i];
        }
        score[k + j] = -s;
    }
    // cross block: -sum_i (W_i 1)_t x_ij
    let mut info_cb = vec![0.0; k * p];
    for t in 0..k {
        let g = &qp.g_cols[t];
        for j in 0..p {
            let col = x.col(j);
            let mut s = 0.0;
            for i in 0..n {
                s += g[i] * col[i];
            }
            info_cb[t * p + j] = -s;
        }
    }
    // b block: weighted gram sum_i s_i x_i x_i', upper triangle mirrored.
    // Four columns share each pass over the weighted vector, and each dot
    // carries independent accumulators so the reduction pipelines.
    let mut info_bb = vec![0.0; p * p];
    let mut weighted = vec![0.0; n];
    for a in 0..p {
        let ca = x.col(a);
        for i in 0..n {
            weighted[i] = qp.s_i[i] * ca[i];
        }
        let mut b = a;
        while b + 4 <= p {
            let (c0, c1) = (x.col(b), x.col(b + 1));
            let (c2, c3) = (x.col(b + 2), x.col(b + 3));
            let (mut s0, mut s1, mut s2, mut s3) = (0.0f64, 0.0f64, 0.0f64, 0.0f64);
            for i in 0..n {
                let w = weighted[i];
                s0 += w * c0[i];
                s1 += w * c1[i];
                s2 += w * c2[i];
                s3 += w * c3[i];
            }
            for (off, s) in [s0, s1, s2, s3].into_iter().enumerate() {
                info_bb[a * p + b + off] = s;
                info_bb[(b + off) * p + a] = s;
            }
            b += 4;
        }
        while b < p {
            let cb = x.col(b);
            let (mut s0, mut s1) = (0.0f64, 0.0f64);
            let mut i = 0;
            while i + 2 <= n {
                s0 += weighted[i] * cb[i];
                s1 += weighted[i + 1] * cb[i + 1];
                i += 2;
            }
            if i < n {
                s0 += weighted[i] * cb[i];
            }
            let s = s0 + s1;
            info_bb[a * p + b] = s;
            info_bb[b * p + a] = s;
            b += 1;
        }
    }

    Ok(ScoreInfo { k, p, score, info_cc: qp.cc, info_cb, info_bb, floored: qp.floored })
}

/// Reference path: the literal per-observation loop-and-sum. For each
/// observation it allocates and fills the k x (k+p) stacked design
/// `X_i = (I_k | -1_k x_i')`, the link Jacobian `Dh`, the gradient and
/// curvature of the category log-likelihood, then forms
/// `U_i = X_i' Dh' grad L_i` and `I_i = X_i' (Dh' E[grad L grad L'] Dh) X_i`
/// with generic dense products and sums them up.
pub fn ordinal_score_info_naive(
    x: &ColMatrix,
    y: &[usize],
    cutpoints: &[f64],
    coefs: &[f64],
    offset: Option<&[f64]>,
) -> Result<(Vec<f64>, Vec<f64>)> {
    let n = x.n_rows();
    let p = x.n_cols();
    let k = cutpoints.len();
    if y.len() != n || coefs.len() != p {
        return Err(Error::Dimension("ordinal_score_info_naive: shape mismatch".into()));
    }
    let lp = linear_predictor(x, coefs, offset);
    let d = k + p;
    let mut score = vec![0.0; d];
    let mut info = vec![0.0; d * d];

    for i in 0..n {
        // cumulative probabilities and their derivatives at this row
        let mut cum = vec![0.0; k];
        let mut dprime = vec![0.0; k];
        for t in 0..k {
            let s = 1.0 / (1.0 + (-(cutpoints[t] - lp[i])).exp());
            cum[t] = s;
            dprime[t] = s * (1.0 - s);
        }
        let mut prob = vec![0.0; k + 1];
        let mut prev = 0.0;
        for t in 0..k {
            prob[t] = (cum[t] - prev).max(PROB_FLOOR);
            prev = cum[t];
        }
        prob[k] = (1.0 - prev).max(PROB_FLOOR);

        // X_i = (I_k | -1_k x_i')
        let mut xi = vec![0.0; k * d];
        for t in 0..k {
            xi[t * d + t] = 1.0;
            for j in 0..p {
                xi[t * d + k + j] = -x.get(i, j);
            }
        }
        // Jacobian of the first k category probabilities wrt eta
        let mut dh = vec![0.0; k * k];
        for t in 0..k {
            dh[t * k + t] = dprime[t];
            if t > 0 {
                dh[t * k + t - 1] = -dprime[t - 1];
            }
        }
        // gradient of log L in the k free category probabilities
        let mut grad_l = vec![0.0; k];
        if y[i] <= k {
            grad_l[y[i] - 1] = 1.0 / prob[y[i] - 1];
        } else {
            for g in grad_l.iter_mut() {
                *g = -1.0 / prob[k];
            }
        }
        // E[grad L grad L'] = diag(1/p_t) + 1/p_{k+1}
        let mut m = vec![0.0; k * k];
        for t in 0..k {
            for u in 0..k {
                m[t * k + u] = 1.0 / prob[k] + if t == u { 1.0 / prob[t] } else { 0.0 };
            }
        }
        // V_i = Dh' grad L; W_i = Dh' M Dh
        let mut vi = vec![0.0; k];
        for s in 0..k {
            let mut acc = 0.0;
            for t in 0..k {
                acc += dh[t * k + s] * grad_l[t];
            }
            vi[s] = acc;
        }
        let mut mdh = vec![0.0; k * k];
        for t in 0..k {
            for s in 0..k {
                let mut acc = 0.0;
                for u in 0..k {
                    acc += m[t * k + u] * dh[u * k + s];
                }
                mdh[t * k + s] = acc;
            }
        }
        let mut wi = vec![0.0; k * k];
        for r in 0..k {
            for s in 0..k {
                let mut acc = 0.0;
                for t in 0..k {
                    acc += dh[t * k + r] * mdh[t * k + s];
                }
                wi[r * k + s] = acc;
            }
        }
        // U_i = X_i' V_i
        for t in 0..k {
            for c in 0..d {
                score[c] += xi[t * d + c] * vi[t];
            }
        }
        // I_i = X_i' (W_i X_i) with generic dense products
        let mut wxi = vec![0.0; k * d];
        for r in 0..k {
            for c in 0..d {
                let mut s = 0.0;
                for t in 0..k {
                    s += wi[r * k + t] * xi[t * d + c];
                }
                wxi[r * d + c] = s;
            }
        }
        let mut ii = vec![0.0; d * d];
        for a in 0..d {
            for t in 0..k {
                let xta = xi[t * d + a];
                let row = &wxi[t * d..(t + 1) * d];
                let out = &mut ii[a * d..(a + 1) * d];
                for (o, &w) in out.iter_mut().zip(row) {
                    *o += xta * w;
                }
            }
        }
        for (acc, v) in info.iter_mut().zip(&ii) {
            *acc += v;
        }
    }
    Ok((score, info))
}

/// Mean negative log-likelihood of the cumulative-logit model.
pub fn ordinal_nll(lp: &[f64], y: &[usize], cutpoints: &[f64]) -> f64 {
    let mut nll = 0.0;
    for i in 0..lp.len() {
        let probs = ordinal_probs(cutpoints, lp[i]);
        nll -= probs[y[i] - 1].max(PROB_FLOOR).ln();
    }
    nll / lp.len() as f64
}

/// Pool-adjacent-violators projection onto nondecreasing sequences.
fn isotonic_projection(c: &mut [f64]) {
    let n = c.len();
    let mut values: Vec<f64> = Vec::with_capacity(n);
    let mut counts: Vec<usize> = Vec::with_capacity(n);
    for &v in c.iter() {
        values.push(v);
        counts.push(1);
        while values.len() >= 2 {
            let m = values.len();
            if values[m - 2] <= values[m - 1] {
                break;
            }
            let w = (counts[m - 2] + counts[m - 1]) as f64;
            let merged = (values[m - 2] * counts[m - 2] as f64
                + values[m - 1] * counts[m - 1] as f64)
                / w;
            counts[m - 2] += counts[m - 1];
            values[m - 2] = merged;
            values.truncate(m - 1);
            counts.truncate(m - 1);
        }
    }
    let mut idx = 0;
    for (v, cnt) in values.iter().zip(&counts) {
        for _ in 0..*cnt {
            c[idx] = *v;
            idx += 1;
        }
    }
}

/// Marginal cumulative-logit cutpoints: the intercept-only MLE.
pub fn marginal_cutpoints(y: &[usize], k: usize) -> Vec<f64> {
    let n = y.len() as f64;
    let mut counts = vec![0.0; k + 1];
    for &c in y {
        counts[c - 1] += 1.0;
    }
    let mut cum = 0.0;
    let mut cuts = Vec::with_capacity(k);
    for t in 0..k {
        cum += counts[t];
        let q = (cum / n).clamp(1e-10, 1.0 - 1e-10);
        cuts.push((q / (1.0 - q)).ln());
    }
    cuts
}

/// Options for the proportional-odds fitter.
#[derive(Debug, Clone, Copy)]
pub struct OrdinalFitOptions {
    pub alpha: f64,
    pub max_outer: usize,
    pub max_sweeps: usize,
    pub tol: f64,
    pub n_lambda: usize,
}

impl Default for OrdinalFitOptions {
    fn default() -> Self {
        OrdinalFitOptions { alpha: 1.0, max_outer: 50, max_sweeps: 200, tol: 1e-7, n_lambda: 100 }
    }
}

/// Elastic-net penalty value `lambda (alpha |b|_1 + (1 - alpha) |b|_2^2)`;
/// cutpoints are never penalized.
fn penalty_value(coefs: &[f64], lambda: f64, alpha: f64) -> f64 {
    let l1: f64 = coefs.iter().map(|b| b.abs()).sum();
    let l2: f64 = coefs.iter().map(|b| b * b).sum();
    lambda * (alpha * l1 + (1.0 - alpha) * l2)
}

/// Penalty weight at which b = 0 is stationary under the marginal-cutpoint
/// null model.
pub fn ordinal_lambda_max(
    x: &ColMatrix,
    y: &[usize],
    k: usize,
    alpha: f64,
    offset: Option<&[f64]>,
) -> Result<f64> {
    let n = x.n_rows() as f64;
    let cuts = fit_null_cutpoints(x, y, k, offset);
    let zero = vec![0.0; x.n_cols()];
    let si = ordinal_score_info(x, y, &cuts, &zero, offset)?;
    let alpha_eff = alpha.max(1e-3);
    let mut best: f64 = 0.0;
    for j in 0..x.n_cols() {
        best = best.max((si.score[k + j] / n).abs() / alpha_eff);
    }
    Ok(best.max(1e-10))
}

/// Null cutpoints: the marginal MLE without an offset, or a short Newton
/// refinement of it when an offset is present.
fn fit_null_cutpoints(x: &ColMatrix, y: &[usize], k: usize, offset: Option<&[f64]>) -> Vec<f64> {
    let mut cuts = marginal_cutpoints(y, k);
    if offset.is_none() {
        return cuts;
    }
    let zero = vec![0.0; x.n_cols()];
    for _ in 0..50 {
        let lp = linear_predictor(x, &zero, offset);
        let qp = quad_pieces(&lp, y, &cuts);
        let mut max_step: f64 = 0.0;
        for t in 0..k {
            let h = qp.cc[t * k + t].max(1e-10);
            let step = qp.u_c[t] / h;
            cuts[t] += step;
            max_step = max_step.max(step.abs());
        }
        isotonic_projection(&mut cuts);
        if max_step < 1e-10 {
            break;
        }
    }
    cuts
}

#[inline]
fn soft(z: f64, t: f64) -> f64 {
    if z > t {
        z - t
    } else if z < -t {
        z + t
    } else {
        0.0
    }
}

/// One proximal-Newton fit at a fixed penalty, warm-started in place.
/// Returns (converged, outer iterations, floor events).
#[allow(clippy::too_many_arguments)]
fn fit_one(
    x: &ColMatrix,
    y: &[usize],
    k: usize,
    cutpoints: &mut Vec<f64>,
    coefs: &mut [f64],
    lambda: f64,
    opts: &OrdinalFitOptions,
    offset: Option<&[f64]>,
) -> (bool, usize, usize) {
    let n = x.n_rows();
    let p = x.n_cols();
    let nf = n as f64;
    let mut floored = 0usize;

    let mut lp = linear_predictor(x, coefs, offset);
    let mut nll_prev = ordinal_nll(&lp, y, cutpoints) + penalty_value(coefs, lambda, opts.alpha);

    for outer in 0..opts.max_outer {
        let qp = quad_pieces(&lp, y, cutpoints);
        floored += qp.floored;

        // curvatures of the quadratic model
        let curv_c: Vec<f64> = (0..k).map(|t| qp.cc[t * k + t] / nf).collect();
        let curv_b: Vec<f64> = (0..p)
            .map(|j| {
                let col = x.col(j);
                col.iter().zip(&qp.s_i).map(|(&v, &s)| s * v * v).sum::<f64>() / nf
            })
            .collect();

        // inner coordinate descent over (dc, db) on the quadratic model.
        // a_i = x_i' db; e_i = t_i - g_i' dc + s_i a_i drives the b
        // gradients: grad_b_j = (1/n) sum_i x_ij e_i.
        let mut dc = vec![0.0; k];
        let mut db = vec![0.0; p];
        let mut a = vec![0.0; n];
        let mut e = qp.t_i.clone();

        for _sweep in 0..opts.max_sweeps {
            let mut max_delta: f64 = 0.0;
            for t in 0..k {
                if curv_c[t] <= 0.0 {
                    continue;
                }
                let g = &qp.g_cols[t];
                let mut ga = 0.0;
                for i in 0..n {
                    ga += g[i] * a[i];
                }
                let mut hc = 0.0;
                for u in 0..k {
                    hc += qp.cc[t * k + u] * dc[u];
                }
                let grad = (-qp.u_c[t] + hc - ga) / nf;
                let step = grad / curv_c[t];
                if step != 0.0 {
                    dc[t] -= step;
                    for i in 0..n {
                        e[i] += step * g[i];
                    }
                    max_delta = max_delta.max(step.abs());
                }
            }
            for j in 0..p {
                if curv_b[j] <= 0.0 {
                    continue;
                }
                let col = x.col(j);
                let mut grad = 0.0;
                for i in 0..n {
                    grad += col[i] * e[i];
                }
                grad /= nf;
                let phi_cur = coefs[j] + db[j];
                let aj = curv_b[j];
                let phi_new =
                    soft(aj * phi_cur - grad, lambda * opts.alpha) / (aj + 2.0 * lambda * (1.0 - opts.alpha));
                let delta = phi_new - phi_cur;
                if delta != 0.0 {
                    db[j] += delta;
                    for i in 0..n {
                        a[i] += delta * col[i];
                        e[i] += delta * qp.s_i[i] * col[i];
                    }
                    max_delta = max_delta.max(delta.abs());
                }
            }
            if max_delta < opts.tol {
                break;
            }
        }

        // line search on the true penalized objective, halving the step
        let mut step_size = 1.0;
        let mut accepted = false;
        let mut new_cuts = cutpoints.clone();
        let mut new_coefs = coefs.to_vec();
        for _half in 0..30 {
            for t in 0..k {
                new_cuts[t] = cutpoints[t] + step_size * dc[t];
            }
            isotonic_projection(&mut new_cuts);
            for j in 0..p {
                new_coefs[j] = coefs[j] + step_size * db[j];
            }
            let new_lp = linear_predictor(x, &new_coefs, offset);
            let nll_new =
                ordinal_nll(&new_lp, y, &new_cuts) + penalty_value(&new_coefs, lambda, opts.alpha);
            if nll_new <= nll_prev + 1e-12 * (1.0 + nll_prev.abs()) {
                let max_change = dc
                    .iter()
                    .chain(db.iter())
                    .fold(0.0f64, |m, &v| m.max((step_size * v).abs()));
                cutpoints.copy_from_slice(&new_cuts);
                coefs.copy_from_slice(&new_coefs);
                lp = new_lp;
                let improved = nll_prev - nll_new;
                nll_prev = nll_new;
                accepted = true;
                if max_change < opts.tol || improved < 1e-12 * (1.0 + nll_new.abs()) {
                    return (true, outer + 1, floored);
                }
                break;
            }
            step_size *= 0.5;
        }
        if !accepted {
            return (false, outer + 1, floored);
        }
    }
    (false, opts.max_outer, floored)
}

/// Fits the penalized proportional-odds path over a descending grid,
/// warm-started. `lambda_grid = None` builds the automatic grid.
pub fn fit_ordinalnet(
    x: &ColMatrix,
    y: &[usize],
    opts: &OrdinalFitOptions,
    lambda_grid: Option<&[f64]>,
    offset: Option<&[f64]>,
) -> Result<Vec<OrdinalFit>> {
    let k = validate_categories(y)?;
    if x.n_rows() != y.len() {
        return Err(Error::Dimension("rows != responses".into()));
    }
    if !x.is_finite() {
        return Err(Error::InvalidInput("design contains non-finite values".into()));
    }
    let grid_owned;
    let grid: &[f64] = match lambda_grid {
        Some(g) => g,
        None => {
            let lmax = ordinal_lambda_max(x, y, k, opts.alpha, offset)?;
            let ratio = if y.len() > x.n_cols() { 1e-4 } else { 1e-2 };
            grid_owned = (0..opts.n_lambda)
                .map(|i| {
                    let f = i as f64 / (opts.n_lambda - 1).max(1) as f64;
                    (lmax.ln() * (1.0 - f) + (lmax * ratio).ln() * f).exp()
                })
                .collect::<Vec<f64>>();
            &grid_owned
        }
    };
    let mut cutpoints = fit_null_cutpoints(x, y, k, offset);
    let mut coefs = vec![0.0; x.n_cols()];
    let mut out = Vec::with_capacity(grid.len());
    for &lambda in grid {
        let (converged, n_iter, floored) =
            fit_one(x, y, k, &mut cutpoints, &mut coefs, lambda, opts, offset);
        out.push(OrdinalFit {
            cutpoints: cutpoints.clone(),
            coefs: coefs
                .iter()
                .enumerate()
                .filter(|(_, v)| **v != 0.0)
                .map(|(j, v)| (j, *v))
                .collect(),
            lambda,
            alpha: opts.alpha,
            converged,
            n_iter,
            floored,
        })
    }
    Ok(out)
}

/// Cross-validated path fit; returns the winner and its grid index.
#[allow(clippy::too_many_arguments)]
pub fn fit_ordinalnet_cv(
    x: &ColMatrix,
    y: &[usize],
    opts: &OrdinalFitOptions,
    n_folds: usize,
    seed: u64,
    offset: Option<&[f64]>,
) -> Result<(OrdinalFit, Vec<f64>, Vec<f64>)> {
    let k = validate_categories(y)?;
    let lmax = ordinal_lambda_max(x, y, k, opts.alpha, offset)?;
    let ratio = if y.len() > x.n_cols() { 1e-4 } else { 1e-2 };
    let grid: Vec<f64> = (0..opts.n_lambda)
        .map(|i| {
            let f = i as f64 / (opts.n_lambda - 1).max(1) as f64;
            (lmax.ln() * (1.0 - f) + (lmax * ratio).ln() * f).exp()
        })
        .collect();
    let folds = cv_fold_assignment(y.len(), n_folds, seed);
    let mut dev = vec![0.0; grid.len()];
    let mut used = 0usize;
    for f in 0..n_folds {
        let train_rows: Vec<usize> = (0..y.len()).filter(|&i| folds[i] != f).collect();
        let test_rows: Vec<usize> = (0..y.len()).filter(|&i| folds[i] == f).collect();
        let y_tr: Vec<usize> = train_rows.iter().map(|&i| y[i]).collect();
        if validate_categories(&y_tr).is_err() {
            continue;
        }
        let x_tr = x.subset_rows(&train_rows);
        let x_te = x.subset_rows(&test_rows);
        let y_te: Vec<usize> = test_rows.iter().map(|&i| y[i]).collect();
        let o_tr: Option<Vec<f64>> = offset.map(|o| train_rows.iter().map(|&i| o[i]).collect());
        let o_te: Option<Vec<f64>> = offset.map(|o| test_rows.iter().map(|&i| o[i]).collect());
        let path = fit_ordinalnet(&x_tr, &y_tr, opts, Some(&grid), o_tr.as_deref())?;
        for (g, fit) in path.iter().enumerate() {
            let lp = fit.linear_predictor(&x_te, o_te.as_deref());
            dev[g] += 2.0 * ordinal_nll(&lp, &y_te, &fit.cutpoints);
        }
        used += 1;
    }
    if used == 0 {
        return Err(Error::Numerical("all ordinal CV folds are degenerate".into()));
    }
    for d in dev.iter_mut() {
        *d /= used as f64;
    }
    let best = dev
        .iter()
        .enumerate()
        .min_by(|a, b| a.1.total_cmp(b.1))
        .map(|(i, _)| i)
        .unwrap();
    let path = fit_ordinalnet(x, y, opts, Some(&grid), offset)?;
    Ok((path.into_iter().nth(best).unwrap(), grid, dev))
}

/// One-dimensional screening solve for the ordinal model: minimizes the
/// mean NLL over gamma with cutpoints and the base linear predictor fixed.
pub fn ordinal_gamma_1d(cutpoints: &[f64], base_lp: &[f64], y: &[usize], z: &[f64]) -> (f64, bool) {
    if z.iter().all(|&v| v == 0.0) {
        return (0.0, true);
    }
    let n = z.len() as f64;
    let k = cutpoints.len();
    let mut blocks = ObsBlocks::with_capacity(k);
    let mut diag = Vec::new();
    let mut off = Vec::new();
    let eval = |g: f64| {
        let mut obj = 0.0;
        let mut score = 0.0;
        let mut curv = 0.0;
        for i in 0..z.len() {
            let lp = base_lp[i] + z[i] * g;
            obs_blocks(cutpoints, lp, &mut blocks);
            obj -= blocks.prob[y[i] - 1].ln();
            let (pos, neg) = v_entries(&blocks, y[i]);
            let mut ti = 0.0;
            if let Some((_, v)) = pos {
                ti += v;
            }
            if let Some((_, v)) = neg {
                ti += v;
            }
            // d eta_t / d gamma = -z_i, so dNLL/dgamma = z_i t_i
            score += z[i] * ti;
            w_tridiag(&blocks, &mut diag, &mut off);
            let mut si = 0.0;
            for t in 0..k {
                si += diag[t];
                if t + 1 < k {
                    si += 2.0 * off[t];
                }
            }
            curv += z[i] * z[i] * si;
        }
        (obj / n, score / n, curv / n)
    };
    let out = safeguarded_newton_1d(eval, GAMMA_BOUND, 100);
    (out.gamma, out.converged)
}

/// Configuration for the ordinal pipeline.
#[derive(Debug, Clone, Copy)]
pub struct OrdinalSprinterConfig {
    /// `None` selects top-m with m = floor(n / ln n).
    pub m: Option<usize>,
    pub alpha: f64,
    pub cv_folds: usize,
    pub seed: u64,
    pub workers: Option<usize>,
}

impl Default for OrdinalSprinterConfig {
    fn default() -> Self {
        OrdinalSprinterConfig { m: None, alpha: 1.0, cv_folds: 5, seed: 0, workers: None }
    }
}

/// The fitted ordinal pipeline.
#[derive(Debug, Clone)]
pub struct OrdinalSprinterModel {
    pub model: InteractionModel,
    pub step1: OrdinalFit,
    pub selected: Vec<(PairIndex, f64)>,
    pub step4: OrdinalFit,
    pub degenerate: bool,
}

fn seed_for(seed: u64, label: &str) -> u64 {
    derive_rng(seed, label, 0).next_u64()
}

/// Ordinal version of the pipeline: penalized proportional-odds fit on the
/// main effects, per-pair 1-D screening with cutpoints held fixed, then a
/// refit of `[X | Z_selected]` with the step-1 linear predictor as offset
/// and cutpoints re-estimated jointly.
pub fn sprinter_ordinal(
    x_raw: &ColMatrix,
    y: &[usize],
    config: &OrdinalSprinterConfig,
) -> Result<OrdinalSprinterModel> {
    let k = validate_categories(y)?;
    let n = x_raw.n_rows();
    let p = x_raw.n_cols();
    let data = Dataset::new(x_raw.clone(), vec![0.0; n])?;
    let (xs, std) = data.standardized();
    let opts = OrdinalFitOptions { alpha: config.alpha, ..OrdinalFitOptions::default() };

    // step 1
    let (step1, _, _) =
        fit_ordinalnet_cv(&xs, y, &opts, config.cv_folds, seed_for(config.seed, "ord-cv1"), None)?;
    let base_lp = step1.linear_predictor(&xs, None);

    // steps 2-3
    let m = config.m.unwrap_or_else(|| crate::screen::default_m(n));
    let q = PairIndex::count(p);
    let (selected_flat, _fail) =
        screen_select(q, SelectionRule::TopM(m), config.workers, |flat, scratch| {
            let pr = PairIndex::from_flat(flat, p).expect("in range");
            product_column(xs.col(pr.a), xs.col(pr.b), scratch);
            Some(ordinal_gamma_1d(&step1.cutpoints, &base_lp, y, scratch))
        });
    let screened: Vec<(PairIndex, f64)> = selected_flat
        .into_iter()
        .map(|(flat, g)| (PairIndex::from_flat(flat, p).unwrap(), g))
        .collect();
    let degenerate = screened.is_empty();

    // step 4: refit with offset, cutpoints free
    let mut design = xs.clone();
    let mut zbuf = Vec::new();
    for &(pr, _) in &screened {
        product_column(xs.col(pr.a), xs.col(pr.b), &mut zbuf);
        design.push_col(&zbuf)?;
    }
    let (step4, _, _) = fit_ordinalnet_cv(
        &design,
        y,
        &opts,
        config.cv_folds,
        seed_for(config.seed, "ord-cv4"),
        Some(&base_lp),
    )?;

    // combine on the standardized scale, then expand to raw
    let mut main_std: BTreeMap<usize, f64> = BTreeMap::new();
    for (&j, &b) in &step1.coefs {
        *main_std.entry(j).or_insert(0.0) += b;
    }
    let mut inter_std: Vec<(PairIndex, f64)> = Vec::new();
    for (&j, &b) in &step4.coefs {
        if j < p {
            *main_std.entry(j).or_insert(0.0) += b;
        } else {
            inter_std.push((screened[j - p].0, b));
        }
    }
    main_std.retain(|_, v| *v != 0.0);
    let model = expand_to_raw(
        Family::binomial(),
        0.0,
        &main_std,
        &inter_std,
        &std,
        Some(step4.cutpoints.clone()),
    );
    let _ = k;
    Ok(OrdinalSprinterModel { model, step1, selected: inter_std, step4, degenerate })
}
