//! Elastic-net penalized GLM solver with offset support, a warm-started
//! regularization path and K-fold cross-validation.
//!
//! The objective for one penalty weight `lambda` is
//!
//! ```text
//! mean_i [ b(theta_i) - theta_i y_i ]
//!   + lambda * sum_k pf_k * ( alpha |beta_k| + (1 - alpha) beta_k^2 / 2 ),
//! theta_i = intercept + x_i' beta + offset_i
//! ```
//!
//! with the intercept never penalized. Non-gaussian families are fitted by
//! coordinate descent on an IRLS quadratic approximation with active-set
//! cycling; gaussian fits skip the outer loop.

use std::collections::BTreeMap;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::data::{ColMatrix, Standardization};
use crate::error::{Error, Result};
use crate::family::{Family, FamilyKind};

/// Solver configuration shared by every penalized fit.
#[derive(Debug, Clone, Copy)]
pub struct FitOptions {
    /// Elastic-net mixing; 1.0 is the pure l1 penalty.
    pub alpha: f64,
    /// Standardize columns internally and report coefficients on the
    /// original scale.
    pub standardize: bool,
    /// Maximum coordinate-descent sweeps per lambda.
    pub max_sweeps: usize,
    /// Convergence threshold on the largest coefficient change, measured on
    /// the standardized scale.
    pub tol: f64,
    /// IRLS weights are floored at this value to avoid division blowups at
    /// saturated fits.
    pub weight_floor: f64,
    /// Maximum IRLS outer iterations per lambda.
    pub max_irls: usize,
    /// Number of lambda values on an automatic grid.
    pub n_lambda: usize,
    /// Stop the path once the training deviance saturates (the standard
    /// path-fitting shortcut); the returned path may be shorter than the
    /// grid. Disable to fit every grid point.
    pub early_stop_path: bool,
}

impl Default for FitOptions {
    fn default() -> Self {
        FitOptions {
            alpha: 1.0,
            standardize: true,
            max_sweeps: 1000,
            tol: 1e-7,
            weight_floor: 1e-5,
            max_irls: 100,
            n_lambda: 100,
            early_stop_path: true,
        }
    }
}

/// A fitted penalized GLM at one point on the path.
///
/// `coefs` stores only nonzero coefficients on the scale of the matrix
/// passed to the solver; absent indices read as zero.
#[derive(Debug, Clone)]
pub struct GlmFit {
    pub intercept: f64,
    pub coefs: BTreeMap<usize, f64>,
    pub lambda: f64,
    pub alpha: f64,
    pub offset_used: bool,
    pub n_iter: usize,
    pub converged: bool,
}

impl GlmFit {
    pub fn coef(&self, j: usize) -> f64 {
        self.coefs.get(&j).copied().unwrap_or(0.0)
    }

    pub fn support(&self) -> Vec<usize> {
        self.coefs.keys().copied().collect()
    }

    /// Linear predictor `intercept + x beta + offset` for every row.
    pub fn predict_theta(&self, x: &ColMatrix, offset: Option<&[f64]>) -> Result<Vec<f64>> {
        if let Some(o) = offset {
            if o.len() != x.n_rows() {
                return Err(Error::Dimension("offset length != rows".into()));
            }
        }
        let max_col = self.coefs.keys().next_back().copied().unwrap_or(0);
        if !self.coefs.is_empty() && max_col >= x.n_cols() {
            return Err(Error::Dimension(format!(
                "fit references column {max_col}, matrix has {}",
                x.n_cols()
            )));
        }
        let mut theta = vec![self.intercept; x.n_rows()];
        if let Some(o) = offset {
            for (t, &oi) in theta.iter_mut().zip(o) {
                *t += oi;
            }
        }
        for (&j, &b) in &self.coefs {
            for (t, &v) in theta.iter_mut().zip(x.col(j)) {
                *t += b * v;
            }
        }
        Ok(theta)
    }
}

/// Fitted means and linear predictors.
pub fn predict(
    fit: &GlmFit,
    family: Family,
    x: &ColMatrix,
    offset: Option<&[f64]>,
) -> Result<(Vec<f64>, Vec<f64>)> {
    let theta = fit.predict_theta(x, offset)?;
    let means = theta.iter().map(|&t| family.mean(t)).collect();
    Ok((means, theta))
}

fn check_inputs(x: &ColMatrix, y: &[f64], offset: Option<&[f64]>) -> Result<()> {
    if x.n_rows() != y.len() {
        return Err(Error::Dimension(format!(
            "design has {} rows, response has {}",
            x.n_rows(),
            y.len()
        )));
    }
    if let Some(o) = offset {
        if o.len() != y.len() {
            return Err(Error::Dimension("offset length != n".into()));
        }
        if o.iter().any(|v| !v.is_finite()) {
            return Err(Error::InvalidInput("offset contains non-finite values".into()));
        }
    }
    if !x.is_finite() {
        return Err(Error::InvalidInput("design contains non-finite values".into()));
    }
    if y.iter().any(|v| !v.is_finite()) {
        return Err(Error::InvalidInput("response contains non-finite values".into()));
    }
    Ok(())
}

#[inline]
fn soft_threshold(z: f64, t: f64) -> f64 {
    if z > t {
        z - t
    } else if z < -t {
        z + t
    } else {
        0.0
    }
}

/// Intercept of the null model: solves `sum_i (y_i - b'(c + o_i)) = 0`.
fn null_intercept(family: Family, y: &[f64], offset: Option<&[f64]>) -> f64 {
    let n = y.len() as f64;
    let ybar = y.iter().sum::<f64>() / n;
    match (family.kind, offset) {
        (FamilyKind::Gaussian, None) => ybar,
        (FamilyKind::Gaussian, Some(o)) => ybar - o.iter().sum::<f64>() / n,
        (FamilyKind::Binomial, None) => {
            let p = ybar.clamp(1e-10, 1.0 - 1e-10);
            (p / (1.0 - p)).ln()
        }
        (FamilyKind::Poisson, None) => ybar.max(1e-10).ln(),
        (_, Some(o)) => {
            // 1-D Newton on the intercept
            let mut c = 0.0;
            for _ in 0..100 {
                let mut s = 0.0;
                let mut h = 0.0;
                for (&yi, &oi) in y.iter().zip(o) {
                    let (_, mu, w) = family.cumulant_mean_variance(c + oi);
                    s += mu - yi;
                    h += w;
                }
                s /= n;
                h = (h / n).max(1e-10);
                let step = s / h;
                c -= step;
                if step.abs() < 1e-12 {
                    break;
                }
            }
            c
        }
    }
}

/// Largest penalty at which every penalized coefficient is zero, computed
/// from the gradient of the null model.
pub fn lambda_max(
    family: Family,
    x: &ColMatrix,
    y: &[f64],
    offset: Option<&[f64]>,
    alpha: f64,
    penalty_factors: Option<&[f64]>,
) -> f64 {
    let n = y.len() as f64;
    let c = null_intercept(family, y, offset);
    let resid: Vec<f64> = y
        .iter()
        .enumerate()
        .map(|(i, &yi)| {
            let o = offset.map_or(0.0, |o| o[i]);
            yi - family.mean(c + o)
        })
        .collect();
    let std = Standardization::compute(x);
    let alpha_eff = alpha.max(1e-3);
    let mut best: f64 = 0.0;
    for j in 0..x.n_cols() {
        let pf = penalty_factors.map_or(1.0, |p| p[j]);
        if pf <= 0.0 {
            continue;
        }
        let col = x.col(j);
        let g: f64 = col
            .iter()
            .zip(&resid)
            .map(|(&v, &r)| (v - std.means[j]) / std.sds[j] * r)
            .sum::<f64>()
            / n;
        best = best.max(g.abs() / (alpha_eff * pf));
    }
    best.max(1e-10)
}

/// Log-spaced descending grid from `lambda_max` down to a fraction that
/// depends on the aspect ratio of the problem.
pub fn lambda_grid(
    family: Family,
    x: &ColMatrix,
    y: &[f64],
    offset: Option<&[f64]>,
    alpha: f64,
    penalty_factors: Option<&[f64]>,
    n_lambda: usize,
) -> Vec<f64> {
    let lmax = lambda_max(family, x, y, offset, alpha, penalty_factors);
    let ratio = if y.len() > x.n_cols() { 1e-4 } else { 1e-2 };
    log_grid(lmax, lmax * ratio, n_lambda)
}

fn log_grid(hi: f64, lo: f64, n: usize) -> Vec<f64> {
    if n == 1 {
        return vec![hi];
    }
    let (lh, ll) = (hi.ln(), lo.ln());
    (0..n)
        .map(|i| (lh + (ll - lh) * i as f64 / (n - 1) as f64).exp())
        .collect()
}

struct WorkingSet<'a> {
    xs: ColMatrix,
    y: &'a [f64],
    offset: Vec<f64>,
    std: Standardization,
    penalty_factors: Vec<f64>,
}

impl<'a> WorkingSet<'a> {
    fn new(
        x: &ColMatrix,
        y: &'a [f64],
        offset: Option<&[f64]>,
        penalty_factors: Option<&[f64]>,
        standardize: bool,
    ) -> Self {
        let std = if standardize {
            Standardization::compute(x)
        } else {
            Standardization { means: vec![0.0; x.n_cols()], sds: vec![1.0; x.n_cols()] }
        };
        let xs = if standardize { std.apply(x) } else { x.clone() };
        let offset = offset.map_or_else(|| vec![0.0; y.len()], |o| o.to_vec());
        let pf = penalty_factors.map_or_else(|| vec![1.0; x.n_cols()], |p| p.to_vec());
        WorkingSet { xs, y, offset, std, penalty_factors: pf }
    }
}

struct PathState {
    beta: Vec<f64>,
    intercept: f64,
    sweeps: usize,
}

/// One coordinate-descent solve of the weighted quadratic problem.
///
/// `r` holds the working residual `z - theta` and is kept consistent with
/// `beta`/`intercept` across updates. Returns the number of sweeps used.
#[allow(clippy::too_many_arguments)]
fn cd_solve(
    xs: &ColMatrix,
    w: &[f64],
    r: &mut [f64],
    beta: &mut [f64],
    intercept: &mut f64,
    lambda: f64,
    alpha: f64,
    pf: &[f64],
    opts: &FitOptions,
    budget: usize,
) -> (usize, bool) {
    let n = r.len() as f64;
    let p = xs.n_cols();
    let w_sum: f64 = w.iter().sum();
    // per-coordinate curvature (1/n) sum w x^2
    let v: Vec<f64> = (0..p)
        .map(|j| xs.col(j).iter().zip(w).map(|(&x, &wi)| wi * x * x).sum::<f64>() / n)
        .collect();

    let update_coord = |j: usize, beta: &mut Vec<f64>, r: &mut [f64]| -> f64 {
        if v[j] <= 0.0 {
            return 0.0;
        }
        let col = xs.col(j);
        let grad: f64 = col.iter().zip(r.iter()).zip(w).map(|((&x, &ri), &wi)| wi * x * ri).sum::<f64>() / n;
        let rho = grad + v[j] * beta[j];
        let new = soft_threshold(rho, lambda * alpha * pf[j]) / (v[j] + lambda * (1.0 - alpha) * pf[j]);
        let delta = new - beta[j];
        if delta != 0.0 {
            beta[j] = new;
            for (ri, &x) in r.iter_mut().zip(col) {
                *ri -= delta * x;
            }
        }
        delta.abs()
    };

    let update_intercept = |intercept: &mut f64, r: &mut [f64]| -> f64 {
        let num: f64 = r.iter().zip(w).map(|(&ri, &wi)| wi * ri).sum();
        let delta = num / w_sum;
        if delta != 0.0 {
            *intercept += delta;
            for ri in r.iter_mut() {
                *ri -= delta;
            }
        }
        delta.abs()
    };

    let mut beta_v = std::mem::take(&mut beta.to_vec());
    let mut sweeps = 0usize;
    let mut converged = false;
    'outer: while sweeps < budget {
        // full sweep
        sweeps += 1;
        let mut max_delta = update_intercept(intercept, r);
        for j in 0..p {
            max_delta = max_delta.max(update_coord(j, &mut beta_v, r));
        }
        if max_delta < opts.tol {
            converged = true;
            break;
        }
        // iterate on the active set until stable, then re-check with a
        // full sweep
        let active: Vec<usize> = (0..p).filter(|&j| beta_v[j] != 0.0).collect();
        loop {
            if sweeps >= budget {
                break 'outer;
            }
            sweeps += 1;
            let mut max_delta = update_intercept(intercept, r);
            for &j in &active {
                max_delta = max_delta.max(update_coord(j, &mut beta_v, r));
            }
            if max_delta < opts.tol {
                break;
            }
        }
    }
    beta.copy_from_slice(&beta_v);
    (sweeps, converged)
}

fn penalized_objective(
    family: Family,
    ws: &WorkingSet,
    beta: &[f64],
    intercept: f64,
    lambda: f64,
    alpha: f64,
) -> f64 {
    let n = ws.y.len() as f64;
    let mut nll = 0.0;
    for i in 0..ws.y.len() {
        let mut t = intercept + ws.offset[i];
        for j in 0..beta.len() {
            if beta[j] != 0.0 {
                t += beta[j] * ws.xs.col(j)[i];
            }
        }
        nll += family.cumulant(t) - family.clamp_theta(t) * ws.y[i];
    }
    nll /= n;
    let pen: f64 = beta
        .iter()
        .enumerate()
        .map(|(j, &b)| ws.penalty_factors[j] * (alpha * b.abs() + (1.0 - alpha) * 0.5 * b * b))
        .sum();
    nll + lambda * pen
}

/// Fits the penalized GLM at one lambda, warm-started from `state`.
fn fit_one_lambda(
    family: Family,
    ws: &WorkingSet,
    state: &mut PathState,
    lambda: f64,
    opts: &FitOptions,
    theta: &mut Vec<f64>,
) -> GlmFit {
    let n = ws.y.len();
    let p = ws.xs.n_cols();
    let mut total_sweeps = 0usize;
    let mut converged = false;

    if family.kind == FamilyKind::Gaussian {
        // one quadratic problem: weights are identically one
        let w = vec![1.0; n];
        let mut r: Vec<f64> = (0..n)
            .map(|i| {
                let mut t = state.intercept + ws.offset[i];
                for j in 0..p {
                    if state.beta[j] != 0.0 {
                        t += state.beta[j] * ws.xs.col(j)[i];
                    }
                }
                ws.y[i] - t
            })
            .collect();
        let (sweeps, conv) = cd_solve(
            &ws.xs,
            &w,
            &mut r,
            &mut state.beta,
            &mut state.intercept,
            lambda,
            opts.alpha,
            &ws.penalty_factors,
            opts,
            opts.max_sweeps,
        );
        total_sweeps += sweeps;
        converged = conv;
    } else {
        let mut prev_obj =
            penalized_objective(family, ws, &state.beta, state.intercept, lambda, opts.alpha);
        for _irls in 0..opts.max_irls {
            // working response around the current linear predictor
            theta.clear();
            for i in 0..n {
                let mut t = state.intercept + ws.offset[i];
                for j in 0..p {
                    if state.beta[j] != 0.0 {
                        t += state.beta[j] * ws.xs.col(j)[i];
                    }
                }
                theta.push(t);
            }
            let mut w = Vec::with_capacity(n);
            let mut r = Vec::with_capacity(n);
            for i in 0..n {
                let (_, mu, var) = family.cumulant_mean_variance(theta[i]);
                let wi = var.max(opts.weight_floor);
                w.push(wi);
                r.push((ws.y[i] - mu) / wi);
            }
            let old_beta = state.beta.clone();
            let old_intercept = state.intercept;
            let remaining = opts.max_sweeps.saturating_sub(total_sweeps);
            if remaining == 0 {
                converged = false;
                break;
            }
            let (sweeps, _) = cd_solve(
                &ws.xs,
                &w,
                &mut r,
                &mut state.beta,
                &mut state.intercept,
                lambda,
                opts.alpha,
                &ws.penalty_factors,
                opts,
                remaining,
            );
            total_sweeps += sweeps;

            // step-halving keeps the penalized objective monotone
            let mut obj =
                penalized_objective(family, ws, &state.beta, state.intercept, lambda, opts.alpha);
            let mut halvings = 0;
            while obj > prev_obj + 1e-12 * (1.0 + prev_obj.abs()) && halvings < 20 {
                for j in 0..p {
                    state.beta[j] = 0.5 * (state.beta[j] + old_beta[j]);
                }
                state.intercept = 0.5 * (state.intercept + old_intercept);
                obj = penalized_objective(family, ws, &state.beta, state.intercept, lambda, opts.alpha);
                halvings += 1;
            }

            let max_change = state
                .beta
                .iter()
                .zip(&old_beta)
                .map(|(a, b)| (a - b).abs())
                .fold((state.intercept - old_intercept).abs(), f64::max);
            let obj_change = prev_obj - obj;
            prev_obj = obj;
            if max_change < opts.tol || obj_change.abs() < 1e-12 * (1.0 + obj.abs()) {
                converged = true;
                break;
            }
        }
    }
    state.sweeps = total_sweeps;

    // report on the original scale
    let mut coefs = BTreeMap::new();
    let mut intercept = state.intercept;
    for j in 0..p {
        if state.beta[j] != 0.0 {
            let raw = state.beta[j] / ws.std.sds[j];
            coefs.insert(j, raw);
            intercept -= raw * ws.std.means[j];
        }
    }
    GlmFit {
        intercept,
        coefs,
        lambda,
        alpha: opts.alpha,
        offset_used: ws.offset.iter().any(|&o| o != 0.0),
        n_iter: total_sweeps,
        converged,
    }
}

/// Fits the full regularization path, warm-starting each lambda from the
/// previous solution. `lambda_grid` must be strictly decreasing.
pub fn fit_path(
    family: Family,
    x: &ColMatrix,
    y: &[f64],
    offset: Option<&[f64]>,
    lambda_grid: &[f64],
    penalty_factors: Option<&[f64]>,
    opts: &FitOptions,
) -> Result<Vec<GlmFit>> {
    check_inputs(x, y, offset)?;
    if let Some(pf) = penalty_factors {
        if pf.len() != x.n_cols() {
            return Err(Error::Dimension("penalty factor length != p".into()));
        }
    }
    if lambda_grid.windows(2).any(|w| w[1] >= w[0]) {
        return Err(Error::InvalidInput("lambda grid must be strictly decreasing".into()));
    }
    let ws = WorkingSet::new(x, y, offset, penalty_factors, opts.standardize);
    let mut state = PathState {
        beta: vec![0.0; x.n_cols()],
        intercept: null_intercept(family, y, offset),
        sweeps: 0,
    };
    // deviance of the intercept(+offset)-only model, for the saturation stop
    let null_dev = {
        let mu: Vec<f64> = (0..y.len())
            .map(|i| family.mean(state.intercept + offset.map_or(0.0, |o| o[i])))
            .map(|m| clamp_mean(family, m))
            .collect();
        family.deviance(&mu, y)?.max(1e-10)
    };
    let mut theta = Vec::with_capacity(y.len());
    let mut out = Vec::with_capacity(lambda_grid.len());
    let mut prev_ratio = 0.0f64;
    for (k, &lambda) in lambda_grid.iter().enumerate() {
        let fit = fit_one_lambda(family, &ws, &mut state, lambda, opts, &mut theta);
        out.push(fit);
        if opts.early_stop_path && lambda_grid.len() > 1 {
            let mut dev = 0.0;
            for i in 0..y.len() {
                let mut t = state.intercept + ws.offset[i];
                for (j, &b) in state.beta.iter().enumerate() {
                    if b != 0.0 {
                        t += b * ws.xs.col(j)[i];
                    }
                }
                dev += family.unit_deviance(clamp_mean(family, family.mean(t)), y[i])?;
            }
            let ratio = 1.0 - dev / null_dev;
            if ratio > 0.999 || (k >= 10 && ratio - prev_ratio < 1e-5) {
                break;
            }
            prev_ratio = ratio;
        }
    }
    Ok(out)
}

#[inline]
fn clamp_mean(family: Family, m: f64) -> f64 {
    match family.kind {
        FamilyKind::Binomial => m.clamp(1e-10, 1.0 - 1e-10),
        FamilyKind::Poisson => m.max(1e-10),
        FamilyKind::Gaussian => m,
    }
}

/// Maximum KKT violation of a fit, evaluated on the standardized scale the
/// optimizer worked on. Converged fits should stay below ~1e-6.
pub fn kkt_residual(
    family: Family,
    x: &ColMatrix,
    y: &[f64],
    offset: Option<&[f64]>,
    fit: &GlmFit,
    penalty_factors: Option<&[f64]>,
    standardized: bool,
) -> Result<f64> {
    check_inputs(x, y, offset)?;
    let n = y.len() as f64;
    let std = if standardized {
        Standardization::compute(x)
    } else {
        Standardization { means: vec![0.0; x.n_cols()], sds: vec![1.0; x.n_cols()] }
    };
    let theta = fit.predict_theta(x, offset)?;
    let resid: Vec<f64> = theta.iter().zip(y).map(|(&t, &yi)| family.mean(t) - yi).collect();
    let mut worst: f64 = 0.0;
    for j in 0..x.n_cols() {
        let pf = penalty_factors.map_or(1.0, |p| p[j]);
        let col = x.col(j);
        let g: f64 = col
            .iter()
            .zip(&resid)
            .map(|(&v, &r)| (v - std.means[j]) / std.sds[j] * r)
            .sum::<f64>()
            / n;
        let b_std = fit.coef(j) * std.sds[j];
        let viol = if b_std != 0.0 {
            (g + fit.lambda * (1.0 - fit.alpha) * pf * b_std
                + fit.lambda * fit.alpha * pf * b_std.signum())
            .abs()
        } else {
            (g.abs() - fit.lambda * fit.alpha * pf).max(0.0)
        };
        worst = worst.max(viol);
    }
    // intercept stationarity
    let gi: f64 = resid.iter().sum::<f64>() / n;
    Ok(worst.max(gi.abs()))
}

/// Cross-validation summary for a lambda path.
#[derive(Debug, Clone)]
pub struct CvResult {
    pub lambda_grid: Vec<f64>,
    /// Mean over usable folds of the per-observation held-out deviance.
    pub cv_deviance: Vec<f64>,
    pub lambda_min: f64,
    pub lambda_min_index: usize,
    pub fold_assignment: Vec<usize>,
    pub n_skipped_folds: usize,
}

/// Deterministic fold assignment: a seeded shuffle dealt round-robin.
pub fn cv_fold_assignment(n: usize, n_folds: usize, seed: u64) -> Vec<usize> {
    let mut order: Vec<usize> = (0..n).collect();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    order.shuffle(&mut rng);
    let mut fold = vec![0usize; n];
    for (k, &i) in order.iter().enumerate() {
        fold[i] = k % n_folds;
    }
    fold
}

fn fold_is_degenerate(family: Family, y_train: &[f64]) -> bool {
    if family.kind != FamilyKind::Binomial {
        return false;
    }
    let ones = y_train.iter().filter(|&&v| v == 1.0).count();
    ones == 0 || ones == y_train.len()
}

/// K-fold cross-validation over a shared lambda grid with explicit fold
/// membership. Fits the full-data path first (honoring the saturation
/// stop), then evaluates every fold on the truncated grid; returns the CV
/// summary and the full-data path.
#[allow(clippy::too_many_arguments)]
pub fn cv_fit_with_folds_path(
    family: Family,
    x: &ColMatrix,
    y: &[f64],
    offset: Option<&[f64]>,
    folds: &[usize],
    opts: &FitOptions,
    grid: Option<&[f64]>,
) -> Result<(CvResult, Vec<GlmFit>)> {
    check_inputs(x, y, offset)?;
    if folds.len() != y.len() {
        return Err(Error::Dimension("fold assignment length != n".into()));
    }
    let n_folds = folds.iter().copied().max().map_or(0, |m| m + 1);
    if n_folds < 2 {
        return Err(Error::InvalidInput("need at least 2 folds".into()));
    }
    let grid_owned;
    let grid = match grid {
        Some(g) => g,
        None => {
            grid_owned = lambda_grid(family, x, y, offset, opts.alpha, None, opts.n_lambda);
            &grid_owned
        }
    };
    let full_path = fit_path(family, x, y, offset, grid, None, opts)?;
    let grid = &grid[..full_path.len()];
    // fold fits must cover the whole shared grid
    let fold_opts = FitOptions { early_stop_path: false, ..*opts };

    let mut dev_sums = vec![0.0; grid.len()];
    let mut used_folds = 0usize;
    let mut skipped = 0usize;
    for f in 0..n_folds {
        let train_rows: Vec<usize> = (0..y.len()).filter(|&i| folds[i] != f).collect();
        let test_rows: Vec<usize> = (0..y.len()).filter(|&i| folds[i] == f).collect();
        if train_rows.is_empty() || test_rows.is_empty() {
            skipped += 1;
            continue;
        }
        let y_tr: Vec<f64> = train_rows.iter().map(|&i| y[i]).collect();
        if fold_is_degenerate(family, &y_tr) {
            skipped += 1;
            continue;
        }
        let x_tr = x.subset_rows(&train_rows);
        let x_te = x.subset_rows(&test_rows);
        let y_te: Vec<f64> = test_rows.iter().map(|&i| y[i]).collect();
        let o_tr: Option<Vec<f64>> = offset.map(|o| train_rows.iter().map(|&i| o[i]).collect());
        let o_te: Option<Vec<f64>> = offset.map(|o| test_rows.iter().map(|&i| o[i]).collect());
        let path = fit_path(family, &x_tr, &y_tr, o_tr.as_deref(), grid, None, &fold_opts)?;
        for (k, fit) in path.iter().enumerate() {
            let (mu, _) = predict(fit, family, &x_te, o_te.as_deref())?;
            // clamp predicted means away from the boundary so held-out
            // deviance stays finite under separation
            let mu: Vec<f64> = mu.iter().map(|&m| clamp_mean(family, m)).collect();
            dev_sums[k] += family.deviance(&mu, &y_te)? / y_te.len() as f64;
        }
        used_folds += 1;
    }
    if used_folds == 0 {
        return Err(Error::Numerical("all cross-validation folds are degenerate".into()));
    }
    let cv_deviance: Vec<f64> = dev_sums.iter().map(|&s| s / used_folds as f64).collect();
    let lambda_min_index = cv_deviance
        .iter()
        .enumerate()
        .min_by(|a, b| a.1.total_cmp(b.1))
        .map(|(i, _)| i)
        .unwrap();
    let cv = CvResult {
        lambda_grid: grid.to_vec(),
        cv_deviance,
        lambda_min: grid[lambda_min_index],
        lambda_min_index,
        fold_assignment: folds.to_vec(),
        n_skipped_folds: skipped,
    };
    Ok((cv, full_path))
}

/// K-fold cross-validation over a shared lambda grid with explicit fold
/// membership.
#[allow(clippy::too_many_arguments)]
pub fn cv_fit_with_folds(
    family: Family,
    x: &ColMatrix,
    y: &[f64],
    offset: Option<&[f64]>,
    folds: &[usize],
    opts: &FitOptions,
    grid: Option<&[f64]>,
) -> Result<CvResult> {
    cv_fit_with_folds_path(family, x, y, offset, folds, opts, grid).map(|(cv, _)| cv)
}

/// K-fold cross-validation with a seeded fold assignment.
#[allow(clippy::too_many_arguments)]
pub fn cv_fit(
    family: Family,
    x: &ColMatrix,
    y: &[f64],
    offset: Option<&[f64]>,
    n_folds: usize,
    seed: u64,
    opts: &FitOptions,
) -> Result<CvResult> {
    if n_folds < 2 {
        return Err(Error::InvalidInput("need at least 2 folds".into()));
    }
    if y.len() < n_folds {
        return Err(Error::InvalidInput("n must be at least n_folds".into()));
    }
    let folds = cv_fold_assignment(y.len(), n_folds, seed);
    cv_fit_with_folds(family, x, y, offset, &folds, opts, None)
}

/// Cross-validates and returns the full-data fit at `lambda_min` together
/// with the CV summary.
#[allow(clippy::too_many_arguments)]
pub fn fit_cv_select(
    family: Family,
    x: &ColMatrix,
    y: &[f64],
    offset: Option<&[f64]>,
    n_folds: usize,
    seed: u64,
    opts: &FitOptions,
) -> Result<(GlmFit, CvResult)> {
    if n_folds < 2 {
        return Err(Error::InvalidInput("need at least 2 folds".into()));
    }
    if y.len() < n_folds {
        return Err(Error::InvalidInput("n must be at least n_folds".into()));
    }
    let folds = cv_fold_assignment(y.len(), n_folds, seed);
    let (cv, path) = cv_fit_with_folds_path(family, x, y, offset, &folds, opts, None)?;
    let fit = path.into_iter().nth(cv.lambda_min_index).unwrap();
    Ok((fit, cv))
}
