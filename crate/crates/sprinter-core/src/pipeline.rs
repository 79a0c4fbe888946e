//! End-to-end orchestration: fit main effects, screen every candidate
//! interaction against the main-effects fit, then refit the winners.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::data::{ColMatrix, Dataset, Standardization};
use crate::error::{Error, Result};
use crate::family::Family;
use crate::model::{expand_to_raw, InteractionModel};
use crate::pairs::{product_column, PairIndex};
use crate::screen::{default_m, screen_with_squares, ScreenResult, SelectionRule};
use crate::simulate::derive_rng;
use crate::solver::{
    cv_fold_assignment, fit_cv_select, fit_path, lambda_grid, predict, CvResult, FitOptions,
    GlmFit,
};
use rand::RngCore;

/// How the screening budget is chosen.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum Selection {
    /// Top-m with m = floor(n / ln n).
    AutoTopM,
    TopM(usize),
    Threshold(f64),
}

/// How the two penalty weights are tuned.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Tuning {
    /// Fix the main-effects penalty by CV first, then CV the refit penalty.
    Sequential,
    /// CV over a 2-D grid of (main-effects penalty, refit penalty); the
    /// main-effects fit is recomputed per candidate inside each fold.
    Joint,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SprinterConfig {
    pub selection: Selection,
    pub alpha: f64,
    pub cv_folds: usize,
    pub tuning: Tuning,
    pub seed: u64,
    /// Worker threads for the screen; `None` uses the global pool.
    pub workers: Option<usize>,
    /// Number of main-effects penalty candidates in joint mode.
    pub joint_lambda1_candidates: usize,
    /// Include square candidates `x_a^2` in the screen.
    pub include_squares: bool,
}

impl Default for SprinterConfig {
    fn default() -> Self {
        SprinterConfig {
            selection: Selection::AutoTopM,
            alpha: 1.0,
            cv_folds: 5,
            tuning: Tuning::Sequential,
            seed: 0,
            workers: None,
            joint_lambda1_candidates: 10,
            include_squares: true,
        }
    }
}

/// The fitted pipeline: step artifacts plus the raw-scale model.
#[derive(Debug, Clone)]
pub struct SprinterModel {
    pub model: InteractionModel,
    pub step1: GlmFit,
    pub cv1: Option<CvResult>,
    pub screen: ScreenResult,
    pub step4: GlmFit,
    /// Interaction coefficients of the refit, on the screened-product scale.
    pub selected: Vec<(PairIndex, f64)>,
    /// True when the screen selected nothing and the refit degenerated to
    /// main effects only.
    pub degenerate: bool,
    pub config: SprinterConfig,
}

impl SprinterModel {
    pub fn predict_mean(&self, x_new: &ColMatrix) -> Result<Vec<f64>> {
        self.model.predict_mean(x_new)
    }
}

fn resolve_rule(selection: Selection, n: usize) -> SelectionRule {
    match selection {
        Selection::AutoTopM => SelectionRule::TopM(default_m(n)),
        Selection::TopM(m) => SelectionRule::TopM(m),
        Selection::Threshold(eta) => SelectionRule::Threshold(eta),
    }
}

/// Builds the refit design `[X | Z_selected]` over standardized columns.
fn refit_design(xs: &ColMatrix, selected: &[(PairIndex, f64)]) -> ColMatrix {
    let mut design = xs.clone();
    let mut z = Vec::new();
    for &(pr, _) in selected {
        product_column(xs.col(pr.a), xs.col(pr.b), &mut z);
        design.push_col(&z).expect("consistent rows");
    }
    design
}

fn seed_for(seed: u64, label: &str) -> u64 {
    derive_rng(seed, label, 0).next_u64()
}

/// Fits the full pipeline on raw data.
pub fn sprinter_fit(
    family: Family,
    data: &Dataset,
    config: &SprinterConfig,
) -> Result<SprinterModel> {
    let n = data.n();
    let p = data.p();
    if n < 10 {
        return Err(Error::InvalidInput("need n >= 10".into()));
    }
    if p < 2 {
        return Err(Error::InvalidInput("need p >= 2".into()));
    }
    family.validate_response(&data.y)?;
    let (xs, std) = data.standardized();
    let opts = FitOptions { alpha: config.alpha, ..FitOptions::default() };
    let rule = resolve_rule(config.selection, n);

    match config.tuning {
        Tuning::Sequential => {
            let (step1, cv1) = fit_cv_select(
                family,
                &xs,
                &data.y,
                None,
                config.cv_folds,
                seed_for(config.seed, "cv-step1"),
                &opts,
            )?;
            let offset = step1.predict_theta(&xs, None)?;
            let scr = screen_with_squares(
                family,
                &xs,
                &data.y,
                &offset,
                rule,
                config.workers,
                config.include_squares,
            )?;
            finish_fit(
                family, data, &xs, &std, config, &opts, step1, Some(cv1), scr, None,
            )
        }
        Tuning::Joint => joint_fit(family, data, &xs, &std, config, &opts, rule),
    }
}

/// Completes Step 4 given the Step-1 fit and the screening result. When
/// `fixed_lambda4` is given the refit happens at that penalty (joint mode);
/// otherwise it is cross-validated.
#[allow(clippy::too_many_arguments)]
fn finish_fit(
    family: Family,
    data: &Dataset,
    xs: &ColMatrix,
    std: &Standardization,
    config: &SprinterConfig,
    opts: &FitOptions,
    step1: GlmFit,
    cv1: Option<CvResult>,
    scr: ScreenResult,
    fixed_lambda4: Option<f64>,
) -> Result<SprinterModel> {
    let p = data.p();
    let offset = step1.predict_theta(xs, None)?;
    let degenerate = scr.selected.is_empty();
    let design = refit_design(xs, &scr.selected);

    let step4 = match fixed_lambda4 {
        Some(l4) => {
            let grid = lambda_grid(family, &design, &data.y, Some(&offset), opts.alpha, None, opts.n_lambda);
            let mut grid: Vec<f64> = grid.into_iter().filter(|&l| l > l4).collect();
            grid.push(l4);
            let full = FitOptions { early_stop_path: false, ..*opts };
            let path = fit_path(family, &design, &data.y, Some(&offset), &grid, None, &full)?;
            path.into_iter().last().unwrap()
        }
        None => {
            let (fit, _cv) = fit_cv_select(
                family,
                &design,
                &data.y,
                Some(&offset),
                config.cv_folds,
                seed_for(config.seed, "cv-step4"),
                opts,
            )?;
            fit
        }
    };

    // combine: main effects beta1 + theta4, interactions delta4
    let mut main_std: BTreeMap<usize, f64> = BTreeMap::new();
    for (&j, &b) in &step1.coefs {
        *main_std.entry(j).or_insert(0.0) += b;
    }
    let mut selected: Vec<(PairIndex, f64)> = Vec::new();
    for (&j, &b) in &step4.coefs {
        if j < p {
            *main_std.entry(j).or_insert(0.0) += b;
        } else {
            selected.push((scr.selected[j - p].0, b));
        }
    }
    main_std.retain(|_, v| *v != 0.0);
    let intercept_std = step1.intercept + step4.intercept;
    let model = expand_to_raw(family, intercept_std, &main_std, &selected, std, None);
    Ok(SprinterModel {
        model,
        step1,
        cv1,
        screen: scr,
        step4,
        selected,
        degenerate,
        config: *config,
    })
}

/// Joint 2-D tuning: for each main-effects penalty candidate, the whole
/// downstream pipeline (screen + refit path) is cross-validated.
fn joint_fit(
    family: Family,
    data: &Dataset,
    xs: &ColMatrix,
    std: &Standardization,
    config: &SprinterConfig,
    opts: &FitOptions,
    rule: SelectionRule,
) -> Result<SprinterModel> {
    let n = data.n();
    let grid1 = lambda_grid(family, xs, &data.y, None, opts.alpha, None, opts.n_lambda);
    let full = FitOptions { early_stop_path: false, ..*opts };
    let path1 = fit_path(family, xs, &data.y, None, &grid1, None, &full)?;

    let l = config.joint_lambda1_candidates.clamp(2, grid1.len());
    let cand_idx: Vec<usize> = (0..l)
        .map(|i| i * (grid1.len() - 1) / (l - 1))
        .collect();

    let folds = cv_fold_assignment(n, config.cv_folds, seed_for(config.seed, "cv-joint"));
    let n_folds = config.cv_folds;

    // per-candidate full-data screen and lambda4 grid (shared across folds)
    struct CandidateState {
        grid4: Vec<f64>,
        dev: Vec<f64>,
    }
    let mut states: Vec<CandidateState> = Vec::with_capacity(cand_idx.len());
    for &c in &cand_idx {
        let offset = path1[c].predict_theta(xs, None)?;
        let scr = screen_with_squares(
            family,
            xs,
            &data.y,
            &offset,
            rule,
            config.workers,
            config.include_squares,
        )?;
        let design = refit_design(xs, &scr.selected);
        let grid4 =
            lambda_grid(family, &design, &data.y, Some(&offset), opts.alpha, None, opts.n_lambda);
        states.push(CandidateState { grid4, dev: vec![0.0; opts.n_lambda] });
    }

    let mut used_folds = 0usize;
    for f in 0..n_folds {
        let train_rows: Vec<usize> = (0..n).filter(|&i| folds[i] != f).collect();
        let test_rows: Vec<usize> = (0..n).filter(|&i| folds[i] == f).collect();
        let y_tr: Vec<f64> = train_rows.iter().map(|&i| data.y[i]).collect();
        let y_te: Vec<f64> = test_rows.iter().map(|&i| data.y[i]).collect();
        if family.kind == crate::family::FamilyKind::Binomial {
            let ones = y_tr.iter().filter(|&&v| v == 1.0).count();
            if ones == 0 || ones == y_tr.len() {
                continue;
            }
        }
        let x_tr = xs.subset_rows(&train_rows);
        let x_te = xs.subset_rows(&test_rows);
        let fold_opts = FitOptions { early_stop_path: false, ..*opts };
        let path1_f = fit_path(family, &x_tr, &y_tr, None, &grid1, None, &fold_opts)?;
        for (ci, &c) in cand_idx.iter().enumerate() {
            let offset_tr = path1_f[c].predict_theta(&x_tr, None)?;
            let offset_te = path1_f[c].predict_theta(&x_te, None)?;
            let scr = screen_with_squares(
                family,
                &x_tr,
                &y_tr,
                &offset_tr,
                rule,
                config.workers,
                config.include_squares,
            )?;
            let design_tr = refit_design(&x_tr, &scr.selected);
            let design_te = refit_design(&x_te, &scr.selected);
            let path4 = fit_path(
                family,
                &design_tr,
                &y_tr,
                Some(&offset_tr),
                &states[ci].grid4,
                None,
                &fold_opts,
            )?;
            for (k, fit) in path4.iter().enumerate() {
                let (mu, _) = predict(fit, family, &design_te, Some(&offset_te))?;
                let mu: Vec<f64> = mu
                    .iter()
                    .map(|&m| match family.kind {
                        crate::family::FamilyKind::Binomial => m.clamp(1e-10, 1.0 - 1e-10),
                        crate::family::FamilyKind::Poisson => m.max(1e-10),
                        crate::family::FamilyKind::Gaussian => m,
                    })
                    .collect();
                states[ci].dev[k] += family.deviance(&mu, &y_te)? / y_te.len() as f64;
            }
        }
        used_folds += 1;
    }
    if used_folds == 0 {
        return Err(Error::Numerical("all cross-validation folds are degenerate".into()));
    }

    // winner over the 2-D grid
    let mut best = (0usize, 0usize, f64::INFINITY);
    for (ci, st) in states.iter().enumerate() {
        for (k, &d) in st.dev.iter().enumerate() {
            if d < best.2 {
                best = (ci, k, d);
            }
        }
    }
    let (ci, k, _) = best;
    let c = cand_idx[ci];
    let step1 = path1[c].clone();
    let offset = step1.predict_theta(xs, None)?;
    let scr = screen_with_squares(
        family,
        xs,
        &data.y,
        &offset,
        rule,
        config.workers,
        config.include_squares,
    )?;
    let lambda4 = states[ci].grid4[k];
    finish_fit(family, data, xs, std, config, opts, step1, None, scr, Some(lambda4))
}

/// Fitted means on new raw data.
pub fn sprinter_predict(model: &SprinterModel, x_new: &ColMatrix) -> Result<Vec<f64>> {
    model.predict_mean(x_new)
}
