//! Comparator methods: the main-effects lasso (MEL), the all-pairs lasso
//! (APL) over the full widened design, and marginal interaction screening
//! (SIS) without a main-effects offset.

use std::collections::BTreeMap;

use crate::data::Dataset;
use crate::error::{Error, Result};
use crate::family::{Family, FamilyKind};
use crate::model::{expand_to_raw, InteractionModel};
use crate::pairs::{all_pairs, product_column, PairIndex};
use crate::screen::{fit_1d_offset_mle, screen_select, SelectionRule};
use crate::simulate::derive_rng;
use crate::solver::{fit_cv_select, CvResult, FitOptions, GlmFit};
use rand::RngCore;

/// Default cap on p for the all-pairs lasso; the widened design holds
/// n * p(p+1)/2 doubles.
pub const APL_DEFAULT_P_CAP: usize = 600;

fn seed_for(seed: u64, label: &str) -> u64 {
    derive_rng(seed, label, 0).next_u64()
}

/// Main-effects lasso: a cross-validated penalized fit on the main effects
/// alone.
pub fn fit_mel(
    family: Family,
    data: &Dataset,
    cv_folds: usize,
    seed: u64,
    alpha: f64,
) -> Result<(GlmFit, CvResult, InteractionModel)> {
    family.validate_response(&data.y)?;
    let (xs, std) = data.standardized();
    let opts = FitOptions { alpha, ..FitOptions::default() };
    let (fit, cv) =
        fit_cv_select(family, &xs, &data.y, None, cv_folds, seed_for(seed, "cv-step1"), &opts)?;
    let model = expand_to_raw(family, fit.intercept, &fit.coefs, &[], &std, None);
    Ok((fit, cv, model))
}

/// All-pairs lasso over `[X | Z]` with every candidate product materialized.
#[derive(Debug)]
pub struct AplFit {
    pub fit: GlmFit,
    pub cv: CvResult,
    pub model: InteractionModel,
}

pub fn fit_apl(
    family: Family,
    data: &Dataset,
    cv_folds: usize,
    seed: u64,
    alpha: f64,
    p_cap: usize,
) -> Result<AplFit> {
    let p = data.p();
    if p > p_cap {
        return Err(Error::InvalidInput(format!(
            "all-pairs lasso refused: p = {p} exceeds the cap {p_cap} \
             (the widened design would hold {} doubles); use the sprinter \
             pipeline for problems of this size",
            data.n() * PairIndex::count(p)
        )));
    }
    family.validate_response(&data.y)?;
    let (xs, std) = data.standardized();
    let pairs: Vec<PairIndex> = all_pairs(p).collect();
    let mut design = xs.clone();
    let mut z = Vec::new();
    for pr in &pairs {
        product_column(xs.col(pr.a), xs.col(pr.b), &mut z);
        design.push_col(&z)?;
    }
    let opts = FitOptions { alpha, ..FitOptions::default() };
    let (fit, cv) = fit_cv_select(
        family,
        &design,
        &data.y,
        None,
        cv_folds,
        seed_for(seed, "cv-apl"),
        &opts,
    )?;
    let mut main_std: BTreeMap<usize, f64> = BTreeMap::new();
    let mut inter_std: Vec<(PairIndex, f64)> = Vec::new();
    for (&j, &b) in &fit.coefs {
        if j < p {
            main_std.insert(j, b);
        } else {
            inter_std.push((pairs[j - p], b));
        }
    }
    let model = expand_to_raw(family, fit.intercept, &main_std, &inter_std, &std, None);
    Ok(AplFit { fit, cv, model })
}

/// Marginal 2-parameter fit `(intercept, gamma)` for one interaction
/// column, solved by block coordinate descent over two convex 1-D
/// problems; the gamma block is the shared 1-D offset-MLE kernel.
pub fn fit_marginal_2param(family: Family, z: &[f64], y: &[f64]) -> (f64, f64) {
    let n = y.len();
    let mut c = {
        // null intercept
        let ybar = y.iter().sum::<f64>() / n as f64;
        match family.kind {
            FamilyKind::Gaussian => ybar,
            FamilyKind::Binomial => {
                let p = ybar.clamp(1e-10, 1.0 - 1e-10);
                (p / (1.0 - p)).ln()
            }
            FamilyKind::Poisson => ybar.max(1e-10).ln(),
        }
    };
    let mut gamma = 0.0;
    let mut offset = vec![0.0; n];
    for _ in 0..50 {
        offset.fill(c);
        let new_gamma = fit_1d_offset_mle(family, z, y, &offset).gamma;
        // intercept block: 1-D Newton with gamma*z as offset
        let mut cc = c;
        for _ in 0..50 {
            let mut s = 0.0;
            let mut h = 0.0;
            for i in 0..n {
                let (_, mu, w) = family.cumulant_mean_variance(cc + new_gamma * z[i]);
                s += mu - y[i];
                h += w;
            }
            s /= n as f64;
            h = (h / n as f64).max(1e-12);
            let step = s / h;
            cc -= step;
            if step.abs() < 1e-12 {
                break;
            }
        }
        let moved = (new_gamma - gamma).abs().max((cc - c).abs());
        gamma = new_gamma;
        c = cc;
        if moved < 1e-10 {
            break;
        }
    }
    (c, gamma)
}

/// Sure-independence screening on interactions: rank candidates by the
/// marginal |gamma| with no main-effects offset, then refit
/// `[X | Z_selected]` without an offset.
pub struct SisFit {
    pub model: InteractionModel,
    pub fit: GlmFit,
    pub cv: CvResult,
    pub selected: Vec<(PairIndex, f64)>,
}

pub fn fit_sis(
    family: Family,
    data: &Dataset,
    m: usize,
    cv_folds: usize,
    seed: u64,
    alpha: f64,
) -> Result<SisFit> {
    if m == 0 {
        return Err(Error::InvalidInput("sis needs m >= 1".into()));
    }
    family.validate_response(&data.y)?;
    let p = data.p();
    let q = PairIndex::count(p);
    let (xs, std) = data.standardized();

    let (selected_flat, _failures) =
        screen_select(q, SelectionRule::TopM(m), None, |flat, scratch| {
            let pr = PairIndex::from_flat(flat, p).expect("in range");
            product_column(xs.col(pr.a), xs.col(pr.b), scratch);
            let (_, gamma) = fit_marginal_2param(family, scratch, &data.y);
            Some((gamma, true))
        });
    let selected: Vec<(PairIndex, f64)> = selected_flat
        .into_iter()
        .map(|(flat, g)| (PairIndex::from_flat(flat, p).unwrap(), g))
        .collect();

    let mut design = xs.clone();
    let mut z = Vec::new();
    for &(pr, _) in &selected {
        product_column(xs.col(pr.a), xs.col(pr.b), &mut z);
        design.push_col(&z)?;
    }
    let opts = FitOptions { alpha, ..FitOptions::default() };
    let (fit, cv) = fit_cv_select(
        family,
        &design,
        &data.y,
        None,
        cv_folds,
        seed_for(seed, "cv-sis"),
        &opts,
    )?;
    let mut main_std: BTreeMap<usize, f64> = BTreeMap::new();
    let mut inter_std: Vec<(PairIndex, f64)> = Vec::new();
    for (&j, &b) in &fit.coefs {
        if j < p {
            main_std.insert(j, b);
        } else {
            inter_std.push((selected[j - p].0, b));
        }
    }
    let model = expand_to_raw(family, fit.intercept, &main_std, &inter_std, &std, None);
    Ok(SisFit { model, fit, cv, selected })
}
