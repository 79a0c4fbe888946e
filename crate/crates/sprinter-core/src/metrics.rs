//! Evaluation metrics: held-out deviance and AUC.

use crate::data::Dataset;
use crate::error::{Error, Result};
use crate::family::{Family, FamilyKind};
use crate::model::InteractionModel;

/// Mann-Whitney concordance of scores against binary labels, with half
/// credit for score ties. Both classes must be present.
pub fn auc(scores: &[f64], labels: &[f64]) -> Result<f64> {
    if scores.len() != labels.len() {
        return Err(Error::Dimension("auc: scores and labels differ in length".into()));
    }
    let n_pos = labels.iter().filter(|&&v| v == 1.0).count();
    let n_neg = labels.len() - n_pos;
    if n_pos == 0 || n_neg == 0 {
        return Err(Error::InvalidInput("auc undefined for single-class labels".into()));
    }
    if labels.iter().any(|&v| v != 0.0 && v != 1.0) {
        return Err(Error::InvalidInput("auc labels must be 0/1".into()));
    }
    // average ranks with tie groups
    let mut idx: Vec<usize> = (0..scores.len()).collect();
    idx.sort_by(|&a, &b| scores[a].total_cmp(&scores[b]));
    let mut rank_sum_pos = 0.0;
    let mut i = 0;
    while i < idx.len() {
        let mut j = i;
        while j + 1 < idx.len() && scores[idx[j + 1]] == scores[idx[i]] {
            j += 1;
        }
        // ranks are 1-based; the tie group [i, j] shares the average rank
        let avg_rank = (i + j) as f64 / 2.0 + 1.0;
        for &k in &idx[i..=j] {
            if labels[k] == 1.0 {
                rank_sum_pos += avg_rank;
            }
        }
        i = j + 1;
    }
    let u = rank_sum_pos - (n_pos * (n_pos + 1)) as f64 / 2.0;
    Ok(u / (n_pos as f64 * n_neg as f64))
}

/// Evaluation summary on a held-out set.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Metrics {
    /// Mean per-observation deviance.
    pub deviance: f64,
    /// Present only for the binomial family.
    pub auc: Option<f64>,
}

/// Held-out mean deviance (and AUC for binomial models) of a fitted model.
pub fn evaluate(model: &InteractionModel, eval: &Dataset) -> Result<Metrics> {
    let family = model.family;
    let mu_raw = model.predict_mean(&eval.x)?;
    family.validate_response(&eval.y)?;
    let mu: Vec<f64> = mu_raw
        .iter()
        .map(|&m| match family.kind {
            FamilyKind::Binomial => m.clamp(1e-10, 1.0 - 1e-10),
            FamilyKind::Poisson => m.max(1e-10),
            FamilyKind::Gaussian => m,
        })
        .collect();
    let deviance = family.deviance(&mu, &eval.y)? / eval.n() as f64;
    let auc_val = if family.kind == FamilyKind::Binomial {
        Some(auc(&mu, &eval.y)?)
    } else {
        None
    };
    Ok(Metrics { deviance, auc: auc_val })
}

/// Mean deviance of the intercept-only model, a useful baseline.
pub fn null_deviance(family: Family, y: &[f64]) -> Result<f64> {
    let n = y.len() as f64;
    let ybar = y.iter().sum::<f64>() / n;
    let mu = match family.kind {
        FamilyKind::Binomial => ybar.clamp(1e-10, 1.0 - 1e-10),
        FamilyKind::Poisson => ybar.max(1e-10),
        FamilyKind::Gaussian => ybar,
    };
    Ok(family.deviance(&vec![mu; y.len()], y)? / n)
}
