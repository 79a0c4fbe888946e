//! The fitted-model currency shared by the pipeline, the baselines and the
//! CLI: a polynomial in the *raw* predictors
//!
//! ```text
//! theta(x) = intercept + sum_j c_j x_j + sum_(a,b) d_ab x_a x_b
//! ```
//!
//! Fits are computed on sample-standardized columns internally; expanding
//! the centered/scaled products back out gives this exact polynomial, so a
//! serialized model needs no standardization metadata.

use std::collections::BTreeMap;

use crate::data::{ColMatrix, Standardization};
use crate::error::{Error, Result};
use crate::family::Family;
use crate::pairs::PairIndex;

/// Ordinal models carry per-category cutpoints instead of an intercept.
#[derive(Debug, Clone, PartialEq)]
pub struct InteractionModel {
    pub family: Family,
    pub intercept: f64,
    /// Raw-scale main-effect coefficients, sparse (0-based indices).
    pub main_coefs: BTreeMap<usize, f64>,
    /// Raw-scale interaction coefficients, sorted by pair.
    pub interaction_coefs: Vec<(PairIndex, f64)>,
    /// Cumulative-logit cutpoints for ordinal models; `None` otherwise.
    pub cutpoints: Option<Vec<f64>>,
    /// Number of main-effect columns the model expects.
    pub p: usize,
}

impl InteractionModel {
    /// Raw-scale linear predictor; builds only the selected interaction
    /// products.
    pub fn predict_theta(&self, x: &ColMatrix) -> Result<Vec<f64>> {
        if x.n_cols() != self.p {
            return Err(Error::Dimension(format!(
                "model expects {} columns, data has {}",
                self.p,
                x.n_cols()
            )));
        }
        let mut theta = vec![self.intercept; x.n_rows()];
        for (&j, &c) in &self.main_coefs {
            for (t, &v) in theta.iter_mut().zip(x.col(j)) {
                *t += c * v;
            }
        }
        for &(pr, d) in &self.interaction_coefs {
            let (xa, xb) = (x.col(pr.a), x.col(pr.b));
            for i in 0..x.n_rows() {
                theta[i] += d * xa[i] * xb[i];
            }
        }
        Ok(theta)
    }

    /// Fitted means `b'(theta)`. For ordinal models this is the expected
    /// category value `sum_t t * P(Y = t)`.
    pub fn predict_mean(&self, x: &ColMatrix) -> Result<Vec<f64>> {
        let theta = self.predict_theta(x)?;
        match &self.cutpoints {
            None => Ok(theta.iter().map(|&t| self.family.mean(t)).collect()),
            Some(cuts) => Ok(theta
                .iter()
                .map(|&lp| {
                    let probs = ordinal_probs(cuts, lp);
                    probs
                        .iter()
                        .enumerate()
                        .map(|(t, &pt)| (t + 1) as f64 * pt)
                        .sum()
                })
                .collect()),
        }
    }

    /// Per-category probabilities for ordinal models.
    pub fn predict_ordinal_probs(&self, x: &ColMatrix) -> Result<Vec<Vec<f64>>> {
        let cuts = self
            .cutpoints
            .as_ref()
            .ok_or_else(|| Error::FamilyMismatch("model is not ordinal".into()))?;
        let theta = self.predict_theta(x)?;
        Ok(theta.iter().map(|&lp| ordinal_probs(cuts, lp)).collect())
    }
}

/// Category probabilities under `logit P(Y <= t) = c_t - lp`.
pub fn ordinal_probs(cutpoints: &[f64], lp: f64) -> Vec<f64> {
    let k = cutpoints.len();
    let mut cum = Vec::with_capacity(k + 1);
    for &c in cutpoints {
        cum.push(1.0 / (1.0 + (-(c - lp)).exp()));
    }
    cum.push(1.0);
    let mut probs = Vec::with_capacity(k + 1);
    let mut prev = 0.0;
    for &d in &cum {
        probs.push((d - prev).max(0.0));
        prev = d;
    }
    probs
}

/// Expands a fit over standardized columns `(x_j - m_j)/s_j` and centered
/// products into the equivalent raw-scale polynomial.
///
/// `main_std` are coefficients on standardized main effects, `inter_std`
/// on products of standardized mains.
pub fn expand_to_raw(
    family: Family,
    intercept_std: f64,
    main_std: &BTreeMap<usize, f64>,
    inter_std: &[(PairIndex, f64)],
    std: &Standardization,
    cutpoints: Option<Vec<f64>>,
) -> InteractionModel {
    let p = std.means.len();
    let mut intercept = intercept_std;
    let mut main: BTreeMap<usize, f64> = BTreeMap::new();
    for (&j, &b) in main_std {
        let c = b / std.sds[j];
        *main.entry(j).or_insert(0.0) += c;
        intercept -= c * std.means[j];
    }
    let mut inter: Vec<(PairIndex, f64)> = Vec::with_capacity(inter_std.len());
    for &(pr, d) in inter_std {
        let scale = std.sds[pr.a] * std.sds[pr.b];
        let d_raw = d / scale;
        // (x_a - m_a)(x_b - m_b) = x_a x_b - m_b x_a - m_a x_b + m_a m_b
        inter.push((pr, d_raw));
        *main.entry(pr.a).or_insert(0.0) -= d_raw * std.means[pr.b];
        *main.entry(pr.b).or_insert(0.0) -= d_raw * std.means[pr.a];
        intercept += d_raw * std.means[pr.a] * std.means[pr.b];
    }
    main.retain(|_, v| *v != 0.0);
    inter.sort_by_key(|&(pr, _)| pr);

    // ordinal models keep constants in the cutpoints: eta_t = c_t - theta(x)
    let (intercept, cutpoints) = match cutpoints {
        None => (intercept, None),
        Some(cuts) => {
            let shifted = cuts.iter().map(|&c| c - intercept).collect();
            (0.0, Some(shifted))
        }
    };
    InteractionModel { family, intercept, main_coefs: main, interaction_coefs: inter, cutpoints, p }
}
