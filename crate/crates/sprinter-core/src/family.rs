//! Exponential-family descriptors under the canonical link.
//!
//! Every solver and the screening pass work through the cumulant function
//! `b` and its derivatives: `b'` is the mean function, `b''` the variance
//! function, and the per-observation negative log-likelihood is
//! `l(theta, y) = b(theta) - theta * y`.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Which member of the exponential family, always with its canonical link.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum FamilyKind {
    Gaussian,
    Binomial,
    Poisson,
}

impl FamilyKind {
    pub fn token(&self) -> &'static str {
        match self {
            FamilyKind::Gaussian => "gaussian",
            FamilyKind::Binomial => "binomial",
            FamilyKind::Poisson => "poisson",
        }
    }
}

impl fmt::Display for FamilyKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.token())
    }
}

impl FromStr for FamilyKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "gaussian" => Ok(FamilyKind::Gaussian),
            "binomial" => Ok(FamilyKind::Binomial),
            "poisson" => Ok(FamilyKind::Poisson),
            other => Err(Error::InvalidInput(format!(
                "unknown family '{other}' (expected gaussian | binomial | poisson)"
            ))),
        }
    }
}

/// An exponential-family descriptor with a clamp on the natural parameter.
///
/// The clamp keeps `exp` evaluations finite for the binomial and poisson
/// families; it is wide enough (|theta| <= 30) that fitted values are
/// numerically unchanged at double precision.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Family {
    pub kind: FamilyKind,
    pub theta_clamp: f64,
}

impl Family {
    pub fn new(kind: FamilyKind) -> Self {
        let theta_clamp = match kind {
            FamilyKind::Gaussian => f64::INFINITY,
            FamilyKind::Binomial | FamilyKind::Poisson => 30.0,
        };
        Family { kind, theta_clamp }
    }

    pub fn gaussian() -> Self {
        Family::new(FamilyKind::Gaussian)
    }

    pub fn binomial() -> Self {
        Family::new(FamilyKind::Binomial)
    }

    pub fn poisson() -> Self {
        Family::new(FamilyKind::Poisson)
    }

    #[inline]
    pub fn clamp_theta(&self, theta: f64) -> f64 {
        theta.clamp(-self.theta_clamp, self.theta_clamp)
    }

    /// Cumulant function `b(theta)`.
    #[inline]
    pub fn cumulant(&self, theta: f64) -> f64 {
        let t = self.clamp_theta(theta);
        match self.kind {
            FamilyKind::Gaussian => 0.5 * t * t,
            // log(1 + e^t) = max(t, 0) + log1p(e^{-|t|}), stable for all t
            FamilyKind::Binomial => t.max(0.0) + (-t.abs()).exp().ln_1p(),
            FamilyKind::Poisson => t.exp(),
        }
    }

    /// Mean function `b'(theta)`.
    #[inline]
    pub fn mean(&self, theta: f64) -> f64 {
        let t = self.clamp_theta(theta);
        match self.kind {
            FamilyKind::Gaussian => t,
            FamilyKind::Binomial => 1.0 / (1.0 + (-t).exp()),
            FamilyKind::Poisson => t.exp(),
        }
    }

    /// Variance function `b''(theta)`, strictly positive on the clamped domain.
    #[inline]
    pub fn variance(&self, theta: f64) -> f64 {
        let t = self.clamp_theta(theta);
        match self.kind {
            FamilyKind::Gaussian => 1.0,
            FamilyKind::Binomial => {
                let mu = 1.0 / (1.0 + (-t).exp());
                mu * (1.0 - mu)
            }
            FamilyKind::Poisson => t.exp(),
        }
    }

    /// Cumulant, mean and variance in one pass (one `exp` per call).
    #[inline]
    pub fn cumulant_mean_variance(&self, theta: f64) -> (f64, f64, f64) {
        let t = self.clamp_theta(theta);
        match self.kind {
            FamilyKind::Gaussian => (0.5 * t * t, t, 1.0),
            FamilyKind::Binomial => {
                let e = (-t.abs()).exp();
                let b = t.max(0.0) + e.ln_1p();
                let mu = if t >= 0.0 { 1.0 / (1.0 + e) } else { e / (1.0 + e) };
                (b, mu, mu * (1.0 - mu))
            }
            FamilyKind::Poisson => {
                let e = t.exp();
                (e, e, e)
            }
        }
    }

    /// Mean negative log-likelihood `mean_i [ b(theta_i) - theta_i * y_i ]`.
    pub fn neg_loglik(&self, theta: &[f64], y: &[f64]) -> Result<f64> {
        if theta.len() != y.len() {
            return Err(Error::Dimension(format!(
                "neg_loglik: theta has {} entries, y has {}",
                theta.len(),
                y.len()
            )));
        }
        let n = theta.len() as f64;
        let mut acc = 0.0;
        for (&t, &yi) in theta.iter().zip(y) {
            let tc = self.clamp_theta(t);
            acc += self.cumulant(tc) - tc * yi;
        }
        Ok(acc / n)
    }

    /// Deviance contribution of one observation: twice the log-likelihood gap
    /// to the saturated model. Binary responses use the `0 * log 0 = 0`
    /// convention in the saturated term.
    pub fn unit_deviance(&self, mu: f64, y: f64) -> Result<f64> {
        match self.kind {
            FamilyKind::Gaussian => {
                let r = y - mu;
                Ok(r * r)
            }
            FamilyKind::Binomial => {
                if !(mu > 0.0 && mu < 1.0) {
                    return Err(Error::Domain(format!(
                        "binomial mean {mu} outside (0, 1)"
                    )));
                }
                if !(0.0..=1.0).contains(&y) {
                    return Err(Error::Domain(format!(
                        "binomial response {y} outside [0, 1]"
                    )));
                }
                let xlogx = |v: f64, w: f64| if v == 0.0 { 0.0 } else { v * (v / w).ln() };
                Ok(2.0 * (xlogx(y, mu) + xlogx(1.0 - y, 1.0 - mu)))
            }
            FamilyKind::Poisson => {
                if mu <= 0.0 {
                    return Err(Error::Domain(format!("poisson mean {mu} <= 0")));
                }
                if y < 0.0 {
                    return Err(Error::Domain(format!("poisson response {y} < 0")));
                }
                let term = if y == 0.0 { 0.0 } else { y * (y / mu).ln() };
                Ok(2.0 * (term - (y - mu)))
            }
        }
    }

    /// Total deviance `sum_i unit_deviance(mu_i, y_i)`, always >= 0.
    pub fn deviance(&self, mu: &[f64], y: &[f64]) -> Result<f64> {
        if mu.len() != y.len() {
            return Err(Error::Dimension(format!(
                "deviance: mu has {} entries, y has {}",
                mu.len(),
                y.len()
            )));
        }
        let mut acc = 0.0;
        for (&m, &yi) in mu.iter().zip(y) {
            acc += self.unit_deviance(m, yi)?;
        }
        Ok(acc)
    }

    /// Checks that every response value is legal for this family.
    pub fn validate_response(&self, y: &[f64]) -> Result<()> {
        let bad = |msg: String| Err(Error::FamilyMismatch(msg));
        match self.kind {
            FamilyKind::Gaussian => {
                if let Some(v) = y.iter().find(|v| !v.is_finite()) {
                    return bad(format!("gaussian response contains {v}"));
                }
            }
            FamilyKind::Binomial => {
                if let Some(v) = y.iter().find(|&&v| v != 0.0 && v != 1.0) {
                    return bad(format!("binomial response contains {v}, expected 0/1"));
                }
            }
            FamilyKind::Poisson => {
                if let Some(v) = y
                    .iter()
                    .find(|&&v| !v.is_finite() || v < 0.0 || v.fract() != 0.0)
                {
                    return bad(format!(
                        "poisson response contains {v}, expected nonnegative counts"
                    ));
                }
            }
        }
        Ok(())
    }
}
