//! Versioned JSON persistence for fitted models.
//!
//! Coefficients are stored on the raw-predictor scale with 1-based column
//! indices (matching the `x1..xp` CSV headers), so a loaded model
//! reproduces predictions bit-exactly: serde_json round-trips every finite
//! f64 through its shortest decimal representation.

use std::collections::BTreeMap;
use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::family::{Family, FamilyKind};
use crate::model::InteractionModel;
use crate::pairs::PairIndex;

pub const FORMAT_VERSION: u32 = 1;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Provenance {
    pub seed: u64,
    pub config_hash: String,
    /// Unix timestamp; honors SOURCE_DATE_EPOCH so identical runs can
    /// produce byte-identical files.
    pub created_unix: u64,
}

impl Provenance {
    pub fn new(seed: u64, config_hash: String) -> Self {
        let created_unix = std::env::var("SOURCE_DATE_EPOCH")
            .ok()
            .and_then(|v| v.parse().ok())
            .unwrap_or_else(|| {
                std::time::SystemTime::now()
                    .duration_since(std::time::UNIX_EPOCH)
                    .map_or(0, |d| d.as_secs())
            });
        Provenance { seed, config_hash, created_unix }
    }
}

/// FNV-1a hash of a canonical config string, hex encoded.
pub fn config_hash(canonical: &str) -> String {
    let mut h: u64 = 0xcbf29ce484222325;
    for b in canonical.bytes() {
        h ^= b as u64;
        h = h.wrapping_mul(0x100000001b3);
    }
    format!("{h:016x}")
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModelFile {
    pub format_version: u32,
    /// "gaussian" | "binomial" | "poisson" | "ordinal"
    pub family: String,
    pub intercept: f64,
    /// (1-based column, coefficient)
    pub main_coefs: Vec<(usize, f64)>,
    /// (1-based a, 1-based b, coefficient), a <= b
    pub interactions: Vec<(usize, usize, f64)>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub cutpoints: Option<Vec<f64>>,
    /// Number of main-effect columns the model expects.
    pub p: usize,
    pub provenance: Provenance,
}

pub fn to_model_file(model: &InteractionModel, provenance: Provenance) -> ModelFile {
    let family = if model.cutpoints.is_some() {
        "ordinal".to_string()
    } else {
        model.family.kind.token().to_string()
    };
    ModelFile {
        format_version: FORMAT_VERSION,
        family,
        intercept: model.intercept,
        main_coefs: model.main_coefs.iter().map(|(&j, &v)| (j + 1, v)).collect(),
        interactions: model
            .interaction_coefs
            .iter()
            .map(|&(pr, v)| (pr.a + 1, pr.b + 1, v))
            .collect(),
        cutpoints: model.cutpoints.clone(),
        p: model.p,
        provenance,
    }
}

pub fn from_model_file(mf: &ModelFile) -> Result<InteractionModel> {
    if mf.format_version != FORMAT_VERSION {
        return Err(Error::Data(format!(
            "unsupported model format version {}",
            mf.format_version
        )));
    }
    let family = match mf.family.as_str() {
        "ordinal" => Family::binomial(),
        token => Family::new(token.parse::<FamilyKind>()?),
    };
    if !mf.intercept.is_finite() {
        return Err(Error::Data("non-finite intercept".into()));
    }
    let mut main_coefs = BTreeMap::new();
    for &(j, v) in &mf.main_coefs {
        if j == 0 || j > mf.p {
            return Err(Error::Data(format!("main-effect index {j} out of range 1..={}", mf.p)));
        }
        if !v.is_finite() {
            return Err(Error::Data(format!("non-finite coefficient at x{j}")));
        }
        if main_coefs.insert(j - 1, v).is_some() {
            return Err(Error::Data(format!("duplicate main-effect index {j}")));
        }
    }
    let mut interaction_coefs = Vec::with_capacity(mf.interactions.len());
    for &(a, b, v) in &mf.interactions {
        if a == 0 || b == 0 || a > b || b > mf.p {
            return Err(Error::Data(format!(
                "interaction ({a},{b}) out of range (need 1 <= a <= b <= {})",
                mf.p
            )));
        }
        if !v.is_finite() {
            return Err(Error::Data(format!("non-finite coefficient at interaction ({a},{b})")));
        }
        interaction_coefs.push((PairIndex::new(a - 1, b - 1), v));
    }
    interaction_coefs.sort_by_key(|&(pr, _)| pr);
    for w in interaction_coefs.windows(2) {
        if w[0].0 == w[1].0 {
            return Err(Error::Data(format!(
                "duplicate interaction ({},{})",
                w[0].0.a + 1,
                w[0].0.b + 1
            )));
        }
    }
    let cutpoints = match (&mf.cutpoints, mf.family.as_str()) {
        (Some(c), "ordinal") => {
            if c.is_empty() || c.iter().any(|v| !v.is_finite()) {
                return Err(Error::Data("cutpoints must be finite and nonempty".into()));
            }
            if c.windows(2).any(|w| w[1] < w[0]) {
                return Err(Error::Data("cutpoints must be nondecreasing".into()));
            }
            Some(c.clone())
        }
        (None, "ordinal") => return Err(Error::Data("ordinal model is missing cutpoints".into())),
        (Some(_), _) => {
            return Err(Error::Data("cutpoints are only valid for ordinal models".into()))
        }
        (None, _) => None,
    };
    Ok(InteractionModel {
        family,
        intercept: mf.intercept,
        main_coefs,
        interaction_coefs,
        cutpoints,
        p: mf.p,
    })
}

pub fn save_model(path: &Path, mf: &ModelFile) -> Result<()> {
    fs::write(path, serde_json::to_string_pretty(mf)?)?;
    Ok(())
}

pub fn parse_model_json(text: &str) -> Result<InteractionModel> {
    let mf: ModelFile = serde_json::from_str(text)?;
    from_model_file(&mf)
}

pub fn load_model(path: &Path) -> Result<(InteractionModel, ModelFile)> {
    let text = fs::read_to_string(path)?;
    let mf: ModelFile = serde_json::from_str(&text)?;
    let model = from_model_file(&mf)?;
    Ok((model, mf))
}
