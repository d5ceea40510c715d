//! LRT screening, exhaustive MSCS construction, inclusion importance, and
//! the detectability diagnostic.

use std::collections::BTreeMap;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::likelihood::{fit, Dataset, Family, FitResult};
use crate::space::{FeatureId, ModelIndex, ModelSpace};
use crate::stats::{chi2_cdf, kn, ChiSqSpec};

/// Floating-point slack before a candidate beating the full model is treated
/// as a solver failure.
const NEG_LAMBDA_TOL: f64 = 1e-6;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LrtRecord {
    pub model: ModelIndex,
    pub lambda: f64,
    pub df: usize,
    pub pvalue: f64,
    pub survived: bool,
    /// Set when the candidate fit diverged and the model was recorded as
    /// rejected rather than tested.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub note: Option<String>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct MscsResult {
    pub alpha: f64,
    pub space: ModelSpace,
    pub records: Vec<LrtRecord>,
    pub exhaustive: bool,
}

impl MscsResult {
    pub fn survivors(&self) -> impl Iterator<Item = &LrtRecord> {
        self.records.iter().filter(|r| r.survived)
    }

    pub fn survivor_count(&self) -> usize {
        self.records.iter().filter(|r| r.survived).count()
    }

    pub fn contains_survivor(&self, model: &ModelIndex) -> bool {
        self.records.iter().any(|r| r.survived && &r.model == model)
    }
}

/// Per-feature inclusion importance over the surviving models, with optional
/// bootstrap confidence bounds.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ImportanceReport {
    pub entries: Vec<ImportanceEntry>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ImportanceEntry {
    pub feature: FeatureId,
    pub ii: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub ci_lo: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub ci_hi: Option<f64>,
}

impl ImportanceReport {
    pub fn get(&self, feature: FeatureId) -> Option<f64> {
        self.entries.iter().find(|e| e.feature == feature).map(|e| e.ii)
    }
}

/// LRT of `model` against the pre-fitted full model. Survival is not decided
/// here; callers compare the p-value to their level.
pub fn lrt(data: &Dataset, model: &ModelIndex, full_fit: &FitResult) -> Result<LrtRecord> {
    let candidate = fit(data, model)?;
    lrt_from_fit(model, &candidate, full_fit)
}

pub fn lrt_from_fit(model: &ModelIndex, candidate: &FitResult, full_fit: &FitResult) -> Result<LrtRecord> {
    let mut lambda = 2.0 * (full_fit.loglik - candidate.loglik);
    if lambda < 0.0 {
        if lambda < -NEG_LAMBDA_TOL {
            return Err(Error::NestingViolation { excess: -lambda / 2.0 });
        }
        lambda = 0.0;
    }
    let df = full_fit
        .p_gamma
        .checked_sub(candidate.p_gamma)
        .ok_or_else(|| Error::DimensionMismatch("candidate has more parameters than full model".into()))?;
    let pvalue = if df == 0 {
        1.0
    } else {
        1.0 - chi2_cdf(lambda, ChiSqSpec::central(df))
    };
    Ok(LrtRecord { model: model.clone(), lambda, df, pvalue, survived: false, note: None })
}

/// Exhaustive MSCS: fit the full model once, LRT every model in the space,
/// keep those with p-value >= alpha. Candidate fits that diverge are
/// recorded as rejected with a note. Records come back sorted by canonical
/// encoding so concurrent evaluation stays order-independent.
pub fn build_mscs(data: &Dataset, space: &ModelSpace, alpha: f64) -> Result<MscsResult> {
    if !(alpha > 0.0 && alpha < 1.0) {
        return Err(Error::InvalidConfig(format!("alpha must be in (0,1), got {alpha}")));
    }
    let full_model = space.full_model();
    data.check_model(&full_model)?;
    let full_fit = fit(data, &full_model)?;
    let models = space.enumerate()?;
    let mut records = models
        .par_iter()
        .map(|m| screen_one(data, m, &full_fit, alpha))
        .collect::<Result<Vec<_>>>()?;
    records.sort_by(|a, b| a.model.encode().cmp(&b.model.encode()));
    Ok(MscsResult { alpha, space: space.clone(), records, exhaustive: true })
}

pub(crate) fn screen_one(
    data: &Dataset,
    model: &ModelIndex,
    full_fit: &FitResult,
    alpha: f64,
) -> Result<LrtRecord> {
    match lrt(data, model, full_fit) {
        Ok(mut rec) => {
            rec.survived = rec.pvalue >= alpha;
            Ok(rec)
        }
        // a diverging submodel under a convergent full fit is gross misfit
        Err(Error::FitDiverged { .. }) => Ok(LrtRecord {
            model: model.clone(),
            lambda: f64::INFINITY,
            df: full_fit.p_gamma,
            pvalue: 0.0,
            survived: false,
            note: Some("candidate fit diverged; recorded as rejected".into()),
        }),
        Err(e) => Err(Error::ModelContext { model: model.encode(), source: Box::new(e) }),
    }
}

/// Inclusion importance: the fraction of surviving models containing each
/// feature the space can express.
pub fn inclusion_importance(mscs: &MscsResult) -> ImportanceReport {
    let mut counts: BTreeMap<FeatureId, usize> = mscs
        .space
        .all_features()
        .into_iter()
        .map(|f| (f, 0))
        .collect();
    let mut total = 0usize;
    for rec in mscs.survivors() {
        total += 1;
        // survivors were enumerated from the space, so features_of cannot fail
        for f in mscs.space.features_of(&rec.model).expect("survivor belongs to space") {
            *counts.get_mut(&f).expect("feature enumerated") += 1;
        }
    }
    let entries = counts
        .into_iter()
        .map(|(feature, c)| ImportanceEntry {
            feature,
            ii: c as f64 / total as f64,
            ci_lo: None,
            ci_hi: None,
        })
        .collect();
    ImportanceReport { entries }
}

/// Detectability margin min over misspecified models of delta / K_n(d).
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct DetectabilityReport {
    /// min over models missing a true variable; +inf when no model misses one
    pub margin: f64,
    pub argmin: Option<ModelIndex>,
}

/// Diagnostic for simulation settings with known truth.
/// NormalLocation only: the KL projection onto a candidate subset is
/// coordinate truncation, so delta = n * sum of squared dropped signals.
pub fn detectability_margin(
    family: Family,
    theta_star: &[f64],
    n: usize,
    space: &ModelSpace,
) -> Result<DetectabilityReport> {
    if family != Family::NormalLocation {
        return Err(Error::UnsupportedFamily { family: family.to_string() });
    }
    let p = space.p();
    if theta_star.len() != p {
        return Err(Error::DimensionMismatch(format!(
            "theta_star length {} vs space p {}",
            theta_star.len(),
            p
        )));
    }
    let true_vars: Vec<usize> = (1..=p).filter(|&j| theta_star[j - 1] != 0.0).collect();
    let mut margin = f64::INFINITY;
    let mut argmin = None;
    for model in space.enumerate()? {
        let ids = match &model {
            ModelIndex::Subset(ids) => ids,
            ModelIndex::Partition(_) => {
                return Err(Error::UnsupportedFamily { family: "partition space".into() })
            }
        };
        let missing: Vec<usize> = true_vars.iter().copied().filter(|j| !ids.contains(j)).collect();
        if missing.is_empty() {
            continue;
        }
        let delta: f64 = n as f64 * missing.iter().map(|&j| theta_star[j - 1].powi(2)).sum::<f64>();
        let d = p - ids.len();
        let k = kn(d, p);
        let ratio = if k > 0.0 { delta / k } else { f64::INFINITY };
        if ratio < margin {
            margin = ratio;
            argmin = Some(model.clone());
        }
    }
    Ok(DetectabilityReport { margin, argmin })
}
