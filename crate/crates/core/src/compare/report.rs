use std::fmt::Write as _;
use std::path::Path;

use super::{aic, bic, bma_weights, bridge_logml, dic, BridgeConfig, Dic, DicVariant};
use crate::calibrate::{Posterior, PosteriorEnsemble};
use crate::error::{Error, Result};
use crate::evd::{LogLikelihood, PriorSet, StructureTag};

/// Per-structure ingredients of a comparison report.
#[derive(Debug, Clone, PartialEq)]
pub struct ModelEvidence {
    pub structure: StructureTag,
    pub n_params: usize,
    /// Largest log-likelihood among the ensemble draws.
    pub max_loglik: f64,
    pub dic: Option<Dic>,
    pub log_ml: Option<f64>,
    pub notes: Vec<String>,
}

/// Maximum ensemble log-likelihood, DIC and bridge-sampling log marginal
/// likelihood for one calibrated structure. DIC and bridge failures are
/// recorded in `notes` rather than returned.
pub fn evaluate_model(
    ensemble: &PosteriorEnsemble,
    lik: &dyn LogLikelihood,
    priors: &PriorSet,
    dic_variant: DicVariant,
    bridge: &BridgeConfig,
) -> Result<ModelEvidence> {
    if ensemble.is_empty() {
        return Err(Error::InvalidArgument("empty ensemble".into()));
    }
    if ensemble.structure != lik.structure() {
        return Err(Error::InvalidArgument("ensemble and likelihood structures differ".into()));
    }
    let posterior = Posterior::new(lik, priors)?;
    let loglik = |x: &[f64]| posterior.log_likelihood(x);
    let max_loglik = ensemble
        .draws
        .iter()
        .map(|d| loglik(d))
        .fold(f64::NEG_INFINITY, f64::max);
    let mut notes = Vec::new();
    let dic = match dic(&ensemble.draws, &loglik, dic_variant) {
        Ok(d) => Some(d),
        Err(e) => {
            notes.push(format!("DIC omitted: {e}"));
            None
        }
    };
    let log_density = |x: &[f64]| posterior.log_density(x);
    let log_ml = match bridge_logml(&ensemble.draws, &log_density, bridge) {
        Ok(b) => Some(b.log_ml),
        Err(e) => {
            notes.push(format!("marginal likelihood unavailable: {e}"));
            None
        }
    };
    for n in &notes {
        log::warn!("{}: {n}", ensemble.structure);
    }
    Ok(ModelEvidence {
        structure: ensemble.structure.tag,
        n_params: ensemble.structure.n_params(),
        max_loglik,
        dic,
        log_ml,
        notes,
    })
}

#[derive(Debug, Clone, PartialEq)]
pub struct ComparisonRow {
    pub structure: StructureTag,
    pub n_params: usize,
    pub max_loglik: f64,
    pub aic: f64,
    pub bic: f64,
    pub dic: Option<f64>,
    pub p_d: Option<f64>,
    pub log_ml: Option<f64>,
    pub bma_weight: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ComparisonReport {
    pub rows: Vec<ComparisonRow>,
    pub n_obs: usize,
    pub model_prior: Vec<f64>,
}

impl ComparisonReport {
    /// Structures without a marginal likelihood get zero weight.
    pub fn build(evidence: &[ModelEvidence], n_obs: usize, model_prior: Option<&[f64]>) -> Result<Self> {
        if n_obs < 1 {
            return Err(Error::InvalidArgument("n_obs must be at least 1".into()));
        }
        let log_mls: Vec<f64> = evidence.iter().map(|e| e.log_ml.unwrap_or(f64::NEG_INFINITY)).collect();
        let weights = bma_weights(&log_mls, model_prior)?;
        let model_prior = match model_prior {
            Some(p) => p.to_vec(),
            None => vec![1.0 / evidence.len() as f64; evidence.len()],
        };
        let rows = evidence
            .iter()
            .zip(weights)
            .map(|(e, w)| ComparisonRow {
                structure: e.structure,
                n_params: e.n_params,
                max_loglik: e.max_loglik,
                aic: aic(e.max_loglik, e.n_params),
                bic: bic(e.max_loglik, e.n_params, n_obs),
                dic: e.dic.map(|d| d.dic),
                p_d: e.dic.map(|d| d.p_d),
                log_ml: e.log_ml,
                bma_weight: w,
            })
            .collect();
        Ok(Self { rows, n_obs, model_prior })
    }

    pub fn weights(&self) -> Vec<f64> {
        self.rows.iter().map(|r| r.bma_weight).collect()
    }

    pub fn weight_of(&self, tag: StructureTag) -> Option<f64> {
        self.rows.iter().find(|r| r.structure == tag).map(|r| r.bma_weight)
    }

    /// `structure,aic,bic,dic,log_ml,bma_weight`; missing values are `NA`.
    pub fn to_csv(&self) -> String {
        let opt = |v: Option<f64>| v.map_or_else(|| "NA".to_string(), |x| x.to_string());
        let mut out = String::from("structure,aic,bic,dic,log_ml,bma_weight\n");
        for r in &self.rows {
            let _ = writeln!(
                out,
                "{},{},{},{},{},{}",
                r.structure,
                r.aic,
                r.bic,
                opt(r.dic),
                opt(r.log_ml),
                r.bma_weight
            );
        }
        out
    }

    pub fn write_csv(&self, path: impl AsRef<Path>) -> Result<()> {
        let path = path.as_ref();
        std::fs::write(path, self.to_csv()).map_err(|e| Error::io(path, e))
    }
}
