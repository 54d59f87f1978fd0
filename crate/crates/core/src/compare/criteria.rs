use crate::error::{Error, Result};
use crate::stats::mean;

pub fn aic(max_loglik: f64, n_params: usize) -> f64 {
    -2.0 * max_loglik + 2.0 * n_params as f64
}

pub fn bic(max_loglik: f64, n_params: usize, n_obs: usize) -> f64 {
    -2.0 * max_loglik + n_params as f64 * (n_obs as f64).ln()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum DicVariant {
    /// p_D + mean deviance.
    #[default]
    PlusPd,
    /// mean deviance + 2 p_D.
    PlusTwoPd,
}

impl std::str::FromStr for DicVariant {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "pd" | "plus_pd" => Ok(Self::PlusPd),
            "2pd" | "plus_two_pd" => Ok(Self::PlusTwoPd),
            _ => Err(Error::InvalidArgument(format!("unknown DIC variant `{s}`"))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Dic {
    pub dic: f64,
    pub p_d: f64,
    pub mean_deviance: f64,
}

/// Deviance information criterion of a set of draws, with D(θ) = −2 loglik(θ).
pub fn dic<F: Fn(&[f64]) -> f64 + ?Sized>(draws: &[Vec<f64>], loglik: &F, variant: DicVariant) -> Result<Dic> {
    let first = draws
        .first()
        .ok_or_else(|| Error::InvalidArgument("DIC needs at least one draw".into()))?;
    let deviances: Vec<f64> = draws.iter().map(|d| -2.0 * loglik(d)).collect();
    let mean_deviance = mean(&deviances);
    if !mean_deviance.is_finite() {
        return Err(Error::Numerical("mean deviance is not finite".into()));
    }
    let mut centre = vec![0.0; first.len()];
    for d in draws {
        for (c, v) in centre.iter_mut().zip(d) {
            *c += v;
        }
    }
    centre.iter_mut().for_each(|c| *c /= draws.len() as f64);
    let at_mean = -2.0 * loglik(&centre);
    if !at_mean.is_finite() {
        return Err(Error::Numerical("posterior mean lies outside the support".into()));
    }
    let p_d = mean_deviance - at_mean;
    let dic = match variant {
        DicVariant::PlusPd => p_d + mean_deviance,
        DicVariant::PlusTwoPd => mean_deviance + 2.0 * p_d,
    };
    Ok(Dic { dic, p_d, mean_deviance })
}

/// Posterior model probabilities from log marginal likelihoods. A missing
/// prior means all models are equally likely.
pub fn bma_weights(log_mls: &[f64], model_prior: Option<&[f64]>) -> Result<Vec<f64>> {
    if log_mls.is_empty() {
        return Err(Error::InvalidArgument("no models to weight".into()));
    }
    let uniform = vec![1.0 / log_mls.len() as f64; log_mls.len()];
    let prior = model_prior.unwrap_or(&uniform);
    if prior.len() != log_mls.len() {
        return Err(Error::InvalidArgument("model prior length mismatch".into()));
    }
    if prior.iter().any(|p| !(*p >= 0.0)) || (prior.iter().sum::<f64>() - 1.0).abs() > 1e-9 {
        return Err(Error::InvalidArgument("model prior must be nonnegative and sum to 1".into()));
    }
    if log_mls.iter().any(|l| l.is_nan() || *l == f64::INFINITY) {
        return Err(Error::InvalidArgument("log marginal likelihoods must not be NaN or +inf".into()));
    }
    let scores: Vec<f64> = log_mls.iter().zip(prior).map(|(l, p)| l + p.ln()).collect();
    let top = scores.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    if top == f64::NEG_INFINITY {
        return Err(Error::InvalidArgument("every log marginal likelihood is -inf".into()));
    }
    let exps: Vec<f64> = scores.iter().map(|s| (s - top).exp()).collect();
    let total: f64 = exps.iter().sum();
    Ok(exps.iter().map(|e| e / total).collect())
}
