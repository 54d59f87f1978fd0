use super::{de_mle, DeConfig};
use crate::error::Result;
use crate::evd::{Family, LogLikelihood, ParamVector, Slot};

/// Maximum-likelihood fit of one structure.
#[derive(Debug, Clone, PartialEq)]
pub struct MleFit {
    pub theta: ParamVector,
    pub max_loglik: f64,
}

/// Search box for the active parameters of `lik`'s structure.
///
/// PP/GPD: λ₀ ∈ (1e-6, 1), σ₀ ∈ (ln 1e-4, ln 10), ξ₀ ∈ (-1, 1), slopes in
/// (-1, 1). GEV: μ₀ within twenty Gumbel scales of the moment estimate.
pub fn default_bounds(lik: &dyn LogLikelihood) -> Vec<(f64, f64)> {
    let structure = lik.structure();
    let guess = lik.initial_guess();
    structure
        .active_slots()
        .iter()
        .map(|slot| match (structure.family, slot) {
            (Family::PpGpd, Slot::RateOrLocation0) => (1e-6, 1.0),
            (Family::Gev, Slot::RateOrLocation0) => {
                let mu = guess.get(Slot::RateOrLocation0);
                let width = 20.0 * guess.get(Slot::LogScale0).exp() + 1.0;
                (mu - width, mu + width)
            }
            (_, Slot::LogScale0) => (1e-4f64.ln(), 10f64.ln()),
            (_, Slot::Shape0) => (-1.0, 1.0),
            _ => (-1.0, 1.0),
        })
        .collect()
}

/// Stationary moment estimate, restricted to the active parameters.
pub fn initial_guess(lik: &dyn LogLikelihood) -> Vec<f64> {
    lik.structure().pack(&lik.initial_guess())
}

/// Differential-evolution MLE, seeded with the moment estimate.
pub fn fit_mle(lik: &dyn LogLikelihood, bounds: &[(f64, f64)], config: &DeConfig) -> Result<MleFit> {
    let structure = lik.structure();
    let mut config = config.clone();
    if config.initial.is_empty() {
        config.initial.push(initial_guess(lik));
    }
    let result = de_mle(|x| lik.log_likelihood_active(x), bounds, &config)?;
    Ok(MleFit {
        theta: structure.unpack(&result.best),
        max_loglik: result.value,
    })
}
