//! Maximum-likelihood fitting, prior construction, robust adaptive
//! Metropolis sampling, convergence diagnostics and posterior ensembles.

mod de;
mod diagnostics;
mod ensemble;
mod mle;
mod priors;
mod ram;

pub use crate::evd::{Prior, PriorKind, PriorSet};
pub use de::{de_mle, DeConfig, DeResult};
pub use diagnostics::{gelman_rubin, psrf_per_parameter};
pub use ensemble::{
    calibrate_model, read_ensemble_csv, write_ensemble_csv, write_provenance, CalibrationConfig,
    Posterior, PosteriorEnsemble, Provenance,
};
pub use mle::{default_bounds, fit_mle, initial_guess, MleFit};
pub use priors::{
    fit_priors, fit_priors_from_values, read_prior_network, PriorKinds, PriorNetwork,
};
pub use ram::{ram_chain, ChainState, RamChain, RamConfig};
