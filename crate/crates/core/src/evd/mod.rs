//! Extreme-value densities, the temperature link, model structures and the
//! joint likelihoods for the Poisson-process/GPD and GEV families.

mod dist;
mod likelihood;
mod prior;
mod structure;

pub use dist::{gev_cdf, gev_logpdf, gpd_cdf, gpd_logpdf, poisson_logpmf, XI_ZERO_TOL};
pub use likelihood::{
    gev_loglik, link_params, ppgpd_loglik, GevLikelihood, LinkedParams, LogLikelihood,
    PpGpdLikelihood,
};
pub use prior::{log_prior, Prior, PriorKind, PriorSet};
pub use structure::{Family, ModelStructure, ParamVector, Slot, StructureTag, N_SLOTS};

