//! Information criteria, bridge-sampling marginal likelihoods and model
//! averaging weights.

mod bridge;
mod criteria;
mod report;

pub use bridge::{bridge_logml, bridge_logml_with, BridgeConfig, BridgeEstimate, MvNormal, Proposal};
pub use criteria::{aic, bic, bma_weights, dic, Dic, DicVariant};
pub use report::{evaluate_model, ComparisonReport, ComparisonRow, ModelEvidence};
