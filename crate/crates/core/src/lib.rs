//! Coastal flood return levels from tide-gauge records.
//!
//! The crate fits a ladder of stationary and temperature-driven
//! non-stationary extreme-value models (Poisson process with generalized
//! Pareto magnitudes, and a GEV block-maxima variant), calibrates them with
//! robust adaptive Metropolis sampling, weighs them by bridge-sampled
//! marginal likelihoods, and turns the weighted ensembles into return-level
//! distributions.
//!
//! Start with [`pipeline::run_pot_pipeline`] for the end-to-end path, or
//! with the individual modules for finer control.

// `!(x > 0.0)` guards deliberately reject NaN as well
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod calibrate;
pub mod cli;
pub mod compare;
pub mod config;
pub mod error;
pub mod evd;
pub mod experiments;
pub mod ingest;
pub mod pipeline;
pub mod project;
pub mod rng;
pub mod stats;
pub mod synth;

pub use error::{Error, Result};
