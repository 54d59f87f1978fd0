use std::collections::BTreeMap;
use std::fmt;
use std::str::FromStr;

use statrs::distribution::{Continuous, Gamma, Normal};

use super::{ModelStructure, ParamVector};
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PriorKind {
    /// `p1` = mean, `p2` = standard deviation.
    Normal,
    /// `p1` = shape, `p2` = rate; zero density at or below 0.
    Gamma,
    /// `p1` = lower, `p2` = upper bound.
    Uniform,
}

impl fmt::Display for PriorKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            PriorKind::Normal => "normal",
            PriorKind::Gamma => "gamma",
            PriorKind::Uniform => "uniform",
        })
    }
}

impl FromStr for PriorKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim() {
            "normal" => Ok(PriorKind::Normal),
            "gamma" => Ok(PriorKind::Gamma),
            "uniform" => Ok(PriorKind::Uniform),
            other => Err(Error::Config(format!("unknown prior kind `{other}`"))),
        }
    }
}

/// One parameter's prior distribution.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Prior {
    pub kind: PriorKind,
    pub p1: f64,
    pub p2: f64,
}

impl Prior {
    pub fn normal(mean: f64, sd: f64) -> Result<Self> {
        Self::new(PriorKind::Normal, mean, sd)
    }

    pub fn gamma(shape: f64, rate: f64) -> Result<Self> {
        Self::new(PriorKind::Gamma, shape, rate)
    }

    pub fn uniform(lower: f64, upper: f64) -> Result<Self> {
        Self::new(PriorKind::Uniform, lower, upper)
    }

    pub fn new(kind: PriorKind, p1: f64, p2: f64) -> Result<Self> {
        let ok = p1.is_finite()
            && p2.is_finite()
            && match kind {
                PriorKind::Normal => p2 > 0.0,
                PriorKind::Gamma => p1 > 0.0 && p2 > 0.0,
                PriorKind::Uniform => p2 > p1,
            };
        if !ok {
            return Err(Error::InvalidArgument(format!("invalid {kind} prior ({p1}, {p2})")));
        }
        Ok(Self { kind, p1, p2 })
    }

    pub fn ln_pdf(&self, x: f64) -> f64 {
        match self.kind {
            PriorKind::Normal => Normal::new(self.p1, self.p2)
                .map(|d| d.ln_pdf(x))
                .unwrap_or(f64::NEG_INFINITY),
            PriorKind::Gamma => {
                if x <= 0.0 {
                    return f64::NEG_INFINITY;
                }
                Gamma::new(self.p1, self.p2)
                    .map(|d| d.ln_pdf(x))
                    .unwrap_or(f64::NEG_INFINITY)
            }
            PriorKind::Uniform => {
                if (self.p1..=self.p2).contains(&x) {
                    -(self.p2 - self.p1).ln()
                } else {
                    f64::NEG_INFINITY
                }
            }
        }
    }

    /// A representative (mean or midpoint) value.
    pub fn center(&self) -> f64 {
        match self.kind {
            PriorKind::Normal => self.p1,
            PriorKind::Gamma => self.p1 / self.p2,
            PriorKind::Uniform => 0.5 * (self.p1 + self.p2),
        }
    }
}

/// Priors keyed by parameter name (`lambda0`, `sigma1`, `mu0`, ...).
#[derive(Debug, Clone, Default, PartialEq)]
pub struct PriorSet {
    pub entries: BTreeMap<String, Prior>,
    /// Parameters whose spread was floored when the set was fitted.
    pub degenerate: Vec<String>,
}

impl PriorSet {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn with(mut self, name: &str, prior: Prior) -> Self {
        self.entries.insert(name.to_string(), prior);
        self
    }

    pub fn insert(&mut self, name: &str, prior: Prior) {
        self.entries.insert(name.to_string(), prior);
    }

    pub fn get(&self, name: &str) -> Option<&Prior> {
        self.entries.get(name)
    }

    /// Priors for the active parameters of `structure`, in order.
    pub fn for_structure(&self, structure: &ModelStructure) -> Result<Vec<Prior>> {
        structure
            .param_names()
            .into_iter()
            .map(|name| {
                self.get(name)
                    .copied()
                    .ok_or_else(|| Error::MissingPrior(name.to_string()))
            })
            .collect()
    }
}

/// Sum of the active parameters' prior log-densities.
pub fn log_prior(theta: &ParamVector, priors: &PriorSet, structure: &ModelStructure) -> Result<f64> {
    let priors = priors.for_structure(structure)?;
    Ok(structure
        .active_slots()
        .iter()
        .zip(&priors)
        .map(|(slot, prior)| prior.ln_pdf(theta.get(*slot)))
        .sum())
}
