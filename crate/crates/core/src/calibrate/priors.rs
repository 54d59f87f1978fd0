use std::collections::BTreeMap;
use std::path::Path;

use crate::error::{Error, Result};
use crate::evd::{Family, ParamVector, Prior, PriorKind, PriorSet, Slot};
use crate::ingest::parse_helpers::{csv_error, malformed, open_csv};
use crate::stats::{mean, sample_variance};

/// Which distribution family each parameter's prior takes.
#[derive(Debug, Clone, PartialEq)]
pub struct PriorKinds {
    kinds: BTreeMap<String, PriorKind>,
}

impl PriorKinds {
    /// Gamma for the positive-support intercepts (`lambda0`, `sigma0`),
    /// normal for everything else.
    pub fn standard() -> Self {
        let mut kinds = BTreeMap::new();
        kinds.insert("lambda0".to_string(), PriorKind::Gamma);
        kinds.insert("sigma0".to_string(), PriorKind::Gamma);
        Self { kinds }
    }

    pub fn with(mut self, name: &str, kind: PriorKind) -> Self {
        self.kinds.insert(name.to_string(), kind);
        self
    }

    pub fn kind(&self, name: &str) -> PriorKind {
        self.kinds.get(name).copied().unwrap_or(PriorKind::Normal)
    }
}

impl Default for PriorKinds {
    fn default() -> Self {
        Self::standard()
    }
}

/// Maximum-likelihood estimates from a network of stations, per parameter.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct PriorNetwork {
    pub values: BTreeMap<String, Vec<(String, f64)>>,
}

impl PriorNetwork {
    pub fn values_by_param(&self) -> BTreeMap<String, Vec<f64>> {
        self.values
            .iter()
            .map(|(k, v)| (k.clone(), v.iter().map(|(_, x)| *x).collect()))
            .collect()
    }
}

/// Reads a `param,station,value` file.
pub fn read_prior_network(path: impl AsRef<Path>) -> Result<PriorNetwork> {
    let path = path.as_ref();
    let mut reader = open_csv(path, &["param", "station", "value"])?;
    let mut network = PriorNetwork::default();
    for record in reader.records() {
        let record = record.map_err(|e| csv_error(path, e))?;
        let line = record.position().map(|p| p.line()).unwrap_or(0);
        let value: f64 = record[2]
            .parse()
            .ok()
            .filter(|v: &f64| v.is_finite())
            .ok_or_else(|| malformed(path, line, format!("invalid value `{}`", &record[2])))?;
        network
            .values
            .entry(record[0].to_string())
            .or_default()
            .push((record[1].to_string(), value));
    }
    Ok(network)
}

/// Fits one prior per parameter: normal by sample mean and standard
/// deviation, gamma by the method of moments. Spreads are floored at
/// `1e-6 × |mean|` and the affected parameters are listed in
/// [`PriorSet::degenerate`].
pub fn fit_priors_from_values(
    values: &BTreeMap<String, Vec<f64>>,
    kinds: &PriorKinds,
) -> Result<PriorSet> {
    let mut set = PriorSet::new();
    for (name, xs) in values {
        if xs.len() < 2 {
            return Err(Error::InsufficientData(format!(
                "prior for {name} needs estimates from at least 2 stations"
            )));
        }
        let m = mean(xs);
        let sd_floor = (1e-6 * m.abs()).max(1e-12);
        let mut sd = sample_variance(xs).sqrt();
        if sd < sd_floor {
            log::warn!("{name}: all station estimates (nearly) identical; flooring the prior spread");
            set.degenerate.push(name.clone());
            sd = sd_floor;
        }
        let prior = match kinds.kind(name) {
            PriorKind::Normal => Prior::normal(m, sd)?,
            PriorKind::Gamma => {
                if let Some(bad) = xs.iter().find(|x| **x <= 0.0) {
                    return Err(Error::InvalidArgument(format!(
                        "{name} has a gamma prior but a nonpositive estimate {bad}"
                    )));
                }
                let v = sd * sd;
                Prior::gamma(m * m / v, m / v)?
            }
            PriorKind::Uniform => {
                return Err(Error::InvalidArgument(format!(
                    "{name}: uniform priors are not fitted from station estimates"
                )))
            }
        };
        set.insert(name, prior);
    }
    Ok(set)
}

/// Fits priors for all six parameters of `family` from per-station MLEs.
pub fn fit_priors(mles: &[ParamVector], family: Family, kinds: &PriorKinds) -> Result<PriorSet> {
    if mles.len() < 2 {
        return Err(Error::InsufficientData("prior fitting needs at least 2 stations".into()));
    }
    let values = Slot::ALL
        .iter()
        .map(|s| (s.name(family).to_string(), mles.iter().map(|m| m.get(*s)).collect()))
        .collect();
    fit_priors_from_values(&values, kinds)
}
