use std::fmt::Write as _;
use std::path::Path;

use rand::seq::index;
use rayon::prelude::*;

use super::{psrf_per_parameter, ram_chain, RamChain, RamConfig};
use crate::error::{Error, Result};
use crate::evd::{LogLikelihood, ModelStructure, ParamVector, Prior, PriorSet};
use crate::ingest::parse_helpers::{csv_error, malformed};
use crate::rng::stream_rng;

/// Chain lengths, burn-in and ensemble size for one calibration.
#[derive(Debug, Clone, PartialEq)]
pub struct CalibrationConfig {
    pub n_chains: usize,
    pub n_iter: usize,
    pub burn_in: usize,
    pub ensemble_size: usize,
    pub seed: u64,
    pub target_accept: f64,
    pub gamma_exponent: f64,
    /// PSRF above this marks the run as not converged (a warning only).
    pub psrf_threshold: f64,
}

impl Default for CalibrationConfig {
    fn default() -> Self {
        Self::paper()
    }
}

impl CalibrationConfig {
    /// 10 chains × 500,000 iterations, 50,000 burn-in, 10,000 draws.
    pub fn paper() -> Self {
        Self {
            n_chains: 10,
            n_iter: 500_000,
            burn_in: 50_000,
            ensemble_size: 10_000,
            seed: 0,
            target_accept: 0.234,
            gamma_exponent: 2.0 / 3.0,
            psrf_threshold: 1.1,
        }
    }

    /// 4 chains × 20,000 iterations for quick runs.
    pub fn desk() -> Self {
        Self {
            n_chains: 4,
            n_iter: 20_000,
            burn_in: 5_000,
            ..Self::paper()
        }
    }

    pub fn with_seed(mut self, seed: u64) -> Self {
        self.seed = seed;
        self
    }
}

/// Unnormalized log posterior over the active parameters.
pub struct Posterior<'a> {
    lik: &'a dyn LogLikelihood,
    priors: Vec<Prior>,
}

impl<'a> Posterior<'a> {
    pub fn new(lik: &'a dyn LogLikelihood, priors: &PriorSet) -> Result<Self> {
        Ok(Self {
            lik,
            priors: priors.for_structure(&lik.structure())?,
        })
    }

    pub fn structure(&self) -> ModelStructure {
        self.lik.structure()
    }

    pub fn log_prior(&self, active: &[f64]) -> f64 {
        self.priors.iter().zip(active).map(|(p, x)| p.ln_pdf(*x)).sum()
    }

    pub fn log_likelihood(&self, active: &[f64]) -> f64 {
        self.lik.log_likelihood_active(active)
    }

    pub fn log_density(&self, active: &[f64]) -> f64 {
        let lp = self.log_prior(active);
        if lp == f64::NEG_INFINITY || lp.is_nan() {
            return f64::NEG_INFINITY;
        }
        let ll = self.log_likelihood(active);
        if ll.is_nan() {
            f64::NEG_INFINITY
        } else {
            lp + ll
        }
    }
}

/// Proposal scales from the diagonal curvature of the target at `x`,
/// falling back to a tenth of each coordinate's magnitude.
fn initial_scales<F: Fn(&[f64]) -> f64 + ?Sized>(target: &F, x: &[f64]) -> Vec<f64> {
    let f0 = target(x);
    let dim = x.len() as f64;
    x.iter()
        .enumerate()
        .map(|(i, &xi)| {
            let fallback = 0.1 * xi.abs().max(1e-3);
            let h = 1e-3 * xi.abs().max(1e-2);
            let mut probe = x.to_vec();
            probe[i] = xi + h;
            let up = target(&probe);
            probe[i] = xi - h;
            let down = target(&probe);
            let d2 = (up - 2.0 * f0 + down) / (h * h);
            if d2.is_finite() && d2 < 0.0 {
                2.38 / dim.sqrt() / (-d2).sqrt()
            } else {
                fallback
            }
        })
        .collect()
}

#[derive(Debug, Clone, PartialEq)]
pub struct Provenance {
    pub n_chains: usize,
    pub n_iterations: usize,
    pub burn_in: usize,
    pub seed: u64,
    /// One entry per active parameter; empty with a single chain.
    pub psrf: Vec<f64>,
    pub acceptance_rates: Vec<f64>,
    pub converged: bool,
    pub warnings: Vec<String>,
}

/// Calibrated parameter draws for one model structure.
#[derive(Debug, Clone, PartialEq)]
pub struct PosteriorEnsemble {
    pub structure: ModelStructure,
    /// Active-parameter draws, one row per draw.
    pub draws: Vec<Vec<f64>>,
    pub log_posts: Vec<f64>,
    pub provenance: Provenance,
    /// POT threshold the PP/GPD data were built with.
    pub threshold_m: Option<f64>,
}

impl PosteriorEnsemble {
    pub fn len(&self) -> usize {
        self.draws.len()
    }

    pub fn is_empty(&self) -> bool {
        self.draws.is_empty()
    }

    pub fn param_names(&self) -> Vec<&'static str> {
        self.structure.param_names()
    }

    pub fn theta(&self, i: usize) -> ParamVector {
        self.structure.unpack(&self.draws[i])
    }

    pub fn mean(&self) -> Vec<f64> {
        let p = self.structure.n_params();
        let mut m = vec![0.0; p];
        for d in &self.draws {
            for (acc, v) in m.iter_mut().zip(d) {
                *acc += v;
            }
        }
        m.iter_mut().for_each(|v| *v /= self.draws.len() as f64);
        m
    }

    /// Column `j` of the draws.
    pub fn column(&self, j: usize) -> Vec<f64> {
        self.draws.iter().map(|d| d[j]).collect()
    }
}

/// Runs `n_chains` robust adaptive Metropolis chains from `start` on the
/// posterior, discards burn-in and draws `ensemble_size` parameter sets
/// uniformly without replacement from the pooled remainder.
pub fn calibrate_model(
    lik: &dyn LogLikelihood,
    priors: &PriorSet,
    start: &ParamVector,
    config: &CalibrationConfig,
) -> Result<PosteriorEnsemble> {
    let posterior = Posterior::new(lik, priors)?;
    let structure = lik.structure();
    let start = structure.pack(start);
    if config.n_chains < 1 || config.n_iter < 1 {
        return Err(Error::InvalidArgument("need at least one chain and one iteration".into()));
    }
    if config.burn_in >= config.n_iter {
        return Err(Error::InvalidArgument("burn-in must be shorter than the chain".into()));
    }
    let pooled = config.n_chains * (config.n_iter - config.burn_in);
    if config.ensemble_size > pooled {
        return Err(Error::InvalidArgument(format!(
            "ensemble size {} exceeds the {pooled} pooled post-burn-in samples",
            config.ensemble_size
        )));
    }
    let target = |x: &[f64]| posterior.log_density(x);
    if !target(&start).is_finite() {
        return Err(Error::StartOutsideSupport);
    }
    let scales = initial_scales(&target, &start);

    let chains: Vec<RamChain> = (0..config.n_chains)
        .into_par_iter()
        .map(|c| {
            let ram = RamConfig {
                target_accept: config.target_accept,
                gamma_exponent: config.gamma_exponent,
                seed: config.seed,
                stream: c as u64,
                adapt: true,
                initial_scale: Some(scales.clone()),
            };
            ram_chain(&target, &start, config.n_iter, &ram)
        })
        .collect::<Result<_>>()?;

    let mut warnings = Vec::new();
    let psrf = if config.n_chains >= 2 && config.n_iter - config.burn_in >= 10 {
        match psrf_per_parameter(&chains, config.burn_in) {
            Ok(v) => v,
            Err(e) => {
                warnings.push(format!("PSRF unavailable: {e}"));
                Vec::new()
            }
        }
    } else {
        warnings.push("PSRF needs at least 2 chains of 10 post-burn-in samples".into());
        Vec::new()
    };
    let names = structure.param_names();
    for (name, r) in names.iter().zip(&psrf) {
        if !(*r <= config.psrf_threshold) {
            warnings.push(format!("{structure} {name}: PSRF {r:.3} exceeds {}", config.psrf_threshold));
        }
    }
    for w in &warnings {
        log::warn!("{w}");
    }
    let converged = !psrf.is_empty() && psrf.iter().all(|r| *r <= config.psrf_threshold);

    let kept = config.n_iter - config.burn_in;
    let mut rng = stream_rng(config.seed, config.n_chains as u64);
    let picks = index::sample(&mut rng, pooled, config.ensemble_size);
    let mut draws = Vec::with_capacity(config.ensemble_size);
    let mut log_posts = Vec::with_capacity(config.ensemble_size);
    for k in picks.iter() {
        let (c, i) = (k / kept, config.burn_in + k % kept);
        draws.push(chains[c].position(i).to_vec());
        log_posts.push(chains[c].log_targets[i]);
    }

    Ok(PosteriorEnsemble {
        structure,
        draws,
        log_posts,
        provenance: Provenance {
            n_chains: config.n_chains,
            n_iterations: config.n_iter,
            burn_in: config.burn_in,
            seed: config.seed,
            psrf,
            acceptance_rates: chains.iter().map(RamChain::acceptance_rate).collect(),
            converged,
            warnings,
        },
        threshold_m: lik.threshold(),
    })
}

/// Writes `draw_index,<params>,log_posterior`.
pub fn write_ensemble_csv(ensemble: &PosteriorEnsemble, path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    let mut out = String::new();
    let names = ensemble.param_names();
    let _ = writeln!(out, "draw_index,{},log_posterior", names.join(","));
    for (i, (d, lp)) in ensemble.draws.iter().zip(&ensemble.log_posts).enumerate() {
        let _ = write!(out, "{i}");
        for v in d {
            let _ = write!(out, ",{v}");
        }
        let _ = writeln!(out, ",{lp}");
    }
    std::fs::write(path, out).map_err(|e| Error::io(path, e))
}

/// Writes the provenance sidecar as `key = value` lines.
pub fn write_provenance(ensemble: &PosteriorEnsemble, path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    let p = &ensemble.provenance;
    let join = |v: &[f64]| v.iter().map(|x| x.to_string()).collect::<Vec<_>>().join(",");
    let mut out = String::new();
    let _ = writeln!(out, "structure = {}", ensemble.structure);
    let _ = writeln!(out, "params = {}", ensemble.param_names().join(","));
    let _ = writeln!(out, "n_chains = {}", p.n_chains);
    let _ = writeln!(out, "n_iterations = {}", p.n_iterations);
    let _ = writeln!(out, "burn_in = {}", p.burn_in);
    let _ = writeln!(out, "ensemble_size = {}", ensemble.len());
    let _ = writeln!(out, "seed = {}", p.seed);
    let _ = writeln!(out, "psrf = {}", join(&p.psrf));
    let _ = writeln!(out, "acceptance_rates = {}", join(&p.acceptance_rates));
    let _ = writeln!(out, "converged = {}", p.converged);
    if let Some(t) = ensemble.threshold_m {
        let _ = writeln!(out, "threshold_m = {t}");
    }
    for (i, w) in p.warnings.iter().enumerate() {
        let _ = writeln!(out, "warning.{i} = {w}");
    }
    std::fs::write(path, out).map_err(|e| Error::io(path, e))
}

/// Reads draws written by [`write_ensemble_csv`]; provenance is left empty.
pub fn read_ensemble_csv(
    path: impl AsRef<Path>,
    structure: ModelStructure,
    threshold_m: Option<f64>,
) -> Result<PosteriorEnsemble> {
    let path = path.as_ref();
    let file = std::fs::File::open(path).map_err(|e| Error::io(path, e))?;
    let mut reader = csv::Reader::from_reader(file);
    let names = structure.param_names();
    let header = reader.headers().map_err(|e| csv_error(path, e))?.clone();
    let expected: Vec<String> = std::iter::once("draw_index".to_string())
        .chain(names.iter().map(|s| s.to_string()))
        .chain(std::iter::once("log_posterior".to_string()))
        .collect();
    if header.iter().collect::<Vec<_>>() != expected.iter().map(String::as_str).collect::<Vec<_>>() {
        return Err(malformed(path, 1, format!("expected header `{}`", expected.join(","))));
    }
    let mut draws = Vec::new();
    let mut log_posts = Vec::new();
    for record in reader.records() {
        let record = record.map_err(|e| csv_error(path, e))?;
        let line = record.position().map(|p| p.line()).unwrap_or(0);
        let nums: Vec<f64> = record
            .iter()
            .skip(1)
            .map(|s| s.parse::<f64>().map_err(|_| malformed(path, line, format!("invalid number `{s}`"))))
            .collect::<Result<_>>()?;
        log_posts.push(nums[names.len()]);
        draws.push(nums[..names.len()].to_vec());
    }
    Ok(PosteriorEnsemble {
        structure,
        draws,
        log_posts,
        provenance: Provenance {
            n_chains: 0,
            n_iterations: 0,
            burn_in: 0,
            seed: 0,
            psrf: Vec::new(),
            acceptance_rates: Vec::new(),
            converged: false,
            warnings: Vec::new(),
        },
        threshold_m,
    })
}
