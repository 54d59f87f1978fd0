//! End-to-end runs: preprocess a station record, fit every structure of the
//! ladder, compare them, and project model-averaged return levels.

use rayon::prelude::*;

use crate::calibrate::{
    calibrate_model, default_bounds, fit_mle, CalibrationConfig, DeConfig, MleFit, PosteriorEnsemble,
};
use crate::compare::{evaluate_model, BridgeConfig, ComparisonReport, DicVariant, ModelEvidence};
use crate::error::{Error, Result};
use crate::evd::{
    Family, GevLikelihood, LogLikelihood, ModelStructure, PpGpdLikelihood, Prior, PriorSet, StructureTag,
};
use crate::ingest::{
    annual_block_maxima, decluster, detrend_annual_means, detrend_linear_with_fit, pot_threshold, AnnualMaxima,
    DailySeries, DroppedYear, ExceedanceSet, LinearTrend, TemperatureSeries,
};
use crate::project::{bma_combine, rl_distribution, CombineMode, ReturnLevelDistribution};
use crate::rng::derive_seed;

#[derive(Debug, Clone, PartialEq)]
pub enum PriorChoice {
    /// One set covering every parameter name of the family.
    Fixed(PriorSet),
    /// Uniform over each structure's maximum-likelihood search box.
    Flat,
}

#[derive(Debug, Clone, PartialEq)]
pub struct PipelineConfig {
    pub family: Family,
    pub structures: Vec<StructureTag>,
    pub threshold_quantile: f64,
    pub decluster_gap_days: u32,
    pub max_missing_fraction: f64,
    pub calibration: CalibrationConfig,
    pub de: DeConfig,
    pub dic_variant: DicVariant,
    pub n_obs_override: Option<usize>,
    pub model_prior: Option<Vec<f64>>,
    pub projection_years: Vec<i32>,
    pub return_periods: Vec<f64>,
    pub combine_mode: CombineMode,
    pub priors: PriorChoice,
}

impl PipelineConfig {
    /// Full-length chains; see [`CalibrationConfig::paper`].
    pub fn paper(family: Family) -> Self {
        Self {
            family,
            structures: StructureTag::ALL.to_vec(),
            threshold_quantile: 0.99,
            decluster_gap_days: 1,
            max_missing_fraction: 0.10,
            calibration: CalibrationConfig::paper(),
            de: DeConfig::default(),
            dic_variant: DicVariant::default(),
            n_obs_override: None,
            model_prior: None,
            projection_years: Vec::new(),
            return_periods: vec![100.0],
            combine_mode: CombineMode::default(),
            priors: PriorChoice::Flat,
        }
    }

    pub fn desk(family: Family) -> Self {
        Self {
            calibration: CalibrationConfig::desk(),
            ..Self::paper(family)
        }
    }

    pub fn with_seed(mut self, seed: u64) -> Self {
        self.calibration.seed = seed;
        self
    }

    pub fn seed(&self) -> u64 {
        self.calibration.seed
    }
}

/// Likelihood-ready data for either family.
#[derive(Debug, Clone, PartialEq)]
pub enum ModelData {
    Pot(ExceedanceSet),
    Gev(AnnualMaxima),
}

impl ModelData {
    pub fn family(&self) -> Family {
        match self {
            Self::Pot(_) => Family::PpGpd,
            Self::Gev(_) => Family::Gev,
        }
    }

    pub fn likelihood(&self, temps: &TemperatureSeries, tag: StructureTag) -> Result<Box<dyn LogLikelihood>> {
        let structure = ModelStructure::new(self.family(), tag);
        Ok(match self {
            Self::Pot(set) => Box::new(PpGpdLikelihood::new(set, temps, structure)?),
            Self::Gev(maxima) => Box::new(GevLikelihood::new(maxima, temps, structure)?),
        })
    }

    pub fn first_year(&self) -> Option<i32> {
        match self {
            Self::Pot(set) => set.years.first().map(|y| y.year),
            Self::Gev(m) => m.years.first().map(|y| y.year),
        }
    }

    pub fn last_year(&self) -> Option<i32> {
        match self {
            Self::Pot(set) => set.years.last().map(|y| y.year),
            Self::Gev(m) => m.years.last().map(|y| y.year),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Preprocessed {
    pub data: ModelData,
    /// Removed sea-level trend (PP/GPD only).
    pub trend: Option<LinearTrend>,
    /// Years dropped for missing data (GEV only).
    pub dropped_years: Vec<DroppedYear>,
}

/// PP/GPD: linear detrending, quantile threshold, declustering.
/// GEV: annual-mean detrending and annual block maxima.
pub fn preprocess(series: &DailySeries, config: &PipelineConfig) -> Result<Preprocessed> {
    match config.family {
        Family::PpGpd => {
            let (detrended, trend) = detrend_linear_with_fit(series)?;
            let threshold = pot_threshold(&detrended, config.threshold_quantile)?;
            let set = decluster(&detrended, threshold, config.decluster_gap_days)?;
            Ok(Preprocessed {
                data: ModelData::Pot(set),
                trend: Some(trend),
                dropped_years: Vec::new(),
            })
        }
        Family::Gev => {
            let detrended = detrend_annual_means(series);
            let mut maxima = annual_block_maxima(&detrended.series, config.max_missing_fraction);
            for year in detrended.dropped_years {
                if !maxima.dropped_years.iter().any(|d| d.year == year) {
                    maxima.dropped_years.push(DroppedYear {
                        year,
                        missing_fraction: 1.0,
                    });
                }
            }
            maxima.dropped_years.sort_by_key(|d| d.year);
            if maxima.is_empty() {
                return Err(Error::InsufficientData("no year passes the missing-data cap".into()));
            }
            Ok(Preprocessed {
                dropped_years: maxima.dropped_years.clone(),
                data: ModelData::Gev(maxima),
                trend: None,
            })
        }
    }
}

/// Uniform priors over the search box of `lik`'s active parameters.
pub fn flat_priors(lik: &dyn LogLikelihood) -> Result<PriorSet> {
    let structure = lik.structure();
    let mut set = PriorSet::new();
    for (name, (lo, hi)) in structure.param_names().into_iter().zip(default_bounds(lik)) {
        set.insert(name, Prior::uniform(lo, hi)?);
    }
    Ok(set)
}

#[derive(Debug, Clone, PartialEq)]
pub struct StructureFit {
    pub mle: MleFit,
    pub ensemble: PosteriorEnsemble,
    pub evidence: ModelEvidence,
}

impl StructureFit {
    pub fn structure(&self) -> ModelStructure {
        self.ensemble.structure
    }
}

/// Maximum-likelihood fit, calibration and evidence for one structure.
pub fn fit_structure(
    data: &ModelData,
    temps: &TemperatureSeries,
    tag: StructureTag,
    config: &PipelineConfig,
) -> Result<StructureFit> {
    let lik = data.likelihood(temps, tag)?;
    let lik = lik.as_ref();
    let seed = config.seed();
    let de = DeConfig {
        seed: derive_seed(seed, &format!("de/{tag}")),
        ..config.de.clone()
    };
    let mle = fit_mle(lik, &default_bounds(lik), &de)?;
    let priors = match &config.priors {
        PriorChoice::Fixed(set) => set.clone(),
        PriorChoice::Flat => flat_priors(lik)?,
    };
    let calibration = config
        .calibration
        .clone()
        .with_seed(derive_seed(seed, &format!("mcmc/{tag}")));
    let ensemble = calibrate_model(lik, &priors, &mle.theta, &calibration)?;
    let bridge = BridgeConfig {
        seed: derive_seed(seed, &format!("bridge/{tag}")),
        ..BridgeConfig::default()
    };
    let evidence = evaluate_model(&ensemble, lik, &priors, config.dic_variant, &bridge)?;
    Ok(StructureFit { mle, ensemble, evidence })
}

/// Per-model and model-averaged return levels for one year and period.
#[derive(Debug, Clone, PartialEq)]
pub struct Projection {
    pub year: i32,
    pub return_period: f64,
    pub per_model: Vec<(StructureTag, ReturnLevelDistribution)>,
    pub bma: ReturnLevelDistribution,
}

#[derive(Debug, Clone, PartialEq)]
pub struct PipelineOutput {
    pub fits: Vec<StructureFit>,
    /// Structures that failed, with the reason.
    pub failures: Vec<(StructureTag, String)>,
    pub report: ComparisonReport,
    pub projections: Vec<Projection>,
}

impl PipelineOutput {
    pub fn fit(&self, tag: StructureTag) -> Option<&StructureFit> {
        self.fits.iter().find(|f| f.structure().tag == tag)
    }
}

/// Fits every configured structure to `data`, then compares and projects.
/// A failing structure is recorded and the rest continue; the run fails
/// only if none succeeds.
pub fn fit_models(data: &ModelData, temps: &TemperatureSeries, config: &PipelineConfig) -> Result<PipelineOutput> {
    if data.family() != config.family {
        return Err(Error::InvalidArgument("data family differs from the configured family".into()));
    }
    if config.structures.is_empty() {
        return Err(Error::InvalidArgument("no structures selected".into()));
    }
    for &year in &config.projection_years {
        temps.at(year)?;
    }
    let results: Vec<(StructureTag, Result<StructureFit>)> = config
        .structures
        .par_iter()
        .map(|&tag| (tag, fit_structure(data, temps, tag, config)))
        .collect();
    let mut fits = Vec::new();
    let mut failures = Vec::new();
    for (tag, r) in results {
        match r {
            Ok(f) => fits.push(f),
            Err(e) => {
                log::warn!("{tag} failed: {e}");
                failures.push((tag, e.to_string()));
            }
        }
    }
    if fits.is_empty() {
        let reasons: Vec<String> = failures.iter().map(|(t, e)| format!("{t}: {e}")).collect();
        return Err(Error::Numerical(format!("every structure failed ({})", reasons.join("; "))));
    }

    let evidence: Vec<ModelEvidence> = fits.iter().map(|f| f.evidence.clone()).collect();
    let n_obs = match config.n_obs_override {
        Some(n) => n,
        None => data.likelihood(temps, fits[0].structure().tag)?.n_obs(),
    };
    let model_prior = match &config.model_prior {
        Some(p) if failures.is_empty() => Some(p.clone()),
        Some(p) => {
            let kept: Vec<f64> = config
                .structures
                .iter()
                .zip(p)
                .filter(|(t, _)| fits.iter().any(|f| f.structure().tag == **t))
                .map(|(_, w)| *w)
                .collect();
            let total: f64 = kept.iter().sum();
            Some(kept.iter().map(|w| w / total).collect())
        }
        None => None,
    };
    let report = ComparisonReport::build(&evidence, n_obs, model_prior.as_deref())?;
    let weights = report.weights();

    let mut projections = Vec::new();
    for &year in &config.projection_years {
        for &period in &config.return_periods {
            let per_model: Vec<(StructureTag, ReturnLevelDistribution)> = fits
                .iter()
                .map(|f| Ok((f.structure().tag, rl_distribution(&f.ensemble, temps, year, period)?)))
                .collect::<Result<_>>()?;
            let refs: Vec<&ReturnLevelDistribution> = per_model.iter().map(|(_, d)| d).collect();
            let bma = bma_combine(
                &refs,
                &weights,
                config.combine_mode,
                derive_seed(config.seed(), &format!("combine/{year}/{period}")),
            )?;
            projections.push(Projection {
                year,
                return_period: period,
                per_model,
                bma,
            });
        }
    }
    Ok(PipelineOutput {
        fits,
        failures,
        report,
        projections,
    })
}

/// Preprocesses `series` and runs [`fit_models`] on the result.
pub fn run_pipeline(
    series: &DailySeries,
    temps: &TemperatureSeries,
    config: &PipelineConfig,
) -> Result<(Preprocessed, PipelineOutput)> {
    let pre = preprocess(series, config)?;
    let out = fit_models(&pre.data, temps, config)?;
    Ok((pre, out))
}

/// [`run_pipeline`] for the Poisson process / GPD family.
pub fn run_pot_pipeline(
    series: &DailySeries,
    temps: &TemperatureSeries,
    config: &PipelineConfig,
) -> Result<(Preprocessed, PipelineOutput)> {
    if config.family != Family::PpGpd {
        return Err(Error::InvalidArgument("run_pot_pipeline needs the ppgpd family".into()));
    }
    run_pipeline(series, temps, config)
}
