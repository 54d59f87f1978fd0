//! Sliding-block hindcasts, data-length sweeps and the GEV sensitivity
//! sweep.

use std::fmt::Write as _;

use rayon::prelude::*;

use crate::calibrate::{default_bounds, fit_mle, DeConfig};
use crate::error::{Error, Result};
use crate::evd::{Family, ModelStructure, ParamVector, StructureTag};
use crate::ingest::{sliding_blocks, subset_recent, DailySeries, TemperatureSeries};
use crate::pipeline::{fit_models, preprocess, PipelineConfig, PipelineOutput};
use crate::project::{gev_return_level, rl_distribution, ReturnLevelDistribution, QUANTILE_LEVELS};
use crate::rng::derive_seed;

/// Outcome of one experiment cell; failures keep their reason.
pub type CellOutcome<T> = std::result::Result<T, String>;

fn status<T>(o: &CellOutcome<T>) -> String {
    match o {
        Ok(_) => "ok".to_string(),
        Err(e) => format!("failed: {}", e.replace([',', '\n'], ";")),
    }
}

fn fmt_quantiles(d: &ReturnLevelDistribution) -> String {
    match d.quantiles() {
        Some(q) => q.iter().map(|v| v.to_string()).collect::<Vec<_>>().join(","),
        None => vec!["NA"; QUANTILE_LEVELS.len()].join(","),
    }
}

const QUANTILE_HEADER: &str = "q0,q05,q25,q50,q75,q95,q100";

#[derive(Debug, Clone, PartialEq)]
pub struct HindcastBlock {
    pub start_year: i32,
    pub end_year: i32,
    pub outcome: CellOutcome<ReturnLevelDistribution>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct HindcastResult {
    pub return_period: f64,
    pub seed: u64,
    pub blocks: Vec<HindcastBlock>,
}

impl HindcastResult {
    /// One row per block: the return-level quantiles of its stationary fit.
    pub fn to_csv(&self) -> String {
        let mut out = format!("cell,start_year,end_year,return_period,{QUANTILE_HEADER},invalid,status\n");
        for (i, b) in self.blocks.iter().enumerate() {
            let (q, invalid) = match &b.outcome {
                Ok(d) => (fmt_quantiles(d), d.invalid_count().to_string()),
                Err(_) => (vec!["NA"; QUANTILE_LEVELS.len()].join(","), "NA".to_string()),
            };
            let _ = writeln!(
                out,
                "block{i},{},{},{},{q},{invalid},{}",
                b.start_year,
                b.end_year,
                self.return_period,
                status(&b.outcome)
            );
        }
        out
    }

    pub fn medians(&self) -> Vec<Option<f64>> {
        self.blocks
            .iter()
            .map(|b| b.outcome.as_ref().ok().and_then(|d| d.median()))
            .collect()
    }
}

/// Fits the stationary model within each sliding block and returns its
/// `return_period` level distribution. Each block is preprocessed on its own.
pub fn sliding_hindcast(
    series: &DailySeries,
    temps: &TemperatureSeries,
    block_years: u32,
    n_blocks: u32,
    return_period: f64,
    config: &PipelineConfig,
) -> Result<HindcastResult> {
    let blocks = sliding_blocks(series, block_years, n_blocks)?;
    let cells: Vec<HindcastBlock> = blocks
        .par_iter()
        .map(|block| {
            let start_year = block.first_year().unwrap_or_default();
            let end_year = block.last_year().unwrap_or_default();
            let mut cfg = config.clone().with_seed(derive_seed(config.seed(), &format!("hindcast/{start_year}")));
            cfg.structures = vec![StructureTag::St];
            cfg.projection_years.clear();
            let outcome = preprocess(block, &cfg)
                .and_then(|pre| fit_models(&pre.data, temps, &cfg))
                .and_then(|out| rl_distribution(&out.fits[0].ensemble, temps, end_year, return_period))
                .map_err(|e| e.to_string());
            HindcastBlock {
                start_year,
                end_year,
                outcome,
            }
        })
        .collect();
    Ok(HindcastResult {
        return_period,
        seed: config.seed(),
        blocks: cells,
    })
}

#[derive(Debug, Clone, PartialEq)]
pub struct LengthCell {
    pub length: u32,
    pub outcome: CellOutcome<PipelineOutput>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct LengthSweepResult {
    pub seed: u64,
    pub cells: Vec<LengthCell>,
}

impl LengthSweepResult {
    pub fn cell(&self, length: u32) -> Option<&LengthCell> {
        self.cells.iter().find(|c| c.length == length)
    }

    /// `length,structure,aic,bic,dic,log_ml,bma_weight,status`.
    pub fn weights_csv(&self) -> String {
        let mut out = String::from("length,structure,aic,bic,dic,log_ml,bma_weight,status\n");
        let opt = |v: Option<f64>| v.map_or_else(|| "NA".to_string(), |x| x.to_string());
        for c in &self.cells {
            match &c.outcome {
                Ok(o) => {
                    for r in &o.report.rows {
                        let _ = writeln!(
                            out,
                            "{},{},{},{},{},{},{},ok",
                            c.length,
                            r.structure,
                            r.aic,
                            r.bic,
                            opt(r.dic),
                            opt(r.log_ml),
                            r.bma_weight
                        );
                    }
                    for (tag, e) in &o.failures {
                        let _ = writeln!(
                            out,
                            "{},{tag},NA,NA,NA,NA,0,{}",
                            c.length,
                            status::<()>(&Err(e.clone()))
                        );
                    }
                }
                Err(_) => {
                    let _ = writeln!(out, "{},all,NA,NA,NA,NA,NA,{}", c.length, status(&c.outcome));
                }
            }
        }
        out
    }

    /// `length,year,return_period,q0,…,q100,invalid,status` for the
    /// model-averaged distribution.
    pub fn levels_csv(&self) -> String {
        let mut out = format!("length,year,return_period,{QUANTILE_HEADER},invalid,status\n");
        for c in &self.cells {
            match &c.outcome {
                Ok(o) => {
                    for p in &o.projections {
                        let _ = writeln!(
                            out,
                            "{},{},{},{},{},ok",
                            c.length,
                            p.year,
                            p.return_period,
                            fmt_quantiles(&p.bma),
                            p.bma.invalid_count()
                        );
                    }
                }
                Err(_) => {
                    let _ = writeln!(
                        out,
                        "{},NA,NA,{},NA,{}",
                        c.length,
                        vec!["NA"; QUANTILE_LEVELS.len()].join(","),
                        status(&c.outcome)
                    );
                }
            }
        }
        out
    }
}

/// Runs the full pipeline on the most recent `length` years for each
/// length. Every cell uses the configured seed, so a full-length cell
/// reproduces the standalone pipeline.
pub fn data_length_sweep(
    series: &DailySeries,
    temps: &TemperatureSeries,
    lengths: &[u32],
    config: &PipelineConfig,
) -> Result<LengthSweepResult> {
    let record = match (series.first_year(), series.last_year()) {
        (Some(a), Some(b)) => (b - a + 1) as u32,
        _ => return Err(Error::InsufficientData("empty record".into())),
    };
    if lengths.is_empty() || lengths.iter().any(|&l| l == 0 || l > record) {
        return Err(Error::InvalidArgument(format!(
            "lengths must lie in 1..={record} years"
        )));
    }
    let cells = lengths
        .par_iter()
        .map(|&length| {
            let outcome = subset_recent(series, length)
                .and_then(|s| preprocess(&s, config))
                .and_then(|pre| fit_models(&pre.data, temps, config))
                .map_err(|e| e.to_string());
            LengthCell { length, outcome }
        })
        .collect();
    Ok(LengthSweepResult {
        seed: config.seed(),
        cells,
    })
}

/// |θᵗ − θ| / |θ| per active parameter; `None` where |θ| < 1e-12.
pub fn delta_theta(theta_t: &ParamVector, theta_full: &ParamVector, structure: ModelStructure) -> Vec<Option<f64>> {
    structure
        .active_slots()
        .iter()
        .map(|&s| {
            let full = theta_full.get(s);
            (full.abs() >= 1e-12).then(|| (theta_t.get(s) - full).abs() / full.abs())
        })
        .collect()
}

/// (rl_full − rl_t) / rl_full; positive means the shorter record
/// underestimates.
pub fn delta_rl(rl_t: f64, rl_full: f64) -> Result<f64> {
    if !(rl_full > 0.0) {
        return Err(Error::InvalidArgument("full-record return level must be positive".into()));
    }
    Ok((rl_full - rl_t) / rl_full)
}

#[derive(Debug, Clone, PartialEq)]
pub struct GevFitSummary {
    pub theta: ParamVector,
    pub max_loglik: f64,
    pub return_level: f64,
    pub delta_theta: Vec<Option<f64>>,
    pub delta_rl: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct GevCell {
    pub length: u32,
    pub structure: StructureTag,
    pub outcome: CellOutcome<GevFitSummary>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct GevSweepResult {
    pub seed: u64,
    pub reference_year: i32,
    pub return_period: f64,
    pub full: Vec<(StructureTag, CellOutcome<(ParamVector, f64)>)>,
    pub cells: Vec<GevCell>,
}

impl GevSweepResult {
    pub fn cell(&self, length: u32, tag: StructureTag) -> Option<&GevCell> {
        self.cells.iter().find(|c| c.length == length && c.structure == tag)
    }

    /// `length,structure,param,value,delta_theta,status`.
    pub fn theta_csv(&self) -> String {
        let mut out = String::from("length,structure,param,value,delta_theta,status\n");
        for c in &self.cells {
            let structure = ModelStructure::new(Family::Gev, c.structure);
            match &c.outcome {
                Ok(s) => {
                    for ((name, slot), d) in structure
                        .param_names()
                        .iter()
                        .zip(structure.active_slots())
                        .zip(&s.delta_theta)
                    {
                        let d = d.map_or_else(|| "undefined".to_string(), |v| v.to_string());
                        let _ = writeln!(out, "{},{},{name},{},{d},ok", c.length, c.structure, s.theta.get(*slot));
                    }
                }
                Err(_) => {
                    let _ = writeln!(out, "{},{},NA,NA,NA,{}", c.length, c.structure, status(&c.outcome));
                }
            }
        }
        out
    }

    /// `length,structure,year,return_period,level_m,delta_rl,status`.
    pub fn rl_csv(&self) -> String {
        let mut out = String::from("length,structure,year,return_period,level_m,delta_rl,status\n");
        for c in &self.cells {
            let (level, d) = match &c.outcome {
                Ok(s) => (s.return_level.to_string(), s.delta_rl.to_string()),
                Err(_) => ("NA".to_string(), "NA".to_string()),
            };
            let _ = writeln!(
                out,
                "{},{},{},{},{level},{d},{}",
                c.length,
                c.structure,
                self.reference_year,
                self.return_period,
                status(&c.outcome)
            );
        }
        out
    }
}

fn gev_fit(
    series: &DailySeries,
    temps: &TemperatureSeries,
    tag: StructureTag,
    config: &PipelineConfig,
    reference_year: i32,
    return_period: f64,
) -> Result<(ParamVector, f64, f64)> {
    let pre = preprocess(series, config)?;
    let lik = pre.data.likelihood(temps, tag)?;
    let de = DeConfig {
        seed: derive_seed(config.seed(), &format!("gev/{tag}")),
        ..config.de.clone()
    };
    let fit = fit_mle(lik.as_ref(), &default_bounds(lik.as_ref()), &de)?;
    let rl = gev_return_level(&fit.theta, temps.at(reference_year)?, return_period)
        .ok_or_else(|| Error::Numerical("return level undefined at the fitted parameters".into()))?;
    Ok((fit.theta, fit.max_loglik, rl))
}

/// Maximum-likelihood GEV fits on the most recent `lengths` years, each
/// compared with the full-record fit of the same structure through Δθ and
/// the relative error of the `return_period` level at `reference_year`
/// (the record's last year when `None`).
pub fn gev_length_sweep(
    series: &DailySeries,
    temps: &TemperatureSeries,
    lengths: &[u32],
    return_period: f64,
    reference_year: Option<i32>,
    config: &PipelineConfig,
) -> Result<GevSweepResult> {
    if config.family != Family::Gev {
        return Err(Error::InvalidArgument("the GEV sweep needs the gev family".into()));
    }
    if lengths.is_empty() || lengths.windows(2).any(|w| w[0] >= w[1]) || lengths[0] == 0 {
        return Err(Error::InvalidArgument("lengths must be positive and strictly increasing".into()));
    }
    let reference_year = reference_year
        .or(series.last_year())
        .ok_or_else(|| Error::InsufficientData("empty record".into()))?;
    temps.at(reference_year)?;

    let full: Vec<(StructureTag, CellOutcome<(ParamVector, f64)>)> = config
        .structures
        .par_iter()
        .map(|&tag| {
            let r = gev_fit(series, temps, tag, config, reference_year, return_period)
                .map(|(theta, _, rl)| (theta, rl))
                .map_err(|e| e.to_string());
            (tag, r)
        })
        .collect();

    let jobs: Vec<(u32, StructureTag)> = lengths
        .iter()
        .flat_map(|&l| config.structures.iter().map(move |&t| (l, t)))
        .collect();
    let cells = jobs
        .par_iter()
        .map(|&(length, tag)| {
            let reference = full.iter().find(|(t, _)| *t == tag).map(|(_, r)| r.clone());
            let outcome = match reference {
                Some(Ok((theta_full, rl_full))) => subset_recent(series, length)
                    .and_then(|s| gev_fit(&s, temps, tag, config, reference_year, return_period))
                    .and_then(|(theta, max_loglik, rl)| {
                        Ok(GevFitSummary {
                            delta_theta: delta_theta(&theta, &theta_full, ModelStructure::new(Family::Gev, tag)),
                            delta_rl: delta_rl(rl, rl_full)?,
                            theta,
                            max_loglik,
                            return_level: rl,
                        })
                    })
                    .map_err(|e| e.to_string()),
                Some(Err(e)) => Err(format!("full-record fit failed: {e}")),
                None => Err("structure not configured".to_string()),
            };
            GevCell {
                length,
                structure: tag,
                outcome,
            }
        })
        .collect();
    Ok(GevSweepResult {
        seed: config.seed(),
        reference_year,
        return_period,
        full,
        cells,
    })
}
