//! Synthetic records with known generating parameters.

use chrono::{Datelike, Days, NaiveDate};
use rand::seq::index;
use rand::Rng;
use rand_distr::{Distribution, Normal, Poisson};

use crate::error::{Error, Result};
use crate::evd::{link_params, ParamVector, XI_ZERO_TOL};
use crate::ingest::{AnnualMaxima, AnnualMaximum, DailySeries, Event, ExceedanceSet, TemperatureSeries, YearRecord};
use crate::rng::{stream_rng, StreamRng};

fn days_in_year(year: i32) -> u32 {
    if NaiveDate::from_ymd_opt(year, 2, 29).is_some() {
        366
    } else {
        365
    }
}

fn jan1(year: i32) -> Result<NaiveDate> {
    NaiveDate::from_ymd_opt(year, 1, 1).ok_or_else(|| Error::InvalidArgument(format!("year {year} out of range")))
}

/// Anomalies rising linearly from `start_k` in `first_year` to `end_k` in
/// the last of `n_years` years.
pub fn temperature_ramp(first_year: i32, n_years: usize, start_k: f64, end_k: f64) -> TemperatureSeries {
    let step = if n_years > 1 {
        (end_k - start_k) / (n_years - 1) as f64
    } else {
        0.0
    };
    let anomalies = (0..n_years).map(|i| start_k + step * i as f64).collect();
    TemperatureSeries::new(first_year, anomalies).expect("ramp values are finite")
}

/// Inverse-CDF GPD excess.
fn gpd_excess(rng: &mut StreamRng, sigma: f64, xi: f64) -> f64 {
    let u: f64 = rng.random();
    if xi.abs() < XI_ZERO_TOL {
        -sigma * (1.0 - u).ln()
    } else {
        sigma / xi * ((1.0 - u).powf(-xi) - 1.0)
    }
}

/// Inverse-CDF GEV variate.
pub fn gev_variate(rng: &mut StreamRng, mu: f64, sigma: f64, xi: f64) -> f64 {
    let u: f64 = rng.random::<f64>().max(f64::MIN_POSITIVE);
    let y = -u.ln();
    if xi.abs() < XI_ZERO_TOL {
        mu - sigma * y.ln()
    } else {
        mu + sigma / xi * (y.powf(-xi) - 1.0)
    }
}

/// Per year: a Poisson number of events with rate λ(T)·days, excesses drawn
/// from the GPD at that year's temperature, placed on distinct random days.
pub fn simulate_exceedances(
    theta: &ParamVector,
    temps: &TemperatureSeries,
    first_year: i32,
    n_years: usize,
    threshold: f64,
    seed: u64,
) -> Result<ExceedanceSet> {
    let mut rng = stream_rng(seed, 0);
    let mut years = Vec::with_capacity(n_years);
    for year in first_year..first_year + n_years as i32 {
        let p = link_params(theta, temps.at(year)?);
        if !(p.rate_or_location > 0.0) || !(p.scale > 0.0) {
            return Err(Error::InvalidArgument(format!("invalid generating parameters in {year}")));
        }
        let days = days_in_year(year);
        let mean = p.rate_or_location * days as f64;
        let n = (Poisson::new(mean).map_err(|e| Error::InvalidArgument(e.to_string()))?.sample(&mut rng) as usize)
            .min(days as usize);
        let mut offsets: Vec<usize> = index::sample(&mut rng, days as usize, n).into_vec();
        offsets.sort_unstable();
        let start = jan1(year)?;
        let events = offsets
            .into_iter()
            .map(|d| Event {
                date: start + Days::new(d as u64),
                level_m: threshold + gpd_excess(&mut rng, p.scale, p.shape).max(1e-12),
            })
            .collect();
        years.push(YearRecord {
            year,
            observed_days: days,
            events,
        });
    }
    ExceedanceSet::new(threshold, years)
}

/// One GEV annual maximum per year at that year's temperature.
pub fn simulate_annual_maxima(
    theta: &ParamVector,
    temps: &TemperatureSeries,
    first_year: i32,
    n_years: usize,
    seed: u64,
) -> Result<AnnualMaxima> {
    let mut rng = stream_rng(seed, 0);
    let mut years = Vec::with_capacity(n_years);
    for year in first_year..first_year + n_years as i32 {
        let p = link_params(theta, temps.at(year)?);
        years.push(AnnualMaximum {
            year,
            maximum_m: gev_variate(&mut rng, p.rate_or_location, p.scale, p.shape),
        });
    }
    Ok(AnnualMaxima {
        years,
        dropped_years: Vec::new(),
    })
}

/// Daily maxima whose exceedances of `base_level` follow the PP/GPD model
/// at rate λ(T) per day. Other days sit uniformly in
/// `(base_level − 0.5, base_level)`. Events are at least two days apart, so
/// declustering with a one-day gap keeps each. A linear sea-level trend of
/// `trend_m_per_year` is added on top.
pub fn simulate_daily_series(
    theta: &ParamVector,
    temps: &TemperatureSeries,
    first_year: i32,
    n_years: usize,
    base_level: f64,
    trend_m_per_year: f64,
    seed: u64,
) -> Result<DailySeries> {
    let mut rng = stream_rng(seed, 0);
    let start = jan1(first_year)?;
    let mut values = Vec::new();
    for year in first_year..first_year + n_years as i32 {
        let p = link_params(theta, temps.at(year)?);
        if !(p.rate_or_location > 0.0) || !(p.scale > 0.0) {
            return Err(Error::InvalidArgument(format!("invalid generating parameters in {year}")));
        }
        let mut last_event: Option<usize> = None;
        for d in 0..days_in_year(year) as usize {
            let event = rng.random::<f64>() < p.rate_or_location && last_event.is_none_or(|l| d >= l + 2);
            let v = if event {
                last_event = Some(d);
                base_level + gpd_excess(&mut rng, p.scale, p.shape).max(1e-9)
            } else {
                base_level - 0.5 * rng.random::<f64>()
            };
            values.push(v);
        }
    }
    let per_day = trend_m_per_year / 365.25;
    let values = values
        .into_iter()
        .enumerate()
        .map(|(i, v)| Some(v + per_day * i as f64))
        .collect();
    DailySeries::new("synthetic", start, values)
}

/// Daily levels whose annual-mean-detrended block maxima are exactly GEV
/// draws at each year's temperature, the same draws that
/// [`simulate_annual_maxima`] makes for the same seed. Non-maximum days are
/// normal noise around zero.
pub fn simulate_gev_daily(
    theta: &ParamVector,
    temps: &TemperatureSeries,
    first_year: i32,
    n_years: usize,
    noise_sd: f64,
    seed: u64,
) -> Result<DailySeries> {
    let mut rng = stream_rng(seed, 0);
    let mut noise_rng = stream_rng(seed, 1);
    let noise = Normal::new(0.0, noise_sd).map_err(|e| Error::InvalidArgument(e.to_string()))?;
    let start = jan1(first_year)?;
    let mut values = Vec::new();
    for year in first_year..first_year + n_years as i32 {
        let p = link_params(theta, temps.at(year)?);
        let target = gev_variate(&mut rng, p.rate_or_location, p.scale, p.shape);
        let n = days_in_year(year) as usize;
        let peak = noise_rng.random_range(0..n);
        let mut year_vals: Vec<f64> = (0..n).map(|_| noise.sample(&mut noise_rng)).collect();
        // With the other days summing to S, the peak M satisfies
        // M − (S + M)/n = target.
        year_vals[peak] = 0.0;
        let s: f64 = year_vals.iter().sum();
        let m = (n as f64 * target + s) / (n as f64 - 1.0);
        for (d, v) in year_vals.iter_mut().enumerate() {
            if d != peak && *v >= m {
                *v = m - 1e-6;
            }
        }
        let s: f64 = year_vals.iter().enumerate().filter(|(d, _)| *d != peak).map(|(_, v)| v).sum();
        year_vals[peak] = (n as f64 * target + s) / (n as f64 - 1.0);
        values.extend(year_vals.into_iter().map(Some));
    }
    debug_assert_eq!(start.year(), first_year);
    DailySeries::new("synthetic_gev", start, values)
}
