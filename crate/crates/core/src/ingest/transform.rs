use std::collections::BTreeMap;

use chrono::{Datelike, NaiveDate};

use super::{AnnualMaxima, AnnualMaximum, DailySeries, DroppedYear, Event, ExceedanceSet, YearRecord};
use crate::error::{Error, Result};
use crate::stats;

/// Least-squares line removed by [`detrend_linear_with_fit`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LinearTrend {
    pub origin: NaiveDate,
    /// Level of the line at `origin` (m).
    pub intercept_m: f64,
    pub slope_m_per_day: f64,
}

impl LinearTrend {
    pub fn at(&self, date: NaiveDate) -> f64 {
        self.intercept_m + self.slope_m_per_day * (date - self.origin).num_days() as f64
    }
}

/// Removes the ordinary-least-squares line (level against day index) fitted
/// over the present values.
pub fn detrend_linear(series: &DailySeries) -> Result<DailySeries> {
    detrend_linear_with_fit(series).map(|(s, _)| s)
}

pub fn detrend_linear_with_fit(series: &DailySeries) -> Result<(DailySeries, LinearTrend)> {
    let points: Vec<(f64, f64)> = series
        .values()
        .iter()
        .enumerate()
        .filter_map(|(i, v)| v.map(|v| (i as f64, v)))
        .collect();
    if points.len() < 2 {
        return Err(Error::InsufficientData(
            "linear detrending needs at least 2 present values".into(),
        ));
    }
    let n = points.len() as f64;
    let x_mean = points.iter().map(|p| p.0).sum::<f64>() / n;
    let y_mean = points.iter().map(|p| p.1).sum::<f64>() / n;
    let (mut sxy, mut sxx) = (0.0, 0.0);
    for &(x, y) in &points {
        sxy += (x - x_mean) * (y - y_mean);
        sxx += (x - x_mean) * (x - x_mean);
    }
    let slope = if sxx > 0.0 { sxy / sxx } else { 0.0 };
    let values = series
        .values()
        .iter()
        .enumerate()
        .map(|(i, v)| v.map(|v| (v - y_mean) - slope * (i as f64 - x_mean)))
        .collect();
    let trend = LinearTrend {
        origin: series.start(),
        intercept_m: y_mean - slope * x_mean,
        slope_m_per_day: slope,
    };
    Ok((series.with_values(values), trend))
}

#[derive(Debug, Clone, PartialEq)]
pub struct AnnualMeanDetrend {
    pub series: DailySeries,
    /// Years with no present value at all.
    pub dropped_years: Vec<i32>,
}

/// Subtracts each calendar year's mean (over its present values).
pub fn detrend_annual_means(series: &DailySeries) -> AnnualMeanDetrend {
    let mut sums: BTreeMap<i32, (f64, usize, usize)> = BTreeMap::new();
    for (date, v) in series.iter() {
        let entry = sums.entry(date.year()).or_insert((0.0, 0, 0));
        entry.2 += 1;
        if let Some(v) = v {
            entry.0 += v;
            entry.1 += 1;
        }
    }
    let dropped_years = sums
        .iter()
        .filter(|(_, &(_, n, _))| n == 0)
        .map(|(&y, _)| y)
        .collect();
    let values = series
        .iter()
        .map(|(date, v)| {
            v.map(|v| {
                let (s, n, _) = sums[&date.year()];
                v - s / n as f64
            })
        })
        .collect();
    AnnualMeanDetrend {
        series: series.with_values(values),
        dropped_years,
    }
}

/// Empirical `quantile` of the present values (linear interpolation between
/// order statistics).
pub fn pot_threshold(series: &DailySeries, quantile: f64) -> Result<f64> {
    if !(0.0..=1.0).contains(&quantile) {
        return Err(Error::InvalidArgument(format!("quantile {quantile} not in [0, 1]")));
    }
    let mut present: Vec<f64> = series.present().collect();
    if present.len() < 100 {
        return Err(Error::InsufficientData(format!(
            "threshold needs at least 100 present values, found {}",
            present.len()
        )));
    }
    present.sort_by(f64::total_cmp);
    Ok(stats::quantile_sorted(&present, quantile))
}

/// Runs declustering: exceedance days closer than `min_gap_days + 1`
/// calendar days belong to one cluster, represented by its maximum on the
/// day it occurred. Years with no observed day are omitted.
pub fn decluster(series: &DailySeries, threshold: f64, min_gap_days: u32) -> Result<ExceedanceSet> {
    if !threshold.is_finite() {
        return Err(Error::InvalidArgument("threshold must be finite".into()));
    }
    if min_gap_days < 1 {
        return Err(Error::InvalidArgument("min_gap_days must be at least 1".into()));
    }

    let mut observed: BTreeMap<i32, u32> = BTreeMap::new();
    for (date, v) in series.iter() {
        let n = observed.entry(date.year()).or_insert(0);
        if v.is_some() {
            *n += 1;
        }
    }

    let mut events: Vec<Event> = Vec::new();
    let mut last_day: Option<usize> = None;
    for (i, v) in series.values().iter().enumerate() {
        let Some(v) = *v else { continue };
        if v <= threshold {
            continue;
        }
        let joins = last_day.is_some_and(|d| i - d < min_gap_days as usize + 1);
        if joins {
            let current = events.last_mut().expect("open cluster");
            if v > current.level_m {
                *current = Event {
                    date: series.date_at(i),
                    level_m: v,
                };
            }
        } else {
            events.push(Event {
                date: series.date_at(i),
                level_m: v,
            });
        }
        last_day = Some(i);
    }

    let mut years: BTreeMap<i32, YearRecord> = observed
        .into_iter()
        .filter(|&(_, n)| n > 0)
        .map(|(year, n)| {
            (
                year,
                YearRecord {
                    year,
                    observed_days: n,
                    events: Vec::new(),
                },
            )
        })
        .collect();
    for e in events {
        years
            .get_mut(&e.date.year())
            .expect("event year has observed days")
            .events
            .push(e);
    }
    ExceedanceSet::new(threshold, years.into_values().collect())
}

fn days_in_year(year: i32) -> u32 {
    if NaiveDate::from_ymd_opt(year, 2, 29).is_some() {
        366
    } else {
        365
    }
}

/// Per-year maxima; years missing more than `max_missing_fraction` of
/// their calendar days are dropped and recorded.
pub fn annual_block_maxima(series: &DailySeries, max_missing_fraction: f64) -> AnnualMaxima {
    let mut per_year: BTreeMap<i32, (u32, Option<f64>)> = BTreeMap::new();
    for (date, v) in series.iter() {
        let entry = per_year.entry(date.year()).or_insert((0, None));
        if let Some(v) = v {
            entry.0 += 1;
            entry.1 = Some(entry.1.map_or(v, |m: f64| m.max(v)));
        }
    }
    let mut out = AnnualMaxima::default();
    for (year, (present, max)) in per_year {
        let total = days_in_year(year);
        let missing_fraction = f64::from(total - present) / f64::from(total);
        match max {
            Some(maximum_m) if missing_fraction <= max_missing_fraction => {
                out.years.push(AnnualMaximum { year, maximum_m })
            }
            _ => out.dropped_years.push(DroppedYear {
                year,
                missing_fraction,
            }),
        }
    }
    out
}

/// Keeps the last `n_years` calendar years of the record.
pub fn subset_recent(series: &DailySeries, n_years: u32) -> Result<DailySeries> {
    if n_years < 1 {
        return Err(Error::InvalidArgument("n_years must be at least 1".into()));
    }
    let (Some(first), Some(last)) = (series.first_year(), series.last_year()) else {
        return Ok(series.clone());
    };
    let from = (last - n_years as i32 + 1).max(first);
    Ok(series.years_between(from, last))
}

/// Overlapping windows of `block_years` calendar years whose start years
/// are evenly spaced from the record start to `end - block_years`.
///
/// When the starts would be less than one year apart the result is a
/// single block at the record start.
pub fn sliding_blocks(
    series: &DailySeries,
    block_years: u32,
    n_blocks: u32,
) -> Result<Vec<DailySeries>> {
    let (Some(first), Some(last)) = (series.first_year(), series.last_year()) else {
        return Err(Error::InsufficientData("empty record".into()));
    };
    if block_years < 1 || n_blocks < 1 {
        return Err(Error::InvalidArgument("block_years and n_blocks must be positive".into()));
    }
    let span = (last - first + 1) as u32;
    if span < block_years {
        return Err(Error::InsufficientData(format!(
            "record spans {span} years, shorter than one {block_years}-year block"
        )));
    }
    let room = span - block_years;
    let n_blocks = if n_blocks > 1 && room < n_blocks - 1 {
        log::warn!("{span}-year record leaves block starts less than a year apart; using a single block");
        1
    } else {
        n_blocks
    };
    let starts: Vec<i32> = if n_blocks == 1 {
        vec![0]
    } else {
        (0..n_blocks)
            .map(|i| (f64::from(i) * f64::from(room) / f64::from(n_blocks - 1)).round() as i32)
            .collect()
    };
    Ok(starts
        .into_iter()
        .map(|offset| {
            let from = first + offset;
            series.years_between(from, from + block_years as i32 - 1)
        })
        .collect())
}
