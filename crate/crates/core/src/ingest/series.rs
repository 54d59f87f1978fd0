use chrono::{Datelike, Days, NaiveDate};

use crate::error::{Error, Result};

/// Daily maximum water levels for one station.
///
/// Days are contiguous from `start`; a missing day is `None`, never dropped.
#[derive(Debug, Clone, PartialEq)]
pub struct DailySeries {
    pub station_id: String,
    pub datum_note: String,
    start: NaiveDate,
    values: Vec<Option<f64>>,
}

impl DailySeries {
    pub fn new(
        station_id: impl Into<String>,
        start: NaiveDate,
        values: Vec<Option<f64>>,
    ) -> Result<Self> {
        if let Some(bad) = values.iter().flatten().find(|v| !v.is_finite()) {
            return Err(Error::InvalidArgument(format!(
                "non-finite water level {bad}"
            )));
        }
        Ok(Self {
            station_id: station_id.into(),
            datum_note: String::new(),
            start,
            values,
        })
    }

    pub fn with_datum_note(mut self, note: impl Into<String>) -> Self {
        self.datum_note = note.into();
        self
    }

    pub fn start(&self) -> NaiveDate {
        self.start
    }

    /// Last covered date, or `None` for an empty series.
    pub fn end(&self) -> Option<NaiveDate> {
        if self.values.is_empty() {
            None
        } else {
            Some(self.date_at(self.values.len() - 1))
        }
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn values(&self) -> &[Option<f64>] {
        &self.values
    }

    pub fn date_at(&self, index: usize) -> NaiveDate {
        self.start + Days::new(index as u64)
    }

    pub fn iter(&self) -> impl Iterator<Item = (NaiveDate, Option<f64>)> + '_ {
        self.values
            .iter()
            .enumerate()
            .map(|(i, v)| (self.date_at(i), *v))
    }

    pub fn present(&self) -> impl Iterator<Item = f64> + '_ {
        self.values.iter().flatten().copied()
    }

    pub fn n_present(&self) -> usize {
        self.values.iter().filter(|v| v.is_some()).count()
    }

    pub fn first_year(&self) -> Option<i32> {
        (!self.is_empty()).then(|| self.start.year())
    }

    pub fn last_year(&self) -> Option<i32> {
        self.end().map(|d| d.year())
    }

    /// Returns the days falling in `[from, to]` (inclusive calendar years).
    pub fn years_between(&self, from: i32, to: i32) -> DailySeries {
        let keep: Vec<usize> = (0..self.len())
            .filter(|&i| {
                let y = self.date_at(i).year();
                y >= from && y <= to
            })
            .collect();
        let (start, values) = match (keep.first(), keep.last()) {
            (Some(&a), Some(&b)) => (self.date_at(a), self.values[a..=b].to_vec()),
            _ => (self.start, Vec::new()),
        };
        DailySeries {
            station_id: self.station_id.clone(),
            datum_note: self.datum_note.clone(),
            start,
            values,
        }
    }

    pub(crate) fn with_values(&self, values: Vec<Option<f64>>) -> DailySeries {
        debug_assert_eq!(values.len(), self.values.len());
        DailySeries {
            station_id: self.station_id.clone(),
            datum_note: self.datum_note.clone(),
            start: self.start,
            values,
        }
    }
}

/// One declustered event: the cluster maximum and the day it occurred.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Event {
    pub date: NaiveDate,
    pub level_m: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct YearRecord {
    pub year: i32,
    /// Non-missing days in the year; the Poisson exposure.
    pub observed_days: u32,
    pub events: Vec<Event>,
}

impl YearRecord {
    pub fn excesses(&self) -> impl Iterator<Item = f64> + '_ {
        self.events.iter().map(|e| e.level_m)
    }

    pub fn n_events(&self) -> usize {
        self.events.len()
    }
}

/// Per-year declustered threshold exceedances.
#[derive(Debug, Clone, PartialEq)]
pub struct ExceedanceSet {
    pub threshold_m: f64,
    pub years: Vec<YearRecord>,
}

impl ExceedanceSet {
    pub fn new(threshold_m: f64, years: Vec<YearRecord>) -> Result<Self> {
        for rec in &years {
            if rec.observed_days < rec.events.len() as u32 {
                return Err(Error::InvalidArgument(format!(
                    "year {} has more events than observed days",
                    rec.year
                )));
            }
            if let Some(e) = rec.events.iter().find(|e| e.level_m <= threshold_m) {
                return Err(Error::InvalidArgument(format!(
                    "event {} on {} is not above threshold {threshold_m}",
                    e.level_m, e.date
                )));
            }
        }
        Ok(Self { threshold_m, years })
    }

    pub fn n_events(&self) -> usize {
        self.years.iter().map(YearRecord::n_events).sum()
    }

    pub fn n_years(&self) -> usize {
        self.years.len()
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AnnualMaximum {
    pub year: i32,
    pub maximum_m: f64,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DroppedYear {
    pub year: i32,
    pub missing_fraction: f64,
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct AnnualMaxima {
    pub years: Vec<AnnualMaximum>,
    pub dropped_years: Vec<DroppedYear>,
}

impl AnnualMaxima {
    pub fn len(&self) -> usize {
        self.years.len()
    }

    pub fn is_empty(&self) -> bool {
        self.years.is_empty()
    }

    pub fn values(&self) -> Vec<f64> {
        self.years.iter().map(|m| m.maximum_m).collect()
    }
}
