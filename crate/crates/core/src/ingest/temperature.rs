use std::path::Path;

use super::parse::{csv_error, malformed, open_csv};
use crate::error::{Error, Result};

/// Annual global mean surface temperature anomalies (K), contiguous years.
#[derive(Debug, Clone, PartialEq)]
pub struct TemperatureSeries {
    pub source_note: String,
    first_year: i32,
    anomalies: Vec<f64>,
}

impl TemperatureSeries {
    pub fn new(first_year: i32, anomalies: Vec<f64>) -> Result<Self> {
        if anomalies.iter().any(|a| !a.is_finite()) {
            return Err(Error::InvalidArgument("non-finite temperature anomaly".into()));
        }
        Ok(Self {
            source_note: String::new(),
            first_year,
            anomalies,
        })
    }

    pub fn first_year(&self) -> i32 {
        self.first_year
    }

    pub fn last_year(&self) -> i32 {
        self.first_year + self.anomalies.len() as i32 - 1
    }

    pub fn anomalies(&self) -> &[f64] {
        &self.anomalies
    }

    pub fn years(&self) -> impl Iterator<Item = i32> + '_ {
        (0..self.anomalies.len() as i32).map(move |i| self.first_year + i)
    }

    /// Anomaly for `year`, or a coverage error.
    pub fn at(&self, year: i32) -> Result<f64> {
        let idx = year - self.first_year;
        if idx < 0 || idx as usize >= self.anomalies.len() {
            return Err(Error::TemperatureCoverage { year });
        }
        Ok(self.anomalies[idx as usize])
    }

    pub fn covers(&self, year: i32) -> bool {
        self.at(year).is_ok()
    }
}

/// Reads one `year,anomaly_k` file; years must be contiguous.
pub fn parse_temperature_file(path: impl AsRef<Path>) -> Result<TemperatureSeries> {
    let path = path.as_ref();
    let mut reader = open_csv(path, &["year", "anomaly_k"])?;
    let mut first = None;
    let mut values = Vec::new();
    for record in reader.records() {
        let record = record.map_err(|e| csv_error(path, e))?;
        let line = record.position().map(|p| p.line()).unwrap_or(0);
        let year: i32 = record[0]
            .parse()
            .map_err(|_| malformed(path, line, format!("invalid year `{}`", &record[0])))?;
        let anomaly: f64 = record[1]
            .parse()
            .ok()
            .filter(|v: &f64| v.is_finite())
            .ok_or_else(|| malformed(path, line, format!("invalid anomaly `{}`", &record[1])))?;
        match first {
            None => first = Some(year),
            Some(f) if year != f + values.len() as i32 => {
                return Err(malformed(
                    path,
                    line,
                    format!("expected year {}, found {year}", f + values.len() as i32),
                ))
            }
            _ => {}
        }
        values.push(anomaly);
    }
    let first = first.ok_or_else(|| Error::InsufficientData(format!("{} is empty", path.display())))?;
    let mut series = TemperatureSeries::new(first, values)?;
    series.source_note = path.display().to_string();
    Ok(series)
}

/// Splices historical anomalies (strictly before `splice_year`) onto a
/// projection (from `splice_year` on).
pub fn load_temperatures(
    historical: impl AsRef<Path>,
    projection: impl AsRef<Path>,
    splice_year: i32,
) -> Result<TemperatureSeries> {
    let hist = parse_temperature_file(historical.as_ref())?;
    let proj = if historical.as_ref() == projection.as_ref() {
        hist.clone()
    } else {
        parse_temperature_file(projection.as_ref())?
    };
    splice(&hist, &proj, splice_year)
}

pub(crate) fn splice(
    hist: &TemperatureSeries,
    proj: &TemperatureSeries,
    splice_year: i32,
) -> Result<TemperatureSeries> {
    let mut values = Vec::new();
    let first = hist.first_year().min(splice_year);
    for year in first..splice_year {
        values.push(hist.at(year)?);
    }
    if !proj.covers(splice_year) {
        return Err(Error::TemperatureCoverage { year: splice_year });
    }
    for year in splice_year..=proj.last_year() {
        values.push(proj.at(year)?);
    }
    let mut series = TemperatureSeries::new(first, values)?;
    series.source_note = format!(
        "{} before {splice_year}; {} from {splice_year}",
        hist.source_note, proj.source_note
    );
    Ok(series)
}
