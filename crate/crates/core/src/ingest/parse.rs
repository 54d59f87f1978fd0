use std::collections::BTreeMap;
use std::path::Path;
use std::str::FromStr;

use chrono::{NaiveDate, NaiveDateTime};

use super::DailySeries;
use crate::error::{Error, Result};

/// Accepted station file layouts.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum StationFormat {
    /// `date,level_m`, one row per day, `NA` for missing.
    CanonicalDailyCsv,
    /// `datetime,level_m`, ISO-8601 timestamps, missing hours absent.
    HourlyCsv,
}

impl FromStr for StationFormat {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim() {
            "canonical_daily_csv" | "daily" => Ok(Self::CanonicalDailyCsv),
            "hourly_csv" | "hourly" => Ok(Self::HourlyCsv),
            other => Err(Error::Config(format!("unknown station format `{other}`"))),
        }
    }
}

pub(crate) fn open_csv(path: &Path, header: &[&str]) -> Result<csv::Reader<std::fs::File>> {
    let file = std::fs::File::open(path).map_err(|e| Error::io(path, e))?;
    let mut reader = csv::ReaderBuilder::new()
        .trim(csv::Trim::All)
        .comment(Some(b'#'))
        .from_reader(file);
    let found = reader.headers().map_err(|e| csv_error(path, e))?.clone();
    let found: Vec<&str> = found.iter().collect();
    if found != header {
        return Err(Error::MalformedRow {
            path: path.to_path_buf(),
            line: 1,
            message: format!("expected header `{}`, found `{}`", header.join(","), found.join(",")),
        });
    }
    Ok(reader)
}

pub(crate) fn csv_error(path: &Path, err: csv::Error) -> Error {
    let line = err.position().map(|p| p.line()).unwrap_or(0);
    match err.into_kind() {
        csv::ErrorKind::Io(e) => Error::io(path, e),
        kind => Error::MalformedRow {
            path: path.to_path_buf(),
            line,
            message: format!("{kind:?}"),
        },
    }
}

pub(crate) fn malformed(path: &Path, line: u64, message: impl Into<String>) -> Error {
    Error::MalformedRow {
        path: path.to_path_buf(),
        line,
        message: message.into(),
    }
}

fn parse_level(path: &Path, line: u64, raw: &str) -> Result<Option<f64>> {
    if raw.eq_ignore_ascii_case("NA") || raw.is_empty() {
        return Ok(None);
    }
    let v: f64 = raw
        .parse()
        .map_err(|_| malformed(path, line, format!("invalid level `{raw}`")))?;
    if !v.is_finite() {
        return Err(malformed(path, line, format!("non-finite level `{raw}`")));
    }
    Ok(Some(v))
}

fn parse_timestamp(raw: &str) -> Option<NaiveDateTime> {
    const FORMATS: [&str; 4] = [
        "%Y-%m-%dT%H:%M:%S",
        "%Y-%m-%dT%H:%M",
        "%Y-%m-%d %H:%M:%S",
        "%Y-%m-%d %H:%M",
    ];
    let raw = raw.trim_end_matches('Z');
    FORMATS
        .iter()
        .find_map(|f| NaiveDateTime::parse_from_str(raw, f).ok())
}

/// Reads a station file into a contiguous daily series.
///
/// Hourly input is reduced to the maximum valid reading of each day; days
/// without any reading are marked missing, as are calendar days skipped by a
/// daily file.
pub fn parse_station(path: impl AsRef<Path>, format: StationFormat) -> Result<DailySeries> {
    let path = path.as_ref();
    let daily: Vec<(NaiveDate, Option<f64>)> = match format {
        StationFormat::CanonicalDailyCsv => read_daily(path)?,
        StationFormat::HourlyCsv => read_hourly(path)?,
    };
    let station_id = path
        .file_stem()
        .map(|s| s.to_string_lossy().into_owned())
        .unwrap_or_default();
    let Some(&(start, _)) = daily.first() else {
        return DailySeries::new(station_id, NaiveDate::MIN, Vec::new());
    };
    let end = daily.last().map(|d| d.0).unwrap_or(start);
    let span = (end - start).num_days() as usize + 1;
    let mut values = vec![None; span];
    for (date, v) in daily {
        values[(date - start).num_days() as usize] = v;
    }
    DailySeries::new(station_id, start, values)
}

fn read_daily(path: &Path) -> Result<Vec<(NaiveDate, Option<f64>)>> {
    let mut reader = open_csv(path, &["date", "level_m"])?;
    let mut out: Vec<(NaiveDate, Option<f64>)> = Vec::new();
    for record in reader.records() {
        let record = record.map_err(|e| csv_error(path, e))?;
        let line = record.position().map(|p| p.line()).unwrap_or(0);
        let date = NaiveDate::parse_from_str(&record[0], "%Y-%m-%d")
            .map_err(|_| malformed(path, line, format!("invalid date `{}`", &record[0])))?;
        let level = parse_level(path, line, &record[1])?;
        if let Some(&(prev, _)) = out.last() {
            if date <= prev {
                return Err(Error::NonMonotoneDates {
                    path: path.to_path_buf(),
                    line,
                });
            }
        }
        out.push((date, level));
    }
    Ok(out)
}

fn read_hourly(path: &Path) -> Result<Vec<(NaiveDate, Option<f64>)>> {
    let mut reader = open_csv(path, &["datetime", "level_m"])?;
    let mut days: BTreeMap<NaiveDate, Option<f64>> = BTreeMap::new();
    let mut prev: Option<NaiveDateTime> = None;
    for record in reader.records() {
        let record = record.map_err(|e| csv_error(path, e))?;
        let line = record.position().map(|p| p.line()).unwrap_or(0);
        let stamp = parse_timestamp(&record[0])
            .ok_or_else(|| malformed(path, line, format!("invalid timestamp `{}`", &record[0])))?;
        if let Some(p) = prev {
            if stamp == p {
                return Err(malformed(path, line, format!("duplicated timestamp {stamp}")));
            }
            if stamp < p {
                return Err(Error::NonMonotoneDates {
                    path: path.to_path_buf(),
                    line,
                });
            }
        }
        prev = Some(stamp);
        let level = parse_level(path, line, &record[1])?;
        let slot = days.entry(stamp.date()).or_insert(None);
        if let Some(v) = level {
            *slot = Some(slot.map_or(v, |cur: f64| cur.max(v)));
        }
    }
    Ok(days.into_iter().collect())
}
