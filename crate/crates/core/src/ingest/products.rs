use std::fmt::Write as _;
use std::path::Path;

use chrono::NaiveDate;

use super::parse::{csv_error, malformed, open_csv};
use super::series::{AnnualMaxima, AnnualMaximum, DailySeries, Event, ExceedanceSet, YearRecord};
use super::temperature::TemperatureSeries;
use crate::error::{Error, Result};

/// Canonical `date,level_m` text; missing days are `NA`.
pub fn daily_series_csv(series: &DailySeries) -> String {
    let mut out = String::from("date,level_m\n");
    for (date, v) in series.iter() {
        match v {
            Some(v) => {
                let _ = writeln!(out, "{date},{v}");
            }
            None => {
                let _ = writeln!(out, "{date},NA");
            }
        }
    }
    out
}

/// `year,anomaly_k`.
pub fn temperature_csv(temps: &TemperatureSeries) -> String {
    let mut out = String::from("year,anomaly_k\n");
    for (year, a) in temps.years().zip(temps.anomalies()) {
        let _ = writeln!(out, "{year},{a}");
    }
    out
}

/// `year,observed_days,date,level_m`, one row per event; a year without
/// events has one row with empty `date` and `level_m`.
pub fn exceedances_csv(set: &ExceedanceSet) -> String {
    let mut out = String::from("year,observed_days,date,level_m\n");
    for y in &set.years {
        if y.events.is_empty() {
            let _ = writeln!(out, "{},{},,", y.year, y.observed_days);
        }
        for e in &y.events {
            let _ = writeln!(out, "{},{},{},{}", y.year, y.observed_days, e.date, e.level_m);
        }
    }
    out
}

pub fn read_exceedances(path: impl AsRef<Path>, threshold_m: f64) -> Result<ExceedanceSet> {
    let path = path.as_ref();
    let mut reader = open_csv(path, &["year", "observed_days", "date", "level_m"])?;
    let mut years: Vec<YearRecord> = Vec::new();
    for record in reader.records() {
        let record = record.map_err(|e| csv_error(path, e))?;
        let line = record.position().map(|p| p.line()).unwrap_or(0);
        let bad = |what: &str, v: &str| malformed(path, line, format!("invalid {what} `{v}`"));
        let year: i32 = record[0].parse().map_err(|_| bad("year", &record[0]))?;
        let observed_days: u32 = record[1].parse().map_err(|_| bad("observed_days", &record[1]))?;
        let fresh = years.last().is_none_or(|y| y.year != year);
        if fresh {
            if years.last().is_some_and(|y| y.year > year) {
                return Err(Error::NonMonotoneDates {
                    path: path.to_path_buf(),
                    line,
                });
            }
            years.push(YearRecord {
                year,
                observed_days,
                events: Vec::new(),
            });
        }
        let current = years.last_mut().expect("pushed above");
        match (&record[2], &record[3]) {
            ("", "") => {}
            (d, v) => {
                let date = NaiveDate::parse_from_str(d, "%Y-%m-%d").map_err(|_| bad("date", d))?;
                let level_m: f64 = v.parse().ok().filter(|x: &f64| x.is_finite()).ok_or_else(|| bad("level", v))?;
                current.events.push(Event { date, level_m });
            }
        }
    }
    ExceedanceSet::new(threshold_m, years)
}

/// `year,maximum_m`.
pub fn annual_maxima_csv(maxima: &AnnualMaxima) -> String {
    let mut out = String::from("year,maximum_m\n");
    for m in &maxima.years {
        let _ = writeln!(out, "{},{}", m.year, m.maximum_m);
    }
    out
}

/// Dropped years are not part of the file and come back empty.
pub fn read_annual_maxima(path: impl AsRef<Path>) -> Result<AnnualMaxima> {
    let path = path.as_ref();
    let mut reader = open_csv(path, &["year", "maximum_m"])?;
    let mut years = Vec::new();
    for record in reader.records() {
        let record = record.map_err(|e| csv_error(path, e))?;
        let line = record.position().map(|p| p.line()).unwrap_or(0);
        let year: i32 = record[0]
            .parse()
            .map_err(|_| malformed(path, line, format!("invalid year `{}`", &record[0])))?;
        let maximum_m: f64 = record[1]
            .parse()
            .ok()
            .filter(|x: &f64| x.is_finite())
            .ok_or_else(|| malformed(path, line, format!("invalid maximum `{}`", &record[1])))?;
        years.push(AnnualMaximum { year, maximum_m });
    }
    Ok(AnnualMaxima {
        years,
        dropped_years: Vec::new(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn exceedances_round_trip() {
        let d = |s| NaiveDate::parse_from_str(s, "%Y-%m-%d").unwrap();
        let set = ExceedanceSet::new(
            1.0,
            vec![
                YearRecord {
                    year: 2000,
                    observed_days: 366,
                    events: vec![
                        Event { date: d("2000-02-01"), level_m: 1.25 },
                        Event { date: d("2000-11-03"), level_m: 1.5 },
                    ],
                },
                YearRecord { year: 2001, observed_days: 300, events: vec![] },
            ],
        )
        .unwrap();
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("x.csv");
        std::fs::write(&p, exceedances_csv(&set)).unwrap();
        assert_eq!(read_exceedances(&p, 1.0).unwrap(), set);
        assert!(read_exceedances(&p, 1.3).is_err());
    }

    #[test]
    fn daily_and_temperature_round_trip() {
        let d = NaiveDate::from_ymd_opt(2000, 12, 30).unwrap();
        let s = DailySeries::new("x", d, vec![Some(1.25), None, Some(0.5)]).unwrap();
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("x.csv");
        std::fs::write(&p, daily_series_csv(&s)).unwrap();
        let back = crate::ingest::parse_station(&p, crate::ingest::StationFormat::CanonicalDailyCsv).unwrap();
        assert_eq!(back.values(), s.values());
        assert_eq!(back.start(), d);
        let t = TemperatureSeries::new(1990, vec![0.1, 0.25]).unwrap();
        let p = dir.path().join("t.csv");
        std::fs::write(&p, temperature_csv(&t)).unwrap();
        assert_eq!(crate::ingest::parse_temperature_file(&p).unwrap().anomalies(), t.anomalies());
    }

    #[test]
    fn maxima_round_trip() {
        let m = AnnualMaxima {
            years: vec![AnnualMaximum { year: 1990, maximum_m: 2.5 }, AnnualMaximum { year: 1991, maximum_m: 2.75 }],
            dropped_years: vec![],
        };
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("m.csv");
        std::fs::write(&p, annual_maxima_csv(&m)).unwrap();
        assert_eq!(read_annual_maxima(&p).unwrap(), m);
    }
}
