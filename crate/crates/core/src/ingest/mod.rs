//! Tide-gauge and temperature ingestion, and the preprocessing that turns a
//! raw daily record into likelihood-ready data: detrending, threshold
//! selection, declustering, annual block maxima and record subsetting.

mod parse;
pub(crate) mod parse_helpers {
    pub(crate) use super::parse::{csv_error, malformed, open_csv};
}
mod products;
mod series;
mod temperature;
mod transform;

pub use parse::{parse_station, StationFormat};
pub use products::{
    annual_maxima_csv, daily_series_csv, exceedances_csv, read_annual_maxima, read_exceedances, temperature_csv,
};
pub use series::{AnnualMaxima, AnnualMaximum, DailySeries, DroppedYear, Event, ExceedanceSet, YearRecord};
pub use temperature::{load_temperatures, parse_temperature_file, TemperatureSeries};
pub use transform::{
    annual_block_maxima, decluster, detrend_annual_means, detrend_linear, detrend_linear_with_fit,
    pot_threshold, sliding_blocks, subset_recent, AnnualMeanDetrend, LinearTrend,
};
