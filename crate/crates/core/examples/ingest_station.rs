//! Reads the bundled station record and temperatures, then runs the
//! preprocessing steps one at a time.
//!
//!     cargo run --example ingest_station

use std::path::Path;

use surge_bma::ingest::{
    annual_block_maxima, decluster, detrend_annual_means, detrend_linear_with_fit, load_temperatures, parse_station,
    pot_threshold, StationFormat,
};

fn main() -> surge_bma::Result<()> {
    let data = Path::new(env!("CARGO_MANIFEST_DIR")).join("data");
    let series = parse_station(data.join("sample_station.csv"), StationFormat::CanonicalDailyCsv)?;
    println!(
        "{}: {} days from {} ({} missing)",
        series.station_id,
        series.len(),
        series.start(),
        series.len() - series.n_present()
    );

    let temps = load_temperatures(
        data.join("temperature_historical.csv"),
        data.join("temperature_projection.csv"),
        2017,
    )?;
    println!("temperatures cover {}-{}", temps.first_year(), temps.last_year());

    let (flat, trend) = detrend_linear_with_fit(&series)?;
    println!("removed trend of {:.2} mm/yr", trend.slope_m_per_day * 365.25 * 1000.0);

    let threshold = pot_threshold(&flat, 0.99)?;
    let set = decluster(&flat, threshold, 1)?;
    println!("threshold {threshold:.3} m: {} events over {} years", set.n_events(), set.n_years());
    for year in set.years.iter().take(3) {
        println!("  {}: {} events", year.year, year.n_events());
    }

    let maxima = annual_block_maxima(&detrend_annual_means(&series).series, 0.1);
    println!("{} annual maxima, {} years dropped", maxima.len(), maxima.dropped_years.len());
    Ok(())
}
