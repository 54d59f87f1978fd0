//! Sliding-block hindcast, data-length sweep and the GEV sensitivity sweep
//! on the bundled station at desk scale.
//!
//!     cargo run --release --example experiments

use std::path::Path;

use surge_bma::evd::Family;
use surge_bma::experiments::{data_length_sweep, gev_length_sweep, sliding_hindcast};
use surge_bma::ingest::{load_temperatures, parse_station, StationFormat};
use surge_bma::pipeline::PipelineConfig;

fn main() -> surge_bma::Result<()> {
    let data = Path::new(env!("CARGO_MANIFEST_DIR")).join("data");
    let series = parse_station(data.join("sample_station.csv"), StationFormat::CanonicalDailyCsv)?;
    let temps = load_temperatures(data.join("temperature_historical.csv"), data.join("temperature_projection.csv"), 2017)?;
    let pot = PipelineConfig::desk(Family::PpGpd).with_seed(5);

    let hindcast = sliding_hindcast(&series, &temps, 30, 4, 100.0, &pot)?;
    println!("hindcast, 30-year blocks:");
    print!("{}", hindcast.to_csv());

    let sweep = data_length_sweep(&series, &temps, &[20, 40, 60], &pot)?;
    println!("\nmodel weights by record length:");
    print!("{}", sweep.weights_csv());

    let gev = PipelineConfig {
        family: Family::Gev,
        ..pot
    };
    let sens = gev_length_sweep(&series, &temps, &[20, 40, 60], 20.0, None, &gev)?;
    println!("\nGEV 20-year level against the full record:");
    print!("{}", sens.rl_csv());
    Ok(())
}
