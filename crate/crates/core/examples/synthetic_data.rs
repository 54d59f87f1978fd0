//! Writes the bundled sample inputs: a synthetic 60-year daily tide-gauge
//! record, historical and projected temperature anomalies, and a prior
//! network of made-up station estimates.
//!
//!     cargo run --example synthetic_data -- crates/core/data

use std::fmt::Write as _;
use std::path::PathBuf;

use rand::Rng;
use rand_distr::{Distribution, Normal};
use surge_bma::evd::{ParamVector, Slot};
use surge_bma::ingest::{daily_series_csv, temperature_csv, DailySeries, TemperatureSeries};
use surge_bma::rng::stream_rng;
use surge_bma::synth::simulate_daily_series;

fn main() -> surge_bma::Result<()> {
    let dir = PathBuf::from(std::env::args().nth(1).unwrap_or_else(|| "crates/core/data".into()));
    std::fs::create_dir_all(&dir).map_err(|e| surge_bma::Error::InvalidArgument(e.to_string()))?;
    let write = |name: &str, text: &str| std::fs::write(dir.join(name), text).expect("write sample file");

    // Warming that accelerates after 1950, with year-to-year noise.
    let mut rng = stream_rng(2024, 0);
    let noise = Normal::new(0.0, 0.08).unwrap();
    let hist: Vec<f64> = (1850..=2016)
        .map(|y| {
            let x = (y - 1850) as f64 / 166.0;
            -0.3 + 1.25 * x.powi(3) + noise.sample(&mut rng)
        })
        .collect();
    let historical = TemperatureSeries::new(1850, hist)?;
    let proj: Vec<f64> = (2006..=2100)
        .map(|y| {
            let x = (y - 2006) as f64 / 94.0;
            0.85 + 3.2 * x.powf(1.3) + noise.sample(&mut rng) * 0.5
        })
        .collect();
    let projection = TemperatureSeries::new(2006, proj)?;
    write("temperature_historical.csv", &temperature_csv(&historical));
    write("temperature_projection.csv", &temperature_csv(&projection));

    // Rate rises 30% per kelvin; scale 0.18 m; light tail.
    let theta = ParamVector::stationary(0.011, 0.18f64.ln(), 0.05).with(Slot::RateOrLocation1, 0.0033);
    let series = simulate_daily_series(&theta, &historical, 1957, 60, 1.2, 0.002, 7)?;
    // Millimetre resolution, and a few gauge outages.
    let mut values: Vec<Option<f64>> = series
        .values()
        .iter()
        .map(|v| v.map(|x| (x * 1000.0).round() / 1000.0))
        .collect();
    for (start, len) in [(1200usize, 14usize), (9000, 40), (15000, 3)] {
        for v in &mut values[start..start + len] {
            *v = None;
        }
    }
    let series = DailySeries::new("sample_station", series.start(), values)?;
    write("sample_station.csv", &daily_series_csv(&series));

    // Stand-in network: per-station maximum-likelihood estimates.
    let mut net = String::from("param,station,value\n");
    let spreads = [
        ("lambda0", 0.011, 0.003),
        ("lambda1", 0.002, 0.002),
        ("sigma0", 0.18f64.ln(), 0.35),
        ("sigma1", 0.0, 0.08),
        ("xi0", 0.02, 0.1),
        ("xi1", 0.0, 0.05),
        ("mu0", 1.1, 0.3),
        ("mu1", 0.05, 0.05),
    ];
    for station in 1..=12 {
        for (name, centre, sd) in spreads {
            let v = centre + sd * rng.sample::<f64, _>(rand_distr::StandardNormal);
            let v = if name == "lambda0" { v.max(0.002) } else { v };
            let _ = writeln!(net, "{name},synthetic_{station:02},{v}");
        }
    }
    write("prior_network.csv", &net);
    println!("wrote sample inputs to {}", dir.display());
    Ok(())
}
