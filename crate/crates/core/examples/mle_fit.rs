//! Differential-evolution maximum likelihood for each structure of the
//! PP/GPD ladder on the bundled station.
//!
//!     cargo run --release --example mle_fit

use std::path::Path;

use surge_bma::calibrate::{default_bounds, fit_mle, DeConfig};
use surge_bma::evd::{Family, StructureTag};
use surge_bma::ingest::{load_temperatures, parse_station, StationFormat};
use surge_bma::pipeline::{preprocess, PipelineConfig};

fn main() -> surge_bma::Result<()> {
    let data = Path::new(env!("CARGO_MANIFEST_DIR")).join("data");
    let series = parse_station(data.join("sample_station.csv"), StationFormat::CanonicalDailyCsv)?;
    let temps = load_temperatures(data.join("temperature_historical.csv"), data.join("temperature_projection.csv"), 2017)?;
    let pre = preprocess(&series, &PipelineConfig::desk(Family::PpGpd))?;

    for tag in StructureTag::ALL {
        let lik = pre.data.likelihood(&temps, tag)?;
        let fit = fit_mle(lik.as_ref(), &default_bounds(lik.as_ref()), &DeConfig { seed: 1, ..DeConfig::default() })?;
        let active = lik.structure().pack(&fit.theta);
        let params: Vec<String> = lik
            .structure()
            .param_names()
            .iter()
            .zip(&active)
            .map(|(n, v)| format!("{n}={v:.5}"))
            .collect();
        println!("{tag}: max loglik {:.3}  {}", fit.max_loglik, params.join(" "));
    }
    Ok(())
}
