//! Return levels: the closed-form PP/GPD inversion for fixed parameters,
//! then ensemble distributions and their model-averaged combination.
//!
//!     cargo run --release --example return_levels

use surge_bma::evd::{Family, ParamVector, Slot, StructureTag};
use surge_bma::pipeline::{fit_structure, ModelData, PipelineConfig};
use surge_bma::project::{bma_combine, ppgpd_return_level, quantiles_csv, rl_distribution, CombineMode, DAYS_PER_YEAR};
use surge_bma::synth::{simulate_exceedances, temperature_ramp};

fn main() -> surge_bma::Result<()> {
    let theta = ParamVector::stationary(0.01, 0.1f64.ln(), 0.1);
    for t in [10.0, 100.0, 1000.0] {
        let z = ppgpd_return_level(&theta, 0.0, 1.0, t, DAYS_PER_YEAR).unwrap();
        println!("{t:>6}-year level above a 1 m threshold: {z:.4} m");
    }

    let temps = temperature_ramp(1950, 151, -0.2, 3.0);
    let truth = theta.with(Slot::RateOrLocation1, 0.006);
    let data = ModelData::Pot(simulate_exceedances(&truth, &temps, 1950, 67, 1.0, 9)?);
    let config = PipelineConfig::desk(Family::PpGpd).with_seed(9);
    let st = fit_structure(&data, &temps, StructureTag::St, &config)?;
    let ns1 = fit_structure(&data, &temps, StructureTag::Ns1, &config)?;

    for year in [2016, 2065] {
        let a = rl_distribution(&st.ensemble, &temps, year, 100.0)?;
        let b = rl_distribution(&ns1.ensemble, &temps, year, 100.0)?;
        let mixed = bma_combine(&[&a, &b], &[0.3, 0.7], CombineMode::Mixture, 9)?;
        println!("\n{year}, ST / NS1 / mixture (0.3, 0.7):");
        print!("{}", quantiles_csv(&[&a, &b, &mixed]));
    }
    Ok(())
}
