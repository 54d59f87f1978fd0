//! Evaluates the PP/GPD and GEV log-likelihoods on simulated data and shows
//! that the stationary model is nested in the non-stationary ones.
//!
//!     cargo run --example likelihoods

use surge_bma::evd::{
    gev_logpdf, gpd_logpdf, Family, GevLikelihood, LogLikelihood, ModelStructure, ParamVector, PpGpdLikelihood, Slot,
    StructureTag,
};
use surge_bma::synth::{simulate_annual_maxima, simulate_exceedances, temperature_ramp};

fn main() -> surge_bma::Result<()> {
    println!("GPD log-density at 0.5 (sigma 1, xi 0.2): {:.6}", gpd_logpdf(0.5, 0.0, 1.0, 0.2)?);
    println!("GEV log-density at 2.0 (mu 1, sigma 0.5, xi 0.1): {:.6}", gev_logpdf(2.0, 1.0, 0.5, 0.1)?);

    let temps = temperature_ramp(1950, 67, -0.2, 1.0);
    let theta = ParamVector::stationary(0.01, 0.1f64.ln(), 0.1).with(Slot::RateOrLocation1, 0.005);
    let set = simulate_exceedances(&theta, &temps, 1950, 67, 1.0, 1)?;
    println!("\n{} simulated exceedances", set.n_events());
    // ST has no rate slope, so it sees a constant rate and fits worse
    for tag in StructureTag::ALL {
        let lik = PpGpdLikelihood::new(&set, &temps, ModelStructure::new(Family::PpGpd, tag))?;
        println!("  {tag}: loglik at generating values {:.4}", lik.log_likelihood(&theta));
    }

    let gev = ParamVector::stationary(2.0, 0.3f64.ln(), 0.05);
    let maxima = simulate_annual_maxima(&gev, &temps, 1950, 67, 2)?;
    println!("\nGEV annual maxima, stationary parameters with zero slopes:");
    for tag in StructureTag::ALL {
        let lik = GevLikelihood::new(&maxima, &temps, ModelStructure::new(Family::Gev, tag))?;
        let active = lik.structure().pack(&gev);
        println!("  {tag} {:?}: {:.10}", lik.structure().param_names(), lik.log_likelihood_active(&active));
    }
    Ok(())
}
