//! Robust adaptive Metropolis on a toy target, then a desk-scale posterior
//! ensemble for the stationary model with flat priors.
//!
//!     cargo run --release --example calibrate_ram

use surge_bma::calibrate::{calibrate_model, default_bounds, fit_mle, ram_chain, CalibrationConfig, DeConfig, RamConfig};
use surge_bma::evd::{Family, ModelStructure, ParamVector, PpGpdLikelihood, StructureTag};
use surge_bma::pipeline::flat_priors;
use surge_bma::stats::{mean, quantile};
use surge_bma::synth::{simulate_exceedances, temperature_ramp};

fn main() -> surge_bma::Result<()> {
    // correlated 2-D normal
    let target = |x: &[f64]| -0.5 * (x[0] * x[0] - 1.6 * x[0] * x[1] + x[1] * x[1]) / 0.36;
    let chain = ram_chain(&target, &[0.0, 0.0], 50_000, &RamConfig { seed: 3, ..RamConfig::default() })?;
    println!("toy chain: acceptance {:.3}, mean x0 {:.3}", chain.acceptance_rate(), mean(&chain.trace(0, 5000)));
    println!("adapted factor:\n{:.3}", chain.final_factor);

    let temps = temperature_ramp(1917, 100, 0.0, 1.0);
    let truth = ParamVector::stationary(0.01, 0.1f64.ln(), 0.1);
    let set = simulate_exceedances(&truth, &temps, 1917, 100, 1.0, 4)?;
    let lik = PpGpdLikelihood::new(&set, &temps, ModelStructure::new(Family::PpGpd, StructureTag::St))?;
    let mle = fit_mle(&lik, &default_bounds(&lik), &DeConfig::default())?;
    let ens = calibrate_model(&lik, &flat_priors(&lik)?, &mle.theta, &CalibrationConfig::desk().with_seed(4))?;
    println!(
        "\n{} draws, psrf {:?}, converged {}",
        ens.len(),
        ens.provenance.psrf,
        ens.provenance.converged
    );
    let want = ens.structure.pack(&truth);
    for (j, name) in ens.param_names().iter().enumerate() {
        let col = ens.column(j);
        println!(
            "  {name}: truth {:.4}, 90% interval [{:.4}, {:.4}]",
            want[j],
            quantile(&col, 0.05),
            quantile(&col, 0.95)
        );
    }
    Ok(())
}
