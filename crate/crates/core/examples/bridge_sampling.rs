//! Bridge-sampled marginal likelihoods: a conjugate check against the
//! closed form, then information criteria and model weights for the four
//! PP/GPD structures.
//!
//!     cargo run --release --example bridge_sampling

use rand_distr::{Distribution, Normal};
use surge_bma::compare::{bridge_logml, BridgeConfig};
use surge_bma::evd::{Family, ParamVector, Slot};
use surge_bma::pipeline::{fit_models, ModelData, PipelineConfig};
use surge_bma::rng::stream_rng;
use surge_bma::synth::{simulate_exceedances, temperature_ramp};

fn ln_normal(x: f64, m: f64, v: f64) -> f64 {
    -0.5 * (2.0 * std::f64::consts::PI * v).ln() - (x - m).powi(2) / (2.0 * v)
}

fn main() -> surge_bma::Result<()> {
    // N(0,1) prior, one observation 0 ~ N(θ,1): posterior N(0, 1/2)
    let mut rng = stream_rng(1, 0);
    let post = Normal::new(0.0, 0.5f64.sqrt()).unwrap();
    let draws: Vec<Vec<f64>> = (0..5000).map(|_| vec![post.sample(&mut rng)]).collect();
    let target = |t: &[f64]| ln_normal(t[0], 0.0, 1.0) + ln_normal(0.0, t[0], 1.0);
    let est = bridge_logml(&draws, &target, &BridgeConfig::default())?;
    println!(
        "conjugate log ML: bridge {:.4} in {} iterations, exact {:.4}\n",
        est.log_ml,
        est.iterations,
        ln_normal(0.0, 0.0, 2.0)
    );

    let temps = temperature_ramp(1917, 100, -0.4, 1.0);
    let theta = ParamVector::stationary(0.01, 0.1f64.ln(), 0.1).with(Slot::RateOrLocation1, 0.008);
    let set = simulate_exceedances(&theta, &temps, 1917, 100, 1.0, 2)?;
    let out = fit_models(&ModelData::Pot(set), &temps, &PipelineConfig::desk(Family::PpGpd).with_seed(2))?;
    print!("{}", out.report.to_csv());
    Ok(())
}
