use super::RamChain;
use crate::error::{Error, Result};
use crate::stats::{mean, sample_variance};

/// Gelman–Rubin potential scale reduction factor for one parameter.
///
/// `R = sqrt(((n-1)/n · W + B/n) / W)` with `W` the mean within-chain
/// variance and `B/n` the variance of the chain means.
pub fn gelman_rubin(chains: &[&[f64]]) -> Result<f64> {
    let m = chains.len();
    if m < 2 {
        return Err(Error::InvalidArgument("Gelman-Rubin needs at least 2 chains".into()));
    }
    let n = chains[0].len();
    if n < 10 {
        return Err(Error::InsufficientData("chains must have at least 10 samples".into()));
    }
    if chains.iter().any(|c| c.len() != n) {
        return Err(Error::InvalidArgument("chains must have equal length".into()));
    }
    let means: Vec<f64> = chains.iter().map(|c| mean(c)).collect();
    let w = chains.iter().map(|c| sample_variance(c)).sum::<f64>() / m as f64;
    if !(w > 0.0) {
        return Err(Error::Numerical("zero within-chain variance".into()));
    }
    let b_over_n = sample_variance(&means);
    let nf = n as f64;
    let v = (nf - 1.0) / nf * w + b_over_n;
    Ok((v / w).sqrt())
}

/// PSRF for every parameter of a set of chains, after discarding `burn_in`.
pub fn psrf_per_parameter(chains: &[RamChain], burn_in: usize) -> Result<Vec<f64>> {
    let dim = chains.first().map(|c| c.dim).unwrap_or(0);
    (0..dim)
        .map(|j| {
            let traces: Vec<Vec<f64>> = chains.iter().map(|c| c.trace(j, burn_in)).collect();
            let refs: Vec<&[f64]> = traces.iter().map(Vec::as_slice).collect();
            gelman_rubin(&refs)
        })
        .collect()
}
