use statrs::function::factorial::ln_factorial;

use crate::error::{Error, Result};

/// Below this |ξ| the exponential (GPD) or Gumbel (GEV) limit is used.
pub const XI_ZERO_TOL: f64 = 1e-8;

fn check_scale(sigma: f64) -> Result<()> {
    if sigma > 0.0 && sigma.is_finite() {
        Ok(())
    } else {
        Err(Error::InvalidArgument(format!("scale must be positive, got {sigma}")))
    }
}

#[inline]
pub(crate) fn gpd_ln(x: f64, mu: f64, sigma: f64, xi: f64) -> f64 {
    let z = (x - mu) / sigma;
    if z < 0.0 {
        return f64::NEG_INFINITY;
    }
    if xi.abs() < XI_ZERO_TOL {
        return -sigma.ln() - z;
    }
    let t = 1.0 + xi * z;
    if t <= 0.0 {
        return f64::NEG_INFINITY;
    }
    -sigma.ln() - (1.0 / xi + 1.0) * t.ln()
}

/// Log-density of the generalized Pareto distribution above threshold `mu`.
///
/// Returns `-inf` below the threshold or past the upper endpoint (ξ < 0).
pub fn gpd_logpdf(x: f64, mu: f64, sigma: f64, xi: f64) -> Result<f64> {
    check_scale(sigma)?;
    Ok(gpd_ln(x, mu, sigma, xi))
}

pub fn gpd_cdf(x: f64, mu: f64, sigma: f64, xi: f64) -> Result<f64> {
    check_scale(sigma)?;
    let z = (x - mu) / sigma;
    if z <= 0.0 {
        return Ok(0.0);
    }
    let p = if xi.abs() < XI_ZERO_TOL {
        1.0 - (-z).exp()
    } else {
        let t = 1.0 + xi * z;
        if t <= 0.0 {
            1.0
        } else {
            1.0 - t.powf(-1.0 / xi)
        }
    };
    Ok(p.clamp(0.0, 1.0))
}

/// `n log(λΔt) - λΔt - log n!`
pub fn poisson_logpmf(n: u64, lambda_dt: f64) -> Result<f64> {
    if !(lambda_dt > 0.0) {
        return Err(Error::InvalidArgument(format!(
            "Poisson mean must be positive, got {lambda_dt}"
        )));
    }
    Ok(n as f64 * lambda_dt.ln() - lambda_dt - ln_factorial(n))
}

#[inline]
pub(crate) fn gev_ln(x: f64, mu: f64, sigma: f64, xi: f64) -> f64 {
    let z = (x - mu) / sigma;
    if xi.abs() < XI_ZERO_TOL {
        return -sigma.ln() - z - (-z).exp();
    }
    let t = 1.0 + xi * z;
    if t <= 0.0 {
        return f64::NEG_INFINITY;
    }
    let lt = t.ln();
    -sigma.ln() - (1.0 + 1.0 / xi) * lt - (-lt / xi).exp()
}

/// Log-density of the generalized extreme value distribution.
pub fn gev_logpdf(x: f64, mu: f64, sigma: f64, xi: f64) -> Result<f64> {
    check_scale(sigma)?;
    Ok(gev_ln(x, mu, sigma, xi))
}

pub fn gev_cdf(x: f64, mu: f64, sigma: f64, xi: f64) -> Result<f64> {
    check_scale(sigma)?;
    let z = (x - mu) / sigma;
    if xi.abs() < XI_ZERO_TOL {
        return Ok((-(-z).exp()).exp());
    }
    let t = 1.0 + xi * z;
    if t <= 0.0 {
        // Below the lower endpoint (ξ > 0) or above the upper one (ξ < 0).
        return Ok(if xi > 0.0 { 0.0 } else { 1.0 });
    }
    Ok((-t.powf(-1.0 / xi)).exp())
}
