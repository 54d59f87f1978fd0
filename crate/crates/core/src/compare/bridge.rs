use nalgebra::{DMatrix, DVector};
use rand::Rng;
use rand_distr::StandardNormal;

use crate::error::{Error, Result};
use crate::rng::{stream_rng, StreamRng};

/// Importance density for bridge sampling.
pub trait Proposal {
    fn dim(&self) -> usize;
    fn sample(&self, rng: &mut StreamRng) -> Vec<f64>;
    fn ln_pdf(&self, x: &[f64]) -> f64;
}

/// Multivariate normal given by its mean and lower Cholesky factor.
#[derive(Debug, Clone)]
pub struct MvNormal {
    mean: DVector<f64>,
    chol: DMatrix<f64>,
    log_norm: f64,
}

impl MvNormal {
    pub fn new(mean: Vec<f64>, cov: DMatrix<f64>) -> Result<Self> {
        let p = mean.len();
        if cov.nrows() != p || cov.ncols() != p {
            return Err(Error::InvalidArgument("covariance shape mismatch".into()));
        }
        let chol = cov
            .cholesky()
            .ok_or_else(|| Error::Numerical("covariance is not positive definite".into()))?
            .l();
        let log_det_half: f64 = chol.diagonal().iter().map(|d| d.ln()).sum();
        let log_norm = -0.5 * p as f64 * (2.0 * std::f64::consts::PI).ln() - log_det_half;
        Ok(Self {
            mean: DVector::from_vec(mean),
            chol,
            log_norm,
        })
    }

    /// Sample mean and covariance of `draws`. The covariance diagonal is
    /// inflated in steps until it factors.
    pub fn moment_matched(draws: &[Vec<f64>]) -> Result<Self> {
        let n = draws.len();
        let p = draws.first().map_or(0, Vec::len);
        if n < 2 || p == 0 {
            return Err(Error::InvalidArgument("need at least two draws of positive dimension".into()));
        }
        let mut mean = vec![0.0; p];
        for d in draws {
            for (m, v) in mean.iter_mut().zip(d) {
                *m += v;
            }
        }
        mean.iter_mut().for_each(|m| *m /= n as f64);
        let mut cov = DMatrix::<f64>::zeros(p, p);
        for d in draws {
            for i in 0..p {
                for j in 0..=i {
                    cov[(i, j)] += (d[i] - mean[i]) * (d[j] - mean[j]);
                }
            }
        }
        for i in 0..p {
            for j in 0..=i {
                cov[(i, j)] /= (n - 1) as f64;
                cov[(j, i)] = cov[(i, j)];
            }
        }
        let scale = cov.trace() / p as f64;
        if !(scale > 0.0) || !scale.is_finite() {
            return Err(Error::Numerical("draws have no spread".into()));
        }
        let mut jitter = 0.0;
        for k in 0..12 {
            let mut c = cov.clone();
            for i in 0..p {
                c[(i, i)] += jitter;
            }
            if let Ok(mvn) = Self::new(mean.clone(), c) {
                if k > 0 {
                    log::warn!("bridge proposal covariance needed jitter {jitter:e}");
                }
                return Ok(mvn);
            }
            jitter = scale * 1e-10 * 10f64.powi(k);
        }
        Err(Error::Numerical("proposal covariance is degenerate after jitter".into()))
    }
}

impl Proposal for MvNormal {
    fn dim(&self) -> usize {
        self.mean.len()
    }

    fn sample(&self, rng: &mut StreamRng) -> Vec<f64> {
        let z = DVector::from_iterator(self.dim(), (0..self.dim()).map(|_| rng.sample::<f64, _>(StandardNormal)));
        (&self.mean + &self.chol * z).iter().copied().collect()
    }

    fn ln_pdf(&self, x: &[f64]) -> f64 {
        let diff = DVector::from_column_slice(x) - &self.mean;
        match self.chol.solve_lower_triangular(&diff) {
            Some(z) => self.log_norm - 0.5 * z.norm_squared(),
            None => f64::NEG_INFINITY,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct BridgeConfig {
    /// Proposal draws; `None` uses as many as there are posterior draws.
    pub n_proposal_draws: Option<usize>,
    pub max_iters: usize,
    pub tol: f64,
    pub seed: u64,
    pub stream: u64,
    pub min_draws: usize,
}

impl Default for BridgeConfig {
    fn default() -> Self {
        Self {
            n_proposal_draws: None,
            max_iters: 1000,
            tol: 1e-10,
            seed: 0,
            stream: 0,
            min_draws: 1000,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BridgeEstimate {
    pub log_ml: f64,
    pub iterations: usize,
}

fn log_add_exp(a: f64, b: f64) -> f64 {
    let m = a.max(b);
    if m == f64::NEG_INFINITY {
        return m;
    }
    m + ((a - m).exp() + (b - m).exp()).ln()
}

fn log_mean_exp(v: &[f64]) -> f64 {
    let m = v.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    if m == f64::NEG_INFINITY {
        return m;
    }
    m + (v.iter().map(|x| (x - m).exp()).sum::<f64>() / v.len() as f64).ln()
}

/// Log marginal likelihood from posterior draws and the unnormalized log
/// posterior, with a moment-matched normal importance density.
pub fn bridge_logml<F: Fn(&[f64]) -> f64 + ?Sized>(
    draws: &[Vec<f64>],
    log_unnorm_posterior: &F,
    config: &BridgeConfig,
) -> Result<BridgeEstimate> {
    if draws.len() < config.min_draws {
        return Err(Error::InvalidArgument(format!(
            "bridge sampling needs at least {} draws, got {}",
            config.min_draws,
            draws.len()
        )));
    }
    let proposal = MvNormal::moment_matched(draws)?;
    bridge_logml_with(draws, log_unnorm_posterior, &proposal, config)
}

/// Iterates the optimal bridge fixed point for a given importance density.
pub fn bridge_logml_with<F: Fn(&[f64]) -> f64 + ?Sized, P: Proposal + ?Sized>(
    draws: &[Vec<f64>],
    log_unnorm_posterior: &F,
    proposal: &P,
    config: &BridgeConfig,
) -> Result<BridgeEstimate> {
    if draws.is_empty() {
        return Err(Error::InvalidArgument("no posterior draws".into()));
    }
    let n2 = config.n_proposal_draws.unwrap_or(draws.len());
    if n2 == 0 {
        return Err(Error::InvalidArgument("no proposal draws".into()));
    }
    let mut rng = stream_rng(config.seed, config.stream);
    let proposed: Vec<Vec<f64>> = (0..n2).map(|_| proposal.sample(&mut rng)).collect();

    let ratio = |x: &[f64]| {
        let q = log_unnorm_posterior(x);
        let g = proposal.ln_pdf(x);
        if q.is_nan() || q == f64::NEG_INFINITY {
            f64::NEG_INFINITY
        } else {
            q - g
        }
    };
    let l1: Vec<f64> = draws.iter().map(|x| ratio(x)).collect();
    let l2: Vec<f64> = proposed.iter().map(|x| ratio(x)).collect();
    let mut finite: Vec<f64> = l1.iter().copied().filter(|v| v.is_finite()).collect();
    if finite.is_empty() {
        return Err(Error::Numerical("posterior density is not finite at any draw".into()));
    }
    finite.sort_by(f64::total_cmp);
    let lstar = crate::stats::quantile_sorted(&finite, 0.5);
    let l1: Vec<f64> = l1.iter().map(|v| v - lstar).collect();
    let l2: Vec<f64> = l2.iter().map(|v| v - lstar).collect();

    let n1 = draws.len() as f64;
    let total = n1 + n2 as f64;
    let (ls1, ls2) = ((n1 / total).ln(), (n2 as f64 / total).ln());

    let mut log_r = 0.0;
    let mut num = vec![0.0; l2.len()];
    let mut den = vec![0.0; l1.len()];
    for iter in 1..=config.max_iters {
        for (o, l) in num.iter_mut().zip(&l2) {
            *o = l - log_add_exp(ls1 + l, ls2 + log_r);
        }
        for (o, l) in den.iter_mut().zip(&l1) {
            *o = -log_add_exp(ls1 + l, ls2 + log_r);
        }
        let next = log_mean_exp(&num) - log_mean_exp(&den);
        if !next.is_finite() {
            return Err(Error::Numerical("bridge estimate is not finite".into()));
        }
        let delta = (next - log_r).abs();
        log_r = next;
        if delta < config.tol {
            return Ok(BridgeEstimate {
                log_ml: log_r + lstar,
                iterations: iter,
            });
        }
    }
    Err(Error::BridgeNotConverged(config.max_iters))
}
