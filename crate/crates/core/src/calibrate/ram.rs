//! Robust adaptive Metropolis with coerced acceptance rate.
//!
//! Proposals are `θ* = θ + S u` with `u ~ N(0, I)`. After each step the
//! lower-triangular factor is updated so that
//! `S' S'ᵀ = S (I + η (α - α*) u uᵀ / |u|²) Sᵀ`, with `η = n^(-γ)`.

use nalgebra::{DMatrix, DVector};
use rand::Rng;
use rand_distr::StandardNormal;

use crate::error::{Error, Result};
use crate::rng::{stream_rng, StreamRng};

#[derive(Debug, Clone, PartialEq)]
pub struct RamConfig {
    pub target_accept: f64,
    pub gamma_exponent: f64,
    pub seed: u64,
    /// RNG stream within `seed` (e.g. the chain index).
    pub stream: u64,
    /// When false the proposal factor stays fixed (plain random-walk Metropolis).
    pub adapt: bool,
    /// Diagonal of the initial proposal factor; defaults to ones.
    pub initial_scale: Option<Vec<f64>>,
}

impl Default for RamConfig {
    fn default() -> Self {
        Self {
            target_accept: 0.234,
            gamma_exponent: 2.0 / 3.0,
            seed: 0,
            stream: 0,
            adapt: true,
            initial_scale: None,
        }
    }
}

/// The full state of one chain.
#[derive(Debug, Clone)]
pub struct ChainState {
    pub position: Vec<f64>,
    pub log_posterior: f64,
    /// Lower-triangular proposal factor with positive diagonal.
    pub proposal_factor: DMatrix<f64>,
    pub iteration: u64,
    pub accept_count: u64,
    rng: StreamRng,
    target_accept: f64,
    gamma_exponent: f64,
    adapt: bool,
}

impl ChainState {
    pub fn new<F>(log_target: &F, start: &[f64], config: &RamConfig) -> Result<Self>
    where
        F: Fn(&[f64]) -> f64 + ?Sized,
    {
        let lp = log_target(start);
        if !lp.is_finite() {
            return Err(Error::StartOutsideSupport);
        }
        let dim = start.len();
        let diag = match &config.initial_scale {
            Some(s) if s.len() == dim && s.iter().all(|v| *v > 0.0 && v.is_finite()) => s.clone(),
            Some(_) => {
                return Err(Error::InvalidArgument(
                    "initial proposal scale must be positive with one entry per parameter".into(),
                ))
            }
            None => vec![1.0; dim],
        };
        Ok(Self {
            position: start.to_vec(),
            log_posterior: lp,
            proposal_factor: DMatrix::from_diagonal(&DVector::from_vec(diag)),
            iteration: 0,
            accept_count: 0,
            rng: stream_rng(config.seed, config.stream),
            target_accept: config.target_accept,
            gamma_exponent: config.gamma_exponent,
            adapt: config.adapt,
        })
    }

    pub fn acceptance_rate(&self) -> f64 {
        if self.iteration == 0 {
            0.0
        } else {
            self.accept_count as f64 / self.iteration as f64
        }
    }

    /// One Metropolis step followed by the factor update.
    pub fn step<F>(&mut self, log_target: &F)
    where
        F: Fn(&[f64]) -> f64 + ?Sized,
    {
        let dim = self.position.len();
        let u = DVector::from_fn(dim, |_, _| self.rng.sample::<f64, _>(StandardNormal));
        let su = &self.proposal_factor * &u;
        let proposal: Vec<f64> = self.position.iter().zip(su.iter()).map(|(p, d)| p + d).collect();
        let lp = log_target(&proposal);
        let alpha = if lp.is_nan() || lp == f64::NEG_INFINITY {
            0.0
        } else {
            (lp - self.log_posterior).exp().min(1.0)
        };
        self.iteration += 1;
        if self.rng.random::<f64>() < alpha {
            self.position = proposal;
            self.log_posterior = lp;
            self.accept_count += 1;
        }
        if self.adapt {
            self.adapt_factor(&u, &su, alpha);
        }
    }

    fn adapt_factor(&mut self, u: &DVector<f64>, su: &DVector<f64>, alpha: f64) {
        let norm2 = u.norm_squared();
        if norm2 <= 0.0 {
            return;
        }
        let eta = (self.iteration as f64).powf(-self.gamma_exponent).min(1.0);
        let coef = eta * (alpha - self.target_accept) / norm2;
        let m = &self.proposal_factor * self.proposal_factor.transpose() + coef * su * su.transpose();
        if let Some(chol) = m.cholesky() {
            let l = chol.l();
            if l.diagonal().iter().all(|d| *d > 0.0 && d.is_finite()) {
                self.proposal_factor = l;
            }
        }
    }
}

/// Samples of one chain, stored row-major (`n_iter × dim`).
#[derive(Debug, Clone)]
pub struct RamChain {
    pub dim: usize,
    pub positions: Vec<f64>,
    pub log_targets: Vec<f64>,
    pub accept_count: u64,
    pub final_factor: DMatrix<f64>,
}

impl RamChain {
    pub fn len(&self) -> usize {
        self.log_targets.len()
    }

    pub fn is_empty(&self) -> bool {
        self.log_targets.is_empty()
    }

    pub fn position(&self, i: usize) -> &[f64] {
        &self.positions[i * self.dim..(i + 1) * self.dim]
    }

    /// Trace of parameter `j` from iteration `from` on.
    pub fn trace(&self, j: usize, from: usize) -> Vec<f64> {
        (from..self.len()).map(|i| self.positions[i * self.dim + j]).collect()
    }

    pub fn acceptance_rate(&self) -> f64 {
        self.accept_count as f64 / self.len().max(1) as f64
    }
}

/// Runs `n_iter` steps from `start`, recording every state.
pub fn ram_chain<F>(log_target: &F, start: &[f64], n_iter: usize, config: &RamConfig) -> Result<RamChain>
where
    F: Fn(&[f64]) -> f64 + ?Sized,
{
    if n_iter < 1 {
        return Err(Error::InvalidArgument("n_iter must be at least 1".into()));
    }
    let mut state = ChainState::new(log_target, start, config)?;
    let dim = start.len();
    let mut positions = Vec::with_capacity(n_iter * dim);
    let mut log_targets = Vec::with_capacity(n_iter);
    for _ in 0..n_iter {
        state.step(log_target);
        positions.extend_from_slice(&state.position);
        log_targets.push(state.log_posterior);
    }
    Ok(RamChain {
        dim,
        positions,
        log_targets,
        accept_count: state.accept_count,
        final_factor: state.proposal_factor,
    })
}
