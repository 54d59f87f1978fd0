//! Differential evolution (rand/1/bin) for bounded maximization.

use rand::Rng;

use crate::error::{Error, Result};
use crate::rng::{stream_rng, StreamRng};

#[derive(Debug, Clone, PartialEq)]
pub struct DeConfig {
    /// Population size; `None` means ten per parameter.
    pub population: Option<usize>,
    pub generations: usize,
    /// Mutation factor F.
    pub mutation: f64,
    /// Crossover rate CR.
    pub crossover: f64,
    pub seed: u64,
    /// Points placed in the initial population before random members.
    pub initial: Vec<Vec<f64>>,
}

impl Default for DeConfig {
    fn default() -> Self {
        Self {
            population: None,
            generations: 500,
            mutation: 0.8,
            crossover: 0.9,
            seed: 0,
            initial: Vec::new(),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct DeResult {
    pub best: Vec<f64>,
    pub value: f64,
}

const MAX_RESAMPLE: usize = 100;

fn uniform_point(rng: &mut StreamRng, bounds: &[(f64, f64)]) -> Vec<f64> {
    bounds.iter().map(|&(lo, hi)| rng.random_range(lo..hi)).collect()
}

/// Maximizes `objective` over the box `bounds`. Deterministic for a fixed seed.
pub fn de_mle<F>(objective: F, bounds: &[(f64, f64)], config: &DeConfig) -> Result<DeResult>
where
    F: Fn(&[f64]) -> f64,
{
    let dim = bounds.len();
    if dim == 0 {
        return Err(Error::InvalidArgument("no parameters to optimize".into()));
    }
    if let Some((i, _)) = bounds
        .iter()
        .enumerate()
        .find(|(_, (lo, hi))| !(lo.is_finite() && hi.is_finite() && lo < hi))
    {
        return Err(Error::InvalidArgument(format!("invalid bounds for parameter {i}")));
    }
    let np = config.population.unwrap_or(10 * dim);
    if np < 4 {
        return Err(Error::InvalidArgument("population must be at least 4".into()));
    }
    let eval = |x: &[f64]| {
        let v = objective(x);
        if v.is_nan() {
            f64::NEG_INFINITY
        } else {
            v
        }
    };

    let mut rng = stream_rng(config.seed, 0);
    let mut pop: Vec<Vec<f64>> = Vec::with_capacity(np);
    let mut fit: Vec<f64> = Vec::with_capacity(np);
    for i in 0..np {
        let mut x = match config.initial.get(i) {
            Some(guess) if guess.len() == dim => guess
                .iter()
                .zip(bounds)
                .map(|(&g, &(lo, hi))| g.clamp(lo, hi))
                .collect(),
            _ => uniform_point(&mut rng, bounds),
        };
        let mut f = eval(&x);
        let mut attempts = 0;
        while f == f64::NEG_INFINITY && attempts < MAX_RESAMPLE {
            x = uniform_point(&mut rng, bounds);
            f = eval(&x);
            attempts += 1;
        }
        pop.push(x);
        fit.push(f);
    }
    if fit.iter().all(|f| *f == f64::NEG_INFINITY) {
        return Err(Error::InfeasibleObjective);
    }

    let mut trial = vec![0.0; dim];
    for _ in 0..config.generations {
        let mut next_pop = pop.clone();
        let mut next_fit = fit.clone();
        for i in 0..np {
            let (r1, r2, r3) = distinct_three(&mut rng, np, i);
            let jrand = rng.random_range(0..dim);
            for j in 0..dim {
                trial[j] = if j == jrand || rng.random::<f64>() < config.crossover {
                    let v = pop[r1][j] + config.mutation * (pop[r2][j] - pop[r3][j]);
                    let (lo, hi) = bounds[j];
                    // Out-of-box components land halfway between the bound
                    // and the target vector.
                    if v < lo {
                        0.5 * (lo + pop[i][j])
                    } else if v > hi {
                        0.5 * (hi + pop[i][j])
                    } else {
                        v
                    }
                } else {
                    pop[i][j]
                };
            }
            let f = eval(&trial);
            if f >= fit[i] {
                next_pop[i].copy_from_slice(&trial);
                next_fit[i] = f;
            }
        }
        pop = next_pop;
        fit = next_fit;
    }

    let best = (0..np)
        .max_by(|&a, &b| fit[a].total_cmp(&fit[b]).then(b.cmp(&a)))
        .expect("non-empty population");
    Ok(DeResult {
        best: pop[best].clone(),
        value: fit[best],
    })
}

fn distinct_three(rng: &mut StreamRng, n: usize, exclude: usize) -> (usize, usize, usize) {
    let mut pick = |taken: &[usize]| loop {
        let r = rng.random_range(0..n);
        if r != exclude && !taken.contains(&r) {
            return r;
        }
    };
    let a = pick(&[]);
    let b = pick(&[a]);
    let c = pick(&[a, b]);
    (a, b, c)
}
