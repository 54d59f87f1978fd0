//! Return levels from parameter draws and their model-averaged combination.

use std::fmt::Write as _;
use std::path::Path;

use rand::Rng;

use crate::calibrate::PosteriorEnsemble;
use crate::error::{Error, Result};
use crate::evd::{link_params, Family, ParamVector, XI_ZERO_TOL};
use crate::ingest::TemperatureSeries;
use crate::rng::stream_rng;
use crate::stats::quantile_sorted;

pub const DAYS_PER_YEAR: f64 = 365.25;

/// Level exceeded on average once per `return_period` years under the
/// Poisson process / GPD model, measured from the same datum as `threshold`.
///
/// Solves λₐ(1 − F(z)) = 1/T with λₐ the annual event rate. `None` marks an
/// invalid draw: a nonpositive daily rate, or λₐ·T ≤ 1 (the level would sit
/// at or below the threshold).
pub fn ppgpd_return_level(
    theta: &ParamVector,
    temperature: f64,
    threshold: f64,
    return_period: f64,
    days_per_year: f64,
) -> Option<f64> {
    let p = link_params(theta, temperature);
    let lambda = p.rate_or_location;
    if !(lambda > 0.0) || !(return_period > 0.0) || !(p.scale > 0.0) {
        return None;
    }
    let events = lambda * days_per_year * return_period;
    if !(events > 1.0) {
        return None;
    }
    let z = if p.shape.abs() < XI_ZERO_TOL {
        threshold + p.scale * events.ln()
    } else {
        threshold + p.scale / p.shape * (events.powf(p.shape) - 1.0)
    };
    z.is_finite().then_some(z)
}

/// GEV level with annual exceedance probability 1/T. `None` when T ≤ 1 or
/// the scale is not positive.
pub fn gev_return_level(theta: &ParamVector, temperature: f64, return_period: f64) -> Option<f64> {
    if !(return_period > 1.0) {
        return None;
    }
    let p = link_params(theta, temperature);
    if !(p.scale > 0.0) {
        return None;
    }
    let y = -(1.0 - 1.0 / return_period).ln();
    let z = if p.shape.abs() < XI_ZERO_TOL {
        p.rate_or_location - p.scale * y.ln()
    } else {
        p.rate_or_location - p.scale / p.shape * (1.0 - y.powf(-p.shape))
    };
    z.is_finite().then_some(z)
}

/// Quantiles reported for every distribution, min and max included.
pub const QUANTILE_LEVELS: [f64; 7] = [0.0, 0.05, 0.25, 0.5, 0.75, 0.95, 1.0];

/// Return levels for one year and return period, one entry per draw.
#[derive(Debug, Clone, PartialEq)]
pub struct ReturnLevelDistribution {
    pub year: i32,
    pub return_period: f64,
    /// `None` marks an invalid draw.
    pub levels: Vec<Option<f64>>,
}

impl ReturnLevelDistribution {
    pub fn new(year: i32, return_period: f64, levels: Vec<Option<f64>>) -> Self {
        let levels = levels.into_iter().map(|l| l.filter(|v| v.is_finite())).collect();
        Self {
            year,
            return_period,
            levels,
        }
    }

    pub fn len(&self) -> usize {
        self.levels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.levels.is_empty()
    }

    /// Valid levels in draw order.
    pub fn samples(&self) -> Vec<f64> {
        self.levels.iter().flatten().copied().collect()
    }

    pub fn invalid_count(&self) -> usize {
        self.levels.iter().filter(|l| l.is_none()).count()
    }

    /// Values at [`QUANTILE_LEVELS`], or `None` if every draw is invalid.
    pub fn quantiles(&self) -> Option<[f64; 7]> {
        let mut s = self.samples();
        if s.is_empty() {
            return None;
        }
        s.sort_by(f64::total_cmp);
        Some(QUANTILE_LEVELS.map(|q| quantile_sorted(&s, q)))
    }

    pub fn median(&self) -> Option<f64> {
        self.quantiles().map(|q| q[3])
    }
}

/// Applies the family's return-level formula to every draw at `year`.
pub fn rl_distribution(
    ensemble: &PosteriorEnsemble,
    temps: &TemperatureSeries,
    year: i32,
    return_period: f64,
) -> Result<ReturnLevelDistribution> {
    let t = temps.at(year)?;
    let levels = match ensemble.structure.family {
        Family::PpGpd => {
            let threshold = ensemble
                .threshold_m
                .ok_or_else(|| Error::InvalidArgument("PP/GPD ensemble has no threshold".into()))?;
            (0..ensemble.len())
                .map(|i| ppgpd_return_level(&ensemble.theta(i), t, threshold, return_period, DAYS_PER_YEAR))
                .collect()
        }
        Family::Gev => (0..ensemble.len())
            .map(|i| gev_return_level(&ensemble.theta(i), t, return_period))
            .collect(),
    };
    Ok(ReturnLevelDistribution::new(year, return_period, levels))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum CombineMode {
    /// Draw i of the output is the weighted mean of every model's draw i.
    #[default]
    WeightedMean,
    /// Draw i copies model k's draw i with probability w_k.
    Mixture,
}

impl std::str::FromStr for CombineMode {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "weighted_mean" | "eq7_weighted_mean" => Ok(Self::WeightedMean),
            "mixture" => Ok(Self::Mixture),
            _ => Err(Error::InvalidArgument(format!("unknown combine mode `{s}`"))),
        }
    }
}

fn check_same_shape(dists: &[&ReturnLevelDistribution]) -> Result<usize> {
    let first = dists
        .first()
        .ok_or_else(|| Error::InvalidArgument("no distributions to combine".into()))?;
    if dists.iter().any(|d| d.len() != first.len()) {
        return Err(Error::InvalidArgument("distributions have different sample counts".into()));
    }
    Ok(first.len())
}

/// Model-averaged return-level distribution. An output draw is invalid when
/// a contributing draw (one with positive weight) is invalid.
pub fn bma_combine(
    per_model: &[&ReturnLevelDistribution],
    weights: &[f64],
    mode: CombineMode,
    seed: u64,
) -> Result<ReturnLevelDistribution> {
    let n = check_same_shape(per_model)?;
    if weights.len() != per_model.len() {
        return Err(Error::InvalidArgument("one weight per model is required".into()));
    }
    if weights.iter().any(|w| !(*w >= 0.0)) || (weights.iter().sum::<f64>() - 1.0).abs() > 1e-9 {
        return Err(Error::InvalidArgument("weights must be nonnegative and sum to 1".into()));
    }
    let levels = match mode {
        CombineMode::WeightedMean => (0..n)
            .map(|i| {
                let mut acc = 0.0;
                for (d, w) in per_model.iter().zip(weights) {
                    if *w > 0.0 {
                        acc += w * d.levels[i]?;
                    }
                }
                Some(acc)
            })
            .collect(),
        CombineMode::Mixture => {
            let mut rng = stream_rng(seed, 0);
            (0..n)
                .map(|i| {
                    let u: f64 = rng.random();
                    let mut cum = 0.0;
                    let mut pick = weights.iter().rposition(|w| *w > 0.0).unwrap_or(0);
                    for (k, w) in weights.iter().enumerate() {
                        cum += w;
                        if *w > 0.0 && u < cum {
                            pick = k;
                            break;
                        }
                    }
                    per_model[pick].levels[i]
                })
                .collect()
        }
    };
    let first = per_model[0];
    Ok(ReturnLevelDistribution::new(first.year, first.return_period, levels))
}

/// Draw-by-draw difference `a − b`, invalid where either side is.
pub fn rl_delta(a: &ReturnLevelDistribution, b: &ReturnLevelDistribution) -> Result<ReturnLevelDistribution> {
    check_same_shape(&[a, b])?;
    let levels = a
        .levels
        .iter()
        .zip(&b.levels)
        .map(|(x, y)| Some((*x)? - (*y)?))
        .collect();
    Ok(ReturnLevelDistribution::new(a.year, a.return_period, levels))
}

/// `year,return_period,quantile,level_m` rows for each distribution.
pub fn quantiles_csv(dists: &[&ReturnLevelDistribution]) -> String {
    let mut out = String::from("year,return_period,quantile,level_m\n");
    for d in dists {
        let qs = d.quantiles();
        for (j, q) in QUANTILE_LEVELS.iter().enumerate() {
            let v = qs.map_or_else(|| "NA".to_string(), |qs| qs[j].to_string());
            let _ = writeln!(out, "{},{},{},{}", d.year, d.return_period, q, v);
        }
    }
    out
}

/// `draw,model,level_m,valid` rows, one per draw and labelled distribution.
pub fn samples_csv(dists: &[(&str, &ReturnLevelDistribution)]) -> String {
    let mut out = String::from("draw,model,level_m,valid\n");
    for (label, d) in dists {
        for (i, l) in d.levels.iter().enumerate() {
            match l {
                Some(v) => {
                    let _ = writeln!(out, "{i},{label},{v},true");
                }
                None => {
                    let _ = writeln!(out, "{i},{label},NA,false");
                }
            }
        }
    }
    out
}

pub fn write_text(path: impl AsRef<Path>, text: &str) -> Result<()> {
    let path = path.as_ref();
    std::fs::write(path, text).map_err(|e| Error::io(path, e))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::calibrate::Provenance;
    use crate::evd::{gpd_cdf, ModelStructure, Slot, StructureTag};
    use approx::assert_abs_diff_eq;
    use proptest::prelude::*;

    fn pp(rate: f64, sigma: f64, xi: f64) -> ParamVector {
        ParamVector::stationary(rate, sigma.ln(), xi)
    }

    /// Bisection on λₐ(1 − F(z)) = 1/T.
    fn root_find(rate: f64, sigma: f64, xi: f64, threshold: f64, period: f64) -> f64 {
        let f = |z: f64| rate * DAYS_PER_YEAR * (1.0 - gpd_cdf(z, threshold, sigma, xi).unwrap()) - 1.0 / period;
        let (mut lo, mut hi) = (threshold, threshold + 1.0);
        while f(hi) > 0.0 {
            hi = threshold + 2.0 * (hi - threshold);
        }
        for _ in 0..200 {
            let mid = 0.5 * (lo + hi);
            if f(mid) > 0.0 {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        0.5 * (lo + hi)
    }

    #[test]
    fn ppgpd_examples() {
        let z = ppgpd_return_level(&pp(0.01, 1.0, 0.0), 0.0, 0.0, 100.0, DAYS_PER_YEAR).unwrap();
        assert_abs_diff_eq!(z, 365.25f64.ln(), epsilon = 1e-12);
        assert_abs_diff_eq!(z, 5.9007, epsilon = 1e-3);
        let z = ppgpd_return_level(&pp(0.01, 1.0, 0.1), 0.0, 0.0, 100.0, DAYS_PER_YEAR).unwrap();
        assert_abs_diff_eq!(z, root_find(0.01, 1.0, 0.1, 0.0, 100.0), epsilon = 1e-8);
        assert_abs_diff_eq!(z, 8.04, epsilon = 0.01);
        let boundary = 1.0 / (DAYS_PER_YEAR * 100.0);
        assert_eq!(ppgpd_return_level(&pp(boundary, 1.0, 0.1), 0.0, 0.0, 100.0, DAYS_PER_YEAR), None);
        assert_eq!(ppgpd_return_level(&pp(-0.01, 1.0, 0.1), 0.0, 0.0, 100.0, DAYS_PER_YEAR), None);
    }

    #[test]
    fn ppgpd_matches_root_finder_on_grid() {
        for sigma in [0.05, 0.1, 0.3, 1.0] {
            for xi in [-0.3, -0.1, 0.0, 0.1, 0.3] {
                for rate in [0.002, 0.01, 0.05] {
                    let z = ppgpd_return_level(&pp(rate, sigma, xi), 0.0, 1.5, 100.0, DAYS_PER_YEAR).unwrap();
                    let oracle = root_find(rate, sigma, xi, 1.5, 100.0);
                    assert!((z - oracle).abs() < 1e-8, "σ={sigma} ξ={xi} λ={rate}: {z} vs {oracle}");
                }
            }
        }
    }

    #[test]
    fn gev_examples() {
        let theta = ParamVector::stationary(2.0, 0.5f64.ln(), 0.0);
        let z = gev_return_level(&theta, 0.0, 20.0).unwrap();
        assert_abs_diff_eq!(z, 2.0 + 0.5 * -(-(0.95f64).ln()).ln(), epsilon = 1e-12);
        assert_abs_diff_eq!((z - 2.0) / 0.5, 2.9702, epsilon = 1e-4);
        let bounded = ParamVector::stationary(1.0, 0.0, -0.25);
        let far = gev_return_level(&bounded, 0.0, 1e12).unwrap();
        assert_abs_diff_eq!(far, 1.0 + 1.0 / 0.25, epsilon = 1e-2);
        assert!(far < 5.0);
        assert!(gev_return_level(&bounded, 0.0, 20.0).unwrap() <= gev_return_level(&bounded, 0.0, 50.0).unwrap());
        assert_eq!(gev_return_level(&bounded, 0.0, 1.0), None);
    }

    fn ensemble(structure: ModelStructure, draws: Vec<Vec<f64>>) -> PosteriorEnsemble {
        let n = draws.len();
        PosteriorEnsemble {
            structure,
            draws,
            log_posts: vec![0.0; n],
            provenance: Provenance {
                n_chains: 1,
                n_iterations: n,
                burn_in: 0,
                seed: 0,
                psrf: Vec::new(),
                acceptance_rates: Vec::new(),
                converged: true,
                warnings: Vec::new(),
            },
            threshold_m: Some(1.0),
        }
    }

    fn temps() -> TemperatureSeries {
        TemperatureSeries::new(2000, (0..100).map(|i| i as f64 * 0.02).collect()).unwrap()
    }

    #[test]
    fn stationary_distribution_ignores_year() {
        let st = ModelStructure::new(Family::PpGpd, StructureTag::St);
        let e = ensemble(st, vec![vec![0.01, -2.0, 0.1], vec![0.012, -2.1, 0.05]]);
        let a = rl_distribution(&e, &temps(), 2016, 100.0).unwrap();
        let b = rl_distribution(&e, &temps(), 2065, 100.0).unwrap();
        assert_eq!(a.levels, b.levels);
        assert!(rl_distribution(&e, &temps(), 2150, 100.0).is_err());
    }

    #[test]
    fn single_draw_and_invalid_draws() {
        let ns1 = ModelStructure::new(Family::PpGpd, StructureTag::Ns1);
        let e = ensemble(ns1, vec![vec![0.01, 0.0, -2.0, 0.1]]);
        let d = rl_distribution(&e, &temps(), 2010, 100.0).unwrap();
        let q = d.quantiles().unwrap();
        assert!(q.iter().all(|v| *v == q[0]));

        let e = ensemble(ns1, vec![vec![0.01, 0.0, -2.0, 0.1], vec![0.01, -0.02, -2.0, 0.1]]);
        let d = rl_distribution(&e, &temps(), 2099, 100.0).unwrap();
        assert_eq!(d.invalid_count(), 1);
        assert_eq!(d.samples().len() + d.invalid_count(), d.len());
    }

    fn constant(v: f64, n: usize) -> ReturnLevelDistribution {
        ReturnLevelDistribution::new(2016, 100.0, vec![Some(v); n])
    }

    #[test]
    fn combine_examples() {
        let a = ReturnLevelDistribution::new(2016, 100.0, vec![Some(1.0), Some(2.0), None]);
        let b = constant(9.0, 3);
        for mode in [CombineMode::WeightedMean, CombineMode::Mixture] {
            let out = bma_combine(&[&a, &b], &[1.0, 0.0], mode, 3).unwrap();
            assert_eq!(out.levels, a.levels);
        }
        let out = bma_combine(&[&constant(4.0, 10), &constant(6.0, 10)], &[0.5, 0.5], CombineMode::WeightedMean, 0)
            .unwrap();
        assert!(out.samples().iter().all(|v| *v == 5.0));
        let out = bma_combine(&[&a, &b], &[0.5, 0.5], CombineMode::WeightedMean, 0).unwrap();
        assert_eq!(out.invalid_count(), 1);
        assert!(bma_combine(&[&a, &constant(1.0, 4)], &[0.5, 0.5], CombineMode::WeightedMean, 0).is_err());
    }

    #[test]
    fn mixture_picks_whole_draws() {
        let n = 20_000;
        let out = bma_combine(&[&constant(4.0, n), &constant(6.0, n)], &[0.5, 0.5], CombineMode::Mixture, 8).unwrap();
        let s = out.samples();
        assert!(s.iter().all(|v| *v == 4.0 || *v == 6.0));
        let m = s.iter().sum::<f64>() / n as f64;
        // Standard error of the mean is 1/sqrt(n) ≈ 0.007.
        assert!((m - 5.0).abs() < 0.03, "{m}");
    }

    #[test]
    fn delta_examples() {
        let a = constant(5.0, 4);
        assert!(rl_delta(&a, &a).unwrap().samples().iter().all(|v| *v == 0.0));
        let d = rl_delta(&a, &constant(4.57, 4)).unwrap();
        assert!(d.samples().iter().all(|v| (v - 0.43).abs() < 1e-12));
        assert!(d.median().unwrap() > 0.0);
        assert!(rl_delta(&a, &constant(1.0, 3)).is_err());
    }

    #[test]
    fn csv_layouts() {
        let d = ReturnLevelDistribution::new(2016, 100.0, vec![Some(1.0), None]);
        let q = quantiles_csv(&[&d]);
        assert_eq!(q.lines().count(), 8);
        assert_eq!(q.lines().nth(1), Some("2016,100,0,1"));
        let s = samples_csv(&[("BMA", &d)]);
        assert_eq!(s, "draw,model,level_m,valid\n0,BMA,1,true\n1,BMA,NA,false\n");
    }

    proptest! {
        #[test]
        fn ppgpd_monotone_in_period(
            rate in 0.001f64..0.05, sigma in 0.01f64..2.0, xi in -0.5f64..0.5,
            t1 in 1.0f64..500.0, factor in 1.0f64..100.0,
        ) {
            let theta = pp(rate, sigma, xi);
            let a = ppgpd_return_level(&theta, 0.0, 0.0, t1, DAYS_PER_YEAR);
            let b = ppgpd_return_level(&theta, 0.0, 0.0, t1 * factor, DAYS_PER_YEAR);
            if let (Some(a), Some(b)) = (a, b) {
                prop_assert!(a <= b + 1e-12);
                if xi < 0.0 {
                    prop_assert!(b <= sigma / -xi + 1e-9);
                }
            }
        }

        #[test]
        fn stationary_level_is_year_invariant(t1 in -1.0f64..3.0, t2 in -1.0f64..3.0) {
            let theta = pp(0.01, 0.2, 0.1);
            prop_assert_eq!(
                ppgpd_return_level(&theta, t1, 0.0, 100.0, DAYS_PER_YEAR),
                ppgpd_return_level(&theta, t2, 0.0, 100.0, DAYS_PER_YEAR)
            );
            let moving = theta.with(Slot::RateOrLocation1, 0.001);
            prop_assume!((t1 - t2).abs() > 1e-3);
            prop_assert_ne!(
                ppgpd_return_level(&moving, t1, 0.0, 100.0, DAYS_PER_YEAR),
                ppgpd_return_level(&moving, t2, 0.0, 100.0, DAYS_PER_YEAR)
            );
        }

        #[test]
        fn weighted_mean_permutation_invariant(
            levels in proptest::collection::vec(proptest::collection::vec(0.0f64..10.0, 5), 4),
            raw in proptest::collection::vec(0.01f64..1.0, 4),
        ) {
            let total: f64 = raw.iter().sum();
            let w: Vec<f64> = raw.iter().map(|r| r / total).collect();
            let dists: Vec<ReturnLevelDistribution> = levels
                .iter()
                .map(|l| ReturnLevelDistribution::new(2016, 100.0, l.iter().map(|v| Some(*v)).collect()))
                .collect();
            let refs: Vec<&ReturnLevelDistribution> = dists.iter().collect();
            let a = bma_combine(&refs, &w, CombineMode::WeightedMean, 0).unwrap();
            let perm = [2, 0, 3, 1];
            let prefs: Vec<&ReturnLevelDistribution> = perm.iter().map(|&i| &dists[i]).collect();
            let pw: Vec<f64> = perm.iter().map(|&i| w[i]).collect();
            let b = bma_combine(&prefs, &pw, CombineMode::WeightedMean, 0).unwrap();
            for (x, y) in a.samples().iter().zip(b.samples()) {
                prop_assert!((x - y).abs() < 1e-12);
            }
            let q = a.quantiles().unwrap();
            prop_assert!(q.windows(2).all(|p| p[0] <= p[1]));
        }
    }
}
