use statrs::function::factorial::ln_factorial;

use super::dist::{gev_ln, gpd_ln};
use super::{Family, ModelStructure, ParamVector};
use crate::error::{Error, Result};
use crate::ingest::{AnnualMaxima, ExceedanceSet, TemperatureSeries};

/// Year-specific parameters after applying the temperature link.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LinkedParams {
    /// Poisson rate λ(t) (per day) or GEV location μ(t) (m).
    pub rate_or_location: f64,
    pub scale: f64,
    pub shape: f64,
}

/// `(θ₀ + θ₁T, exp(σ₀ + σ₁T), ξ₀ + ξ₁T)`; no clamping.
#[inline]
pub fn link_params(theta: &ParamVector, temperature: f64) -> LinkedParams {
    let p = &theta.0;
    LinkedParams {
        rate_or_location: p[0] + p[1] * temperature,
        scale: (p[2] + p[3] * temperature).exp(),
        shape: p[4] + p[5] * temperature,
    }
}

/// A log-likelihood with its data prepared once, evaluated many times.
pub trait LogLikelihood: Send + Sync {
    fn structure(&self) -> ModelStructure;

    /// Log-likelihood at `theta`; `-inf` outside the support.
    fn log_likelihood(&self, theta: &ParamVector) -> f64;

    /// Number of observations, as used by BIC.
    fn n_obs(&self) -> usize;

    /// POT threshold for the PP/GPD family.
    fn threshold(&self) -> Option<f64> {
        None
    }

    /// Calendar years the data spans.
    fn years(&self) -> Vec<i32>;

    /// Moment-based stationary starting point for optimizers.
    fn initial_guess(&self) -> ParamVector;

    fn log_likelihood_active(&self, active: &[f64]) -> f64 {
        self.log_likelihood(&self.structure().unpack(active))
    }
}

fn check_family(structure: ModelStructure, family: Family) -> Result<()> {
    if structure.family != family {
        return Err(Error::InvalidArgument(format!(
            "structure {structure} is not in the {family} family"
        )));
    }
    Ok(())
}

#[derive(Debug, Clone)]
struct PotYear {
    year: i32,
    temperature: f64,
    exposure_days: f64,
    count: f64,
    ln_count_factorial: f64,
    excesses: Vec<f64>,
}

/// Joint Poisson-count / GPD-magnitude likelihood over years.
#[derive(Debug, Clone)]
pub struct PpGpdLikelihood {
    structure: ModelStructure,
    threshold: f64,
    years: Vec<PotYear>,
    n_events: usize,
}

impl PpGpdLikelihood {
    pub fn new(
        data: &ExceedanceSet,
        temps: &TemperatureSeries,
        structure: ModelStructure,
    ) -> Result<Self> {
        check_family(structure, Family::PpGpd)?;
        let mut years = Vec::with_capacity(data.years.len());
        for rec in data.years.iter().filter(|r| r.observed_days > 0) {
            let n = rec.events.len() as u64;
            years.push(PotYear {
                year: rec.year,
                temperature: temps.at(rec.year)?,
                exposure_days: f64::from(rec.observed_days),
                count: n as f64,
                ln_count_factorial: ln_factorial(n),
                excesses: rec.excesses().collect(),
            });
        }
        Ok(Self {
            structure,
            threshold: data.threshold_m,
            n_events: years.iter().map(|y| y.excesses.len()).sum(),
            years,
        })
    }

    pub fn n_events(&self) -> usize {
        self.n_events
    }
}

impl LogLikelihood for PpGpdLikelihood {
    fn structure(&self) -> ModelStructure {
        self.structure
    }

    fn log_likelihood(&self, theta: &ParamVector) -> f64 {
        let theta = self.structure.unpack(&self.structure.pack(theta));
        let mut total = 0.0;
        for y in &self.years {
            let linked = link_params(&theta, y.temperature);
            let rate = linked.rate_or_location;
            if !(rate > 0.0) {
                return f64::NEG_INFINITY;
            }
            let mean = rate * y.exposure_days;
            total += y.count * mean.ln() - mean - y.ln_count_factorial;
            for &x in &y.excesses {
                total += gpd_ln(x, self.threshold, linked.scale, linked.shape);
            }
            if total == f64::NEG_INFINITY {
                return total;
            }
        }
        if total.is_nan() {
            f64::NEG_INFINITY
        } else {
            total
        }
    }

    /// Every yearly count plus every event magnitude.
    fn n_obs(&self) -> usize {
        self.n_events + self.years.len()
    }

    fn threshold(&self) -> Option<f64> {
        Some(self.threshold)
    }

    fn years(&self) -> Vec<i32> {
        self.years.iter().map(|y| y.year).collect()
    }

    fn initial_guess(&self) -> ParamVector {
        let exposure: f64 = self.years.iter().map(|y| y.exposure_days).sum();
        let rate = if self.n_events > 0 {
            self.n_events as f64 / exposure
        } else {
            1.0 / exposure.max(1.0)
        };
        let mean_excess = if self.n_events > 0 {
            self.years
                .iter()
                .flat_map(|y| y.excesses.iter())
                .map(|x| x - self.threshold)
                .sum::<f64>()
                / self.n_events as f64
        } else {
            0.1
        };
        ParamVector::stationary(rate, mean_excess.max(1e-4).ln(), 0.0)
    }
}

/// Log-likelihood of `data` under a PP/GPD structure.
pub fn ppgpd_loglik(
    theta: &ParamVector,
    data: &ExceedanceSet,
    temps: &TemperatureSeries,
    structure: ModelStructure,
) -> Result<f64> {
    Ok(PpGpdLikelihood::new(data, temps, structure)?.log_likelihood(theta))
}

/// Non-stationary GEV likelihood over annual maxima.
#[derive(Debug, Clone)]
pub struct GevLikelihood {
    structure: ModelStructure,
    /// (year, temperature, maximum)
    points: Vec<(i32, f64, f64)>,
}

impl GevLikelihood {
    pub fn new(
        maxima: &AnnualMaxima,
        temps: &TemperatureSeries,
        structure: ModelStructure,
    ) -> Result<Self> {
        check_family(structure, Family::Gev)?;
        let points = maxima
            .years
            .iter()
            .map(|m| Ok((m.year, temps.at(m.year)?, m.maximum_m)))
            .collect::<Result<_>>()?;
        Ok(Self { structure, points })
    }

    pub fn maxima(&self) -> impl Iterator<Item = f64> + '_ {
        self.points.iter().map(|p| p.2)
    }
}

impl LogLikelihood for GevLikelihood {
    fn structure(&self) -> ModelStructure {
        self.structure
    }

    fn log_likelihood(&self, theta: &ParamVector) -> f64 {
        let theta = self.structure.unpack(&self.structure.pack(theta));
        let mut total = 0.0;
        for &(_, temperature, x) in &self.points {
            let linked = link_params(&theta, temperature);
            total += gev_ln(x, linked.rate_or_location, linked.scale, linked.shape);
            if total == f64::NEG_INFINITY {
                return total;
            }
        }
        if total.is_nan() {
            f64::NEG_INFINITY
        } else {
            total
        }
    }

    fn n_obs(&self) -> usize {
        self.points.len()
    }

    fn years(&self) -> Vec<i32> {
        self.points.iter().map(|p| p.0).collect()
    }

    fn initial_guess(&self) -> ParamVector {
        let xs: Vec<f64> = self.maxima().collect();
        if xs.is_empty() {
            return ParamVector::stationary(0.0, 0.0, 0.0);
        }
        let m = crate::stats::mean(&xs);
        let sd = crate::stats::sample_variance(&xs).sqrt().max(1e-3);
        // Gumbel method of moments.
        let scale = sd * 6f64.sqrt() / std::f64::consts::PI;
        ParamVector::stationary(m - 0.577_215_664_9 * scale, scale.ln(), 0.0)
    }
}

pub fn gev_loglik(
    theta: &ParamVector,
    maxima: &AnnualMaxima,
    temps: &TemperatureSeries,
    structure: ModelStructure,
) -> Result<f64> {
    Ok(GevLikelihood::new(maxima, temps, structure)?.log_likelihood(theta))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::evd::{gpd_logpdf, poisson_logpmf, StructureTag};
    use crate::ingest::{AnnualMaximum, Event, YearRecord};
    use approx::assert_relative_eq;
    use chrono::NaiveDate;
    use proptest::prelude::*;

    fn temps() -> TemperatureSeries {
        TemperatureSeries::new(2000, (0..20).map(|i| -0.3 + 0.07 * i as f64).collect()).unwrap()
    }

    fn event(year: i32, level_m: f64) -> Event {
        Event {
            date: NaiveDate::from_ymd_opt(year, 3, 1).unwrap(),
            level_m,
        }
    }

    fn st() -> ModelStructure {
        ModelStructure::new(Family::PpGpd, StructureTag::St)
    }

    #[test]
    fn link_examples() {
        let l = link_params(&ParamVector::stationary(0.3, 0.4, 0.1), 0.0);
        assert_eq!((l.rate_or_location, l.scale, l.shape), (0.3, 0.4f64.exp(), 0.1));
        let t = ParamVector([0.01, 0.005, 0.0, 0.5, 0.0, 0.0]);
        assert_relative_eq!(link_params(&t, 2.0).rate_or_location, 0.02);
        assert_relative_eq!(link_params(&t, 1.0).scale, 1.6487212707001282);
    }

    #[test]
    fn poisson_only_year() {
        let data = ExceedanceSet::new(
            1.0,
            vec![YearRecord {
                year: 2000,
                observed_days: 100,
                events: vec![],
            }],
        )
        .unwrap();
        let theta = ParamVector::stationary(0.01, 0.0, 0.0);
        assert_relative_eq!(ppgpd_loglik(&theta, &data, &temps(), st()).unwrap(), -1.0);
    }

    #[test]
    fn one_event_hand_sum() {
        let data = ExceedanceSet::new(
            1.0,
            vec![YearRecord {
                year: 2000,
                observed_days: 100,
                events: vec![event(2000, 1.5)],
            }],
        )
        .unwrap();
        let theta = ParamVector::stationary(0.01, 0.0, 0.0);
        let independent = poisson_logpmf(1, 1.0).unwrap() + gpd_logpdf(1.5, 1.0, 1.0, 0.0).unwrap();
        let got = ppgpd_loglik(&theta, &data, &temps(), st()).unwrap();
        assert_relative_eq!(got, -1.5, epsilon = 1e-12);
        assert_relative_eq!(got, independent, epsilon = 1e-12);
    }

    #[test]
    fn nonpositive_rate_is_outside_support() {
        let data = ExceedanceSet::new(
            1.0,
            vec![YearRecord {
                year: 2000,
                observed_days: 100,
                events: vec![],
            }],
        )
        .unwrap();
        let ns1 = ModelStructure::new(Family::PpGpd, StructureTag::Ns1);
        // T(2000) = -0.3, so λ = 0.001 - 0.3 * 0.01 < 0.
        let theta = ParamVector([0.001, 0.01, 0.0, 0.0, 0.0, 0.0]);
        assert_eq!(ppgpd_loglik(&theta, &data, &temps(), ns1).unwrap(), f64::NEG_INFINITY);
    }

    #[test]
    fn coverage_and_family_errors() {
        let data = ExceedanceSet::new(
            1.0,
            vec![YearRecord {
                year: 1990,
                observed_days: 10,
                events: vec![],
            }],
        )
        .unwrap();
        let theta = ParamVector::stationary(0.01, 0.0, 0.0);
        assert!(matches!(
            ppgpd_loglik(&theta, &data, &temps(), st()),
            Err(Error::TemperatureCoverage { year: 1990 })
        ));
        let gev = ModelStructure::new(Family::Gev, StructureTag::St);
        assert!(ppgpd_loglik(&theta, &data, &temps(), gev).is_err());
    }

    #[test]
    fn gev_examples() {
        let gev_st = ModelStructure::new(Family::Gev, StructureTag::St);
        let one = AnnualMaxima {
            years: vec![AnnualMaximum { year: 2001, maximum_m: 2.0 }],
            dropped_years: vec![],
        };
        let theta = ParamVector::stationary(2.0, 0.0, 0.0);
        assert_relative_eq!(gev_loglik(&theta, &one, &temps(), gev_st).unwrap(), -1.0);

        let other = AnnualMaxima {
            years: vec![AnnualMaximum { year: 2002, maximum_m: 2.7 }],
            dropped_years: vec![],
        };
        let both = AnnualMaxima {
            years: vec![one.years[0], other.years[0]],
            dropped_years: vec![],
        };
        let a = gev_loglik(&theta, &one, &temps(), gev_st).unwrap();
        let b = gev_loglik(&theta, &other, &temps(), gev_st).unwrap();
        assert_relative_eq!(gev_loglik(&theta, &both, &temps(), gev_st).unwrap(), a + b);
    }

    fn brute_force(theta: &ParamVector, data: &ExceedanceSet, temps: &TemperatureSeries) -> f64 {
        let mut ll = 0.0;
        for rec in &data.years {
            let t = temps.at(rec.year).unwrap();
            let rate = theta.0[0] + theta.0[1] * t;
            let sigma = (theta.0[2] + theta.0[3] * t).exp();
            let xi = theta.0[4] + theta.0[5] * t;
            let mean = rate * f64::from(rec.observed_days);
            let n = rec.events.len();
            let mut log_fact = 0.0;
            for k in 1..=n {
                log_fact += (k as f64).ln();
            }
            ll += n as f64 * mean.ln() - mean - log_fact;
            for e in &rec.events {
                let z = (e.level_m - data.threshold_m) / sigma;
                ll += if xi.abs() < 1e-8 {
                    -sigma.ln() - z
                } else {
                    -sigma.ln() - (1.0 + 1.0 / xi) * (1.0 + xi * z).ln()
                };
            }
        }
        ll
    }

    proptest! {
        #[test]
        fn matches_brute_force(
            counts in prop::collection::vec(0usize..4, 1..=5),
            excess in prop::collection::vec(0.01f64..2.0, 10),
            lambda0 in 0.005f64..0.05,
            lambda1 in -0.004f64..0.004,
            sigma0 in -2.0f64..0.5,
            sigma1 in -0.5f64..0.5,
            xi0 in -0.2f64..0.4,
            xi1 in -0.1f64..0.1,
        ) {
            let mut k = 0;
            let years: Vec<YearRecord> = counts.iter().enumerate().map(|(i, &c)| {
                let c = c.min(10 - k);
                let events = (0..c).map(|j| event(2000 + i as i32, 1.0 + excess[k + j])).collect();
                k += c;
                YearRecord { year: 2000 + i as i32, observed_days: 300 + i as u32, events }
            }).collect();
            let data = ExceedanceSet::new(1.0, years).unwrap();
            let theta = ParamVector([lambda0, lambda1, sigma0, sigma1, xi0, xi1]);
            let ns3 = ModelStructure::new(Family::PpGpd, StructureTag::Ns3);
            let got = ppgpd_loglik(&theta, &data, &temps(), ns3).unwrap();
            let want = brute_force(&theta, &data, &temps());
            if want.is_finite() {
                prop_assert!((got - want).abs() <= 1e-9 * want.abs().max(1.0));
            } else {
                prop_assert!(got == f64::NEG_INFINITY);
            }
        }
    }
}
