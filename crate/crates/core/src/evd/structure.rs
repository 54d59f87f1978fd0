use std::fmt;
use std::str::FromStr;

use crate::error::{Error, Result};

pub const N_SLOTS: usize = 6;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Family {
    /// Poisson-process exceedance counts with GPD magnitudes.
    PpGpd,
    /// Annual block maxima.
    Gev,
}

impl fmt::Display for Family {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Family::PpGpd => "ppgpd",
            Family::Gev => "gev",
        })
    }
}

impl FromStr for Family {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "ppgpd" | "pp/gpd" | "pp-gpd" => Ok(Family::PpGpd),
            "gev" => Ok(Family::Gev),
            other => Err(Error::Config(format!("unknown model family `{other}`"))),
        }
    }
}

/// Position of the parameters within the (intercept, slope) ladder.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum StructureTag {
    St,
    Ns1,
    Ns2,
    Ns3,
}

impl StructureTag {
    pub const ALL: [StructureTag; 4] = [Self::St, Self::Ns1, Self::Ns2, Self::Ns3];

    pub fn as_str(self) -> &'static str {
        match self {
            Self::St => "ST",
            Self::Ns1 => "NS1",
            Self::Ns2 => "NS2",
            Self::Ns3 => "NS3",
        }
    }
}

impl fmt::Display for StructureTag {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for StructureTag {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_uppercase().as_str() {
            "ST" => Ok(Self::St),
            "NS1" => Ok(Self::Ns1),
            "NS2" => Ok(Self::Ns2),
            "NS3" => Ok(Self::Ns3),
            other => Err(Error::Config(format!("unknown model structure `{other}`"))),
        }
    }
}

/// The six parameter slots shared by both families.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Slot {
    /// λ₀ (per day) or μ₀ (m).
    RateOrLocation0 = 0,
    RateOrLocation1 = 1,
    /// Intercept of log σ.
    LogScale0 = 2,
    LogScale1 = 3,
    Shape0 = 4,
    Shape1 = 5,
}

impl Slot {
    pub const ALL: [Slot; N_SLOTS] = [
        Slot::RateOrLocation0,
        Slot::RateOrLocation1,
        Slot::LogScale0,
        Slot::LogScale1,
        Slot::Shape0,
        Slot::Shape1,
    ];

    pub fn name(self, family: Family) -> &'static str {
        match (family, self) {
            (Family::PpGpd, Slot::RateOrLocation0) => "lambda0",
            (Family::PpGpd, Slot::RateOrLocation1) => "lambda1",
            (Family::Gev, Slot::RateOrLocation0) => "mu0",
            (Family::Gev, Slot::RateOrLocation1) => "mu1",
            (_, Slot::LogScale0) => "sigma0",
            (_, Slot::LogScale1) => "sigma1",
            (_, Slot::Shape0) => "xi0",
            (_, Slot::Shape1) => "xi1",
        }
    }
}

/// A candidate model: family plus which temperature slopes are free.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct ModelStructure {
    pub family: Family,
    pub tag: StructureTag,
}

impl ModelStructure {
    pub fn new(family: Family, tag: StructureTag) -> Self {
        Self { family, tag }
    }

    pub fn ladder(family: Family) -> [ModelStructure; 4] {
        StructureTag::ALL.map(|tag| Self::new(family, tag))
    }

    /// Active slots in canonical order (intercepts and free slopes).
    pub fn active_slots(&self) -> &'static [Slot] {
        use Slot::*;
        match self.tag {
            StructureTag::St => &[RateOrLocation0, LogScale0, Shape0],
            StructureTag::Ns1 => &[RateOrLocation0, RateOrLocation1, LogScale0, Shape0],
            StructureTag::Ns2 => &[RateOrLocation0, RateOrLocation1, LogScale0, LogScale1, Shape0],
            StructureTag::Ns3 => &[
                RateOrLocation0,
                RateOrLocation1,
                LogScale0,
                LogScale1,
                Shape0,
                Shape1,
            ],
        }
    }

    pub fn n_params(&self) -> usize {
        self.active_slots().len()
    }

    pub fn param_names(&self) -> Vec<&'static str> {
        self.active_slots().iter().map(|s| s.name(self.family)).collect()
    }

    pub fn is_active(&self, slot: Slot) -> bool {
        self.active_slots().contains(&slot)
    }

    /// Expands an active-parameter vector into a full [`ParamVector`];
    /// inactive slopes are zero.
    pub fn unpack(&self, active: &[f64]) -> ParamVector {
        debug_assert_eq!(active.len(), self.n_params());
        let mut values = [0.0; N_SLOTS];
        for (slot, v) in self.active_slots().iter().zip(active) {
            values[*slot as usize] = *v;
        }
        ParamVector(values)
    }

    pub fn pack(&self, theta: &ParamVector) -> Vec<f64> {
        self.active_slots().iter().map(|s| theta.get(*s)).collect()
    }
}

impl fmt::Display for ModelStructure {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}-{}", self.family, self.tag)
    }
}

/// Parameter values for all six slots (inactive slopes held at zero).
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct ParamVector(pub [f64; N_SLOTS]);

impl ParamVector {
    /// Stationary vector from intercepts `(rate or location, log scale, shape)`.
    pub fn stationary(rate_or_location: f64, log_scale: f64, shape: f64) -> Self {
        ParamVector([rate_or_location, 0.0, log_scale, 0.0, shape, 0.0])
    }

    pub fn get(&self, slot: Slot) -> f64 {
        self.0[slot as usize]
    }

    pub fn set(&mut self, slot: Slot, value: f64) {
        self.0[slot as usize] = value;
    }

    pub fn with(mut self, slot: Slot, value: f64) -> Self {
        self.set(slot, value);
        self
    }
}
