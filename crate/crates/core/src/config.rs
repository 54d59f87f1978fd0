//! Flat `key = value` run configuration.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use crate::calibrate::{fit_priors_from_values, read_prior_network, PriorKinds};
use crate::error::{Error, Result};
use crate::evd::{Family, PriorKind, StructureTag};
use crate::ingest::StationFormat;
use crate::pipeline::{PipelineConfig, PriorChoice};
use crate::project::CombineMode;

/// Parsed `key = value` lines. `#` starts a comment; keys are dotted.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct KeyValues {
    entries: BTreeMap<String, (String, usize)>,
}

impl KeyValues {
    pub fn parse(text: &str) -> Result<Self> {
        let mut entries = BTreeMap::new();
        for (i, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let (k, v) = line
                .split_once('=')
                .ok_or_else(|| Error::Config(format!("line {}: expected `key = value`", i + 1)))?;
            let k = k.trim();
            if k.is_empty() || k.contains(char::is_whitespace) {
                return Err(Error::Config(format!("line {}: invalid key `{k}`", i + 1)));
            }
            if entries.insert(k.to_string(), (v.trim().to_string(), i + 1)).is_some() {
                return Err(Error::Config(format!("line {}: duplicate key `{k}`", i + 1)));
            }
        }
        Ok(Self { entries })
    }

    pub fn get(&self, key: &str) -> Option<&str> {
        self.entries.get(key).map(|(v, _)| v.as_str())
    }

    pub fn keys(&self) -> impl Iterator<Item = &str> {
        self.entries.keys().map(String::as_str)
    }

    fn parsed<T: FromStr>(&self, key: &str) -> Result<Option<T>>
    where
        T::Err: std::fmt::Display,
    {
        match self.entries.get(key) {
            None => Ok(None),
            Some((v, line)) => v
                .parse()
                .map(Some)
                .map_err(|e| Error::Config(format!("line {line}: `{key}`: {e}"))),
        }
    }

    fn list<T: FromStr>(&self, key: &str) -> Result<Option<Vec<T>>>
    where
        T::Err: std::fmt::Display,
    {
        match self.entries.get(key) {
            None => Ok(None),
            Some((v, line)) => v
                .split(',')
                .map(str::trim)
                .filter(|s| !s.is_empty())
                .map(|s| s.parse().map_err(|e| Error::Config(format!("line {line}: `{key}`: {e}"))))
                .collect::<Result<Vec<T>>>()
                .map(Some),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Scale {
    Desk,
    #[default]
    Paper,
}

impl FromStr for Scale {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "desk" => Ok(Self::Desk),
            "paper" => Ok(Self::Paper),
            _ => Err(Error::Config(format!("unknown scale `{s}` (desk or paper)"))),
        }
    }
}

impl std::fmt::Display for Scale {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            Self::Desk => "desk",
            Self::Paper => "paper",
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ExperimentKind {
    Hindcast,
    LengthSweep,
    GevSweep,
}

impl FromStr for ExperimentKind {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "hindcast" => Ok(Self::Hindcast),
            "length_sweep" => Ok(Self::LengthSweep),
            "gev_sweep" => Ok(Self::GevSweep),
            _ => Err(Error::Config(format!("unknown experiment `{s}`"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentSettings {
    pub kinds: Vec<ExperimentKind>,
    pub block_years: u32,
    pub n_blocks: u32,
    pub hindcast_return_period: f64,
    pub lengths: Vec<u32>,
    pub gev_lengths: Vec<u32>,
    pub gev_return_period: f64,
    pub gev_reference_year: Option<i32>,
}

/// Everything a command needs, with file paths resolved against the
/// configuration file's directory.
#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    pub station_file: PathBuf,
    pub station_format: StationFormat,
    pub temperature_historical: PathBuf,
    pub temperature_projection: PathBuf,
    pub splice_year: i32,
    pub prior_network: Option<PathBuf>,
    pub prior_kinds: PriorKinds,
    pub pipeline: PipelineConfig,
    pub seed: Option<u64>,
    pub scale: Scale,
    pub experiments: ExperimentSettings,
    pub output_dir: PathBuf,
}

const KNOWN_KEYS: &[&str] = &[
    "station.file",
    "station.format",
    "temperature.historical",
    "temperature.projection",
    "temperature.splice_year",
    "model.family",
    "model.structures",
    "preprocess.threshold_quantile",
    "preprocess.decluster_gap_days",
    "preprocess.max_missing_fraction",
    "calibration.scale",
    "calibration.n_chains",
    "calibration.n_iter",
    "calibration.burn_in",
    "calibration.ensemble_size",
    "calibration.seed",
    "calibration.target_accept",
    "calibration.de_generations",
    "priors.network",
    "compare.n_obs",
    "compare.dic_variant",
    "compare.model_prior",
    "projection.years",
    "projection.return_periods",
    "projection.combine",
    "experiment.kinds",
    "experiment.hindcast.block_years",
    "experiment.hindcast.n_blocks",
    "experiment.hindcast.return_period",
    "experiment.length_sweep.lengths",
    "experiment.gev_sweep.lengths",
    "experiment.gev_sweep.return_period",
    "experiment.gev_sweep.reference_year",
    "output.dir",
];

fn resolve(base: &Path, value: &str) -> PathBuf {
    let p = PathBuf::from(value);
    if p.is_absolute() {
        p
    } else {
        base.join(p)
    }
}

fn existing(base: &Path, kv: &KeyValues, key: &str) -> Result<Option<PathBuf>> {
    match kv.get(key) {
        None => Ok(None),
        Some(v) => {
            let p = resolve(base, v);
            if !p.is_file() {
                return Err(Error::Config(format!("`{key}`: file {} does not exist", p.display())));
            }
            Ok(Some(p))
        }
    }
}

impl RunConfig {
    /// Reads and validates a configuration file. `scale` from the command
    /// line overrides `calibration.scale`; explicit calibration keys
    /// override the scale preset.
    pub fn load(path: impl AsRef<Path>, scale: Option<Scale>) -> Result<Self> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        let base = path.parent().unwrap_or(Path::new("."));
        Self::from_text(&text, base, scale)
    }

    pub fn from_text(text: &str, base: &Path, scale: Option<Scale>) -> Result<Self> {
        let kv = KeyValues::parse(text)?;
        for k in kv.keys() {
            if !KNOWN_KEYS.contains(&k) && !k.starts_with("priors.kind.") {
                return Err(Error::Config(format!("unknown key `{k}`")));
            }
        }
        let required = |key: &str| existing(base, &kv, key)?.ok_or_else(|| Error::Config(format!("missing `{key}`")));
        let station_file = required("station.file")?;
        let temperature_historical = required("temperature.historical")?;
        let temperature_projection =
            existing(base, &kv, "temperature.projection")?.unwrap_or_else(|| temperature_historical.clone());
        let prior_network = existing(base, &kv, "priors.network")?;

        let scale = match scale {
            Some(s) => s,
            None => kv.parsed("calibration.scale")?.unwrap_or_default(),
        };
        let family: Family = kv.parsed("model.family")?.unwrap_or(Family::PpGpd);
        let mut p = match scale {
            Scale::Desk => PipelineConfig::desk(family),
            Scale::Paper => PipelineConfig::paper(family),
        };
        if let Some(v) = kv.list::<StructureTag>("model.structures")? {
            p.structures = v;
        }
        if let Some(v) = kv.parsed("preprocess.threshold_quantile")? {
            p.threshold_quantile = v;
        }
        if let Some(v) = kv.parsed("preprocess.decluster_gap_days")? {
            p.decluster_gap_days = v;
        }
        if let Some(v) = kv.parsed("preprocess.max_missing_fraction")? {
            p.max_missing_fraction = v;
        }
        let c = &mut p.calibration;
        if let Some(v) = kv.parsed("calibration.n_chains")? {
            c.n_chains = v;
        }
        if let Some(v) = kv.parsed("calibration.n_iter")? {
            c.n_iter = v;
        }
        if let Some(v) = kv.parsed("calibration.burn_in")? {
            c.burn_in = v;
        }
        if let Some(v) = kv.parsed("calibration.ensemble_size")? {
            c.ensemble_size = v;
        }
        if let Some(v) = kv.parsed("calibration.target_accept")? {
            c.target_accept = v;
        }
        if let Some(v) = kv.parsed("calibration.de_generations")? {
            p.de.generations = v;
        }
        let seed: Option<u64> = kv.parsed("calibration.seed")?;
        p.n_obs_override = kv.parsed("compare.n_obs")?;
        if let Some(v) = kv.parsed("compare.dic_variant")? {
            p.dic_variant = v;
        }
        p.model_prior = kv.list("compare.model_prior")?;
        if let Some(w) = &p.model_prior {
            if w.len() != p.structures.len() {
                return Err(Error::Config("`compare.model_prior` needs one weight per structure".into()));
            }
        }
        if let Some(v) = kv.list("projection.years")? {
            p.projection_years = v;
        }
        if let Some(v) = kv.list("projection.return_periods")? {
            p.return_periods = v;
        }
        if let Some(v) = kv.parsed::<CombineMode>("projection.combine")? {
            p.combine_mode = v;
        }

        let mut prior_kinds = PriorKinds::standard();
        for k in kv.keys().filter(|k| k.starts_with("priors.kind.")) {
            let kind: PriorKind = kv.parsed(k)?.expect("key present");
            prior_kinds = prior_kinds.with(&k["priors.kind.".len()..], kind);
        }

        let experiments = ExperimentSettings {
            kinds: kv.list("experiment.kinds")?.unwrap_or_default(),
            block_years: kv.parsed("experiment.hindcast.block_years")?.unwrap_or(30),
            n_blocks: kv.parsed("experiment.hindcast.n_blocks")?.unwrap_or(11),
            hindcast_return_period: kv.parsed("experiment.hindcast.return_period")?.unwrap_or(100.0),
            lengths: kv
                .list("experiment.length_sweep.lengths")?
                .unwrap_or_else(|| vec![30, 50, 70, 90, 110, 137]),
            gev_lengths: kv
                .list("experiment.gev_sweep.lengths")?
                .unwrap_or_else(|| (1..=10).map(|i| i * 10).collect()),
            gev_return_period: kv.parsed("experiment.gev_sweep.return_period")?.unwrap_or(20.0),
            gev_reference_year: kv.parsed("experiment.gev_sweep.reference_year")?,
        };

        Ok(Self {
            station_file,
            station_format: kv.parsed("station.format")?.unwrap_or(StationFormat::CanonicalDailyCsv),
            temperature_historical,
            temperature_projection,
            splice_year: kv.parsed("temperature.splice_year")?.unwrap_or(i32::MAX),
            prior_network,
            prior_kinds,
            pipeline: p,
            seed,
            scale,
            experiments,
            output_dir: resolve(base, kv.get("output.dir").unwrap_or("out")),
        })
    }

    /// Pipeline settings with the seed applied and priors resolved; fails
    /// when no seed was given.
    pub fn seeded_pipeline(&self) -> Result<PipelineConfig> {
        let seed = self
            .seed
            .ok_or_else(|| Error::Config("a seed is required (`calibration.seed` or --seed)".into()))?;
        let mut p = self.pipeline.clone().with_seed(seed);
        if let Some(path) = &self.prior_network {
            let network = read_prior_network(path)?;
            let names: Vec<&str> = crate::evd::Slot::ALL.iter().map(|s| s.name(p.family)).collect();
            let values = network
                .values_by_param()
                .into_iter()
                .filter(|(k, _)| names.contains(&k.as_str()))
                .collect();
            p.priors = PriorChoice::Fixed(fit_priors_from_values(&values, &self.prior_kinds)?);
        }
        Ok(p)
    }
}
