//! The `surge-bma` command line: preprocess, fit, experiment, report.

use std::fmt::Write as _;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use sha2::{Digest, Sha256};

use crate::calibrate::{write_ensemble_csv, write_provenance};
use crate::config::{ExperimentKind, KeyValues, RunConfig, Scale};
use crate::error::{Error, Result};
use crate::evd::{Family, StructureTag};
use crate::experiments::{data_length_sweep, gev_length_sweep, sliding_hindcast};
use crate::ingest::{
    annual_maxima_csv, exceedances_csv, load_temperatures, parse_station, read_annual_maxima, read_exceedances,
    TemperatureSeries,
};
use crate::pipeline::{fit_models, preprocess, ModelData};
use crate::project::{quantiles_csv, rl_delta, samples_csv, ReturnLevelDistribution};

#[derive(Debug, Parser)]
#[command(name = "surge-bma", version, about = "Model-averaged storm surge return levels")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Detrend, threshold and decluster (or block) the station record.
    Preprocess(CommonArgs),
    /// Fit, calibrate and compare the model ladder; project return levels.
    Fit(CommonArgs),
    /// Run the configured experiments.
    Experiment(CommonArgs),
    /// Summarize the outputs of `fit`.
    Report(CommonArgs),
}

#[derive(Debug, Args)]
pub struct CommonArgs {
    #[arg(long)]
    pub config: PathBuf,
    /// Overrides `calibration.seed`.
    #[arg(long)]
    pub seed: Option<u64>,
    /// Worker threads.
    #[arg(long)]
    pub jobs: Option<usize>,
    #[arg(long, value_parser = parse_scale)]
    pub scale: Option<Scale>,
    /// Overwrite existing outputs.
    #[arg(long)]
    pub force: bool,
    /// Overrides `output.dir`.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

fn parse_scale(s: &str) -> std::result::Result<Scale, String> {
    s.parse().map_err(|e: Error| e.to_string())
}

/// Whether every requested output was written.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Completion {
    Complete,
    Partial,
}

pub fn main_from_args<I, T>(args: I) -> ExitCode
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let _ = env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).try_init();
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { ExitCode::from(64) } else { ExitCode::SUCCESS };
        }
    };
    match run(&cli) {
        Ok(Completion::Complete) => ExitCode::SUCCESS,
        Ok(Completion::Partial) => ExitCode::from(2),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::FAILURE
        }
    }
}

pub fn run(cli: &Cli) -> Result<Completion> {
    let args = match &cli.command {
        Command::Preprocess(a) | Command::Fit(a) | Command::Experiment(a) | Command::Report(a) => a,
    };
    if let Some(n) = args.jobs {
        if n == 0 {
            return Err(Error::InvalidArgument("--jobs must be at least 1".into()));
        }
        let pool = rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build()
            .map_err(|e| Error::InvalidArgument(e.to_string()))?;
        return pool.install(|| dispatch(&cli.command, args));
    }
    dispatch(&cli.command, args)
}

fn dispatch(command: &Command, args: &CommonArgs) -> Result<Completion> {
    let ctx = Context::new(args)?;
    match command {
        Command::Preprocess(_) => cmd_preprocess(&ctx),
        Command::Fit(_) => cmd_fit(&ctx),
        Command::Experiment(_) => cmd_experiment(&ctx),
        Command::Report(_) => cmd_report(&ctx),
    }
}

struct Context {
    config: RunConfig,
    config_path: PathBuf,
    config_hash: String,
    out: PathBuf,
    force: bool,
}

fn sha256_file(path: &Path) -> Result<String> {
    let bytes = std::fs::read(path).map_err(|e| Error::io(path, e))?;
    Ok(Sha256::digest(&bytes).iter().map(|b| format!("{b:02x}")).collect())
}

fn write(path: &Path, text: &str) -> Result<()> {
    std::fs::write(path, text).map_err(|e| Error::io(path, e))
}

impl Context {
    fn new(args: &CommonArgs) -> Result<Self> {
        let mut config = RunConfig::load(&args.config, args.scale)?;
        if args.seed.is_some() {
            config.seed = args.seed;
        }
        let out = args.out.clone().unwrap_or_else(|| config.output_dir.clone());
        Ok(Self {
            config_hash: sha256_file(&args.config)?,
            config_path: args.config.clone(),
            config,
            out,
            force: args.force,
        })
    }

    /// Creates `out/<name>`, refusing a non-empty one without --force.
    fn stage_dir(&self, name: &str) -> Result<PathBuf> {
        let dir = self.out.join(name);
        if dir.exists() {
            let non_empty = std::fs::read_dir(&dir)
                .map_err(|e| Error::io(&dir, e))?
                .next()
                .is_some();
            if non_empty && !self.force {
                return Err(Error::OutputExists(dir));
            }
            if non_empty {
                std::fs::remove_dir_all(&dir).map_err(|e| Error::io(&dir, e))?;
            }
        }
        std::fs::create_dir_all(&dir).map_err(|e| Error::io(&dir, e))?;
        Ok(dir)
    }

    fn manifest(&self, command: &str, inputs: &[(&str, &Path)]) -> Result<Manifest> {
        let mut m = Manifest::default();
        m.push("command", command);
        m.push("config", self.config_path.display());
        m.push("config_sha256", &self.config_hash);
        m.push("seed", self.config.seed.map_or("none".to_string(), |s| s.to_string()));
        m.push("scale", self.config.scale);
        m.push("family", self.config.pipeline.family);
        for (name, path) in inputs {
            m.push(&format!("input.{name}"), path.display());
            m.push(&format!("input.{name}.sha256"), sha256_file(path)?);
        }
        Ok(m)
    }

    fn temperatures(&self) -> Result<TemperatureSeries> {
        load_temperatures(
            &self.config.temperature_historical,
            &self.config.temperature_projection,
            self.config.splice_year,
        )
    }

    fn temperature_inputs(&self) -> Vec<(&'static str, &Path)> {
        vec![
            ("temperature_historical", self.config.temperature_historical.as_path()),
            ("temperature_projection", self.config.temperature_projection.as_path()),
        ]
    }
}

#[derive(Default)]
struct Manifest {
    text: String,
}

impl Manifest {
    fn push(&mut self, key: &str, value: impl std::fmt::Display) {
        let _ = writeln!(self.text, "{key} = {value}");
    }

    fn write(&self, dir: &Path) -> Result<()> {
        write(&dir.join("manifest.txt"), &self.text)
    }
}

const EXCEEDANCES: &str = "exceedances.csv";
const MAXIMA: &str = "annual_maxima.csv";

fn cmd_preprocess(ctx: &Context) -> Result<Completion> {
    let cfg = &ctx.config;
    let series = parse_station(&cfg.station_file, cfg.station_format)?;
    let pre = preprocess(&series, &cfg.pipeline)?;
    let dir = ctx.stage_dir("preprocess")?;
    let mut m = ctx.manifest("preprocess", &[("station", cfg.station_file.as_path())])?;
    m.push("station_id", &series.station_id);
    m.push("days", series.len());
    m.push("days_present", series.n_present());
    match &pre.data {
        ModelData::Pot(set) => {
            write(&dir.join(EXCEEDANCES), &exceedances_csv(set))?;
            m.push("output", EXCEEDANCES);
            m.push("threshold_quantile", cfg.pipeline.threshold_quantile);
            m.push("threshold_m", set.threshold_m);
            m.push("decluster_gap_days", cfg.pipeline.decluster_gap_days);
            m.push("events", set.n_events());
            m.push("years", set.n_years());
            if let Some(t) = &pre.trend {
                m.push("trend.origin", t.origin);
                m.push("trend.intercept_m", t.intercept_m);
                m.push("trend.slope_m_per_day", t.slope_m_per_day);
                if let Some(end) = series.end() {
                    m.push("trend.at_record_end_m", t.at(end));
                }
            }
        }
        ModelData::Gev(maxima) => {
            write(&dir.join(MAXIMA), &annual_maxima_csv(maxima))?;
            m.push("output", MAXIMA);
            m.push("max_missing_fraction", cfg.pipeline.max_missing_fraction);
            m.push("years", maxima.len());
            let dropped: Vec<String> = pre
                .dropped_years
                .iter()
                .map(|d| format!("{}:{}", d.year, d.missing_fraction))
                .collect();
            m.push("dropped_years", dropped.join(","));
        }
    }
    m.write(&dir)?;
    Ok(Completion::Complete)
}

fn load_preprocessed(ctx: &Context) -> Result<(ModelData, PathBuf)> {
    let dir = ctx.out.join("preprocess");
    let manifest_path = dir.join("manifest.txt");
    if !manifest_path.is_file() {
        return Err(Error::Config(format!(
            "no preprocessed data in {}; run `preprocess` first",
            dir.display()
        )));
    }
    let text = std::fs::read_to_string(&manifest_path).map_err(|e| Error::io(&manifest_path, e))?;
    let manifest = KeyValues::parse(&text)?;
    let family: Family = manifest
        .get("family")
        .ok_or_else(|| Error::Config("preprocess manifest lacks `family`".into()))?
        .parse()?;
    if family != ctx.config.pipeline.family {
        return Err(Error::Config("preprocessed data were made for another model family".into()));
    }
    match family {
        Family::PpGpd => {
            let threshold: f64 = manifest
                .get("threshold_m")
                .and_then(|v| v.parse().ok())
                .ok_or_else(|| Error::Config("preprocess manifest lacks `threshold_m`".into()))?;
            let path = dir.join(EXCEEDANCES);
            Ok((ModelData::Pot(read_exceedances(&path, threshold)?), path))
        }
        Family::Gev => {
            let path = dir.join(MAXIMA);
            Ok((ModelData::Gev(read_annual_maxima(&path)?), path))
        }
    }
}

fn cmd_fit(ctx: &Context) -> Result<Completion> {
    let pipeline = ctx.config.seeded_pipeline()?;
    let (data, data_path) = load_preprocessed(ctx)?;
    let temps = ctx.temperatures()?;
    let out = fit_models(&data, &temps, &pipeline)?;
    let dir = ctx.stage_dir("fit")?;

    let mut inputs = ctx.temperature_inputs();
    if let Some(p) = &ctx.config.prior_network {
        inputs.push(("prior_network", p.as_path()));
    }
    let mut m = ctx.manifest("fit", &inputs)?;
    // Relative to the output directory, so equal runs into different
    // directories keep equal manifests.
    m.push("input.preprocessed", Path::new("preprocess").join(data_path.file_name().unwrap_or_default()).display());
    m.push("input.preprocessed.sha256", sha256_file(&data_path)?);
    let c = &pipeline.calibration;
    m.push("structures", pipeline.structures.iter().map(|s| s.as_str()).collect::<Vec<_>>().join(","));
    m.push("n_chains", c.n_chains);
    m.push("n_iter", c.n_iter);
    m.push("burn_in", c.burn_in);
    m.push("ensemble_size", c.ensemble_size);
    m.push("n_obs", out.report.n_obs);
    m.push("priors", if ctx.config.prior_network.is_some() { "network" } else { "flat" });

    let mut mle = String::from("structure,param,value,max_loglik\n");
    for f in &out.fits {
        let s = f.structure();
        for (name, slot) in s.param_names().iter().zip(s.active_slots()) {
            let _ = writeln!(mle, "{},{name},{},{}", s.tag, f.mle.theta.get(*slot), f.mle.max_loglik);
        }
        write_ensemble_csv(&f.ensemble, dir.join(format!("ensemble_{}.csv", s.tag)))?;
        write_provenance(&f.ensemble, dir.join(format!("ensemble_{}.provenance.txt", s.tag)))?;
        m.push(&format!("converged.{}", s.tag), f.ensemble.provenance.converged);
    }
    write(&dir.join("mle.csv"), &mle)?;
    out.report.write_csv(dir.join("comparison.csv"))?;

    let mut by_model: Vec<(String, Vec<&ReturnLevelDistribution>)> = out
        .fits
        .iter()
        .map(|f| (f.structure().tag.to_string(), Vec::new()))
        .chain(std::iter::once(("BMA".to_string(), Vec::new())))
        .collect();
    for p in &out.projections {
        for (i, (_, d)) in p.per_model.iter().enumerate() {
            by_model[i].1.push(d);
        }
        by_model.last_mut().expect("BMA entry").1.push(&p.bma);
        let mut labelled: Vec<(&str, &ReturnLevelDistribution)> =
            p.per_model.iter().map(|(t, d)| (t.as_str(), d)).collect();
        labelled.push(("BMA", &p.bma));
        write(
            &dir.join(format!("return_level_samples_{}_T{}.csv", p.year, p.return_period)),
            &samples_csv(&labelled),
        )?;
    }
    if !out.projections.is_empty() {
        for (label, dists) in &by_model {
            write(&dir.join(format!("return_levels_{label}.csv")), &quantiles_csv(dists))?;
        }
        write(&dir.join("return_levels_relative.csv"), &relative_csv(&by_model)?)?;
    }

    for (tag, reason) in &out.failures {
        m.push(&format!("failed.{tag}"), reason.replace('\n', " "));
    }
    m.write(&dir)?;
    Ok(if out.failures.is_empty() {
        Completion::Complete
    } else {
        Completion::Partial
    })
}

/// Per-draw change of each later year relative to the first projection
/// year, for the same return period.
fn relative_csv(by_model: &[(String, Vec<&ReturnLevelDistribution>)]) -> Result<String> {
    let mut out = String::from("model,year,base_year,return_period,quantile,level_m\n");
    for (label, dists) in by_model {
        let Some(base_year) = dists.iter().map(|d| d.year).min() else {
            continue;
        };
        for d in dists.iter().filter(|d| d.year != base_year) {
            let Some(base) = dists.iter().find(|b| b.year == base_year && b.return_period == d.return_period) else {
                continue;
            };
            let delta = rl_delta(d, base)?;
            for line in quantiles_csv(&[&delta]).lines().skip(1) {
                let rest = line.split_once(',').map_or("", |(_, r)| r).split_once(',').map_or("", |(_, r)| r);
                let _ = writeln!(out, "{label},{},{base_year},{},{rest}", d.year, d.return_period);
            }
        }
    }
    Ok(out)
}

fn cmd_experiment(ctx: &Context) -> Result<Completion> {
    let cfg = &ctx.config;
    let pipeline = cfg.seeded_pipeline()?;
    if cfg.experiments.kinds.is_empty() {
        return Err(Error::Config("no experiments selected (`experiment.kinds`)".into()));
    }
    let series = parse_station(&cfg.station_file, cfg.station_format)?;
    let temps = ctx.temperatures()?;
    let dir = ctx.stage_dir("experiment")?;
    let mut inputs = vec![("station", cfg.station_file.as_path())];
    inputs.extend(ctx.temperature_inputs());
    if let Some(p) = &cfg.prior_network {
        inputs.push(("prior_network", p.as_path()));
    }
    let mut m = ctx.manifest("experiment", &inputs)?;
    let e = &cfg.experiments;
    let mut any_ok = false;
    for kind in &e.kinds {
        match kind {
            ExperimentKind::Hindcast => {
                let r = sliding_hindcast(&series, &temps, e.block_years, e.n_blocks, e.hindcast_return_period, &pipeline)?;
                write(&dir.join("hindcast.csv"), &r.to_csv())?;
                any_ok |= r.blocks.iter().any(|b| b.outcome.is_ok());
                m.push("hindcast.blocks", r.blocks.len());
            }
            ExperimentKind::LengthSweep => {
                let r = data_length_sweep(&series, &temps, &e.lengths, &pipeline)?;
                write(&dir.join("length_sweep_weights.csv"), &r.weights_csv())?;
                write(&dir.join("length_sweep_levels.csv"), &r.levels_csv())?;
                any_ok |= r.cells.iter().any(|c| c.outcome.is_ok());
                m.push(
                    "length_sweep.lengths",
                    e.lengths.iter().map(|l| l.to_string()).collect::<Vec<_>>().join(","),
                );
            }
            ExperimentKind::GevSweep => {
                let mut gev = pipeline.clone();
                gev.family = Family::Gev;
                let r = gev_length_sweep(
                    &series,
                    &temps,
                    &e.gev_lengths,
                    e.gev_return_period,
                    e.gev_reference_year,
                    &gev,
                )?;
                write(&dir.join("gev_sweep_theta.csv"), &r.theta_csv())?;
                write(&dir.join("gev_sweep_rl.csv"), &r.rl_csv())?;
                any_ok |= r.cells.iter().any(|c| c.outcome.is_ok());
                m.push("gev_sweep.reference_year", r.reference_year);
            }
        }
    }
    m.write(&dir)?;
    if !any_ok {
        return Err(Error::Numerical("every experiment cell failed".into()));
    }
    Ok(Completion::Complete)
}

fn cmd_report(ctx: &Context) -> Result<Completion> {
    let fit = ctx.out.join("fit");
    let comparison = fit.join("comparison.csv");
    if !comparison.is_file() {
        return Err(Error::Config(format!("no fit outputs in {}; run `fit` first", fit.display())));
    }
    let read = |p: &Path| std::fs::read_to_string(p).map_err(|e| Error::io(p, e));
    let mut text = String::from("Model comparison\n");
    for line in read(&comparison)?.lines() {
        let cells: Vec<&str> = line.split(',').collect();
        let _ = writeln!(text, "  {}", cells.iter().map(|c| format!("{c:>22}")).collect::<String>());
    }
    let mut labels: Vec<String> = StructureTag::ALL.iter().map(|t| t.to_string()).collect();
    labels.push("BMA".to_string());
    for label in labels {
        let p = fit.join(format!("return_levels_{label}.csv"));
        if !p.is_file() {
            continue;
        }
        let _ = writeln!(text, "\nReturn levels, {label}\n  year  period     min      5%     25%     50%     75%     95%     max");
        let body = read(&p)?;
        let rows: Vec<Vec<&str>> = body.lines().skip(1).map(|l| l.split(',').collect()).collect();
        for chunk in rows.chunks(7) {
            let _ = write!(text, "  {:>4}  {:>6}", chunk[0][0], chunk[0][1]);
            for r in chunk {
                let v = r[3].parse::<f64>().map_or_else(|_| r[3].to_string(), |v| format!("{v:.3}"));
                let _ = write!(text, " {v:>7}");
            }
            text.push('\n');
        }
    }
    let dir = ctx.stage_dir("report")?;
    write(&dir.join("summary.txt"), &text)?;
    let mut m = ctx.manifest("report", &[])?;
    m.push("input.comparison", "fit/comparison.csv");
    m.push("input.comparison.sha256", sha256_file(&comparison)?);
    m.push("output", "summary.txt");
    m.write(&dir)?;
    print!("{text}");
    Ok(Completion::Complete)
}
