//! Command line front end: argument definitions, the subcommands and the
//! JSON reports they emit.

use std::fs;
use std::io::Read as _;
use std::path::{Path, PathBuf};
use std::time::Instant;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::bounds::{BoundedCdf, CdfVector, WidthStats};
use crate::error::{Error, Result};
use crate::grid::{RoundingMode, SupportGrid};
use crate::io;
use crate::mc::{self, McConfig, McEstimate, DEFAULT_BUDGET};
use crate::semi_markov::{self, SemiMarkovData, DEFAULT_TAIL_TOLERANCE};
use crate::statistics::{
    self, DegradationGrid, DegradationModel, GridSpec, Sample, DEFAULT_GRID_CAP,
    DEFAULT_QUANTILE_TOL,
};

pub const SCHEMA_VERSION: u32 = 1;

const DEFAULT_PROBS: [f64; 5] = [0.025, 0.05, 0.5, 0.95, 0.975];

#[derive(Parser, Debug)]
#[command(
    name = "convboot",
    version,
    about = "Bootstrap distributions by FFT convolution of the empirical measure"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Subcommand, Debug)]
pub enum Command {
    /// Bootstrap distribution of the sample mean.
    Mean(MeanArgs),
    /// Mean of the observations under independent random sign flips.
    Signflip(MeanArgs),
    /// Failure-time quantiles from per-period degradation increments.
    Degradation(DegradationArgs),
    /// Passage time from state 1 to state 3 of a three-state semi-Markov model.
    FirstPassage(FirstPassageArgs),
    /// Monte Carlo resampling of any of the statistics above.
    Mc(McArgs),
    /// Time and width ladders for the convolutional and Monte Carlo methods.
    Bench(BenchArgs),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, ValueEnum)]
#[serde(rename_all = "lowercase")]
pub enum Mode {
    Exact,
    Bounds,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, ValueEnum)]
#[serde(rename_all = "kebab-case")]
pub enum Statistic {
    Mean,
    Signflip,
    Degradation,
    FirstPassage,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Method {
    Convolutional,
    MonteCarlo,
}

/// Grid of the transformed statistic. `--grid-min/--grid-max/--grid-points`
/// fix it completely, `--grid-step` fixes the spacing, and `--grid-points`
/// alone spreads that many points over the support.
#[derive(Args, Debug, Clone, Default)]
pub struct GridArgs {
    #[arg(long, allow_hyphen_values = true, requires_all = ["grid_max", "grid_points"])]
    pub grid_min: Option<f64>,
    #[arg(long, allow_hyphen_values = true, requires = "grid_min")]
    pub grid_max: Option<f64>,
    #[arg(long)]
    pub grid_points: Option<usize>,
    #[arg(long, conflicts_with_all = ["grid_min", "grid_max", "grid_points"])]
    pub grid_step: Option<f64>,
}

impl GridArgs {
    fn spec(&self, sample: &Sample) -> GridSpec {
        match (
            self.grid_min,
            self.grid_max,
            self.grid_points,
            self.grid_step,
        ) {
            (Some(origin), Some(endpoint), Some(count), _) => GridSpec::Explicit {
                origin,
                endpoint,
                count,
            },
            (_, _, Some(count), _) => GridSpec::Auto { count },
            (_, _, _, Some(step)) => GridSpec::Step { step },
            _ => default_spec(sample),
        }
    }
}

/// Spacing of the recorded data divided by `n`, which puts every resampled
/// mean on the grid.
pub fn default_spec(sample: &Sample) -> GridSpec {
    GridSpec::Step {
        step: statistics::data_resolution(sample.values()) / sample.len() as f64,
    }
}

#[derive(Args, Debug, Clone)]
pub struct MeanArgs {
    /// Sample file, one value per line (`-` for standard input).
    #[arg(long)]
    pub input: PathBuf,
    #[command(flatten)]
    pub grid: GridArgs,
    /// Exact placement or the rounding sandwich. By default exact placement
    /// is tried first.
    #[arg(long, value_enum)]
    pub mode: Option<Mode>,
    /// Probability levels to report quantiles for.
    #[arg(long, value_delimiter = ',')]
    pub probs: Vec<f64>,
    /// Values to report the CDF at.
    #[arg(long, value_delimiter = ',', allow_hyphen_values = true)]
    pub values: Vec<f64>,
    /// Write the CDF as two-column text (`PATH.lower`/`PATH.upper` for bounds).
    #[arg(long)]
    pub cdf_dump: Option<PathBuf>,
    /// Report destination; standard output when omitted.
    #[arg(long)]
    pub output: Option<PathBuf>,
}

#[derive(Args, Debug, Clone)]
pub struct DegradationArgs {
    /// `unit,increment` table.
    #[arg(long)]
    pub input: PathBuf,
    /// Failure thresholds.
    #[arg(long, value_delimiter = ',', required = true)]
    pub threshold: Vec<f64>,
    /// Length of one inspection period.
    #[arg(long)]
    pub period: f64,
    /// Equal-weight mixture over units (the default).
    #[arg(long, conflicts_with = "pooled")]
    pub per_unit: bool,
    /// Resample all increments as one population.
    #[arg(long)]
    pub pooled: bool,
    /// Failure probabilities to solve for.
    #[arg(
        long = "p",
        visible_alias = "probs",
        value_delimiter = ',',
        default_value = "0.5"
    )]
    pub p: Vec<f64>,
    #[arg(long, default_value_t = DEFAULT_QUANTILE_TOL)]
    pub quantile_tol: f64,
    /// Search interval `LO,HI` for the quantile.
    #[arg(long, value_delimiter = ',', num_args = 2)]
    pub bracket: Option<Vec<f64>>,
    /// Grid length (with `--grid-step`, a fixed grid).
    #[arg(long)]
    pub grid_points: Option<usize>,
    #[arg(long, requires = "grid_points")]
    pub grid_step: Option<f64>,
    /// Largest grid the automatic policy may choose.
    #[arg(long, default_value_t = DEFAULT_GRID_CAP)]
    pub grid_cap: usize,
    #[arg(long)]
    pub output: Option<PathBuf>,
}

#[derive(Args, Debug, Clone)]
pub struct FirstPassageArgs {
    /// `from,to,time` table.
    #[arg(long)]
    pub input: PathBuf,
    /// Right end of the time grid.
    #[arg(long, default_value_t = 30.0)]
    pub horizon: f64,
    #[arg(long, default_value_t = 4096)]
    pub grid_points: usize,
    #[arg(long, value_enum, default_value = "bounds")]
    pub mode: Mode,
    /// Largest passage probability allowed beyond the horizon.
    #[arg(long, default_value_t = DEFAULT_TAIL_TOLERANCE)]
    pub tail_tol: f64,
    #[arg(long, value_delimiter = ',')]
    pub probs: Vec<f64>,
    #[arg(long, value_delimiter = ',')]
    pub values: Vec<f64>,
    #[arg(long)]
    pub cdf_dump: Option<PathBuf>,
    #[arg(long)]
    pub output: Option<PathBuf>,
}

#[derive(Args, Debug, Clone)]
pub struct McArgs {
    #[arg(long, value_enum)]
    pub statistic: Statistic,
    #[arg(long)]
    pub input: PathBuf,
    /// Probability levels (quantile rows).
    #[arg(long, visible_alias = "p", value_delimiter = ',')]
    pub probs: Vec<f64>,
    /// Evaluation values (CDF rows; mean and sign-flip only).
    #[arg(long, value_delimiter = ',', allow_hyphen_values = true)]
    pub values: Vec<f64>,
    /// Resamples per replication.
    #[arg(long, default_value_t = 10_000)]
    pub samples: usize,
    /// Independent replications.
    #[arg(long, default_value_t = 1)]
    pub reps: usize,
    #[arg(long, default_value_t = 1)]
    pub seed: u64,
    /// Cap on samples times replications.
    #[arg(long, default_value_t = DEFAULT_BUDGET)]
    pub budget: u64,
    #[arg(long, value_delimiter = ',')]
    pub threshold: Vec<f64>,
    #[arg(long)]
    pub period: Option<f64>,
    #[arg(long, conflicts_with = "pooled")]
    pub per_unit: bool,
    #[arg(long)]
    pub pooled: bool,
    #[arg(long, default_value_t = 30.0)]
    pub horizon: f64,
    /// Skip the companion convolutional run and its error summary.
    #[arg(long)]
    pub no_compare: bool,
    #[arg(long)]
    pub output: Option<PathBuf>,
}

#[derive(Args, Debug, Clone)]
pub struct BenchArgs {
    /// Sample file; `{1, pi, 6, 8}` when omitted.
    #[arg(long)]
    pub input: Option<PathBuf>,
    #[arg(long, default_value_t = 8)]
    pub min_log2: u32,
    #[arg(long, default_value_t = 20)]
    pub max_log2: u32,
    /// Timed repetitions per cell.
    #[arg(long, default_value_t = 5)]
    pub repeat: usize,
    #[arg(long, value_delimiter = ',', default_value = "1000,4000,16000,64000")]
    pub mc_samples: Vec<usize>,
    /// Replications used to measure Monte Carlo spread.
    #[arg(long, default_value_t = 40)]
    pub mc_reps: usize,
    #[arg(long, default_value_t = 1)]
    pub seed: u64,
    /// Cap on the Monte Carlo draws of the whole ladder.
    #[arg(long, default_value_t = DEFAULT_BUDGET)]
    pub budget: u64,
    #[arg(long)]
    pub output: Option<PathBuf>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GridMeta {
    pub origin: f64,
    pub step: f64,
    pub count: usize,
}

impl From<&SupportGrid> for GridMeta {
    fn from(g: &SupportGrid) -> Self {
        Self {
            origin: g.origin(),
            step: g.step(),
            count: g.count(),
        }
    }
}

/// One reported quantity. Quantile rows carry `level`, CDF rows `value`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ResultRow {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub threshold: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub level: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub value: Option<f64>,
    pub low: f64,
    pub high: f64,
    pub mid: f64,
}

impl ResultRow {
    fn quantile(level: f64, low: f64, high: f64) -> Self {
        Self {
            threshold: None,
            level: Some(level),
            value: None,
            low,
            high,
            mid: 0.5 * (low + high),
        }
    }

    fn cdf(value: f64, low: f64, high: f64) -> Self {
        Self {
            threshold: None,
            level: None,
            value: Some(value),
            low,
            high,
            mid: 0.5 * (low + high),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct McMeta {
    pub seed: u64,
    pub samples: usize,
    pub reps: usize,
    /// Mean absolute difference between single-replication estimates and the
    /// convolutional midpoints, averaged over replications.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub mae: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunReport {
    pub schema_version: u32,
    pub method: Method,
    pub statistic: Statistic,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub mode: Option<Mode>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub guaranteed: Option<bool>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub grid: Option<GridMeta>,
    pub results: Vec<ResultRow>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub width: Option<WidthStats>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub monte_carlo: Option<McMeta>,
    pub wall_time_s: f64,
    pub input_digest: String,
}

impl RunReport {
    fn new(method: Method, statistic: Statistic, input_digest: String) -> Self {
        Self {
            schema_version: SCHEMA_VERSION,
            method,
            statistic,
            mode: None,
            guaranteed: None,
            grid: None,
            results: Vec::new(),
            width: None,
            monte_carlo: None,
            wall_time_s: 0.0,
            input_digest,
        }
    }

    pub fn to_json(&self) -> String {
        let mut s = serde_json::to_string_pretty(self).expect("report serializes");
        s.push('\n');
        s
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BenchRow {
    pub method: Method,
    /// Grid points for convolution, resamples per replication for Monte Carlo.
    pub size: usize,
    pub mean_time_s: f64,
    /// Mean sandwich width for convolution; for Monte Carlo, the width of a
    /// normal 95% interval for the CDF estimate at the sample mean.
    pub width: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BenchReport {
    pub schema_version: u32,
    pub statistic: Statistic,
    pub sample_size: usize,
    pub repeat: usize,
    pub rows: Vec<BenchRow>,
    /// Least-squares slope of log time against log grid size.
    pub time_slope: f64,
    pub input_digest: String,
}

/// Contents and SHA-256 digest of an input file (`-` reads standard input).
pub fn read_input(path: &Path) -> Result<(String, String)> {
    let bytes = if path == Path::new("-") {
        let mut buf = Vec::new();
        std::io::stdin().read_to_end(&mut buf)?;
        buf
    } else {
        fs::read(path)?
    };
    let digest = hex::encode(Sha256::digest(&bytes));
    let text = String::from_utf8(bytes).map_err(|e| Error::Parse(e.to_string()))?;
    Ok((text, digest))
}

fn write_text(path: &Path, text: &str) -> Result<()> {
    fs::write(path, text).map_err(|e| Error::InvalidInput(format!("{}: {e}", path.display())))
}

fn with_suffix(path: &Path, suffix: &str) -> PathBuf {
    let mut s = path.as_os_str().to_owned();
    s.push(suffix);
    PathBuf::from(s)
}

/// A fitted CDF: exact, or a lower/upper pair.
#[derive(Debug, Clone)]
pub enum Fitted {
    Exact(CdfVector),
    Bounded(BoundedCdf),
}

impl Fitted {
    fn grid(&self) -> &SupportGrid {
        match self {
            Fitted::Exact(c) => c.grid(),
            Fitted::Bounded(b) => b.grid(),
        }
    }

    fn mode(&self) -> Mode {
        match self {
            Fitted::Exact(_) => Mode::Exact,
            Fitted::Bounded(_) => Mode::Bounds,
        }
    }

    fn quantile_row(&self, p: f64) -> Result<ResultRow> {
        match self {
            Fitted::Exact(c) => {
                let q = c.quantile(p)?;
                Ok(ResultRow::quantile(p, q, q))
            }
            Fitted::Bounded(b) => {
                let q = b.quantile(p)?;
                Ok(ResultRow::quantile(p, q.low, q.high))
            }
        }
    }

    fn cdf_row(&self, v: f64) -> ResultRow {
        match self {
            Fitted::Exact(c) => {
                let f = c.at(v);
                ResultRow::cdf(v, f, f)
            }
            Fitted::Bounded(b) => {
                let (lo, hi) = b.at(v);
                ResultRow::cdf(v, lo, hi)
            }
        }
    }

    fn rows(&self, probs: &[f64], values: &[f64]) -> Result<Vec<ResultRow>> {
        let mut rows = probs
            .iter()
            .map(|&p| self.quantile_row(p))
            .collect::<Result<Vec<_>>>()?;
        rows.extend(values.iter().map(|&v| self.cdf_row(v)));
        Ok(rows)
    }

    fn fill(&self, report: &mut RunReport) {
        report.mode = Some(self.mode());
        report.grid = Some(self.grid().into());
        match self {
            Fitted::Exact(_) => report.guaranteed = Some(true),
            Fitted::Bounded(b) => {
                report.guaranteed = Some(b.guaranteed());
                report.width = Some(b.width_stats());
            }
        }
    }

    fn dump(&self, path: &Path) -> Result<()> {
        match self {
            Fitted::Exact(c) => write_text(path, &io::write_cdf_dump(c)),
            Fitted::Bounded(b) => {
                write_text(&with_suffix(path, ".lower"), &io::write_cdf_dump(b.lower()))?;
                write_text(&with_suffix(path, ".upper"), &io::write_cdf_dump(b.upper()))
            }
        }
    }
}

fn fit_with<E, B>(mode: Option<Mode>, exact: E, bounded: B) -> Result<Fitted>
where
    E: FnOnce() -> Result<CdfVector>,
    B: FnOnce() -> Result<BoundedCdf>,
{
    match mode {
        Some(Mode::Exact) => exact().map(Fitted::Exact),
        Some(Mode::Bounds) => bounded().map(Fitted::Bounded),
        None => match exact() {
            Ok(c) => Ok(Fitted::Exact(c)),
            Err(Error::OffGrid { .. }) => bounded().map(Fitted::Bounded),
            Err(e) => Err(e),
        },
    }
}

pub fn fit_mean(sample: &Sample, spec: &GridSpec, mode: Option<Mode>) -> Result<Fitted> {
    fit_with(
        mode,
        || {
            statistics::bootstrap_mean(sample, spec, RoundingMode::Exact)
                .map(|p| CdfVector::from_pmf(&p))
        },
        || statistics::bootstrap_mean_bounded(sample, spec),
    )
}

pub fn fit_signflip(sample: &Sample, spec: &GridSpec, mode: Option<Mode>) -> Result<Fitted> {
    fit_with(
        mode,
        || {
            statistics::signflip_mean(sample, spec, RoundingMode::Exact)
                .map(|p| CdfVector::from_pmf(&p))
        },
        || statistics::signflip_mean_bounded(sample, spec),
    )
}

pub fn fit_first_passage(
    data: &SemiMarkovData,
    grid: &SupportGrid,
    mode: Mode,
    tail_tol: f64,
) -> Result<Fitted> {
    match mode {
        Mode::Exact => {
            semi_markov::first_passage_cdf_with(data, grid, RoundingMode::Exact, tail_tol)
                .map(Fitted::Exact)
        }
        Mode::Bounds => {
            semi_markov::first_passage_bounded_with(data, grid, tail_tol).map(Fitted::Bounded)
        }
    }
}

fn load_sample(path: &Path) -> Result<(Sample, String)> {
    let (text, digest) = read_input(path)?;
    Ok((Sample::new(io::parse_samples(&text)?)?, digest))
}

fn load_degradation(path: &Path) -> Result<(Vec<Vec<f64>>, String)> {
    let (text, digest) = read_input(path)?;
    let units = io::parse_degradation(&text)?;
    Ok((units.into_iter().map(|(_, v)| v).collect(), digest))
}

fn load_transitions(path: &Path) -> Result<(SemiMarkovData, String)> {
    let (text, digest) = read_input(path)?;
    let records = io::parse_transitions(&text)?;
    Ok((semi_markov::extract_transitions(&records)?, digest))
}

fn default_probs(probs: &[f64], values: &[f64]) -> Vec<f64> {
    if probs.is_empty() && values.is_empty() {
        DEFAULT_PROBS.to_vec()
    } else {
        probs.to_vec()
    }
}

fn mean_like(args: &MeanArgs, statistic: Statistic) -> Result<RunReport> {
    let start = Instant::now();
    let (sample, digest) = load_sample(&args.input)?;
    let spec = args.grid.spec(&sample);
    let fitted = match statistic {
        Statistic::Signflip => fit_signflip(&sample, &spec, args.mode)?,
        _ => fit_mean(&sample, &spec, args.mode)?,
    };
    let mut report = RunReport::new(Method::Convolutional, statistic, digest);
    fitted.fill(&mut report);
    report.results = fitted.rows(&default_probs(&args.probs, &args.values), &args.values)?;
    if let Some(path) = &args.cdf_dump {
        fitted.dump(path)?;
    }
    report.wall_time_s = start.elapsed().as_secs_f64();
    Ok(report)
}

pub fn cmd_mean(args: &MeanArgs) -> Result<RunReport> {
    mean_like(args, Statistic::Mean)
}

pub fn cmd_signflip(args: &MeanArgs) -> Result<RunReport> {
    mean_like(args, Statistic::Signflip)
}

fn degradation_grid(points: Option<usize>, step: Option<f64>, cap: usize) -> DegradationGrid {
    match (points, step) {
        (Some(count), Some(step)) => DegradationGrid::Fixed { step, count },
        (Some(count), None) => DegradationGrid::Span { count },
        _ => DegradationGrid::Auto { cap },
    }
}

fn bracket_pair(b: &Option<Vec<f64>>) -> Option<(f64, f64)> {
    b.as_ref().map(|v| (v[0], v[1]))
}

pub fn cmd_degradation(args: &DegradationArgs) -> Result<RunReport> {
    let start = Instant::now();
    let (units, digest) = load_degradation(&args.input)?;
    let model = DegradationModel::new(units, args.period, args.threshold[0], args.pooled)?;
    let grid = degradation_grid(args.grid_points, args.grid_step, args.grid_cap);
    let mut report = RunReport::new(Method::Convolutional, Statistic::Degradation, digest);
    report.mode = Some(Mode::Bounds);
    for &t in &args.threshold {
        let m = model.with_threshold(t)?;
        for &p in &args.p {
            let q = statistics::fpt_quantile(
                &m,
                p,
                grid,
                bracket_pair(&args.bracket),
                args.quantile_tol,
            )?;
            report.results.push(ResultRow {
                threshold: Some(t),
                ..ResultRow::quantile(p, q.low, q.high)
            });
        }
    }
    report.wall_time_s = start.elapsed().as_secs_f64();
    Ok(report)
}

fn time_grid(horizon: f64, points: usize) -> Result<SupportGrid> {
    SupportGrid::new(0.0, horizon, points)
}

pub fn cmd_first_passage(args: &FirstPassageArgs) -> Result<RunReport> {
    let start = Instant::now();
    let (data, digest) = load_transitions(&args.input)?;
    let grid = time_grid(args.horizon, args.grid_points)?;
    let fitted = fit_first_passage(&data, &grid, args.mode, args.tail_tol)?;
    let mut report = RunReport::new(Method::Convolutional, Statistic::FirstPassage, digest);
    fitted.fill(&mut report);
    report.results = fitted.rows(&default_probs(&args.probs, &args.values), &args.values)?;
    if let Some(path) = &args.cdf_dump {
        fitted.dump(path)?;
    }
    report.wall_time_s = start.elapsed().as_secs_f64();
    Ok(report)
}

fn mc_rows(est: &[McEstimate], quantile: bool) -> Vec<ResultRow> {
    est.iter()
        .map(|e| {
            let mut row = if quantile {
                ResultRow::quantile(e.at, e.lo, e.hi)
            } else {
                ResultRow::cdf(e.at, e.lo, e.hi)
            };
            row.mid = e.mean;
            row
        })
        .collect()
}

/// Replication-averaged mean absolute error against `reference`, row by row.
fn replication_mae(est: &[&McEstimate], reference: &[f64]) -> f64 {
    let reps = est.first().map_or(0, |e| e.draws.len());
    let per_rep: f64 = (0..reps)
        .map(|r| {
            let a: Vec<f64> = est.iter().map(|e| e.draws[r]).collect();
            mc::mean_abs_error(&a, reference)
        })
        .sum();
    per_rep / reps.max(1) as f64
}

fn mc_model(args: &McArgs, units: Vec<Vec<f64>>) -> Result<DegradationModel> {
    let period = args
        .period
        .ok_or_else(|| Error::InvalidInput("--period is required for degradation".into()))?;
    let threshold = *args
        .threshold
        .first()
        .ok_or_else(|| Error::InvalidInput("--threshold is required for degradation".into()))?;
    DegradationModel::new(units, period, threshold, args.pooled)
}

pub fn cmd_mc(args: &McArgs) -> Result<RunReport> {
    let start = Instant::now();
    let cfg = McConfig {
        budget: args.budget,
        ..McConfig::new(args.seed, args.samples, args.reps)
    };
    let probs = default_probs(&args.probs, &args.values);
    let (digest, estimates, reference) = match args.statistic {
        Statistic::Mean => {
            let (sample, digest) = load_sample(&args.input)?;
            let mut est: Vec<(McEstimate, bool)> = Vec::new();
            if !probs.is_empty() {
                est.extend(
                    mc::mc_mean(&sample, &probs, &cfg)?
                        .into_iter()
                        .map(|e| (e, true)),
                );
            }
            if !args.values.is_empty() {
                est.extend(
                    mc::mc_mean_cdf(&sample, &args.values, &cfg)?
                        .into_iter()
                        .map(|e| (e, false)),
                );
            }
            let reference = if args.no_compare {
                None
            } else {
                let f = fit_mean(&sample, &default_spec(&sample), None)?;
                Some(f.rows(&probs, &args.values)?)
            };
            (digest, est, reference)
        }
        Statistic::Signflip => {
            let (sample, digest) = load_sample(&args.input)?;
            if args.values.is_empty() {
                return Err(Error::InvalidInput(
                    "sign-flip Monte Carlo needs --values".into(),
                ));
            }
            let est = mc::mc_signflip(&sample, &args.values, &cfg)?
                .into_iter()
                .map(|e| (e, false))
                .collect();
            let reference = if args.no_compare {
                None
            } else {
                let f = fit_signflip(&sample, &default_spec(&sample), None)?;
                Some(f.rows(&[], &args.values)?)
            };
            (digest, est, reference)
        }
        Statistic::Degradation => {
            let (units, digest) = load_degradation(&args.input)?;
            let model = mc_model(args, units)?;
            let mut est = Vec::new();
            let mut reference = Vec::new();
            for &t in &args.threshold {
                let m = model.with_threshold(t)?;
                for &p in &probs {
                    est.push((mc::mc_degradation_quantile(&m, p, &cfg)?, true));
                    if !args.no_compare {
                        let q = statistics::fpt_quantile(
                            &m,
                            p,
                            DegradationGrid::Auto {
                                cap: DEFAULT_GRID_CAP,
                            },
                            None,
                            DEFAULT_QUANTILE_TOL,
                        )?;
                        reference.push(ResultRow {
                            threshold: Some(t),
                            ..ResultRow::quantile(p, q.low, q.high)
                        });
                    }
                }
            }
            (digest, est, (!args.no_compare).then_some(reference))
        }
        Statistic::FirstPassage => {
            let (data, digest) = load_transitions(&args.input)?;
            let est = mc::mc_first_passage(&data, &probs, &cfg)?
                .into_iter()
                .map(|e| (e, true))
                .collect();
            let reference = if args.no_compare {
                None
            } else {
                let grid = time_grid(args.horizon, 4096)?;
                let f = fit_first_passage(&data, &grid, Mode::Bounds, DEFAULT_TAIL_TOLERANCE)?;
                Some(f.rows(&probs, &[])?)
            };
            (digest, est, reference)
        }
    };

    let mut report = RunReport::new(Method::MonteCarlo, args.statistic, digest);
    let mut results = Vec::with_capacity(estimates.len());
    for (e, quantile) in &estimates {
        results.extend(mc_rows(std::slice::from_ref(e), *quantile));
    }
    if args.statistic == Statistic::Degradation {
        let per_t = probs.len();
        for (i, row) in results.iter_mut().enumerate() {
            row.threshold = Some(args.threshold[i / per_t]);
        }
    }
    let mae = reference.map(|r| {
        let mids: Vec<f64> = r.iter().map(|row| row.mid).collect();
        let est: Vec<&McEstimate> = estimates.iter().map(|(e, _)| e).collect();
        replication_mae(&est, &mids)
    });
    report.results = results;
    report.monte_carlo = Some(McMeta {
        seed: args.seed,
        samples: args.samples,
        reps: args.reps,
        mae,
    });
    report.wall_time_s = start.elapsed().as_secs_f64();
    Ok(report)
}

/// Least-squares slope of `ln y` against `ln x`.
pub fn loglog_slope(x: &[f64], y: &[f64]) -> f64 {
    let lx: Vec<f64> = x.iter().map(|v| v.ln()).collect();
    let ly: Vec<f64> = y.iter().map(|v| v.ln()).collect();
    let n = lx.len() as f64;
    let (mx, my) = (lx.iter().sum::<f64>() / n, ly.iter().sum::<f64>() / n);
    let sxy: f64 = lx.iter().zip(&ly).map(|(a, b)| (a - mx) * (b - my)).sum();
    let sxx: f64 = lx.iter().map(|a| (a - mx).powi(2)).sum();
    sxy / sxx
}

fn std_dev(v: &[f64]) -> f64 {
    let n = v.len() as f64;
    let m = v.iter().sum::<f64>() / n;
    (v.iter().map(|x| (x - m).powi(2)).sum::<f64>() / (n - 1.0).max(1.0)).sqrt()
}

pub fn cmd_bench(args: &BenchArgs) -> Result<BenchReport> {
    let (sample, digest) = match &args.input {
        Some(path) => load_sample(path)?,
        None => {
            let v = vec![1.0, std::f64::consts::PI, 6.0, 8.0];
            let digest = hex::encode(Sha256::digest(io::write_samples(&v).as_bytes()));
            (Sample::new(v)?, digest)
        }
    };
    if args.min_log2 < 2 || args.min_log2 > args.max_log2 || args.max_log2 > 26 {
        return Err(Error::InvalidInput(format!(
            "grid ladder 2^{}..2^{} is not usable",
            args.min_log2, args.max_log2
        )));
    }
    if args.repeat == 0 {
        return Err(Error::InvalidInput("--repeat must be positive".into()));
    }
    let draws: u64 = args
        .mc_samples
        .iter()
        .map(|&b| b as u64 * args.mc_reps as u64 * args.repeat as u64)
        .sum();
    if draws > args.budget {
        return Err(Error::TooLarge(format!(
            "Monte Carlo ladder needs {draws} draws (budget {})",
            args.budget
        )));
    }

    let mut rows = Vec::new();
    for k in args.min_log2..=args.max_log2 {
        let count = 1usize << k;
        let spec = GridSpec::Auto { count };
        let mut total = 0.0;
        let mut width = 0.0;
        for _ in 0..args.repeat {
            let start = Instant::now();
            let b = statistics::bootstrap_mean_bounded(&sample, &spec)?;
            total += start.elapsed().as_secs_f64();
            width = b.width_stats().mean_width;
        }
        rows.push(BenchRow {
            method: Method::Convolutional,
            size: count,
            mean_time_s: total / args.repeat as f64,
            width,
        });
    }
    let time_slope = {
        let x: Vec<f64> = rows.iter().map(|r| r.size as f64).collect();
        let y: Vec<f64> = rows.iter().map(|r| r.mean_time_s.max(1e-9)).collect();
        loglog_slope(&x, &y)
    };

    let at = [sample.mean()];
    for &b in &args.mc_samples {
        let cfg = McConfig {
            budget: args.budget,
            ..McConfig::new(args.seed, b, args.mc_reps)
        };
        let mut total = 0.0;
        let mut width = 0.0;
        for _ in 0..args.repeat {
            let start = Instant::now();
            let est = mc::mc_mean_cdf(&sample, &at, &cfg)?;
            total += start.elapsed().as_secs_f64() / args.mc_reps as f64;
            width = 2.0 * 1.96 * std_dev(&est[0].draws);
        }
        rows.push(BenchRow {
            method: Method::MonteCarlo,
            size: b,
            mean_time_s: total / args.repeat as f64,
            width,
        });
    }

    Ok(BenchReport {
        schema_version: SCHEMA_VERSION,
        statistic: Statistic::Mean,
        sample_size: sample.len(),
        repeat: args.repeat,
        rows,
        time_slope,
        input_digest: digest,
    })
}

fn emit(output: &Option<PathBuf>, text: &str) -> Result<()> {
    match output {
        Some(path) => write_text(path, text),
        None => {
            print!("{text}");
            Ok(())
        }
    }
}

/// Runs one parsed command line, writing its report.
pub fn run(cli: &Cli) -> Result<()> {
    match &cli.command {
        Command::Mean(a) => emit(&a.output, &cmd_mean(a)?.to_json()),
        Command::Signflip(a) => emit(&a.output, &cmd_signflip(a)?.to_json()),
        Command::Degradation(a) => emit(&a.output, &cmd_degradation(a)?.to_json()),
        Command::FirstPassage(a) => emit(&a.output, &cmd_first_passage(a)?.to_json()),
        Command::Mc(a) => emit(&a.output, &cmd_mc(a)?.to_json()),
        Command::Bench(a) => {
            let report = cmd_bench(a)?;
            let mut s = serde_json::to_string_pretty(&report).expect("report serializes");
            s.push('\n');
            emit(&a.output, &s)
        }
    }
}
