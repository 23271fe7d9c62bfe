//! Statistic pipelines built on the spectral engine.
//!
//! All pipelines work on a zero-anchored transform grid and relocate the
//! result afterwards, so the grid passed in (or resolved from a
//! [`GridSpec`]) describes the transformed variables, not the statistic.

mod degradation;

pub use degradation::{
    degradation_fpt_cdf, fpt_quantile, fpt_quantile_leg, inspection_interval, mixture_fpt_cdf,
    DegradationGrid, DegradationModel, FptCurve, DEFAULT_GRID_CAP, DEFAULT_QUANTILE_TOL,
    MAX_BISECTION_ITERS,
};

use crate::bounds::{BoundedCdf, CdfVector};
use crate::dft;
use crate::error::{Error, Result};
use crate::grid::{GriddedPmf, RoundingMode, SupportGrid};

/// A nonempty sample of finite observations.
#[derive(Debug, Clone, PartialEq)]
pub struct Sample(Vec<f64>);

impl Sample {
    pub fn new(values: Vec<f64>) -> Result<Self> {
        if values.is_empty() {
            return Err(Error::InvalidInput("sample is empty".into()));
        }
        if let Some(v) = values.iter().find(|v| !v.is_finite()) {
            return Err(Error::InvalidInput(format!("non-finite observation {v}")));
        }
        Ok(Self(values))
    }

    pub fn values(&self) -> &[f64] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn min(&self) -> f64 {
        self.0.iter().copied().fold(f64::INFINITY, f64::min)
    }

    pub fn max(&self) -> f64 {
        self.0.iter().copied().fold(f64::NEG_INFINITY, f64::max)
    }

    pub fn mean(&self) -> f64 {
        self.0.iter().sum::<f64>() / self.0.len() as f64
    }

    /// `(x_i - min x) / n`: nonnegative per-draw contributions to the mean.
    pub fn w_transform(&self) -> Vec<f64> {
        let (lo, n) = (self.min(), self.0.len() as f64);
        self.0.iter().map(|x| (x - lo) / n).collect()
    }
}

/// How the transform grid of a pipeline is chosen.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum GridSpec {
    /// A caller-chosen grid in the transformed coordinates.
    Explicit {
        origin: f64,
        endpoint: f64,
        count: usize,
    },
    /// `count` points spread over the statistic's support.
    Auto { count: usize },
    /// Fixed spacing; the length follows from the support.
    Step { step: f64 },
}

impl GridSpec {
    /// Zero-anchored grid covering `[0, span]` plus `headroom` extra steps.
    fn resolve(&self, span: f64, headroom: usize) -> Result<SupportGrid> {
        let grid = match *self {
            GridSpec::Explicit {
                origin,
                endpoint,
                count,
            } => SupportGrid::new(origin, endpoint, count)?,
            GridSpec::Auto { count } => {
                if count < headroom + 2 {
                    return Err(Error::InvalidGrid(format!(
                        "{count} points leave no room for {headroom} rounding steps"
                    )));
                }
                let intervals = (count - 1 - headroom) as f64;
                let step = if span > 0.0 { span / intervals } else { 1.0 };
                SupportGrid::with_step(0.0, step, count)?
            }
            GridSpec::Step { step } => {
                let base = SupportGrid::covering(span, step)?;
                base.resized(base.count() + headroom)?
            }
        };
        if grid.origin() != 0.0 {
            return Err(Error::UnanchoredGrid(grid.origin()));
        }
        Ok(grid)
    }
}

/// Number of decimal places needed to write every value exactly (capped at
/// 12).
pub fn decimal_places(values: &[f64]) -> u32 {
    (0..=12)
        .find(|&d| {
            let scale = 10f64.powi(d as i32);
            values.iter().all(|v| {
                let s = v * scale;
                (s - s.round()).abs() <= 1e-6
            })
        })
        .unwrap_or(12)
}

/// Spacing of the data as recorded, `10^-decimals`.
pub fn data_resolution(values: &[f64]) -> f64 {
    10f64.powi(-(decimal_places(values) as i32))
}

fn mean_leg(sample: &Sample, grid: SupportGrid, mode: RoundingMode) -> Result<GriddedPmf> {
    let n = sample.len();
    let z = GriddedPmf::empirical(&sample.w_transform(), grid, mode)?;
    let v = dft::self_convolve(&z, n as u32)?;
    Ok(v.shifted(sample.min()))
}

/// Bootstrap distribution of the sample mean.
///
/// Mass `1/n` sits at each `w_i = (x_i - min x)/n`, the pmf is self-convolved
/// `n` times, and the result is relocated by `min x`. With
/// [`RoundingMode::Exact`] the output is the exact bootstrap pmf.
pub fn bootstrap_mean(sample: &Sample, spec: &GridSpec, mode: RoundingMode) -> Result<GriddedPmf> {
    let span = sample.max() - sample.min();
    mean_leg(sample, spec.resolve(span, 0)?, mode)
}

/// Guaranteed CDF sandwich for the bootstrap mean: the round-down leg is
/// the upper CDF and the round-up leg the lower CDF.
pub fn bootstrap_mean_bounded(sample: &Sample, spec: &GridSpec) -> Result<BoundedCdf> {
    let span = sample.max() - sample.min();
    let grid = spec.resolve(span, sample.len())?;
    let upper = CdfVector::from_pmf(&mean_leg(sample, grid, RoundingMode::Down)?);
    let lower = CdfVector::from_pmf(&mean_leg(sample, grid, RoundingMode::Up)?);
    BoundedCdf::new(lower, upper, true)
}

/// Per-factor shifts and the transform grid for the sign-flip mean.
fn signflip_layout(
    sample: &Sample,
    spec: &GridSpec,
    headroom: usize,
) -> Result<(Vec<f64>, SupportGrid)> {
    let n = sample.len() as f64;
    match *spec {
        GridSpec::Explicit { endpoint, .. } => {
            let grid = spec.resolve(0.0, headroom)?;
            let per = 0.5 * endpoint / n;
            Ok((vec![per; sample.len()], grid))
        }
        _ => {
            let shifts: Vec<f64> = sample.values().iter().map(|x| x.abs() / n).collect();
            let total: f64 = shifts.iter().sum();
            Ok((shifts, spec.resolve(2.0 * total, headroom)?))
        }
    }
}

fn signflip_leg(
    sample: &Sample,
    shifts: &[f64],
    grid: SupportGrid,
    mode: RoundingMode,
) -> Result<GriddedPmf> {
    let n = sample.len() as f64;
    let factors = sample
        .values()
        .iter()
        .zip(shifts)
        .map(|(&x, &c)| GriddedPmf::place(&[c - x / n, c + x / n], &[0.5, 0.5], grid, mode))
        .collect::<Result<Vec<_>>>()?;
    let total: f64 = shifts.iter().sum();
    Ok(dft::convolve_all(&factors)?.shifted(-total))
}

/// Distribution of the mean of `±x_i` with independent fair signs.
///
/// Each observation is its own two-point variable, so the spectra are
/// multiplied rather than raised to a power. An explicit grid `[0, E]`
/// centers the statistic at `E/2`; automatic grids shift each factor by
/// `|x_i|/n` so the span is `[-sum|x_i|/n, sum|x_i|/n]`.
pub fn signflip_mean(sample: &Sample, spec: &GridSpec, mode: RoundingMode) -> Result<GriddedPmf> {
    let (shifts, grid) = signflip_layout(sample, spec, 0)?;
    signflip_leg(sample, &shifts, grid, mode)
}

pub fn signflip_mean_bounded(sample: &Sample, spec: &GridSpec) -> Result<BoundedCdf> {
    let (shifts, grid) = signflip_layout(sample, spec, sample.len())?;
    let upper = CdfVector::from_pmf(&signflip_leg(sample, &shifts, grid, RoundingMode::Down)?);
    let lower = CdfVector::from_pmf(&signflip_leg(sample, &shifts, grid, RoundingMode::Up)?);
    BoundedCdf::new(lower, upper, true)
}
