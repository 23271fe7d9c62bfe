//! Failure-time distributions from periodically inspected degradation.
//!
//! With inspections every `d` time units and failure once cumulative
//! degradation reaches `T`, a unit has failed by `t in ((k-1)d, kd]` exactly
//! when `Y_1 + ... + Y_{k-1} + a Y_k >= T` with `a = t/d - (k-1)`. The
//! interpolated last draw is what makes the failure-time CDF continuous in
//! `t` between inspections.

use std::sync::Mutex;

use rayon::prelude::*;

use super::decimal_places;
use crate::bounds::BoundedQuantile;
use crate::dft::{self, SpectralSeq};
use crate::error::{Error, Result};
use crate::grid::{GriddedPmf, RoundingMode, SupportGrid, SNAP_FRACTION};

/// Default bisection tolerance on time.
pub const DEFAULT_QUANTILE_TOL: f64 = 1e-3;

pub const MAX_BISECTION_ITERS: usize = 200;

/// Largest automatically chosen grid.
pub const DEFAULT_GRID_CAP: usize = 1 << 22;

#[derive(Debug, Clone, PartialEq)]
pub struct DegradationModel {
    units: Vec<Vec<f64>>,
    period: f64,
    threshold: f64,
    pooled: bool,
}

impl DegradationModel {
    pub fn new(units: Vec<Vec<f64>>, period: f64, threshold: f64, pooled: bool) -> Result<Self> {
        if units.is_empty() {
            return Err(Error::InvalidInput("no degradation units".into()));
        }
        if !(period.is_finite() && period > 0.0) {
            return Err(Error::InvalidInput(format!(
                "period {period} must be positive"
            )));
        }
        if !(threshold.is_finite() && threshold > 0.0) {
            return Err(Error::InvalidInput(format!(
                "threshold {threshold} must be positive"
            )));
        }
        for (i, u) in units.iter().enumerate() {
            if u.is_empty() {
                return Err(Error::InvalidInput(format!("unit {i} has no increments")));
            }
            if let Some(x) = u.iter().find(|x| !(x.is_finite() && **x >= 0.0)) {
                return Err(Error::InvalidInput(format!(
                    "unit {i} has invalid increment {x}"
                )));
            }
            if u.iter().all(|&x| x == 0.0) {
                return Err(Error::InvalidInput(format!(
                    "unit {i} never degrades (all increments zero)"
                )));
            }
        }
        Ok(Self {
            units,
            period,
            threshold,
            pooled,
        })
    }

    pub fn with_threshold(&self, threshold: f64) -> Result<Self> {
        Self::new(self.units.clone(), self.period, threshold, self.pooled)
    }

    pub fn with_pooled(&self, pooled: bool) -> Self {
        Self {
            pooled,
            ..self.clone()
        }
    }

    pub fn units(&self) -> &[Vec<f64>] {
        &self.units
    }

    pub fn period(&self) -> f64 {
        self.period
    }

    pub fn threshold(&self) -> f64 {
        self.threshold
    }

    pub fn pooled(&self) -> bool {
        self.pooled
    }

    pub fn all_increments(&self) -> Vec<f64> {
        self.units.iter().flatten().copied().collect()
    }

    pub fn max_increment(&self) -> f64 {
        self.units.iter().flatten().copied().fold(0.0, f64::max)
    }

    /// Increment groups that each define one resampling distribution, with
    /// their mixture weights.
    fn groups(&self) -> Vec<(Vec<f64>, f64)> {
        if self.pooled {
            vec![(self.all_increments(), 1.0)]
        } else {
            let w = 1.0 / self.units.len() as f64;
            self.units.iter().map(|u| (u.clone(), w)).collect()
        }
    }
}

/// Grid used for the degradation sum at a given time.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum DegradationGrid {
    /// Zero-anchored grid with a fixed step and length.
    Fixed { step: f64, count: usize },
    /// `count` points over `[0, k * max increment]`, with `k` steps of
    /// headroom for upward rounding.
    Span { count: usize },
    /// Step equal to the recorded resolution of the increments; length the
    /// smallest power of two covering `k * max increment`, at most `cap`.
    Auto { cap: usize },
}

impl DegradationGrid {
    fn resolve(&self, k: u32, max_inc: f64, resolution: f64) -> Result<SupportGrid> {
        let span = k as f64 * max_inc;
        match *self {
            DegradationGrid::Fixed { step, count } => SupportGrid::with_step(0.0, step, count),
            DegradationGrid::Span { count } => {
                let room = count as i64 - 1 - k as i64;
                if room < 1 {
                    return Err(Error::InvalidGrid(format!(
                        "{count} points cannot resolve {k} inspection periods"
                    )));
                }
                SupportGrid::with_step(0.0, span / room as f64, count)
            }
            DegradationGrid::Auto { cap } => {
                let needed = (span / resolution - SNAP_FRACTION).ceil() as usize + 1 + k as usize;
                let count = needed.next_power_of_two().max(2);
                if count > cap {
                    return Err(Error::TooLarge(format!(
                        "degradation grid needs {count} points (cap {cap})"
                    )));
                }
                SupportGrid::with_step(0.0, resolution, count)
            }
        }
    }
}

/// `(k, a)` with `(k-1) d < t <= k d` and `a = t/d - (k-1)`.
pub fn inspection_interval(t: f64, period: f64) -> Result<(u32, f64)> {
    if !(t.is_finite() && t > 0.0) {
        return Err(Error::InvalidInput(format!("time {t} must be positive")));
    }
    let r = t / period;
    let nearest = r.round();
    let k = if nearest >= 1.0 && (r - nearest).abs() <= 1e-12 * nearest {
        nearest
    } else {
        r.ceil()
    };
    if k > u32::MAX as f64 {
        return Err(Error::TooLarge(format!("{k} inspection periods")));
    }
    Ok((k as u32, (r - (k - 1.0)).clamp(0.0, 1.0)))
}

struct GroupSpectra {
    grid: SupportGrid,
    pmfs: Vec<GriddedPmf>,
    spectra: Vec<SpectralSeq>,
}

/// Failure-time CDF evaluator for one model, grid policy and rounding leg.
///
/// Spectra of the full-period increment distributions depend only on the
/// grid and are cached between evaluations.
pub struct FptCurve<'a> {
    model: &'a DegradationModel,
    grid: DegradationGrid,
    mode: RoundingMode,
    resolution: f64,
    groups: Vec<(Vec<f64>, f64)>,
    cache: Mutex<Option<std::sync::Arc<GroupSpectra>>>,
}

impl<'a> FptCurve<'a> {
    pub fn new(model: &'a DegradationModel, grid: DegradationGrid, mode: RoundingMode) -> Self {
        let incs = model.all_increments();
        Self {
            model,
            grid,
            mode,
            resolution: 10f64.powi(-(decimal_places(&incs) as i32)),
            groups: model.groups(),
            cache: Mutex::new(None),
        }
    }

    pub fn mode(&self) -> RoundingMode {
        self.mode
    }

    fn spectra(&self, grid: SupportGrid) -> Result<std::sync::Arc<GroupSpectra>> {
        let mut cache = self.cache.lock().expect("cache lock");
        if let Some(c) = cache.as_ref() {
            if c.grid == grid {
                return Ok(c.clone());
            }
        }
        let pmfs = self
            .groups
            .iter()
            .map(|(incs, _)| GriddedPmf::empirical(incs, grid, self.mode))
            .collect::<Result<Vec<_>>>()?;
        let spectra = pmfs.iter().map(dft::forward).collect();
        let entry = std::sync::Arc::new(GroupSpectra {
            grid,
            pmfs,
            spectra,
        });
        *cache = Some(entry.clone());
        Ok(entry)
    }

    /// `P(Z <= t)` for this leg.
    pub fn cdf(&self, t: f64) -> Result<f64> {
        let (k, a) = inspection_interval(t, self.model.period)?;
        if self.mode == RoundingMode::Exact && (a - 1.0).abs() > 1e-12 {
            return Err(Error::InvalidInput(format!(
                "exact placement needs t on an inspection boundary (fraction {a})"
            )));
        }
        let grid = self
            .grid
            .resolve(k, self.model.max_increment(), self.resolution)?;
        let cached = self.spectra(grid)?;
        let threshold = self.model.threshold;
        let limit = threshold - grid.step() * SNAP_FRACTION;

        let probs = self
            .groups
            .par_iter()
            .enumerate()
            .map(|(g, (incs, _))| {
                let scaled: Vec<f64> = incs.iter().map(|x| a * x).collect();
                let partial = GriddedPmf::empirical(&scaled, grid, self.mode)?;
                dft::check_fits([(&cached.pmfs[g], k - 1), (&partial, 1)])?;
                let spectrum = dft::forward(&partial).mul(&cached.spectra[g].pow(k - 1)?)?;
                let sum = dft::inverse(&spectrum)?;
                let below: f64 = sum
                    .mass()
                    .iter()
                    .enumerate()
                    .take_while(|(j, _)| grid.value_at(*j) < limit)
                    .map(|(_, m)| m)
                    .sum();
                Ok((1.0 - below).clamp(0.0, 1.0))
            })
            .collect::<Result<Vec<f64>>>()?;
        Ok(probs
            .iter()
            .zip(&self.groups)
            .map(|(p, (_, w))| p * w)
            .sum::<f64>()
            .clamp(0.0, 1.0))
    }
}

/// Failure-time CDF with all increments pooled into one distribution.
pub fn degradation_fpt_cdf(
    model: &DegradationModel,
    t: f64,
    grid: DegradationGrid,
    mode: RoundingMode,
) -> Result<f64> {
    let pooled = model.with_pooled(true);
    FptCurve::new(&pooled, grid, mode).cdf(t)
}

/// Equal-weight mixture of per-unit failure-time CDFs.
pub fn mixture_fpt_cdf(
    model: &DegradationModel,
    t: f64,
    grid: DegradationGrid,
    mode: RoundingMode,
) -> Result<f64> {
    let per_unit = model.with_pooled(false);
    FptCurve::new(&per_unit, grid, mode).cdf(t)
}

fn bisect(curve: &FptCurve<'_>, p: f64, lo: f64, hi: f64, tol: f64) -> Result<f64> {
    let (cdf_lo, cdf_hi) = (curve.cdf(lo)?, curve.cdf(hi)?);
    if !(cdf_lo < p && cdf_hi >= p) {
        return Err(Error::Bracket {
            lo,
            hi,
            p,
            cdf_lo,
            cdf_hi,
        });
    }
    let (mut lo, mut hi) = (lo, hi);
    for _ in 0..MAX_BISECTION_ITERS {
        if hi - lo <= tol {
            return Ok(0.5 * (lo + hi));
        }
        let mid = 0.5 * (lo + hi);
        if curve.cdf(mid)? >= p {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    Err(Error::NoConvergence(MAX_BISECTION_ITERS))
}

/// Time at which one leg's failure-time CDF reaches `p`.
pub fn fpt_quantile_leg(
    model: &DegradationModel,
    p: f64,
    grid: DegradationGrid,
    mode: RoundingMode,
    bracket: Option<(f64, f64)>,
    tol: f64,
) -> Result<f64> {
    if !(p > 0.0 && p < 1.0) {
        return Err(Error::InvalidProbability(p));
    }
    if tol.is_nan() || tol <= 0.0 {
        return Err(Error::InvalidInput(format!(
            "tolerance {tol} must be positive"
        )));
    }
    let curve = FptCurve::new(model, grid, mode);
    let (lo, hi) = match bracket {
        Some(b) => b,
        None => auto_bracket(&curve, p)?,
    };
    bisect(&curve, p, lo, hi, tol)
}

fn auto_bracket(curve: &FptCurve<'_>, p: f64) -> Result<(f64, f64)> {
    let d = curve.model.period;
    let mut hi = d;
    for _ in 0..60 {
        if curve.cdf(hi)? >= p {
            return Ok((d * 1e-9, hi));
        }
        hi *= 2.0;
    }
    Err(Error::Bracket {
        lo: d * 1e-9,
        hi,
        p,
        cdf_lo: 0.0,
        cdf_hi: curve.cdf(hi)?,
    })
}

/// Bounded failure-time quantile.
///
/// Rounding increments up makes units fail sooner, so the round-up leg gives
/// `low` and the round-down leg `high`.
pub fn fpt_quantile(
    model: &DegradationModel,
    p: f64,
    grid: DegradationGrid,
    bracket: Option<(f64, f64)>,
    tol: f64,
) -> Result<BoundedQuantile> {
    let bracket = match bracket {
        Some(b) => Some(b),
        None => Some(auto_bracket(
            &FptCurve::new(model, grid, RoundingMode::Down),
            p,
        )?),
    };
    let (low, high) = rayon::join(
        || fpt_quantile_leg(model, p, grid, RoundingMode::Up, bracket, tol),
        || fpt_quantile_leg(model, p, grid, RoundingMode::Down, bracket, tol),
    );
    let (low, high) = (low?, high?);
    Ok(BoundedQuantile::new(low.min(high), high.max(low)))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn constant(c: f64, units: usize, per: usize) -> DegradationModel {
        DegradationModel::new(vec![vec![c; per]; units], 250.0, 3.0, true).unwrap()
    }

    #[test]
    fn interval_arithmetic() {
        assert_eq!(inspection_interval(750.0, 250.0).unwrap(), (3, 1.0));
        let (k, a) = inspection_interval(600.0, 250.0).unwrap();
        assert_eq!(k, 3);
        assert!((a - 0.4).abs() < 1e-12);
        let (k, a) = inspection_interval(1.0, 250.0).unwrap();
        assert_eq!(k, 1);
        assert!((a - 0.004).abs() < 1e-15);
        assert!(inspection_interval(0.0, 250.0).is_err());
        assert!(inspection_interval(-5.0, 250.0).is_err());
    }

    #[test]
    fn model_validation() {
        assert!(DegradationModel::new(vec![], 250.0, 1.0, true).is_err());
        assert!(DegradationModel::new(vec![vec![0.0, 0.0]], 250.0, 1.0, true).is_err());
        assert!(DegradationModel::new(vec![vec![0.1, -0.1]], 250.0, 1.0, true).is_err());
        assert!(DegradationModel::new(vec![vec![0.1]], 0.0, 1.0, true).is_err());
        assert!(DegradationModel::new(vec![vec![0.1]], 250.0, -1.0, true).is_err());
    }

    #[test]
    fn deterministic_degradation_jumps_at_750() {
        let m = constant(1.0, 1, 4);
        let grid = DegradationGrid::Fixed {
            step: 1e-4,
            count: 1 << 16,
        };
        let at = |t: f64, mode| degradation_fpt_cdf(&m, t, grid, mode).unwrap();
        for mode in [RoundingMode::Down, RoundingMode::Up] {
            assert!((at(750.0, mode) - 1.0).abs() < 1e-12);
            assert!(at(700.0, mode).abs() < 1e-12);
        }
        assert!(at(749.99, RoundingMode::Down).abs() < 1e-12);
        assert!((at(750.0, RoundingMode::Exact) - 1.0).abs() < 1e-12);
        assert!(degradation_fpt_cdf(&m, 749.0, grid, RoundingMode::Exact).is_err());
    }

    #[test]
    fn boundary_time_is_plain_convolution_tail() {
        let m = DegradationModel::new(vec![vec![0.1, 0.3, 0.2, 0.5]], 10.0, 1.0, true).unwrap();
        let grid = DegradationGrid::Fixed {
            step: 0.1,
            count: 64,
        };
        // P(Y1 + Y2 + Y3 >= 1) by enumeration of 4^3 outcomes.
        let x = [1, 3, 2, 5];
        let mut hits = 0;
        for i in x {
            for j in x {
                for l in x {
                    if i + j + l >= 10 {
                        hits += 1;
                    }
                }
            }
        }
        let expect = hits as f64 / 64.0;
        let got = degradation_fpt_cdf(&m, 30.0, grid, RoundingMode::Exact).unwrap();
        assert!((got - expect).abs() < 1e-12);
    }

    #[test]
    fn quantile_of_deterministic_model() {
        let m = constant(1.0, 2, 3);
        let grid = DegradationGrid::Fixed {
            step: 1e-4,
            count: 1 << 16,
        };
        let q = fpt_quantile(&m, 0.9, grid, Some((250.0, 1000.0)), 1e-3).unwrap();
        assert!((q.high - 750.0).abs() <= 1e-3);
        assert!(q.low <= q.high && q.low >= 750.0 - 250.0 * 1e-4 - 1e-3);
        assert!((q.mid - 750.0).abs() <= q.half_width() + 1e-3);
        let auto = fpt_quantile(&m, 0.9, grid, None, 1e-3).unwrap();
        assert!((auto.high - 750.0).abs() <= 1e-3);
    }

    #[test]
    fn bracket_must_straddle() {
        let m = constant(1.0, 1, 3);
        let grid = DegradationGrid::Span { count: 1024 };
        assert!(matches!(
            fpt_quantile_leg(
                &m,
                0.9,
                grid,
                RoundingMode::Down,
                Some((100.0, 400.0)),
                1e-3
            ),
            Err(Error::Bracket { .. })
        ));
    }

    #[test]
    fn identical_units_mixture_equals_pooled() {
        let u = vec![0.012, 0.034, 0.021, 0.0, 0.05];
        let m = DegradationModel::new(vec![u.clone(), u.clone(), u], 250.0, 0.3, false).unwrap();
        let grid = DegradationGrid::Auto {
            cap: DEFAULT_GRID_CAP,
        };
        for t in [1000.0, 2345.6, 4000.0] {
            for mode in [RoundingMode::Down, RoundingMode::Up] {
                let a = mixture_fpt_cdf(&m, t, grid, mode).unwrap();
                let b = degradation_fpt_cdf(&m, t, grid, mode).unwrap();
                assert!((a - b).abs() < 1e-12, "t={t}: {a} vs {b}");
            }
        }
    }

    #[test]
    fn auto_grid_respects_cap() {
        let m = DegradationModel::new(vec![vec![0.00001, 1.0]], 1.0, 1000.0, true).unwrap();
        let grid = DegradationGrid::Auto { cap: 1 << 10 };
        assert!(matches!(
            degradation_fpt_cdf(&m, 50.0, grid, RoundingMode::Down),
            Err(Error::TooLarge(_))
        ));
    }

    #[test]
    fn fixed_grid_too_short_wraps() {
        let m = DegradationModel::new(vec![vec![0.5, 1.0]], 1.0, 100.0, true).unwrap();
        let grid = DegradationGrid::Fixed {
            step: 0.5,
            count: 16,
        };
        assert!(matches!(
            degradation_fpt_cdf(&m, 20.0, grid, RoundingMode::Down),
            Err(Error::WrapAround { .. })
        ));
    }
}
