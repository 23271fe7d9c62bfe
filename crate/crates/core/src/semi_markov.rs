//! First passage from state 1 to the absorbing state 3 of a three-state
//! semi-Markov process with transitions 1->2, 1->3, 2->1 and 2->3.
//!
//! Branch probabilities are folded into the sojourn pmfs before
//! transforming, so with `F_ij` the weighted spectra the first-passage
//! spectrum is `F13 + F12 (F23 + F13 F21) / (1 - F12 F21)`.

use crate::bounds::{BoundedCdf, CdfVector};
use crate::dft::{self, SpectralSeq};
use crate::error::{Error, Result};
use crate::grid::{GriddedPmf, RoundingMode, SupportGrid};

/// Default bound on probability mass allowed beyond the horizon.
pub const DEFAULT_TAIL_TOLERANCE: f64 = 1e-4;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TransitionRecord {
    pub from: u8,
    pub to: u8,
    pub sojourn: f64,
}

impl TransitionRecord {
    pub fn new(from: u8, to: u8, sojourn: f64) -> Result<Self> {
        match (from, to) {
            (1, 2) | (1, 3) | (2, 1) | (2, 3) => {}
            _ => {
                return Err(Error::InvalidInput(format!(
                    "unsupported transition {from} -> {to}"
                )))
            }
        }
        if !(sojourn.is_finite() && sojourn > 0.0) {
            return Err(Error::InvalidInput(format!(
                "sojourn time {sojourn} must be positive"
            )));
        }
        Ok(Self { from, to, sojourn })
    }
}

/// Sojourn samples per transition with the empirical branch probabilities.
#[derive(Debug, Clone, PartialEq)]
pub struct SemiMarkovData {
    pub times_12: Vec<f64>,
    pub times_13: Vec<f64>,
    pub times_21: Vec<f64>,
    pub times_23: Vec<f64>,
    /// Probability of 1 -> 3 given a departure from state 1.
    pub p1: f64,
    /// Probability of 2 -> 1 given a departure from state 2.
    pub p2: f64,
}

impl SemiMarkovData {
    pub fn from_times(
        times_12: Vec<f64>,
        times_13: Vec<f64>,
        times_21: Vec<f64>,
        times_23: Vec<f64>,
    ) -> Result<Self> {
        let exits_1 = times_12.len() + times_13.len();
        let exits_2 = times_21.len() + times_23.len();
        if exits_1 == 0 {
            return Err(Error::InvalidInput("no departures from state 1".into()));
        }
        if exits_2 == 0 {
            return Err(Error::InvalidInput("no departures from state 2".into()));
        }
        let p1 = times_13.len() as f64 / exits_1 as f64;
        let p2 = times_21.len() as f64 / exits_2 as f64;
        Ok(Self {
            times_12,
            times_13,
            times_21,
            times_23,
            p1,
            p2,
        })
    }

    pub fn max_sojourn(&self) -> f64 {
        [
            &self.times_12,
            &self.times_13,
            &self.times_21,
            &self.times_23,
        ]
        .iter()
        .flat_map(|v| v.iter())
        .copied()
        .fold(0.0, f64::max)
    }
}

/// Partitions records by transition and estimates branch probabilities as
/// sample proportions.
pub fn extract_transitions(records: &[TransitionRecord]) -> Result<SemiMarkovData> {
    let (mut t12, mut t13, mut t21, mut t23) = (vec![], vec![], vec![], vec![]);
    for r in records {
        let r = TransitionRecord::new(r.from, r.to, r.sojourn)?;
        match (r.from, r.to) {
            (1, 2) => t12.push(r.sojourn),
            (1, 3) => t13.push(r.sojourn),
            (2, 1) => t21.push(r.sojourn),
            _ => t23.push(r.sojourn),
        }
    }
    SemiMarkovData::from_times(t12, t13, t21, t23)
}

/// Weighted sojourn pmf embedded in a zero-padded grid.
fn weighted_pmf(
    times: &[f64],
    weight: f64,
    grid: SupportGrid,
    padded: SupportGrid,
    mode: RoundingMode,
) -> Result<GriddedPmf> {
    if times.is_empty() || weight == 0.0 {
        return GriddedPmf::new(padded, vec![0.0; padded.count()]);
    }
    let mut mass = GriddedPmf::empirical(times, grid, mode)?
        .scaled(weight)?
        .into_mass();
    mass.resize(padded.count(), 0.0);
    GriddedPmf::new(padded, mass)
}

/// The four probability-weighted sojourn spectra `(F12, F13, F21, F23)`.
pub fn transition_spectra(
    data: &SemiMarkovData,
    grid: SupportGrid,
    padded: SupportGrid,
    mode: RoundingMode,
) -> Result<[SpectralSeq; 4]> {
    let f = |times: &[f64], w: f64| -> Result<SpectralSeq> {
        Ok(dft::forward(&weighted_pmf(times, w, grid, padded, mode)?))
    };
    Ok([
        f(&data.times_12, 1.0 - data.p1)?,
        f(&data.times_13, data.p1)?,
        f(&data.times_21, data.p2)?,
        f(&data.times_23, 1.0 - data.p2)?,
    ])
}

/// First-passage spectrum from the weighted transition spectra.
pub fn first_passage_spectrum(spectra: &[SpectralSeq; 4]) -> Result<SpectralSeq> {
    let [f12, f13, f21, f23] = spectra;
    let one = SpectralSeq::ones(*f12.grid());
    let loop_back = f12.mul(f21)?;
    let denom = one.sub(&loop_back)?;
    let via_two = f12.mul(&f23.add(&f13.mul(f21)?)?)?;
    f13.add(&via_two.div(&denom)?)
}

/// First-passage CDF on `grid` using the default tail tolerance.
pub fn first_passage_cdf(
    data: &SemiMarkovData,
    grid: &SupportGrid,
    mode: RoundingMode,
) -> Result<CdfVector> {
    first_passage_cdf_with(data, grid, mode, DEFAULT_TAIL_TOLERANCE)
}

/// First-passage CDF on `grid = [0, horizon]`.
///
/// The passage time has unbounded support, so the transform runs on a grid
/// of twice the length: mass past the horizon lands in the padding instead
/// of wrapping onto early times, and is checked against `tail_tolerance`.
pub fn first_passage_cdf_with(
    data: &SemiMarkovData,
    grid: &SupportGrid,
    mode: RoundingMode,
    tail_tolerance: f64,
) -> Result<CdfVector> {
    if grid.origin() != 0.0 {
        return Err(Error::UnanchoredGrid(grid.origin()));
    }
    let n = grid.count();
    let padded = grid.resized(2 * n)?;
    let spectra = transition_spectra(data, *grid, padded, mode)?;
    let pmf = dft::inverse(&first_passage_spectrum(&spectra)?)?;
    let mass = &pmf.mass()[..n];
    let mut acc = 0.0;
    let cum: Vec<f64> = mass
        .iter()
        .map(|m| {
            acc += m;
            acc.min(1.0)
        })
        .collect();
    let inside = *cum.last().expect("non-empty grid");
    if inside < 1.0 - tail_tolerance {
        return Err(Error::Truncation {
            mass: inside,
            need: 1.0 - tail_tolerance,
        });
    }
    CdfVector::new(*grid, cum)
}

/// Round-down (upper CDF) and round-up (lower CDF) legs. The spectral
/// division means the bracket is not guaranteed.
pub fn first_passage_bounded(data: &SemiMarkovData, grid: &SupportGrid) -> Result<BoundedCdf> {
    first_passage_bounded_with(data, grid, DEFAULT_TAIL_TOLERANCE)
}

pub fn first_passage_bounded_with(
    data: &SemiMarkovData,
    grid: &SupportGrid,
    tail_tolerance: f64,
) -> Result<BoundedCdf> {
    let (upper, lower) = rayon::join(
        || first_passage_cdf_with(data, grid, RoundingMode::Down, tail_tolerance),
        || first_passage_cdf_with(data, grid, RoundingMode::Up, tail_tolerance),
    );
    BoundedCdf::new(lower?, upper?, false)
}
