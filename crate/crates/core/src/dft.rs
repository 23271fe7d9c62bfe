//! Forward/inverse DFT of mass vectors and the spectral algebra built on it.
//!
//! Products of spectra are circular convolutions of the underlying mass
//! vectors. Callers must size the grid so the linear convolution fits; the
//! helpers here refuse inputs whose occupied support would wrap.

use std::cell::RefCell;
use std::sync::Arc;

use rustfft::num_complex::Complex64;
use rustfft::{Fft, FftPlanner};

use crate::error::{Error, Result};
use crate::grid::{GriddedPmf, SupportGrid};

/// Largest imaginary part or negative real part tolerated when inverting.
pub const RESIDUE_TOLERANCE: f64 = 1e-9;

/// Smallest admissible denominator magnitude for spectral division.
pub const MIN_DENOMINATOR: f64 = 1e-12;

thread_local! {
    static PLANNER: RefCell<FftPlanner<f64>> = RefCell::new(FftPlanner::new());
}

fn plan(len: usize, inverse: bool) -> Arc<dyn Fft<f64>> {
    PLANNER.with(|p| {
        let mut p = p.borrow_mut();
        if inverse {
            p.plan_fft_inverse(len)
        } else {
            p.plan_fft_forward(len)
        }
    })
}

/// DFT image of a (sub-)probability mass vector.
#[derive(Debug, Clone)]
pub struct SpectralSeq {
    grid: SupportGrid,
    coeff: Vec<Complex64>,
}

impl SpectralSeq {
    pub fn from_coeff(grid: SupportGrid, coeff: Vec<Complex64>) -> Result<Self> {
        if coeff.len() != grid.count() {
            return Err(Error::InvalidInput(format!(
                "{} coefficients for a grid of {} points",
                coeff.len(),
                grid.count()
            )));
        }
        Ok(Self { grid, coeff })
    }

    /// Transform of a unit mass at index zero.
    pub fn ones(grid: SupportGrid) -> Self {
        Self {
            grid,
            coeff: vec![Complex64::new(1.0, 0.0); grid.count()],
        }
    }

    pub fn grid(&self) -> &SupportGrid {
        &self.grid
    }

    pub fn coeff(&self) -> &[Complex64] {
        &self.coeff
    }

    fn zip_with(
        &self,
        other: &Self,
        f: impl Fn(Complex64, Complex64) -> Complex64,
    ) -> Result<Self> {
        if self.grid != other.grid {
            return Err(Error::GridMismatch);
        }
        Ok(Self {
            grid: self.grid,
            coeff: self
                .coeff
                .iter()
                .zip(&other.coeff)
                .map(|(&a, &b)| f(a, b))
                .collect(),
        })
    }

    fn anchored(&self) -> Result<()> {
        if self.grid.origin() != 0.0 {
            return Err(Error::UnanchoredGrid(self.grid.origin()));
        }
        Ok(())
    }

    /// Spectrum of the sum of two independent variables.
    pub fn mul(&self, other: &Self) -> Result<Self> {
        self.anchored()?;
        self.zip_with(other, |a, b| a * b)
    }

    /// Spectrum of the `m`-fold sum; `m = 0` yields the delta at the origin.
    pub fn pow(&self, m: u32) -> Result<Self> {
        if m == 0 {
            return Ok(Self::ones(self.grid));
        }
        if m > 1 {
            self.anchored()?;
        }
        Ok(Self {
            grid: self.grid,
            coeff: self.coeff.iter().map(|c| c.powu(m)).collect(),
        })
    }

    /// Spectrum of the mixture (sum of the underlying measures).
    pub fn add(&self, other: &Self) -> Result<Self> {
        self.zip_with(other, |a, b| a + b)
    }

    pub fn sub(&self, other: &Self) -> Result<Self> {
        self.zip_with(other, |a, b| a - b)
    }

    pub fn scale(&self, c: f64) -> Self {
        Self {
            grid: self.grid,
            coeff: self.coeff.iter().map(|&a| a * c).collect(),
        }
    }

    /// Elementwise quotient; every denominator coefficient must have
    /// magnitude at least [`MIN_DENOMINATOR`].
    pub fn div(&self, denom: &Self) -> Result<Self> {
        self.anchored()?;
        if let Some((index, d)) = denom
            .coeff
            .iter()
            .enumerate()
            .find(|(_, d)| d.norm().is_nan() || d.norm() < MIN_DENOMINATOR)
        {
            return Err(Error::SmallDenominator {
                index,
                magnitude: d.norm(),
            });
        }
        self.zip_with(denom, |a, b| a / b)
    }
}

/// DFT of the mass vector, `sum_j mass[j] exp(-2 pi i k j / N)`.
pub fn forward(pmf: &GriddedPmf) -> SpectralSeq {
    let mut buf: Vec<Complex64> = pmf.mass().iter().map(|&m| Complex64::new(m, 0.0)).collect();
    plan(buf.len(), false).process(&mut buf);
    SpectralSeq {
        grid: *pmf.grid(),
        coeff: buf,
    }
}

/// Inverse DFT including the `1/N` normalization.
///
/// Imaginary parts and negative real parts up to [`RESIDUE_TOLERANCE`] are
/// rounding noise and are dropped; anything larger is an error.
pub fn inverse(spec: &SpectralSeq) -> Result<GriddedPmf> {
    let n = spec.coeff.len();
    let mut buf = spec.coeff.clone();
    plan(n, true).process(&mut buf);
    let scale = 1.0 / n as f64;
    let mut mass = Vec::with_capacity(n);
    for (index, c) in buf.iter().enumerate() {
        let re = c.re * scale;
        let im = c.im * scale;
        if im.is_nan() || im.abs() > RESIDUE_TOLERANCE {
            return Err(Error::Residue {
                index,
                residue: im,
                what: "imaginary part",
            });
        }
        if re.is_nan() || re < -RESIDUE_TOLERANCE {
            return Err(Error::Residue {
                index,
                residue: re,
                what: "negative mass",
            });
        }
        mass.push(re.max(0.0));
    }
    GriddedPmf::new(spec.grid, mass)
}

/// Index reached by the linear convolution of the given pmfs; errors if it
/// does not fit on the grid.
pub fn check_fits<'a>(pmfs: impl IntoIterator<Item = (&'a GriddedPmf, u32)>) -> Result<usize> {
    let mut needed = 0usize;
    let mut last = usize::MAX;
    for (p, m) in pmfs {
        last = last.min(p.grid().count() - 1);
        if let Some(h) = p.highest_occupied() {
            needed = needed.saturating_add(h.saturating_mul(m as usize));
        }
    }
    if needed > last {
        return Err(Error::WrapAround { needed, last });
    }
    Ok(needed)
}

/// Distribution of the sum of `m` independent copies of `pmf`.
pub fn self_convolve(pmf: &GriddedPmf, m: u32) -> Result<GriddedPmf> {
    if m == 0 {
        return Err(Error::InvalidInput(
            "self-convolution count must be >= 1".into(),
        ));
    }
    if m == 1 {
        return Ok(pmf.clone());
    }
    check_fits([(pmf, m)])?;
    inverse(&forward(pmf).pow(m)?)
}

/// Distribution of the sum of independent, not necessarily identically
/// distributed, variables sharing one grid.
pub fn convolve_all(pmfs: &[GriddedPmf]) -> Result<GriddedPmf> {
    let first = pmfs
        .first()
        .ok_or_else(|| Error::InvalidInput("nothing to convolve".into()))?;
    if pmfs.iter().any(|p| p.grid() != first.grid()) {
        return Err(Error::GridMismatch);
    }
    if pmfs.len() == 1 {
        return Ok(first.clone());
    }
    check_fits(pmfs.iter().map(|p| (p, 1)))?;
    let mut acc = forward(first);
    for p in &pmfs[1..] {
        acc = acc.mul(&forward(p))?;
    }
    inverse(&acc)
}
