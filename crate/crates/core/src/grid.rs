//! Equally spaced support grids and placement of point masses onto them.

use crate::error::{Error, Result};

/// Fraction of a grid step within which a value is treated as lying on a
/// grid point under every rounding mode.
pub const SNAP_FRACTION: f64 = 1e-6;

/// Tolerance on total mass for sub-probability vectors.
pub const MASS_TOLERANCE: f64 = 1e-9;

const GRID_REL_TOL: f64 = 1e-12;

/// An equally spaced grid `origin + j * step`, `j = 0..count`.
///
/// Stored as `(origin, step, count)`; point values are computed on demand so
/// long grids carry no accumulated summation drift.
#[derive(Debug, Clone, Copy)]
pub struct SupportGrid {
    origin: f64,
    step: f64,
    count: usize,
}

impl PartialEq for SupportGrid {
    fn eq(&self, other: &Self) -> bool {
        let scale = self.step.abs().max(other.step.abs());
        self.count == other.count
            && (self.step - other.step).abs() <= GRID_REL_TOL * scale
            && (self.origin - other.origin).abs()
                <= GRID_REL_TOL * self.origin.abs().max(other.origin.abs()).max(scale)
    }
}

impl SupportGrid {
    /// Grid of `count` points running from `origin` to `endpoint` inclusive.
    pub fn new(origin: f64, endpoint: f64, count: usize) -> Result<Self> {
        if !origin.is_finite() || !endpoint.is_finite() {
            return Err(Error::InvalidGrid("non-finite bounds".into()));
        }
        if count < 2 {
            return Err(Error::InvalidGrid(format!("count {count} < 2")));
        }
        if endpoint <= origin {
            return Err(Error::InvalidGrid(format!(
                "endpoint {endpoint} must exceed origin {origin}"
            )));
        }
        Self::with_step(origin, (endpoint - origin) / (count - 1) as f64, count)
    }

    pub fn with_step(origin: f64, step: f64, count: usize) -> Result<Self> {
        if !origin.is_finite() || !step.is_finite() {
            return Err(Error::InvalidGrid("non-finite origin or step".into()));
        }
        if step <= 0.0 {
            return Err(Error::InvalidGrid(format!("step {step} must be positive")));
        }
        if count < 2 {
            return Err(Error::InvalidGrid(format!("count {count} < 2")));
        }
        Ok(Self {
            origin,
            step,
            count,
        })
    }

    /// Smallest zero-anchored grid with the given step that reaches `span`.
    pub fn covering(span: f64, step: f64) -> Result<Self> {
        if !span.is_finite() || span < 0.0 {
            return Err(Error::InvalidGrid(format!("bad span {span}")));
        }
        let intervals = (span / step - SNAP_FRACTION).ceil().max(1.0) as usize;
        Self::with_step(0.0, step, intervals + 1)
    }

    pub fn origin(&self) -> f64 {
        self.origin
    }

    pub fn step(&self) -> f64 {
        self.step
    }

    pub fn count(&self) -> usize {
        self.count
    }

    pub fn endpoint(&self) -> f64 {
        self.value_at(self.count - 1)
    }

    #[inline]
    pub fn value_at(&self, j: usize) -> f64 {
        self.origin + j as f64 * self.step
    }

    /// Same spacing and length, relocated by `offset`.
    pub fn shifted(&self, offset: f64) -> Self {
        Self {
            origin: self.origin + offset,
            ..*self
        }
    }

    /// Same origin and step with a different number of points.
    pub fn resized(&self, count: usize) -> Result<Self> {
        Self::with_step(self.origin, self.step, count)
    }

    pub fn values(&self) -> impl Iterator<Item = f64> + '_ {
        (0..self.count).map(|j| self.value_at(j))
    }

    /// Grid index for `value` under the given rounding mode.
    ///
    /// Values within `SNAP_FRACTION * step` of a grid point snap to it first.
    pub fn index_of(&self, value: f64, mode: RoundingMode) -> Result<usize> {
        if !value.is_finite() {
            return Err(Error::InvalidInput(format!("non-finite value {value}")));
        }
        let pos = (value - self.origin) / self.step;
        let last = (self.count - 1) as f64;
        if pos < -SNAP_FRACTION || pos > last + SNAP_FRACTION {
            return Err(Error::OutOfSpan {
                value,
                lo: self.origin,
                hi: self.endpoint(),
            });
        }
        let nearest = pos.round();
        let idx = if (pos - nearest).abs() <= SNAP_FRACTION {
            nearest
        } else {
            match mode {
                RoundingMode::Exact => {
                    return Err(Error::OffGrid {
                        value,
                        nearest: self.origin + nearest * self.step,
                    })
                }
                RoundingMode::Down => pos.floor(),
                RoundingMode::Up => pos.ceil(),
            }
        };
        if idx < 0.0 || idx > last {
            return Err(Error::OutOfSpan {
                value,
                lo: self.origin,
                hi: self.endpoint(),
            });
        }
        Ok(idx as usize)
    }

    /// Index of the last grid point at or below `value` (with snapping), or
    /// `None` if the value precedes the grid.
    pub fn floor_index(&self, value: f64) -> Option<usize> {
        let pos = (value - self.origin) / self.step + SNAP_FRACTION;
        if pos < 0.0 {
            None
        } else {
            Some((pos.floor() as usize).min(self.count - 1))
        }
    }
}

/// How an off-grid value is mapped to a grid point.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum RoundingMode {
    /// Reject values that are not on the grid.
    Exact,
    /// Greatest grid point not above the value.
    Down,
    /// Least grid point not below the value.
    Up,
}

/// Probability masses attached to the points of a grid.
///
/// Sub-probability vectors (total below one) are legal; they appear when
/// branch probabilities are folded into a pmf before transforming.
#[derive(Debug, Clone)]
pub struct GriddedPmf {
    grid: SupportGrid,
    mass: Vec<f64>,
}

impl GriddedPmf {
    pub fn new(grid: SupportGrid, mass: Vec<f64>) -> Result<Self> {
        if mass.len() != grid.count() {
            return Err(Error::InvalidMass(format!(
                "{} masses for a grid of {} points",
                mass.len(),
                grid.count()
            )));
        }
        if let Some((j, m)) = mass
            .iter()
            .enumerate()
            .find(|(_, m)| !m.is_finite() || **m < 0.0)
        {
            return Err(Error::InvalidMass(format!("mass {m} at index {j}")));
        }
        let total: f64 = mass.iter().sum();
        if total > 1.0 + MASS_TOLERANCE {
            return Err(Error::InvalidMass(format!("total mass {total} exceeds 1")));
        }
        Ok(Self { grid, mass })
    }

    /// Unit mass at one grid index.
    pub fn delta(grid: SupportGrid, index: usize) -> Result<Self> {
        if index >= grid.count() {
            return Err(Error::InvalidMass(format!("index {index} out of range")));
        }
        let mut mass = vec![0.0; grid.count()];
        mass[index] = 1.0;
        Ok(Self { grid, mass })
    }

    /// Accumulates `weights[i]` at the grid point chosen for `values[i]`.
    pub fn place(
        values: &[f64],
        weights: &[f64],
        grid: SupportGrid,
        mode: RoundingMode,
    ) -> Result<Self> {
        if values.len() != weights.len() {
            return Err(Error::InvalidInput(format!(
                "{} values but {} weights",
                values.len(),
                weights.len()
            )));
        }
        let mut mass = vec![0.0; grid.count()];
        for (&v, &w) in values.iter().zip(weights) {
            if !w.is_finite() || w < 0.0 {
                return Err(Error::InvalidMass(format!("weight {w} for value {v}")));
            }
            mass[grid.index_of(v, mode)?] += w;
        }
        Self::new(grid, mass)
    }

    /// Places each value with equal weight `1 / values.len()`.
    pub fn empirical(values: &[f64], grid: SupportGrid, mode: RoundingMode) -> Result<Self> {
        if values.is_empty() {
            return Err(Error::InvalidInput("empty sample".into()));
        }
        let w = 1.0 / values.len() as f64;
        Self::place(values, &vec![w; values.len()], grid, mode)
    }

    pub fn grid(&self) -> &SupportGrid {
        &self.grid
    }

    pub fn mass(&self) -> &[f64] {
        &self.mass
    }

    pub fn into_mass(self) -> Vec<f64> {
        self.mass
    }

    pub fn total(&self) -> f64 {
        self.mass.iter().sum()
    }

    /// Multiplies every mass by `factor` in `[0, 1]`.
    pub fn scaled(&self, factor: f64) -> Result<Self> {
        if !(0.0..=1.0).contains(&factor) {
            return Err(Error::InvalidInput(format!(
                "mass scale {factor} outside [0, 1]"
            )));
        }
        Ok(Self {
            grid: self.grid,
            mass: self.mass.iter().map(|m| m * factor).collect(),
        })
    }

    /// Same masses read against a relocated grid.
    pub fn shifted(self, offset: f64) -> Self {
        Self {
            grid: self.grid.shifted(offset),
            mass: self.mass,
        }
    }

    /// Highest index carrying nonzero mass.
    pub fn highest_occupied(&self) -> Option<usize> {
        self.mass.iter().rposition(|&m| m > 0.0)
    }

    /// Nonzero `(value, mass)` pairs in grid order.
    pub fn atoms(&self) -> impl Iterator<Item = (f64, f64)> + '_ {
        self.mass
            .iter()
            .enumerate()
            .filter(|(_, &m)| m > 0.0)
            .map(|(j, &m)| (self.grid.value_at(j), m))
    }

    /// Mass-weighted mean of the grid values, normalized by total mass.
    pub fn mean(&self) -> f64 {
        let total = self.total();
        self.atoms().map(|(v, m)| v * m).sum::<f64>() / total
    }
}
