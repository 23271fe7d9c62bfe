//! Gridded CDFs, lower/upper sandwiches, and quantiles read off them.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::grid::{GriddedPmf, SupportGrid, MASS_TOLERANCE};

/// Slack allowed when checking `lower <= upper`.
pub const SANDWICH_TOLERANCE: f64 = 1e-9;

const QUANTILE_SLACK: f64 = 1e-12;

/// Cumulative probabilities at every grid point.
#[derive(Debug, Clone)]
pub struct CdfVector {
    grid: SupportGrid,
    cum: Vec<f64>,
}

impl CdfVector {
    pub fn from_pmf(pmf: &GriddedPmf) -> Self {
        let mut acc = 0.0;
        let cum = pmf
            .mass()
            .iter()
            .map(|m| {
                acc += m;
                acc
            })
            .collect();
        Self {
            grid: *pmf.grid(),
            cum,
        }
    }

    pub fn new(grid: SupportGrid, cum: Vec<f64>) -> Result<Self> {
        if cum.len() != grid.count() {
            return Err(Error::InvalidMass(format!(
                "{} cumulative values for {} grid points",
                cum.len(),
                grid.count()
            )));
        }
        let mut prev = 0.0;
        for (j, &c) in cum.iter().enumerate() {
            if c.is_nan()
                || c < prev - MASS_TOLERANCE
                || !(-MASS_TOLERANCE..=1.0 + MASS_TOLERANCE).contains(&c)
            {
                return Err(Error::InvalidMass(format!("cdf value {c} at index {j}")));
            }
            prev = c;
        }
        Ok(Self { grid, cum })
    }

    pub fn grid(&self) -> &SupportGrid {
        &self.grid
    }

    pub fn cum(&self) -> &[f64] {
        &self.cum
    }

    pub fn total(&self) -> f64 {
        *self.cum.last().expect("grids have at least two points")
    }

    /// `P(X <= value)`, reading grid points within snapping distance of
    /// `value` as at or below it.
    pub fn at(&self, value: f64) -> f64 {
        match self.grid.floor_index(value) {
            Some(j) => self.cum[j],
            None => 0.0,
        }
    }

    /// Index form of [`quantile`](Self::quantile).
    pub fn quantile_index(&self, p: f64) -> Result<usize> {
        if !(p > 0.0 && p < 1.0) {
            return Err(Error::InvalidProbability(p));
        }
        let target = p - QUANTILE_SLACK;
        let j = self.cum.partition_point(|&c| c < target);
        if j == self.cum.len() {
            return Err(Error::InsufficientMass {
                p,
                total: self.total(),
            });
        }
        Ok(j)
    }

    /// Left-continuous generalized inverse: the smallest grid value whose
    /// cumulative probability reaches `p`.
    pub fn quantile(&self, p: f64) -> Result<f64> {
        Ok(self.grid.value_at(self.quantile_index(p)?))
    }
}

/// A lower/upper CDF pair on a shared grid.
///
/// When `guaranteed` holds, the true CDF lies between the two at every grid
/// point; pipelines that divide spectra only approximate the bracket.
#[derive(Debug, Clone)]
pub struct BoundedCdf {
    lower: CdfVector,
    upper: CdfVector,
    guaranteed: bool,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct WidthStats {
    pub mean_width: f64,
    pub max_width: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BoundedQuantile {
    pub low: f64,
    pub high: f64,
    pub mid: f64,
}

impl BoundedQuantile {
    pub fn new(low: f64, high: f64) -> Self {
        Self {
            low,
            high,
            mid: 0.5 * (low + high),
        }
    }

    pub fn point(v: f64) -> Self {
        Self::new(v, v)
    }

    pub fn half_width(&self) -> f64 {
        0.5 * (self.high - self.low)
    }
}

impl BoundedCdf {
    pub fn new(lower: CdfVector, upper: CdfVector, guaranteed: bool) -> Result<Self> {
        if lower.grid != upper.grid {
            return Err(Error::GridMismatch);
        }
        if guaranteed {
            for (index, (l, u)) in lower.cum.iter().zip(&upper.cum).enumerate() {
                if l - u > SANDWICH_TOLERANCE {
                    return Err(Error::OrderingViolation {
                        index,
                        excess: l - u,
                    });
                }
            }
        }
        Ok(Self {
            lower,
            upper,
            guaranteed,
        })
    }

    pub fn lower(&self) -> &CdfVector {
        &self.lower
    }

    pub fn upper(&self) -> &CdfVector {
        &self.upper
    }

    pub fn guaranteed(&self) -> bool {
        self.guaranteed
    }

    pub fn grid(&self) -> &SupportGrid {
        &self.lower.grid
    }

    pub fn width_stats(&self) -> WidthStats {
        let n = self.lower.cum.len() as f64;
        let (sum, max) = self
            .upper
            .cum
            .iter()
            .zip(&self.lower.cum)
            .map(|(u, l)| u - l)
            .fold((0.0, f64::NEG_INFINITY), |(s, m), w| (s + w, m.max(w)));
        WidthStats {
            mean_width: sum / n,
            max_width: max,
        }
    }

    /// Quantile bracket: the upper CDF gives the smaller quantile.
    pub fn quantile(&self, p: f64) -> Result<BoundedQuantile> {
        let low = self.upper.quantile(p)?;
        let high = self.lower.quantile(p)?;
        Ok(BoundedQuantile::new(low.min(high), high.max(low)))
    }

    /// `(lower, upper)` CDF values at `value`.
    pub fn at(&self, value: f64) -> (f64, f64) {
        (self.lower.at(value), self.upper.at(value))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn grid(n: usize) -> SupportGrid {
        SupportGrid::with_step(0.0, 1.0, n).unwrap()
    }

    #[test]
    fn cdf_from_pmf_examples() {
        let c = CdfVector::from_pmf(&GriddedPmf::delta(grid(4), 2).unwrap());
        assert_eq!(c.cum(), &[0.0, 0.0, 1.0, 1.0]);
        let p = GriddedPmf::new(grid(5), vec![0.25, 0.5, 0.25, 0.0, 0.0]).unwrap();
        assert_eq!(CdfVector::from_pmf(&p).cum(), &[0.25, 0.75, 1.0, 1.0, 1.0]);
    }

    #[test]
    fn quantile_examples() {
        let c = CdfVector::new(grid(3), vec![0.0, 0.5, 1.0]).unwrap();
        assert_eq!(c.quantile(0.5).unwrap(), 1.0);
        assert_eq!(c.quantile(0.49).unwrap(), 1.0);
        assert_eq!(c.quantile(0.51).unwrap(), 2.0);
        assert!(matches!(c.quantile(0.0), Err(Error::InvalidProbability(_))));
        assert!(matches!(c.quantile(1.0), Err(Error::InvalidProbability(_))));
        let sub = CdfVector::new(grid(3), vec![0.1, 0.2, 0.3]).unwrap();
        assert!(matches!(
            sub.quantile(0.5),
            Err(Error::InsufficientMass { .. })
        ));
    }

    #[test]
    fn cdf_at_reads_by_value() {
        let g = SupportGrid::with_step(-1.0, 0.5, 5).unwrap();
        let c = CdfVector::new(g, vec![0.1, 0.2, 0.4, 0.7, 1.0]).unwrap();
        assert_eq!(c.at(-1.5), 0.0);
        assert_eq!(c.at(-1.0), 0.1);
        assert_eq!(c.at(-0.01), 0.2);
        assert_eq!(c.at(0.0), 0.4);
        assert_eq!(c.at(0.5 - 1e-12), 0.7);
        assert_eq!(c.at(50.0), 1.0);
    }

    #[test]
    fn bounded_examples() {
        let c = CdfVector::new(grid(3), vec![0.2, 0.6, 1.0]).unwrap();
        let b = BoundedCdf::new(c.clone(), c.clone(), true).unwrap();
        assert_eq!(
            b.width_stats(),
            WidthStats {
                mean_width: 0.0,
                max_width: 0.0
            }
        );
        let q = b.quantile(0.5).unwrap();
        assert_eq!((q.low, q.high, q.mid), (1.0, 1.0, 1.0));

        let hi = CdfVector::new(grid(3), vec![0.4, 0.8, 1.0]).unwrap();
        assert!(matches!(
            BoundedCdf::new(hi.clone(), c.clone(), true),
            Err(Error::OrderingViolation { index: 0, .. })
        ));
        assert!(BoundedCdf::new(hi.clone(), c.clone(), false).is_ok());
        let b = BoundedCdf::new(c, hi, true).unwrap();
        let w = b.width_stats();
        assert!((w.mean_width - 0.4 / 3.0).abs() < 1e-15);
        assert!((w.max_width - 0.2).abs() < 1e-15);
        let q = b.quantile(0.7).unwrap();
        assert_eq!((q.low, q.high), (1.0, 2.0));
        assert!(BoundedCdf::new(
            CdfVector::new(grid(4), vec![0.0, 0.0, 0.0, 1.0]).unwrap(),
            CdfVector::new(grid(3), vec![0.0, 0.0, 1.0]).unwrap(),
            true
        )
        .is_err());
    }

    proptest! {
        #[test]
        fn quantile_cdf_consistency(raw in proptest::collection::vec(0.0f64..1.0, 2..60), p in 0.001f64..0.999) {
            let s: f64 = raw.iter().sum();
            prop_assume!(s > 0.0);
            let mass: Vec<f64> = raw.iter().map(|x| x / s).collect();
            let c = CdfVector::from_pmf(&GriddedPmf::new(grid(mass.len()), mass).unwrap());
            prop_assume!(c.total() >= p);
            let j = c.quantile_index(p).unwrap();
            prop_assert!(c.cum()[j] >= p - 1e-12);
            if j > 0 {
                prop_assert!(c.cum()[j - 1] < p);
            }
        }

        #[test]
        fn bounded_quantile_ordering(raw in proptest::collection::vec(0.0f64..1.0, 2..40), shift in 0usize..3, p in 0.01f64..0.99) {
            let s: f64 = raw.iter().sum();
            prop_assume!(s > 0.0);
            let n = raw.len() + 3;
            let mut up = vec![0.0; n];
            let mut lo = vec![0.0; n];
            for (j, x) in raw.iter().enumerate() {
                up[j] += x / s;
                lo[j + shift] += x / s;
            }
            let upper = CdfVector::from_pmf(&GriddedPmf::new(grid(n), up).unwrap());
            let lower = CdfVector::from_pmf(&GriddedPmf::new(grid(n), lo).unwrap());
            let b = BoundedCdf::new(lower, upper, true).unwrap();
            let q = b.quantile(p).unwrap();
            prop_assert!(q.low <= q.mid && q.mid <= q.high);
        }
    }
}
