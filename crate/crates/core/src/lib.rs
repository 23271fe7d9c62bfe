//! Bootstrap distributions computed by convolving the empirical measure in
//! the Fourier domain instead of resampling.
//!
//! Statistics that are sums of independent draws (the bootstrap mean, a
//! sign-flip mean, degradation failure times, semi-Markov first passages)
//! become products of DFT spectra. When the data sit on the grid the result
//! is exact; otherwise rounding every atom down and then up yields a CDF
//! sandwich around the true bootstrap distribution.

pub mod bounds;
pub mod cli;
pub mod dft;
pub mod error;
pub mod grid;
pub mod io;
pub mod mc;
pub mod semi_markov;
pub mod statistics;

pub use bounds::{BoundedCdf, BoundedQuantile, CdfVector, WidthStats};
pub use dft::SpectralSeq;
pub use error::{Error, ErrorKind, Result};
pub use grid::{GriddedPmf, RoundingMode, SupportGrid};
pub use statistics::{GridSpec, Sample};
