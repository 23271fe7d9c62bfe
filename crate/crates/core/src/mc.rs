//! Monte Carlo resampling and brute-force enumeration, used to check the
//! convolutional pipelines independently.
//!
//! Every outer replication draws from its own ChaCha stream derived from the
//! configured seed, so results do not depend on the number of worker threads.

use rand::seq::SliceRandom;
use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::semi_markov::SemiMarkovData;
use crate::statistics::{DegradationModel, Sample};

/// Largest sample size accepted by [`enumerate_bootstrap_mean`].
pub const MAX_ENUMERATION_N: usize = 8;

/// Relative slack when deciding whether cumulative degradation meets the
/// threshold.
const TIE_TOLERANCE: f64 = 1e-9;

/// Default cap on `inner_samples * outer_reps`.
pub const DEFAULT_BUDGET: u64 = 1_000_000_000;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct McConfig {
    pub seed: u64,
    pub inner_samples: usize,
    pub outer_reps: usize,
    pub budget: u64,
}

impl McConfig {
    pub fn new(seed: u64, inner_samples: usize, outer_reps: usize) -> Self {
        Self {
            seed,
            inner_samples,
            outer_reps,
            budget: DEFAULT_BUDGET,
        }
    }

    fn validate(&self) -> Result<()> {
        if self.inner_samples == 0 || self.outer_reps == 0 {
            return Err(Error::InvalidInput(
                "Monte Carlo sample and replication counts must be positive".into(),
            ));
        }
        let cost = self.inner_samples as u64 * self.outer_reps as u64;
        if cost > self.budget {
            return Err(Error::TooLarge(format!(
                "{cost} draws exceed the budget of {}",
                self.budget
            )));
        }
        Ok(())
    }

    fn rng(&self, rep: usize) -> ChaCha8Rng {
        let mut rng = ChaCha8Rng::seed_from_u64(self.seed);
        rng.set_stream(rep as u64);
        rng
    }
}

/// Exact finite distribution as sorted `(value, probability)` atoms.
#[derive(Debug, Clone, PartialEq)]
pub struct DiscreteDistribution {
    atoms: Vec<(f64, f64)>,
}

impl DiscreteDistribution {
    pub fn atoms(&self) -> &[(f64, f64)] {
        &self.atoms
    }

    /// `P(X <= x)` with a small relative slack for rounding in `x`.
    pub fn cdf_at(&self, x: f64) -> f64 {
        let lim = x + 1e-9 * (1.0 + x.abs());
        self.atoms
            .iter()
            .take_while(|(v, _)| *v <= lim)
            .map(|(_, p)| p)
            .sum()
    }

    pub fn probability_of(&self, x: f64) -> f64 {
        self.atoms
            .iter()
            .filter(|(v, _)| (v - x).abs() <= 1e-9 * (1.0 + x.abs()))
            .map(|(_, p)| p)
            .sum()
    }
}

/// Bootstrap distribution of the mean by listing all `n^n` equally likely
/// resamples.
pub fn enumerate_bootstrap_mean(sample: &Sample) -> Result<DiscreteDistribution> {
    let x = sample.values();
    let n = x.len();
    if n > MAX_ENUMERATION_N {
        return Err(Error::TooLarge(format!(
            "enumerating {n}^{n} resamples (limit n = {MAX_ENUMERATION_N})"
        )));
    }
    let total = (n as u64).pow(n as u32);
    let mut means = Vec::with_capacity(total as usize);
    let mut counts = vec![0usize; n];
    for code in 0..total {
        counts.iter_mut().for_each(|c| *c = 0);
        let mut c = code;
        for _ in 0..n {
            counts[(c % n as u64) as usize] += 1;
            c /= n as u64;
        }
        // Summing by multiset keeps every ordering of one resample bitwise equal.
        let sum: f64 = counts.iter().zip(x).map(|(&k, &v)| k as f64 * v).sum();
        means.push(sum / n as f64);
    }
    means.sort_by(|a, b| a.partial_cmp(b).expect("finite means"));
    let mut atoms: Vec<(f64, u64)> = Vec::new();
    for m in means {
        match atoms.last_mut() {
            Some((v, k)) if (m - *v).abs() <= 1e-12 * (1.0 + v.abs()) => *k += 1,
            _ => atoms.push((m, 1)),
        }
    }
    Ok(DiscreteDistribution {
        atoms: atoms
            .into_iter()
            .map(|(v, k)| (v, k as f64 / total as f64))
            .collect(),
    })
}

/// Monte Carlo estimates at a set of evaluation points.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct McEstimate {
    /// Probability level or evaluation value, per row.
    pub at: f64,
    /// Mean over outer replications.
    pub mean: f64,
    /// 2.5% and 97.5% percentiles over replications (equal to `mean` when
    /// there is one replication).
    pub lo: f64,
    pub hi: f64,
    pub draws: Vec<f64>,
}

fn summarize(at: &[f64], per_rep: Vec<Vec<f64>>) -> Vec<McEstimate> {
    at.iter()
        .enumerate()
        .map(|(i, &a)| {
            let mut draws: Vec<f64> = per_rep.iter().map(|r| r[i]).collect();
            let mean = draws.iter().sum::<f64>() / draws.len() as f64;
            let mut sorted = draws.clone();
            sorted.sort_by(|a, b| a.partial_cmp(b).expect("finite"));
            let (lo, hi) = if sorted.len() > 1 {
                (
                    empirical_quantile(&sorted, 0.025),
                    empirical_quantile(&sorted, 0.975),
                )
            } else {
                (mean, mean)
            };
            draws.shrink_to_fit();
            McEstimate {
                at: a,
                mean,
                lo,
                hi,
                draws,
            }
        })
        .collect()
}

/// Smallest order statistic whose empirical CDF reaches `p`.
pub fn empirical_quantile(sorted: &[f64], p: f64) -> f64 {
    let n = sorted.len();
    let rank = ((p * n as f64) - 1e-9).ceil().max(1.0) as usize;
    sorted[rank.min(n) - 1]
}

fn check_probs(probs: &[f64]) -> Result<()> {
    match probs.iter().find(|p| !(**p > 0.0 && **p < 1.0)) {
        Some(&p) => Err(Error::InvalidProbability(p)),
        None => Ok(()),
    }
}

fn sorted_quantiles(mut draws: Vec<f64>, probs: &[f64]) -> Vec<f64> {
    draws.sort_by(|a, b| a.partial_cmp(b).expect("finite draws"));
    probs
        .iter()
        .map(|&p| empirical_quantile(&draws, p))
        .collect()
}

fn run_reps<F>(cfg: &McConfig, per_rep: F) -> Result<Vec<Vec<f64>>>
where
    F: Fn(&mut ChaCha8Rng) -> Result<Vec<f64>> + Sync,
{
    cfg.validate()?;
    (0..cfg.outer_reps)
        .into_par_iter()
        .map(|rep| per_rep(&mut cfg.rng(rep)))
        .collect()
}

/// Quantiles of resampled means.
pub fn mc_mean(sample: &Sample, probs: &[f64], cfg: &McConfig) -> Result<Vec<McEstimate>> {
    check_probs(probs)?;
    let x = sample.values();
    let n = x.len();
    let reps = run_reps(cfg, |rng| {
        let draws = (0..cfg.inner_samples)
            .map(|_| (0..n).map(|_| x[rng.gen_range(0..n)]).sum::<f64>() / n as f64)
            .collect();
        Ok(sorted_quantiles(draws, probs))
    })?;
    Ok(summarize(probs, reps))
}

/// Empirical `P(mean <= v)` over resampled means.
pub fn mc_mean_cdf(sample: &Sample, values: &[f64], cfg: &McConfig) -> Result<Vec<McEstimate>> {
    let x = sample.values();
    let n = x.len();
    let reps = run_reps(cfg, |rng| {
        let mut hits = vec![0u64; values.len()];
        for _ in 0..cfg.inner_samples {
            let m = (0..n).map(|_| x[rng.gen_range(0..n)]).sum::<f64>() / n as f64;
            for (h, &v) in hits.iter_mut().zip(values) {
                if m <= v + 1e-9 * (1.0 + v.abs()) {
                    *h += 1;
                }
            }
        }
        Ok(hits
            .iter()
            .map(|&h| h as f64 / cfg.inner_samples as f64)
            .collect())
    })?;
    Ok(summarize(values, reps))
}

/// Empirical `P(mean <= v)` under independent random signs.
pub fn mc_signflip(sample: &Sample, values: &[f64], cfg: &McConfig) -> Result<Vec<McEstimate>> {
    let x = sample.values();
    let n = x.len() as f64;
    let reps = run_reps(cfg, |rng| {
        let mut hits = vec![0u64; values.len()];
        for _ in 0..cfg.inner_samples {
            let m = x
                .iter()
                .map(|&v| if rng.gen::<bool>() { v } else { -v })
                .sum::<f64>()
                / n;
            for (h, &v) in hits.iter_mut().zip(values) {
                if m <= v + 1e-9 * (1.0 + v.abs()) {
                    *h += 1;
                }
            }
        }
        Ok(hits
            .iter()
            .map(|&h| h as f64 / cfg.inner_samples as f64)
            .collect())
    })?;
    Ok(summarize(values, reps))
}

/// One resampled failure time: draw increments until the cumulative
/// degradation reaches the threshold, interpolating inside the last period.
pub fn draw_failure_time<R: Rng>(model: &DegradationModel, rng: &mut R) -> f64 {
    let pool;
    let incs: &[f64] = if model.pooled() {
        pool = model.all_increments();
        &pool
    } else {
        model
            .units()
            .choose(rng)
            .expect("model has at least one unit")
    };
    failure_time_from(incs, model.period(), model.threshold(), rng)
}

fn failure_time_from<R: Rng>(incs: &[f64], period: f64, threshold: f64, rng: &mut R) -> f64 {
    // Sums that meet the threshold exactly count as crossings even when
    // floating-point addition lands a hair below it.
    let reach = threshold * (1.0 - TIE_TOLERANCE);
    let mut total = 0.0;
    let mut periods = 0u64;
    loop {
        let y = *incs.choose(rng).expect("non-empty increments");
        // A zero draw can never complete a crossing.
        if total + y >= reach && y > 0.0 {
            let frac = ((threshold - total) / y).clamp(0.0, 1.0);
            return period * (periods as f64 + frac);
        }
        total += y;
        periods += 1;
    }
}

/// Per-replication `p`-quantile of `inner_samples` resampled failure times.
pub fn mc_degradation_quantile(
    model: &DegradationModel,
    p: f64,
    cfg: &McConfig,
) -> Result<McEstimate> {
    check_probs(&[p])?;
    let pooled = model.pooled().then(|| model.all_increments());
    let reps = run_reps(cfg, |rng| {
        let draws = (0..cfg.inner_samples)
            .map(|_| {
                let incs: &[f64] = match &pooled {
                    Some(all) => all,
                    None => model.units().choose(rng).expect("units"),
                };
                failure_time_from(incs, model.period(), model.threshold(), rng)
            })
            .collect();
        Ok(sorted_quantiles(draws, &[p]))
    })?;
    Ok(summarize(&[p], reps).remove(0))
}

/// One resampled passage time from state 1 to state 3.
pub fn draw_first_passage<R: Rng>(data: &SemiMarkovData, rng: &mut R) -> Result<f64> {
    let mut state = 1u8;
    let mut t = 0.0;
    for _ in 0..10_000_000 {
        let (times, next) = match state {
            1 if rng.gen::<f64>() < data.p1 => (&data.times_13, 3),
            1 => (&data.times_12, 2),
            _ if rng.gen::<f64>() < data.p2 => (&data.times_21, 1),
            _ => (&data.times_23, 3),
        };
        t += times
            .choose(rng)
            .ok_or_else(|| Error::InvalidInput("transition with no sojourn data".into()))?;
        if next == 3 {
            return Ok(t);
        }
        state = next;
    }
    Err(Error::NoConvergence(10_000_000))
}

/// Quantiles of resampled first-passage times.
pub fn mc_first_passage(
    data: &SemiMarkovData,
    probs: &[f64],
    cfg: &McConfig,
) -> Result<Vec<McEstimate>> {
    check_probs(probs)?;
    if data.p1 == 0.0 && data.p2 == 1.0 {
        return Err(Error::InvalidInput("state 3 is unreachable".into()));
    }
    let reps = run_reps(cfg, |rng| {
        let draws = (0..cfg.inner_samples)
            .map(|_| draw_first_passage(data, rng))
            .collect::<Result<Vec<_>>>()?;
        Ok(sorted_quantiles(draws, probs))
    })?;
    Ok(summarize(probs, reps))
}

/// Mean absolute difference.
pub fn mean_abs_error(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y).abs()).sum::<f64>() / a.len().max(1) as f64
}

#[cfg(test)]
mod tests {
    use super::*;

    fn s(v: &[f64]) -> Sample {
        Sample::new(v.to_vec()).unwrap()
    }

    #[test]
    fn enumeration_examples() {
        let d = enumerate_bootstrap_mean(&s(&[1.0, 4.0, 6.0, 8.0])).unwrap();
        assert!((d.probability_of(1.0) - 1.0 / 256.0).abs() < 1e-15);
        assert!((d.probability_of(8.0) - 1.0 / 256.0).abs() < 1e-15);
        let total: f64 = d.atoms().iter().map(|a| a.1).sum();
        assert!((total - 1.0).abs() < 1e-12);
        let d = enumerate_bootstrap_mean(&s(&[2.5])).unwrap();
        assert_eq!(d.atoms(), &[(2.5, 1.0)]);
        assert!(enumerate_bootstrap_mean(&s(&[1.0; 9])).is_err());
    }

    #[test]
    fn reproducible_streams() {
        let x = s(&[-1.0, 0.53, 2.07, 3.5, 11.3, -7.9]);
        let cfg = McConfig::new(11, 2000, 3);
        let a = mc_mean(&x, &[0.1, 0.5], &cfg).unwrap();
        let b = mc_mean(&x, &[0.1, 0.5], &cfg).unwrap();
        assert_eq!(a, b);
        let c = mc_mean(&x, &[0.1, 0.5], &McConfig::new(12, 2000, 3)).unwrap();
        assert_ne!(a, c);
    }

    #[test]
    fn budget_is_enforced() {
        let mut cfg = McConfig::new(1, 1000, 1000);
        cfg.budget = 10_000;
        assert!(matches!(
            mc_mean(&s(&[1.0, 2.0]), &[0.5], &cfg),
            Err(Error::TooLarge(_))
        ));
        assert!(mc_mean(&s(&[1.0, 2.0]), &[0.5], &McConfig::new(1, 0, 1)).is_err());
    }

    #[test]
    fn single_coin_signflip() {
        let b = 40_000usize;
        let est = mc_signflip(&s(&[3.0]), &[0.0], &McConfig::new(5, b, 1)).unwrap();
        let sigma = (0.25 / b as f64).sqrt();
        assert!((est[0].mean - 0.5).abs() <= 3.0 * sigma);
    }

    #[test]
    fn deterministic_degradation_draws() {
        let m = DegradationModel::new(vec![vec![1.0; 4]; 3], 250.0, 3.0, false).unwrap();
        let est = mc_degradation_quantile(&m, 0.9, &McConfig::new(1, 500, 4)).unwrap();
        assert!(est.draws.iter().all(|&d| d == 750.0));
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        for _ in 0..100 {
            assert_eq!(draw_failure_time(&m, &mut rng), 750.0);
        }
    }

    #[test]
    fn first_passage_draws_direct_path() {
        let d = SemiMarkovData::from_times(vec![], vec![2.0, 4.0], vec![1.0], vec![]).unwrap();
        let est = mc_first_passage(&d, &[0.25, 0.75], &McConfig::new(3, 1000, 1)).unwrap();
        assert_eq!(est[0].mean, 2.0);
        assert_eq!(est[1].mean, 4.0);
    }

    #[test]
    fn empirical_quantile_is_left_continuous() {
        let v = [1.0, 2.0, 3.0, 4.0];
        assert_eq!(empirical_quantile(&v, 0.25), 1.0);
        assert_eq!(empirical_quantile(&v, 0.26), 2.0);
        assert_eq!(empirical_quantile(&v, 0.999), 4.0);
    }
}
