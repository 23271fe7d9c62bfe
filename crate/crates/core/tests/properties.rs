use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use convboot::mc::{self, McConfig};
use convboot::semi_markov::{self, SemiMarkovData};
use convboot::statistics::{
    self, DegradationGrid, DegradationModel, FptCurve, GridSpec, Sample, DEFAULT_GRID_CAP,
};
use convboot::{RoundingMode, SupportGrid};

/// Sorted means of every ordered resample of `x`.
fn all_resample_means(x: &[f64]) -> Vec<f64> {
    let n = x.len();
    let mut out = Vec::with_capacity(n.pow(n as u32));
    let mut idx = vec![0usize; n];
    loop {
        out.push(idx.iter().map(|&i| x[i]).sum::<f64>() / n as f64);
        let mut pos = 0;
        while pos < n {
            idx[pos] += 1;
            if idx[pos] < n {
                break;
            }
            idx[pos] = 0;
            pos += 1;
        }
        if pos == n {
            break;
        }
    }
    out.sort_by(|a, b| a.partial_cmp(b).unwrap());
    out
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn sandwich_contains_enumerated_cdf(
        x in proptest::collection::vec(-20.0f64..20.0, 2..=5),
        count in 40usize..600,
    ) {
        let sample = Sample::new(x.clone()).unwrap();
        let b = statistics::bootstrap_mean_bounded(&sample, &GridSpec::Auto { count }).unwrap();
        let means = all_resample_means(&x);
        let total = means.len() as f64;
        for (j, v) in b.grid().values().enumerate() {
            let truth = means.partition_point(|m| *m <= v + 1e-12 * (1.0 + v.abs())) as f64 / total;
            prop_assert!(b.lower().cum()[j] <= truth + 1e-12, "lower above truth at {}", v);
            prop_assert!(truth <= b.upper().cum()[j] + 1e-12, "upper below truth at {}", v);
        }
    }

    #[test]
    fn signflip_sandwich_contains_enumeration(
        x in proptest::collection::vec(-10.0f64..10.0, 1..=8),
        count in 64usize..512,
    ) {
        let sample = Sample::new(x.clone()).unwrap();
        let b = statistics::signflip_mean_bounded(&sample, &GridSpec::Auto { count }).unwrap();
        let n = x.len();
        let mut means: Vec<f64> = (0..1u32 << n)
            .map(|mask| {
                x.iter()
                    .enumerate()
                    .map(|(i, v)| if mask >> i & 1 == 1 { *v } else { -v })
                    .sum::<f64>()
                    / n as f64
            })
            .collect();
        means.sort_by(|a, b| a.partial_cmp(b).unwrap());
        let total = means.len() as f64;
        for (j, v) in b.grid().values().enumerate() {
            let truth = means.partition_point(|m| *m <= v + 1e-12 * (1.0 + v.abs())) as f64 / total;
            prop_assert!(b.lower().cum()[j] <= truth + 1e-12);
            prop_assert!(truth <= b.upper().cum()[j] + 1e-12);
        }
    }
}

fn lattice(times: &[f64], step: f64, len: usize) -> Vec<f64> {
    let mut v = vec![0.0; len];
    for t in times {
        v[(t / step).round() as usize] += 1.0 / times.len() as f64;
    }
    v
}

fn conv(a: &[f64], b: &[f64]) -> Vec<f64> {
    let mut out = vec![0.0; a.len()];
    for (i, x) in a.iter().enumerate().filter(|(_, x)| **x != 0.0) {
        for (j, y) in b.iter().enumerate().take(a.len() - i) {
            out[i + j] += x * y;
        }
    }
    out
}

#[test]
fn first_passage_matches_loop_expansion_in_time() {
    // Passage = direct exit, or 1 -> 2, then any number of 2 -> 1 -> 2 loops,
    // then out of state 2. Expanded with plain convolutions up to the horizon.
    let data = SemiMarkovData::from_times(
        vec![0.5, 1.0, 1.5],
        vec![0.25, 2.0],
        vec![0.5, 0.75],
        vec![1.0, 0.25, 3.0],
    )
    .unwrap();
    let step = 0.25;
    let grid = SupportGrid::with_step(0.0, step, 321).unwrap();
    let n = grid.count();
    let (p1, p2) = (data.p1, data.p2);
    let scale = |v: Vec<f64>, w: f64| v.into_iter().map(|x| x * w).collect::<Vec<f64>>();
    let f12 = scale(lattice(&data.times_12, step, n), 1.0 - p1);
    let f13 = scale(lattice(&data.times_13, step, n), p1);
    let f21 = scale(lattice(&data.times_21, step, n), p2);
    let f23 = scale(lattice(&data.times_23, step, n), 1.0 - p2);

    let exit_two: Vec<f64> = f23
        .iter()
        .zip(conv(&f21, &f13))
        .map(|(a, b)| a + b)
        .collect();
    let loop_once = conv(&f12, &f21);
    let mut acc = f13.clone();
    let mut prefix = f12.clone();
    for _ in 0..200 {
        for (a, b) in acc.iter_mut().zip(conv(&prefix, &exit_two)) {
            *a += b;
        }
        prefix = conv(&prefix, &loop_once);
    }
    let got = semi_markov::first_passage_cdf(&data, &grid, RoundingMode::Exact).unwrap();
    let mut cum = 0.0;
    for (j, m) in acc.iter().enumerate() {
        cum += m;
        assert!((got.cum()[j] - cum).abs() < 1e-10, "index {j}");
    }
}

#[test]
fn first_passage_legs_bracket_exact_result() {
    let data = SemiMarkovData::from_times(
        vec![0.5, 1.0, 1.5],
        vec![0.25, 2.0],
        vec![0.5, 0.75],
        vec![1.0, 0.25, 3.0],
    )
    .unwrap();
    let coarse = SupportGrid::new(0.0, 80.0, 211).unwrap();
    let b = semi_markov::first_passage_bounded(&data, &coarse).unwrap();
    assert!(!b.guaranteed());
    let fine = SupportGrid::with_step(0.0, 0.25, 321).unwrap();
    let exact = semi_markov::first_passage_cdf(&data, &fine, RoundingMode::Exact).unwrap();
    for (v, (l, u)) in coarse
        .values()
        .zip(b.lower().cum().iter().zip(b.upper().cum()))
    {
        let truth = exact.at(v);
        assert!(
            *l <= truth + 1e-9 && truth <= u + 1e-9,
            "at {v}: {l} {truth} {u}"
        );
    }
}

#[test]
fn mixture_lies_between_units() {
    let units = vec![vec![0.1, 0.3, 0.2], vec![0.4, 0.5, 0.35], vec![0.05, 0.2]];
    let m = DegradationModel::new(units.clone(), 10.0, 1.2, false).unwrap();
    let grid = DegradationGrid::Fixed {
        step: 0.005,
        count: 4096,
    };
    for t in [15.0, 27.5, 40.0, 61.0, 100.0] {
        for mode in [RoundingMode::Down, RoundingMode::Up] {
            let mix = statistics::mixture_fpt_cdf(&m, t, grid, mode).unwrap();
            let per: Vec<f64> = units
                .iter()
                .map(|u| {
                    let single = DegradationModel::new(vec![u.clone()], 10.0, 1.2, true).unwrap();
                    FptCurve::new(&single, grid, mode).cdf(t).unwrap()
                })
                .collect();
            let mean = per.iter().sum::<f64>() / per.len() as f64;
            assert!((mix - mean).abs() < 1e-12);
            let lo = per.iter().cloned().fold(f64::INFINITY, f64::min);
            let hi = per.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
            assert!(lo - 1e-12 <= mix && mix <= hi + 1e-12);
        }
    }
}

#[test]
fn failure_time_draws_agree_with_fpt_cdf() {
    let m = DegradationModel::new(vec![vec![0.2, 0.5, 0.3, 0.1]], 10.0, 1.0, true).unwrap();
    let grid = DegradationGrid::Auto {
        cap: DEFAULT_GRID_CAP,
    };
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let draws: Vec<f64> = (0..200_000)
        .map(|_| mc::draw_failure_time(&m, &mut rng))
        .collect();
    for t in [20.0, 30.0, 40.0, 55.0] {
        let emp = draws.iter().filter(|z| **z <= t).count() as f64 / draws.len() as f64;
        let lo = statistics::degradation_fpt_cdf(&m, t, grid, RoundingMode::Down).unwrap();
        let hi = statistics::degradation_fpt_cdf(&m, t, grid, RoundingMode::Up).unwrap();
        assert!(
            lo - 5e-3 <= emp && emp <= hi + 5e-3,
            "t={t}: {lo} {emp} {hi}"
        );
    }
}

#[test]
fn monte_carlo_spread_follows_square_root_law() {
    let sample = Sample::new(vec![1.0, std::f64::consts::PI, 6.0, 8.0]).unwrap();
    let at = [sample.mean()];
    let spread = |seed: u64, b: usize| {
        let est = mc::mc_mean_cdf(&sample, &at, &McConfig::new(seed, b, 60)).unwrap();
        let d = &est[0].draws;
        let m = d.iter().sum::<f64>() / d.len() as f64;
        (d.iter().map(|x| (x - m).powi(2)).sum::<f64>() / (d.len() - 1) as f64).sqrt()
    };
    let mut ratios: Vec<f64> = (1..=5u64)
        .map(|seed| spread(seed, 8000) / spread(seed + 100, 2000))
        .collect();
    ratios.sort_by(|a, b| a.partial_cmp(b).unwrap());
    assert!((0.35..=0.65).contains(&ratios[2]), "{ratios:?}");
}

#[test]
fn monte_carlo_first_passage_agrees_with_transform() {
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let mut draw =
        |k: usize| -> Vec<f64> { (0..k).map(|_| rng.gen_range(1..=8) as f64 * 0.5).collect() };
    let data = SemiMarkovData::from_times(draw(5), draw(3), draw(2), draw(4)).unwrap();
    let grid = SupportGrid::with_step(0.0, 0.5, 400).unwrap();
    let exact = semi_markov::first_passage_cdf(&data, &grid, RoundingMode::Exact).unwrap();
    let probs = [0.2, 0.5, 0.8];
    let est = mc::mc_first_passage(&data, &probs, &McConfig::new(9, 50_000, 1)).unwrap();
    for (e, p) in est.iter().zip(probs) {
        let q = exact.quantile(p).unwrap();
        assert!((e.mean - q).abs() <= 0.5 + 1e-9, "p={p}: {} vs {q}", e.mean);
    }
}
