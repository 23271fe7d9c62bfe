//! Trend checks on the benchmark ladders. Timings are machine dependent, so
//! only ratios are asserted.

use convboot::cli::{cmd_bench, BenchArgs, Method};
use convboot::mc::DEFAULT_BUDGET;

fn args(min_log2: u32, max_log2: u32, repeat: usize) -> BenchArgs {
    BenchArgs {
        input: None,
        min_log2,
        max_log2,
        repeat,
        mc_samples: vec![500],
        mc_reps: 4,
        seed: 1,
        budget: DEFAULT_BUDGET,
        output: None,
    }
}

#[test]
fn ladder_trends() {
    let r = cmd_bench(&args(12, 20, 3)).unwrap();
    let conv: Vec<_> = r
        .rows
        .iter()
        .filter(|row| row.method == Method::Convolutional)
        .collect();
    assert_eq!(conv.len(), 9);

    for pair in conv.windows(2) {
        let ratio = pair[1].width / pair[0].width;
        assert!((0.375..=0.625).contains(&ratio), "width ratio {ratio}");
    }

    let time = |n: usize| conv.iter().find(|row| row.size == n).unwrap().mean_time_s;
    let growth = time(1 << 20) / time(1 << 16);
    assert!((8.0..=40.0).contains(&growth), "time ratio {growth}");
}
