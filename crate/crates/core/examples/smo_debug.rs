use apsvm::experiments::{benchmark, BenchmarkConfig, KernelPolicy};
use apsvm::solver::{Mode, TrainOptions};

fn main() {
    for seed in [0u64, 1, 2, 3, 7, 42, 2024] {
        let config = BenchmarkConfig {
            p_values: vec![10, 50, 100, 500],
            n_repeats: 10,
            kernel_policy: KernelPolicy::RbfMeanSquaredDistance,
            base_seed: seed,
            ..BenchmarkConfig::default()
        };
        let report = benchmark(&config, &TrainOptions::default()).unwrap();
        let mut acc_diffs = Vec::new();
        let mut sv_ok = true;
        let mut acc_ok = true;
        for p in &config.p_values {
            let std = report.aggregate(*p, Mode::Standard).unwrap();
            let ap = report.aggregate(*p, Mode::AntiProfile).unwrap();
            let d = ap.mean_accuracy - std.mean_accuracy;
            acc_diffs.push(d);
            if d < -0.02 { acc_ok = false; }
            if !(ap.mean_sv_fraction < std.mean_sv_fraction) { sv_ok = false; }
        }
        let avg: f64 = acc_diffs.iter().sum::<f64>() / acc_diffs.len() as f64;
        println!(
            "seed {seed:5}: diffs {:?} avg {avg:+.4} (acc_ok {acc_ok} avg>0 {} sv_ok {sv_ok})",
            acc_diffs.iter().map(|d| format!("{d:+.3}")).collect::<Vec<_>>(),
            avg > 0.0
        );
    }
}
