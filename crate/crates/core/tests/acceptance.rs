//! Acceptance suite: one test per criterion, each printing a PASS/FAIL
//! line (run with `--nocapture` to see them). Tolerances are pinned in the
//! assertions.

mod common;

use std::time::Instant;

use apsvm::dataset::{export_csv_writer, ingest_csv_reader, CsvSchema, Dataset, Role, Split};
use apsvm::diagnostics::heterogeneity_check;
use apsvm::experiments::{
    benchmark, simulate, BenchmarkConfig, SimulationConfig, variance_ratio_feature_ranking,
};
use apsvm::kernels::{gram_matrix, KernelSpec};
use apsvm::rkhs::{build_context, indirect_gram, indirect_kernel_eval, projection_coefficients};
use apsvm::sampling::{derive_rng, NormalSampler};
use apsvm::solver::{solve_dual, train, DualProblem, Mode, TrainOptions, TrainedModel};
use common::{brute_force_dual_maximum, dual_objective, random_instance};
use nalgebra::DMatrix;
use rand::Rng;

fn conclude(name: &str, violations: Vec<String>) {
    if violations.is_empty() {
        println!("ACCEPTANCE {name}: PASS");
    } else {
        println!("ACCEPTANCE {name}: FAIL");
        panic!(
            "acceptance criterion `{name}` violated:\n{}",
            violations.join("\n")
        );
    }
}

#[test]
fn acceptance_1_solver_oracle_equivalence() {
    let started = Instant::now();
    let mut violations = Vec::new();
    for seed in 0..200u64 {
        let instance = random_instance(seed);
        let problem = DualProblem {
            gram: instance.gram.clone(),
            labels: instance.labels.clone(),
            cost: instance.cost,
        };
        match solve_dual(&problem, 1e-8, 1_000_000) {
            Ok(solution) => {
                let ours =
                    dual_objective(&instance.gram.values, &instance.labels, &solution.alpha);
                let oracle = brute_force_dual_maximum(
                    &instance.gram.values,
                    &instance.labels,
                    instance.cost,
                );
                if (ours - oracle).abs() > 1e-5 {
                    violations.push(format!(
                        "instance {seed}: objective {ours} vs oracle {oracle}"
                    ));
                }
                if solution.kkt_residual > 1e-6 {
                    violations.push(format!(
                        "instance {seed}: KKT residual {}",
                        solution.kkt_residual
                    ));
                }
            }
            Err(err) => violations.push(format!("instance {seed}: solver failed: {err}")),
        }
    }
    let elapsed = started.elapsed();
    if elapsed.as_secs() >= 60 {
        violations.push(format!("runtime {elapsed:?} exceeds one minute"));
    }
    conclude("1 (solver oracle equivalence, 200 instances)", violations);
}

struct RandomContext {
    normals: DMatrix<f64>,
    anomalous: DMatrix<f64>,
    spec: KernelSpec,
}

/// Strictly-PD random context: points are resampled until the normal Gram
/// keeps a healthy smallest eigenvalue, which clause (c) requires.
fn random_context(seed: u64) -> RandomContext {
    let mut rng = derive_rng(seed, 2001, 0, 0);
    loop {
        let m = rng.gen_range(1..=20);
        let n = rng.gen_range(1..=30);
        let p = m + rng.gen_range(0..4);
        let spec = if rng.gen_bool(0.5) {
            KernelSpec::Linear
        } else {
            KernelSpec::Rbf {
                gamma: rng.gen_range(0.05..0.5),
            }
        };
        let mut sampler = NormalSampler::new();
        let normals = DMatrix::from_fn(m, p, |_, _| 1.5 * sampler.sample(&mut rng));
        let anomalous = DMatrix::from_fn(n, p, |_, _| 3.0 * sampler.sample(&mut rng));
        let gram = gram_matrix(&spec, &normals, &normals).unwrap();
        let eig = gram.values.clone().symmetric_eigen();
        let max = eig.eigenvalues.iter().cloned().fold(f64::MIN, f64::max);
        let min = eig.eigenvalues.iter().cloned().fold(f64::MAX, f64::min);
        if min > 1e-5 * max {
            return RandomContext {
                normals,
                anomalous,
                spec,
            };
        }
    }
}

#[test]
fn acceptance_2_indirect_kernel_identities() {
    let mut violations = Vec::new();
    for seed in 0..100u64 {
        let case = random_context(seed);
        let ctx = build_context(&case.normals, case.spec, 0.0, 1e-8).unwrap();
        let p = case.normals.ncols();

        // (a) K~ is positive semidefinite to -1e-8.
        let tilde = indirect_gram(&ctx, &case.anomalous).unwrap();
        let eig = tilde.values.clone().symmetric_eigen();
        let min_eig = eig.eigenvalues.iter().cloned().fold(f64::MAX, f64::min);
        if min_eig < -1e-8 {
            violations.push(format!("context {seed}: K~ eigenvalue {min_eig}"));
        }

        // (b) projection contracts the diagonal.
        let mut probe_rng = derive_rng(seed, 2002, 0, 0);
        for _ in 0..5 {
            let x: Vec<f64> = (0..p).map(|_| probe_rng.gen_range(-4.0..4.0)).collect();
            let diag = indirect_kernel_eval(&ctx, &x, &x).unwrap();
            let direct = case.spec.eval(&x, &x).unwrap();
            if diag > direct + 1e-8 {
                violations.push(format!(
                    "context {seed}: k~(x,x)={diag} exceeds k(x,x)={direct}"
                ));
            }
        }

        // (c) restriction to the normals reproduces K_n.
        let restricted = indirect_gram(&ctx, &case.normals).unwrap();
        let deviation = (&restricted.values - &ctx.gram().values).abs().max();
        if deviation > 1e-8 {
            violations.push(format!(
                "context {seed}: K~ on normals deviates from K_n by {deviation}"
            ));
        }

        // (d) both routes to k~ agree.
        for _ in 0..5 {
            let x: Vec<f64> = (0..p).map(|_| probe_rng.gen_range(-4.0..4.0)).collect();
            let y: Vec<f64> = (0..p).map(|_| probe_rng.gen_range(-4.0..4.0)).collect();
            let via_eval = indirect_kernel_eval(&ctx, &x, &y).unwrap();
            let bx = projection_coefficients(&ctx, &x).unwrap().beta;
            let by = projection_coefficients(&ctx, &y).unwrap().beta;
            let via_projection = (&ctx.gram().values * by).dot(&bx);
            if (via_eval - via_projection).abs() > 1e-8 {
                violations.push(format!(
                    "context {seed}: routes {via_eval} vs {via_projection}"
                ));
            }
        }
    }
    conclude("2 (indirect-kernel identities, 100 contexts)", violations);
}

#[test]
fn acceptance_3_benchmark_qualitative_reproduction() {
    let started = Instant::now();
    let config = BenchmarkConfig {
        p_values: vec![10, 50, 100, 500],
        base_seed: 0,
        ..BenchmarkConfig::default()
    };
    let report = benchmark(&config, &TrainOptions::default()).unwrap();

    let mut violations = Vec::new();
    let mut diff_sum = 0.0;
    for &p in &config.p_values {
        let standard = report.aggregate(p, Mode::Standard).unwrap();
        let anti = report.aggregate(p, Mode::AntiProfile).unwrap();
        let diff = anti.mean_accuracy - standard.mean_accuracy;
        diff_sum += diff;
        if diff < -0.02 {
            violations.push(format!(
                "p={p}: accuracy difference {diff:.4} below -0.02 (anti {:.4}, standard {:.4})",
                anti.mean_accuracy, standard.mean_accuracy
            ));
        }
        if !(anti.mean_sv_fraction < standard.mean_sv_fraction) {
            violations.push(format!(
                "p={p}: SV fraction {:.4} (anti) not below {:.4} (standard)",
                anti.mean_sv_fraction, standard.mean_sv_fraction
            ));
        }
    }
    if !(diff_sum / config.p_values.len() as f64 > 0.0) {
        violations.push(format!(
            "mean accuracy difference over p is {:.4}, not strictly positive",
            diff_sum / config.p_values.len() as f64
        ));
    }
    let elapsed = started.elapsed();
    if elapsed.as_secs() >= 600 {
        violations.push(format!("runtime {elapsed:?} exceeds ten minutes"));
    }
    conclude("3 (benchmark qualitative reproduction)", violations);
}

#[test]
fn acceptance_4_heterogeneity_diagnostic() {
    let mut violations = Vec::new();

    let mut separated_hits = 0;
    for seed in 0..20u64 {
        let dataset = simulate(&SimulationConfig::new(50, seed)).unwrap();
        let normals = dataset.normals();
        let pos_rows: Vec<usize> = (0..dataset.n_samples())
            .filter(|&i| dataset.roles()[i] == Role::Pos)
            .collect();
        let plus = dataset.features().select_rows(pos_rows.iter());
        let report =
            heterogeneity_check(&normals, &plus, &KernelSpec::Linear, 10, 200, seed).unwrap();
        if report.epsilon_satisfied && report.mean_log_det_ratio < 0.0 {
            separated_hits += 1;
        }
    }
    if separated_hits < 19 {
        violations.push(format!(
            "Z-vs-A+ verdict held for only {separated_hits}/20 seeds"
        ));
    }

    // Classes big enough that the finite-point-set bias of the subsample
    // estimator sits well inside the 3-SE draw-noise band.
    let mut identical_hits = 0;
    for seed in 0..20u64 {
        let mut rng = derive_rng(seed, 2003, 0, 0);
        let mut sampler = NormalSampler::new();
        let a = DMatrix::from_fn(5000, 50, |_, _| sampler.sample(&mut rng));
        let b = DMatrix::from_fn(5000, 50, |_, _| sampler.sample(&mut rng));
        let report = heterogeneity_check(&a, &b, &KernelSpec::Linear, 10, 200, seed).unwrap();
        if report.mean_log_det_ratio.abs() <= 3.0 * report.standard_error() {
            identical_hits += 1;
        }
    }
    if identical_hits < 19 {
        violations.push(format!(
            "identical-classes 3-SE band held for only {identical_hits}/20 seeds"
        ));
    }
    conclude("4 (heterogeneity diagnostic, 20 seeds)", violations);
}

#[test]
fn acceptance_5_two_route_prediction_equality() {
    let mut violations = Vec::new();
    let dataset = simulate(&SimulationConfig::new(50, 123)).unwrap();
    for cost in [0.25, 1.0, 16.0] {
        let model = train(
            &dataset,
            KernelSpec::Rbf { gamma: 0.002 },
            Mode::AntiProfile,
            cost,
            &TrainOptions::default(),
        )
        .unwrap();
        let mut rng = derive_rng(321, 2004, 0, 0);
        let mut sampler = NormalSampler::new();
        let mut worst = 0.0f64;
        for _ in 0..100 {
            let sigma = [1.0, 2.0, 4.0][rng.gen_range(0..3)];
            let x: Vec<f64> = (0..50).map(|_| sigma * sampler.sample(&mut rng)).collect();
            let via_coefficients = model.decision(&x).unwrap();
            let via_indirect = model.decision_via_indirect(&x).unwrap();
            worst = worst.max((via_coefficients - via_indirect).abs());
        }
        if worst > 1e-8 {
            violations.push(format!(
                "cost {cost}: prediction routes differ by {worst:.3e}"
            ));
        }
    }
    conclude("5 (two-route prediction equality, 100 probes)", violations);
}

#[test]
fn acceptance_6_determinism_and_round_trips() {
    let mut violations = Vec::new();

    // Identical benchmark runs serialize byte-identically.
    let config = BenchmarkConfig {
        p_values: vec![10, 25],
        n_repeats: 3,
        base_seed: 9,
        ..BenchmarkConfig::default()
    };
    let first = benchmark(&config, &TrainOptions::default()).unwrap();
    let second = benchmark(&config, &TrainOptions::default()).unwrap();
    let json_a = serde_json::to_string_pretty(&first).unwrap();
    let json_b = serde_json::to_string_pretty(&second).unwrap();
    if json_a != json_b {
        violations.push("benchmark report JSON differs between identical runs".into());
    }
    let mut csv_a = Vec::new();
    let mut csv_b = Vec::new();
    first.write_records_csv(&mut csv_a).unwrap();
    second.write_records_csv(&mut csv_b).unwrap();
    if csv_a != csv_b {
        violations.push("benchmark record CSV differs between identical runs".into());
    }

    // CSV round trip is bitwise lossless.
    let dataset = simulate(&SimulationConfig::new(7, 77)).unwrap();
    let mut buffer = Vec::new();
    export_csv_writer(&dataset, &mut buffer).unwrap();
    let reread = ingest_csv_reader(buffer.as_slice(), &CsvSchema::default()).unwrap();
    for i in 0..dataset.n_samples() {
        for j in 0..dataset.n_features() {
            if dataset.features()[(i, j)].to_bits() != reread.features()[(i, j)].to_bits() {
                violations.push(format!("CSV round trip drifted at ({i},{j})"));
            }
        }
    }

    // Model JSON round trip is lossless and stable.
    for mode in [Mode::Standard, Mode::AntiProfile] {
        let model = train(
            &dataset,
            KernelSpec::Rbf { gamma: 0.1 },
            mode,
            2.0,
            &TrainOptions::default(),
        )
        .unwrap();
        let json = model.to_json().unwrap();
        let reloaded = TrainedModel::from_json(&json).unwrap();
        if reloaded.to_json().unwrap() != json {
            violations.push(format!("model JSON not stable under reload ({mode})"));
        }
        for (a, b) in model.alpha().iter().zip(reloaded.alpha().iter()) {
            if a.to_bits() != b.to_bits() {
                violations.push(format!("alpha drifted through model JSON ({mode})"));
                break;
            }
        }
    }
    conclude("6 (determinism and round trips)", violations);
}

#[test]
fn acceptance_7_variance_ratio_ranking() {
    let mut violations = Vec::new();
    let engineered = [37usize, 120, 253, 301, 477];
    for seed in 0..10u64 {
        let mut rng = derive_rng(seed, 2005, 0, 0);
        let mut sampler = NormalSampler::new();
        let n_per_class = 30;
        let p = 500;
        let mut features = DMatrix::zeros(2 * n_per_class, p);
        let mut roles = Vec::new();
        for i in 0..2 * n_per_class {
            let is_pos = i >= n_per_class;
            roles.push(if is_pos { Role::Pos } else { Role::Neg });
            for j in 0..p {
                let sigma = if engineered.contains(&j) {
                    if is_pos {
                        10.0
                    } else {
                        1.0
                    }
                } else {
                    2.0
                };
                features[(i, j)] = sigma * sampler.sample(&mut rng);
            }
        }
        let dataset = Dataset::new(
            features,
            roles,
            vec![Split::Train; 2 * n_per_class],
            None,
        )
        .unwrap();
        let ranking = variance_ratio_feature_ranking(&dataset, 10).unwrap();
        for &feature in &engineered {
            if !ranking.indices.contains(&feature) {
                violations.push(format!(
                    "seed {seed}: engineered feature {feature} missing from the top 10 {:?}",
                    ranking.indices
                ));
            }
        }
    }
    conclude("7 (variance-ratio ranking, 10 seeds)", violations);
}
