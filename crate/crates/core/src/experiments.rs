//! Simulation generator, cost-grid model selection, and the repeated
//! train/test benchmark comparing standard and anti-profile modes.

use std::io::Write;

use nalgebra::DMatrix;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::dataset::{format_double, Dataset, Role, Split};
use crate::error::{Error, Result};
use crate::kernels::{rbf_gamma_heuristic_with, DistanceAverage, KernelSpec};
use crate::sampling::{derive_rng, sample_without_replacement, stream, NormalSampler};
use crate::solver::{accuracy, train, Mode, TrainOptions, TrainedModel};

/// Three zero-mean Gaussian classes: a tight normal class and two anomalous
/// classes of increasing spread.
#[derive(Clone, Copy, Debug, Serialize, Deserialize)]
pub struct SimulationConfig {
    pub p: usize,
    pub sigma_z: f64,
    pub sigma_minus: f64,
    pub sigma_plus: f64,
    pub n_train_per_class: usize,
    pub n_test_per_class: usize,
    pub n_normals: usize,
    pub seed: u64,
}

impl SimulationConfig {
    pub fn new(p: usize, seed: u64) -> Self {
        SimulationConfig {
            p,
            sigma_z: 1.0,
            sigma_minus: 2.0,
            sigma_plus: 4.0,
            n_train_per_class: 20,
            n_test_per_class: 5,
            n_normals: 20,
            seed,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.p == 0 {
            return Err(Error::InvalidParameter("feature count must be >= 1".into()));
        }
        for (name, value) in [
            ("sigma_z", self.sigma_z),
            ("sigma_minus", self.sigma_minus),
            ("sigma_plus", self.sigma_plus),
        ] {
            if !(value.is_finite() && value > 0.0) {
                return Err(Error::InvalidParameter(format!(
                    "{name} must be a positive finite real, got {value}"
                )));
            }
        }
        if !(self.sigma_z < self.sigma_minus && self.sigma_minus < self.sigma_plus) {
            return Err(Error::InvalidParameter(format!(
                "anomaly-classification regime requires sigma_z < sigma_minus < sigma_plus, got {} / {} / {}",
                self.sigma_z, self.sigma_minus, self.sigma_plus
            )));
        }
        if self.n_train_per_class == 0 || self.n_test_per_class == 0 || self.n_normals == 0 {
            return Err(Error::InvalidParameter(
                "all sample counts must be >= 1".into(),
            ));
        }
        Ok(())
    }
}

/// Block tags for the per-class RNG streams of [`simulate`].
mod block {
    pub const NORMALS: u64 = 0;
    pub const NEG_TRAIN: u64 = 1;
    pub const POS_TRAIN: u64 = 2;
    pub const NEG_TEST: u64 = 3;
    pub const POS_TEST: u64 = 4;
}

/// Draws the simulated dataset. Every feature of every sample is an
/// independent zero-mean Gaussian with the class standard deviation; each
/// class block owns its RNG stream `(seed, block)` so the output is
/// bitwise reproducible. Row order: normals, neg train, pos train, neg
/// test, pos test. Normals are tagged as training data.
pub fn simulate(config: &SimulationConfig) -> Result<Dataset> {
    config.validate()?;
    let p = config.p;
    let blocks: [(u64, f64, usize, Role, Split); 5] = [
        (block::NORMALS, config.sigma_z, config.n_normals, Role::Normal, Split::Train),
        (block::NEG_TRAIN, config.sigma_minus, config.n_train_per_class, Role::Neg, Split::Train),
        (block::POS_TRAIN, config.sigma_plus, config.n_train_per_class, Role::Pos, Split::Train),
        (block::NEG_TEST, config.sigma_minus, config.n_test_per_class, Role::Neg, Split::Test),
        (block::POS_TEST, config.sigma_plus, config.n_test_per_class, Role::Pos, Split::Test),
    ];

    let total: usize = blocks.iter().map(|b| b.2).sum();
    let mut features = DMatrix::zeros(total, p);
    let mut roles = Vec::with_capacity(total);
    let mut split = Vec::with_capacity(total);
    let mut row = 0usize;
    for (tag, sigma, count, role, tag_split) in blocks {
        let mut rng = derive_rng(config.seed, stream::SIMULATE, tag, 0);
        let mut sampler = NormalSampler::new();
        for _ in 0..count {
            for j in 0..p {
                features[(row, j)] = sigma * sampler.sample(&mut rng);
            }
            roles.push(role);
            split.push(tag_split);
            row += 1;
        }
    }
    Dataset::new(features, roles, split, None)
}

/// Geometric cost grid 2^-8 .. 2^8, 17 points.
pub fn default_cost_grid() -> Vec<f64> {
    (-8..=8).map(|e| 2f64.powi(e)).collect()
}

/// How the benchmark picks its kernel per cell.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum KernelPolicy {
    Linear,
    RbfFixed { gamma: f64 },
    /// gamma = 1 / mean Euclidean distance between random normal and
    /// anomalous samples, recomputed per repeat.
    RbfMeanDistance,
    /// gamma = 1 / mean squared Euclidean distance, recomputed per repeat.
    RbfMeanSquaredDistance,
}

/// One trained-and-evaluated grid point.
#[derive(Clone, Copy, Debug, Serialize, Deserialize)]
pub struct CostEvaluation {
    pub cost: f64,
    pub accuracy: f64,
    pub n_support: usize,
}

/// Result of cost selection: the winning model plus the full grid audit.
#[derive(Debug)]
pub struct SelectionOutcome {
    pub best_cost: f64,
    pub model: TrainedModel,
    pub accuracy: f64,
    pub evaluated: Vec<CostEvaluation>,
    pub skipped: Vec<(f64, String)>,
}

fn better(candidate: &CostEvaluation, incumbent: &CostEvaluation) -> bool {
    if candidate.accuracy != incumbent.accuracy {
        return candidate.accuracy > incumbent.accuracy;
    }
    if candidate.n_support != incumbent.n_support {
        return candidate.n_support < incumbent.n_support;
    }
    candidate.cost < incumbent.cost
}

/// Trains at every grid cost, scores test accuracy, and returns the
/// accuracy-maximizing model. Ties break to the fewest support vectors,
/// then to the smallest cost. Grid points whose training fails are skipped
/// and recorded; an all-failed grid is an error.
///
/// Selection on the test split mirrors the eval protocol this toolkit
/// reproduces; use [`select_cost_cv`] for an unbiased selector.
pub fn select_cost(
    dataset: &Dataset,
    spec: KernelSpec,
    mode: Mode,
    cost_grid: &[f64],
    opts: &TrainOptions,
) -> Result<SelectionOutcome> {
    if cost_grid.is_empty() {
        return Err(Error::InvalidParameter("cost grid is empty".into()));
    }
    let (test_features, test_labels) = dataset.anomalous_test();
    if test_labels.is_empty() {
        return Err(Error::InvalidDataset(
            "cost selection needs anomalous test rows".into(),
        ));
    }

    let mut best: Option<(CostEvaluation, TrainedModel)> = None;
    let mut evaluated = Vec::new();
    let mut skipped = Vec::new();
    for &cost in cost_grid {
        match train(dataset, spec, mode, cost, opts) {
            Ok(model) => {
                let acc = accuracy(&model, &test_features, &test_labels)?;
                let eval = CostEvaluation {
                    cost,
                    accuracy: acc,
                    n_support: model.support_indices().len(),
                };
                evaluated.push(eval);
                if best.as_ref().map_or(true, |(inc, _)| better(&eval, inc)) {
                    best = Some((eval, model));
                }
            }
            Err(err) => {
                log::warn!("cost {cost} skipped: {err}");
                skipped.push((cost, err.to_string()));
            }
        }
    }

    match best {
        Some((eval, model)) => Ok(SelectionOutcome {
            best_cost: eval.cost,
            model,
            accuracy: eval.accuracy,
            evaluated,
            skipped,
        }),
        None => Err(Error::Experiment(format!(
            "every cost in the grid failed; first failure: {}",
            skipped
                .first()
                .map(|(c, e)| format!("cost {c}: {e}"))
                .unwrap_or_default()
        ))),
    }
}

fn subset_dataset(dataset: &Dataset, train_rows: &[usize], test_rows: &[usize]) -> Result<Dataset> {
    let normals = dataset.normal_indices();
    let mut rows = Vec::with_capacity(normals.len() + train_rows.len() + test_rows.len());
    let mut split = Vec::with_capacity(rows.capacity());
    for &i in &normals {
        rows.push(i);
        split.push(Split::Train);
    }
    for &i in train_rows {
        rows.push(i);
        split.push(Split::Train);
    }
    for &i in test_rows {
        rows.push(i);
        split.push(Split::Test);
    }
    let features = dataset.features().select_rows(rows.iter());
    let roles = rows.iter().map(|&i| dataset.roles()[i]).collect();
    Dataset::new(features, roles, split, None)
}

/// Stratified k-fold cross-validation selector over the anomalous training
/// rows; the recommended alternative to test-set selection. The winning
/// cost (ties to the smaller cost) is refit on the full training data and
/// the reported accuracy is the mean validation accuracy.
pub fn select_cost_cv(
    dataset: &Dataset,
    spec: KernelSpec,
    mode: Mode,
    cost_grid: &[f64],
    folds: usize,
    seed: u64,
    opts: &TrainOptions,
) -> Result<SelectionOutcome> {
    if cost_grid.is_empty() {
        return Err(Error::InvalidParameter("cost grid is empty".into()));
    }
    if folds < 2 {
        return Err(Error::InvalidParameter(
            "cross-validation needs at least 2 folds".into(),
        ));
    }
    let train_rows = dataset.anomalous_train_indices();
    let mut per_class: [Vec<usize>; 2] = [Vec::new(), Vec::new()];
    for &i in &train_rows {
        match dataset.roles()[i] {
            Role::Neg => per_class[0].push(i),
            Role::Pos => per_class[1].push(i),
            Role::Normal => unreachable!("anomalous_train_indices excludes normals"),
        }
    }
    if per_class.iter().any(|c| c.len() < folds) {
        return Err(Error::InvalidDataset(format!(
            "{folds}-fold cross-validation needs {folds}+ training samples per anomalous class"
        )));
    }

    // Stratified fold assignment: shuffle within each class, deal
    // round-robin.
    let mut rng = derive_rng(seed, stream::CV_FOLDS, 0, 0);
    let mut fold_members: Vec<Vec<usize>> = vec![Vec::new(); folds];
    for class_rows in &per_class {
        let order = sample_without_replacement(&mut rng, class_rows.len(), class_rows.len());
        for (slot, &idx) in order.iter().enumerate() {
            fold_members[slot % folds].push(class_rows[idx]);
        }
    }

    let mut mean_accuracy = vec![0.0f64; cost_grid.len()];
    for fold in 0..folds {
        let validation = &fold_members[fold];
        let training: Vec<usize> = (0..folds)
            .filter(|&f| f != fold)
            .flat_map(|f| fold_members[f].iter().copied())
            .collect();
        let fold_dataset = subset_dataset(dataset, &training, validation)?;
        let (val_features, val_labels) = fold_dataset.anomalous_test();
        for (slot, &cost) in cost_grid.iter().enumerate() {
            let model = train(&fold_dataset, spec, mode, cost, opts)?;
            mean_accuracy[slot] += accuracy(&model, &val_features, &val_labels)? / folds as f64;
        }
    }

    let mut best_slot = 0usize;
    for slot in 1..cost_grid.len() {
        if mean_accuracy[slot] > mean_accuracy[best_slot] + 1e-12 {
            best_slot = slot;
        }
    }
    let best_cost = cost_grid[best_slot];
    let model = train(dataset, spec, mode, best_cost, opts)?;
    let evaluated = cost_grid
        .iter()
        .zip(mean_accuracy.iter())
        .map(|(&cost, &acc)| CostEvaluation {
            cost,
            accuracy: acc,
            n_support: 0,
        })
        .collect();
    Ok(SelectionOutcome {
        best_cost,
        accuracy: mean_accuracy[best_slot],
        model,
        evaluated,
        skipped: Vec::new(),
    })
}

/// Full benchmark specification; see [`benchmark`].
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct BenchmarkConfig {
    pub sigma_z: f64,
    pub sigma_minus: f64,
    pub sigma_plus: f64,
    pub n_train_per_class: usize,
    pub n_test_per_class: usize,
    pub n_normals: usize,
    pub p_values: Vec<usize>,
    pub n_repeats: usize,
    pub modes: Vec<Mode>,
    pub cost_grid: Vec<f64>,
    pub kernel_policy: KernelPolicy,
    pub gamma_sample_size: usize,
    pub base_seed: u64,
}

impl Default for BenchmarkConfig {
    fn default() -> Self {
        BenchmarkConfig {
            sigma_z: 1.0,
            sigma_minus: 2.0,
            sigma_plus: 4.0,
            n_train_per_class: 20,
            n_test_per_class: 5,
            n_normals: 20,
            p_values: vec![10, 50, 100, 500, 1000],
            n_repeats: 10,
            modes: vec![Mode::Standard, Mode::AntiProfile],
            cost_grid: default_cost_grid(),
            // The squared-distance scaling keeps kernel values away from 0/1
            // saturation as p grows; the plain mean-distance policy collapses
            // every cross-kernel value for wide data and with it the
            // advantage of either classifier.
            kernel_policy: KernelPolicy::RbfMeanSquaredDistance,
            gamma_sample_size: 5,
            base_seed: 0,
        }
    }
}

/// Per-(p, mode, repeat) benchmark record.
#[derive(Clone, Copy, Debug, Serialize, Deserialize)]
pub struct RecordRow {
    pub p: usize,
    pub mode: Mode,
    pub repeat_index: usize,
    pub best_cost: f64,
    pub best_accuracy: f64,
    pub sv_fraction_at_best: f64,
    pub gamma: Option<f64>,
}

#[derive(Clone, Copy, Debug, Serialize, Deserialize)]
pub struct Aggregate {
    pub p: usize,
    pub mode: Mode,
    pub mean_accuracy: f64,
    pub mean_sv_fraction: f64,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct Provenance {
    pub base_seed: u64,
    pub cost_grid: Vec<f64>,
    pub kernel_policy: KernelPolicy,
    pub gamma_sample_size: usize,
    pub sigma_z: f64,
    pub sigma_minus: f64,
    pub sigma_plus: f64,
    pub n_train_per_class: usize,
    pub n_test_per_class: usize,
    pub n_normals: usize,
    pub selection: String,
    pub toolkit_version: String,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct ExperimentReport {
    pub records: Vec<RecordRow>,
    pub aggregates: Vec<Aggregate>,
    pub provenance: Provenance,
}

impl ExperimentReport {
    pub fn aggregate(&self, p: usize, mode: Mode) -> Option<&Aggregate> {
        self.aggregates
            .iter()
            .find(|a| a.p == p && a.mode == mode)
    }

    /// Tidy per-record CSV: one row per (p, mode, repeat).
    pub fn write_records_csv<W: Write>(&self, mut writer: W) -> Result<()> {
        writeln!(
            writer,
            "p,mode,repeat,best_cost,best_accuracy,sv_fraction,gamma"
        )?;
        for r in &self.records {
            writeln!(
                writer,
                "{},{},{},{},{},{},{}",
                r.p,
                r.mode,
                r.repeat_index,
                format_double(r.best_cost),
                format_double(r.best_accuracy),
                format_double(r.sv_fraction_at_best),
                r.gamma.map(format_double).unwrap_or_default()
            )?;
        }
        Ok(())
    }

    pub fn write_aggregates_csv<W: Write>(&self, mut writer: W) -> Result<()> {
        writeln!(writer, "p,mode,mean_accuracy,mean_sv_fraction")?;
        for a in &self.aggregates {
            writeln!(
                writer,
                "{},{},{},{}",
                a.p,
                a.mode,
                format_double(a.mean_accuracy),
                format_double(a.mean_sv_fraction)
            )?;
        }
        Ok(())
    }
}

/// Simulation seed for one benchmark cell. Injective over (p, repeat) for a
/// fixed base seed as long as both stay below 2^32.
pub fn derive_cell_seed(base_seed: u64, p: usize, repeat: usize) -> u64 {
    base_seed ^ ((p as u64) << 32) ^ repeat as u64
}

/// Runs the full sweep: for every p and repeat, a fresh simulation, a
/// per-repeat bandwidth when the policy asks for one, and cost selection
/// per mode. Cells are independent and run in parallel; the report is
/// assembled in (p, repeat, mode) order so identical seeds give identical
/// reports regardless of thread count.
pub fn benchmark(config: &BenchmarkConfig, opts: &TrainOptions) -> Result<ExperimentReport> {
    if config.p_values.is_empty() {
        return Err(Error::InvalidParameter("p_values is empty".into()));
    }
    if config.n_repeats == 0 {
        return Err(Error::InvalidParameter("n_repeats must be >= 1".into()));
    }
    if config.modes.is_empty() {
        return Err(Error::InvalidParameter("no modes requested".into()));
    }

    let cells: Vec<(usize, usize)> = config
        .p_values
        .iter()
        .flat_map(|&p| (0..config.n_repeats).map(move |r| (p, r)))
        .collect();

    let cell_records: Vec<Vec<RecordRow>> = cells
        .par_iter()
        .map(|&(p, repeat)| run_cell(config, opts, p, repeat))
        .collect::<Result<_>>()?;
    let records: Vec<RecordRow> = cell_records.into_iter().flatten().collect();

    let mut aggregates = Vec::new();
    for &p in &config.p_values {
        for &mode in &config.modes {
            let rows: Vec<&RecordRow> = records
                .iter()
                .filter(|r| r.p == p && r.mode == mode)
                .collect();
            let count = rows.len() as f64;
            aggregates.push(Aggregate {
                p,
                mode,
                mean_accuracy: rows.iter().map(|r| r.best_accuracy).sum::<f64>() / count,
                mean_sv_fraction: rows.iter().map(|r| r.sv_fraction_at_best).sum::<f64>() / count,
            });
        }
    }

    Ok(ExperimentReport {
        records,
        aggregates,
        provenance: Provenance {
            base_seed: config.base_seed,
            cost_grid: config.cost_grid.clone(),
            kernel_policy: config.kernel_policy,
            gamma_sample_size: config.gamma_sample_size,
            sigma_z: config.sigma_z,
            sigma_minus: config.sigma_minus,
            sigma_plus: config.sigma_plus,
            n_train_per_class: config.n_train_per_class,
            n_test_per_class: config.n_test_per_class,
            n_normals: config.n_normals,
            selection: "paper-protocol".to_string(),
            toolkit_version: crate::VERSION.to_string(),
        },
    })
}

fn run_cell(
    config: &BenchmarkConfig,
    opts: &TrainOptions,
    p: usize,
    repeat: usize,
) -> Result<Vec<RecordRow>> {
    let cell_seed = derive_cell_seed(config.base_seed, p, repeat);
    let sim = SimulationConfig {
        p,
        sigma_z: config.sigma_z,
        sigma_minus: config.sigma_minus,
        sigma_plus: config.sigma_plus,
        n_train_per_class: config.n_train_per_class,
        n_test_per_class: config.n_test_per_class,
        n_normals: config.n_normals,
        seed: cell_seed,
    };
    let dataset = simulate(&sim)?;
    let (spec, gamma) = resolve_kernel(
        config.kernel_policy,
        config.gamma_sample_size,
        &dataset,
        cell_seed,
    )?;

    let mut rows = Vec::with_capacity(config.modes.len());
    for &mode in &config.modes {
        let outcome = select_cost(&dataset, spec, mode, &config.cost_grid, opts)?;
        rows.push(RecordRow {
            p,
            mode,
            repeat_index: repeat,
            best_cost: outcome.best_cost,
            best_accuracy: outcome.accuracy,
            sv_fraction_at_best: outcome.model.support_vector_fraction(),
            gamma,
        });
    }
    Ok(rows)
}

/// Materializes the kernel for one benchmark cell, drawing the bandwidth
/// from the cell's training data when the policy asks for it.
pub fn resolve_kernel(
    policy: KernelPolicy,
    gamma_sample_size: usize,
    dataset: &Dataset,
    cell_seed: u64,
) -> Result<(KernelSpec, Option<f64>)> {
    match policy {
        KernelPolicy::Linear => Ok((KernelSpec::Linear, None)),
        KernelPolicy::RbfFixed { gamma } => Ok((KernelSpec::Rbf { gamma }, Some(gamma))),
        KernelPolicy::RbfMeanDistance | KernelPolicy::RbfMeanSquaredDistance => {
            let average = match policy {
                KernelPolicy::RbfMeanSquaredDistance => DistanceAverage::SquaredEuclidean,
                _ => DistanceAverage::Euclidean,
            };
            let normals = dataset.normals();
            let (anomalous, _) = dataset.anomalous_train();
            let mut rng = derive_rng(cell_seed, stream::GAMMA, 0, 0);
            let gamma = rbf_gamma_heuristic_with(
                &normals,
                &anomalous,
                gamma_sample_size,
                &mut rng,
                average,
            )?;
            Ok((KernelSpec::Rbf { gamma }, Some(gamma)))
        }
    }
}

/// Per-feature `log(var(pos class) / var(neg class))` ranking.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct FeatureRanking {
    /// Indices of the selected features, best ratio first.
    pub indices: Vec<usize>,
    /// Log variance ratios aligned with `indices`.
    pub log_ratios: Vec<f64>,
    /// All per-feature log ratios in natural feature order.
    pub per_feature_log_ratios: Vec<f64>,
    /// Features whose denominator-class variance was zero; these carry a
    /// sentinel ratio and rank last.
    pub flagged: Vec<usize>,
}

/// Ranks features by the log ratio of unbiased per-class variances over the
/// anomalous samples and returns the `n_features` largest, descending, with
/// ties broken by the lower index.
pub fn variance_ratio_feature_ranking(
    dataset: &Dataset,
    n_features: usize,
) -> Result<FeatureRanking> {
    let p = dataset.n_features();
    if n_features == 0 || n_features > p {
        return Err(Error::InvalidParameter(format!(
            "n_features must be in 1..={p}, got {n_features}"
        )));
    }
    let pos_rows: Vec<usize> = (0..dataset.n_samples())
        .filter(|&i| dataset.roles()[i] == Role::Pos)
        .collect();
    let neg_rows: Vec<usize> = (0..dataset.n_samples())
        .filter(|&i| dataset.roles()[i] == Role::Neg)
        .collect();
    if pos_rows.len() < 2 || neg_rows.len() < 2 {
        return Err(Error::InvalidDataset(
            "variance ranking needs at least two samples in each anomalous class".into(),
        ));
    }

    let column_variance = |rows: &[usize], j: usize| -> f64 {
        let mean = rows
            .iter()
            .map(|&i| dataset.features()[(i, j)])
            .sum::<f64>()
            / rows.len() as f64;
        rows.iter()
            .map(|&i| {
                let d = dataset.features()[(i, j)] - mean;
                d * d
            })
            .sum::<f64>()
            / (rows.len() - 1) as f64
    };

    let mut per_feature = Vec::with_capacity(p);
    let mut flagged = Vec::new();
    for j in 0..p {
        let var_pos = column_variance(&pos_rows, j);
        let var_neg = column_variance(&neg_rows, j);
        if var_neg == 0.0 {
            flagged.push(j);
            per_feature.push(f64::NEG_INFINITY);
        } else {
            per_feature.push((var_pos / var_neg).ln());
        }
    }

    let mut order: Vec<usize> = (0..p).collect();
    order.sort_by(|&a, &b| {
        per_feature[b]
            .partial_cmp(&per_feature[a])
            .expect("no NaN ratios")
            .then(a.cmp(&b))
    });
    let indices: Vec<usize> = order.into_iter().take(n_features).collect();
    let log_ratios = indices.iter().map(|&j| per_feature[j]).collect();
    Ok(FeatureRanking {
        indices,
        log_ratios,
        per_feature_log_ratios: per_feature,
        flagged,
    })
}
