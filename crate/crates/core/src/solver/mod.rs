//! Dual SVM training over precomputed Gram matrices, serving both the
//! standard SVM and the anti-profile SVM, plus prediction and
//! support-vector accounting.

mod serialize;
mod smo;

pub use serialize::MODEL_SCHEMA_VERSION;
pub use smo::{solve_dual, solve_dual_observed};

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::dataset::Dataset;
use crate::error::{Error, Result};
use crate::kernels::{gram_matrix, GramMatrix, KernelSpec};
use crate::rkhs::{build_context, indirect_gram, IndirectKernelContext};

/// Dual weights below `SV_THRESHOLD_FACTOR * C` do not count as support
/// vectors.
pub const SV_THRESHOLD_FACTOR: f64 = 1e-8;

/// Which Gram matrix the classifier is trained on.
#[derive(Copy, Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Mode {
    /// Kernel matrix over the anomalous training points themselves.
    Standard,
    /// Indirect kernel through the normal-sample span.
    AntiProfile,
}

impl std::fmt::Display for Mode {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            Mode::Standard => write!(f, "standard"),
            Mode::AntiProfile => write!(f, "antiprofile"),
        }
    }
}

/// Box-constrained dual problem over a precomputed training Gram matrix.
#[derive(Clone, Debug)]
pub struct DualProblem {
    pub gram: GramMatrix,
    /// Class labels, one of -1 or +1 per training point.
    pub labels: Vec<f64>,
    pub cost: f64,
}

impl DualProblem {
    pub fn validate(&self) -> Result<()> {
        let (rows, cols) = self.gram.dim();
        if rows != cols {
            return Err(Error::InvalidParameter(format!(
                "training Gram matrix must be square, got {rows}x{cols}"
            )));
        }
        if self.labels.len() != rows {
            return Err(Error::DimensionMismatch {
                expected: rows,
                got: self.labels.len(),
            });
        }
        if self.labels.iter().any(|&y| y != 1.0 && y != -1.0) {
            return Err(Error::InvalidParameter(
                "labels must be -1 or +1".into(),
            ));
        }
        let has_pos = self.labels.iter().any(|&y| y > 0.0);
        let has_neg = self.labels.iter().any(|&y| y < 0.0);
        if !has_pos || !has_neg {
            return Err(Error::InvalidDataset(
                "training data must contain both anomalous classes".into(),
            ));
        }
        if !(self.cost.is_finite() && self.cost > 0.0) {
            return Err(Error::InvalidParameter(format!(
                "cost must be a positive finite real, got {}",
                self.cost
            )));
        }
        if self.gram.values.iter().any(|v| !v.is_finite()) {
            return Err(Error::NonFinite("training Gram matrix".into()));
        }
        Ok(())
    }
}

/// Output of the dual solver: feasible weights, bias, and bookkeeping.
#[derive(Clone, Debug)]
pub struct DualSolution {
    pub alpha: DVector<f64>,
    pub bias: f64,
    pub support_indices: Vec<usize>,
    pub iterations: u64,
    pub kkt_residual: f64,
}

/// Knobs shared by training paths; defaults match the toolkit-wide
/// conventions (KKT tolerance 1e-6, ridge 1e-10).
#[derive(Clone, Copy, Debug, Serialize, Deserialize)]
pub struct TrainOptions {
    pub tol: f64,
    pub max_iter: u64,
    pub ridge: f64,
    pub eig_tolerance: f64,
}

impl Default for TrainOptions {
    fn default() -> Self {
        TrainOptions {
            tol: 1e-6,
            max_iter: 10_000_000,
            ridge: crate::rkhs::DEFAULT_RIDGE,
            eig_tolerance: crate::rkhs::DEFAULT_EIG_TOLERANCE,
        }
    }
}

/// A trained classifier together with everything needed to predict.
#[derive(Clone, Debug)]
pub struct TrainedModel {
    mode: Mode,
    spec: KernelSpec,
    cost: f64,
    alpha: DVector<f64>,
    bias: f64,
    support_indices: Vec<usize>,
    labels: Vec<f64>,
    train_anomalous: DMatrix<f64>,
    context: Option<IndirectKernelContext>,
    normal_coefficients: Option<DVector<f64>>,
    iterations: u64,
    kkt_residual: f64,
}

/// One classified point: the signed decision value and its sign, with
/// sign(0) defined as +1.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Prediction {
    pub label: f64,
    pub decision: f64,
}

/// Trains a classifier on the dataset's anomalous training rows.
///
/// Standard mode solves the dual over the kernel matrix of the anomalous
/// points; anti-profile mode builds the indirect kernel through the
/// dataset's normal samples and additionally materializes the
/// normal-representer expansion coefficients.
pub fn train(
    dataset: &Dataset,
    spec: KernelSpec,
    mode: Mode,
    cost: f64,
    opts: &TrainOptions,
) -> Result<TrainedModel> {
    let (features, labels) = dataset.anomalous_train();
    if features.nrows() == 0 {
        return Err(Error::InvalidDataset(
            "no anomalous training samples in dataset".into(),
        ));
    }

    let (gram, context) = match mode {
        Mode::Standard => (gram_matrix(&spec, &features, &features)?, None),
        Mode::AntiProfile => {
            let normals = dataset.normals();
            if normals.nrows() == 0 {
                return Err(Error::InvalidDataset(
                    "anti-profile training requires at least one normal sample".into(),
                ));
            }
            let ctx = build_context(&normals, spec, opts.ridge, opts.eig_tolerance)?;
            (indirect_gram(&ctx, &features)?, Some(ctx))
        }
    };

    let problem = DualProblem {
        gram,
        labels: labels.clone(),
        cost,
    };
    let solution = solve_dual(&problem, opts.tol, opts.max_iter)?;

    let normal_coefficients = context.as_ref().map(|ctx| {
        let k_s = gram_matrix(&spec, &features, ctx.normals()).expect("validated above");
        let signed: DVector<f64> = DVector::from_iterator(
            labels.len(),
            solution.alpha.iter().zip(labels.iter()).map(|(a, y)| a * y),
        );
        ctx.apply_pseudo_inverse(&(k_s.values.transpose() * signed))
    });

    Ok(TrainedModel {
        mode,
        spec,
        cost,
        alpha: solution.alpha,
        bias: solution.bias,
        support_indices: solution.support_indices,
        labels,
        train_anomalous: features,
        context,
        normal_coefficients,
        iterations: solution.iterations,
        kkt_residual: solution.kkt_residual,
    })
}

impl TrainedModel {
    pub fn mode(&self) -> Mode {
        self.mode
    }

    pub fn spec(&self) -> KernelSpec {
        self.spec
    }

    pub fn cost(&self) -> f64 {
        self.cost
    }

    pub fn alpha(&self) -> &DVector<f64> {
        &self.alpha
    }

    pub fn bias(&self) -> f64 {
        self.bias
    }

    pub fn support_indices(&self) -> &[usize] {
        &self.support_indices
    }

    pub fn labels(&self) -> &[f64] {
        &self.labels
    }

    pub fn training_samples(&self) -> &DMatrix<f64> {
        &self.train_anomalous
    }

    pub fn context(&self) -> Option<&IndirectKernelContext> {
        self.context.as_ref()
    }

    pub fn normal_coefficients(&self) -> Option<&DVector<f64>> {
        self.normal_coefficients.as_ref()
    }

    pub fn iterations(&self) -> u64 {
        self.iterations
    }

    pub fn kkt_residual(&self) -> f64 {
        self.kkt_residual
    }

    pub fn n_train(&self) -> usize {
        self.labels.len()
    }

    pub fn dim(&self) -> usize {
        self.train_anomalous.ncols()
    }

    /// Fraction of training points whose dual weight exceeds the support
    /// threshold `1e-8 * C`.
    pub fn support_vector_fraction(&self) -> f64 {
        self.support_indices.len() as f64 / self.n_train() as f64
    }

    fn check_dim(&self, x: &[f64]) -> Result<()> {
        if x.len() != self.dim() {
            return Err(Error::DimensionMismatch {
                expected: self.dim(),
                got: x.len(),
            });
        }
        if x.iter().any(|v| !v.is_finite()) {
            return Err(Error::NonFinite("prediction input".into()));
        }
        Ok(())
    }

    /// Decision value for one point.
    ///
    /// Standard: `d + sum_j alpha_j y_j k(x_j, x)`. Anti-profile:
    /// `d + sum_i c_i k(z_i, x)` over the normal samples.
    pub fn decision(&self, x: &[f64]) -> Result<f64> {
        self.check_dim(x)?;
        match self.mode {
            Mode::Standard => {
                let sum: f64 = (0..self.n_train())
                    .map(|j| {
                        self.alpha[j]
                            * self.labels[j]
                            * self.spec.eval_iter(
                                self.train_anomalous.row(j).iter().copied(),
                                x.iter().copied(),
                            )
                    })
                    .sum();
                Ok(self.bias + sum)
            }
            Mode::AntiProfile => {
                let ctx = self.context.as_ref().expect("anti-profile model context");
                let coeffs = self
                    .normal_coefficients
                    .as_ref()
                    .expect("anti-profile model coefficients");
                let section = ctx.kernel_section(x)?;
                Ok(self.bias + coeffs.dot(&section))
            }
        }
    }

    /// Anti-profile decision through the indirect-kernel expansion
    /// `d + sum_j alpha_j y_j k~(x_j, x)`; must agree with [`Self::decision`].
    pub fn decision_via_indirect(&self, x: &[f64]) -> Result<f64> {
        let ctx = self.context.as_ref().ok_or_else(|| {
            Error::InvalidParameter(
                "indirect decision route is only defined for anti-profile models".into(),
            )
        })?;
        self.check_dim(x)?;
        let section = ctx.kernel_section(x)?;
        let projected = ctx.apply_pseudo_inverse(&section);
        let sum: f64 = (0..self.n_train())
            .map(|j| {
                let row_section = ctx
                    .kernel_section(&self.train_anomalous.row(j).iter().copied().collect::<Vec<_>>())
                    .expect("training row dimension");
                self.alpha[j] * self.labels[j] * row_section.dot(&projected)
            })
            .sum();
        Ok(self.bias + sum)
    }

    pub fn predict(&self, x: &[f64]) -> Result<Prediction> {
        let decision = self.decision(x)?;
        Ok(Prediction {
            label: if decision >= 0.0 { 1.0 } else { -1.0 },
            decision,
        })
    }

    pub fn predict_batch(&self, features: &DMatrix<f64>) -> Result<Vec<Prediction>> {
        (0..features.nrows())
            .map(|i| self.predict(&features.row(i).iter().copied().collect::<Vec<_>>()))
            .collect()
    }
}

/// Fraction of rows whose predicted label matches `labels`.
pub fn accuracy(model: &TrainedModel, features: &DMatrix<f64>, labels: &[f64]) -> Result<f64> {
    if features.nrows() != labels.len() {
        return Err(Error::DimensionMismatch {
            expected: features.nrows(),
            got: labels.len(),
        });
    }
    if labels.is_empty() {
        return Err(Error::EmptyInput("evaluation set".into()));
    }
    let predictions = model.predict_batch(features)?;
    let hits = predictions
        .iter()
        .zip(labels.iter())
        .filter(|(p, &y)| p.label == y)
        .count();
    Ok(hits as f64 / labels.len() as f64)
}
