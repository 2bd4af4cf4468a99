//! Kernel functions, Gram-matrix assembly, and the data-driven RBF
//! bandwidth heuristic.

use nalgebra::DMatrix;
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::content_fingerprint;
use crate::sampling::sample_without_replacement;

/// A positive-definite similarity function over feature vectors.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "family", rename_all = "lowercase")]
pub enum KernelSpec {
    /// k(x, y) = <x, y>
    Linear,
    /// k(x, y) = exp(-gamma * ||x - y||^2), gamma > 0
    Rbf { gamma: f64 },
}

impl KernelSpec {
    pub fn validate(&self) -> Result<()> {
        match self {
            KernelSpec::Linear => Ok(()),
            KernelSpec::Rbf { gamma } => {
                if gamma.is_finite() && *gamma > 0.0 {
                    Ok(())
                } else {
                    Err(Error::InvalidParameter(format!(
                        "rbf gamma must be a positive finite real, got {gamma}"
                    )))
                }
            }
        }
    }

    /// Evaluate k(x, y) with input validation.
    pub fn eval(&self, x: &[f64], y: &[f64]) -> Result<f64> {
        self.validate()?;
        if x.len() != y.len() || x.is_empty() {
            return Err(Error::DimensionMismatch {
                expected: x.len(),
                got: y.len(),
            });
        }
        if x.iter().chain(y.iter()).any(|v| !v.is_finite()) {
            return Err(Error::NonFinite("kernel input".into()));
        }
        Ok(self.eval_iter(x.iter().copied(), y.iter().copied()))
    }

    /// Kernel value from paired coordinate iterators; no validation.
    pub(crate) fn eval_iter(
        &self,
        x: impl Iterator<Item = f64>,
        y: impl Iterator<Item = f64>,
    ) -> f64 {
        match self {
            KernelSpec::Linear => x.zip(y).map(|(a, b)| a * b).sum(),
            KernelSpec::Rbf { gamma } => {
                let sq_dist: f64 = x.zip(y).map(|(a, b)| (a - b) * (a - b)).sum();
                (-gamma * sq_dist).exp()
            }
        }
    }

    fn eval_rows(&self, a: &DMatrix<f64>, i: usize, b: &DMatrix<f64>, j: usize) -> f64 {
        self.eval_iter(a.row(i).iter().copied(), b.row(j).iter().copied())
    }
}

/// Identifies the sample slice a Gram matrix axis was computed from, by a
/// fingerprint of the slice contents. Equal ids mean equal sample blocks.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct SliceId(pub u64);

/// Dense kernel matrix between two sample slices.
#[derive(Clone, Debug)]
pub struct GramMatrix {
    pub values: DMatrix<f64>,
    pub rows_from: SliceId,
    pub cols_from: SliceId,
}

impl GramMatrix {
    pub fn dim(&self) -> (usize, usize) {
        (self.values.nrows(), self.values.ncols())
    }

    pub fn is_square_self(&self) -> bool {
        self.rows_from == self.cols_from && self.values.nrows() == self.values.ncols()
    }
}

fn check_samples(label: &str, samples: &DMatrix<f64>) -> Result<()> {
    if samples.nrows() == 0 || samples.ncols() == 0 {
        return Err(Error::EmptyInput(format!("{label} sample set is empty")));
    }
    if samples.iter().any(|v| !v.is_finite()) {
        return Err(Error::NonFinite(format!("{label} sample set")));
    }
    Ok(())
}

/// Gram matrix with entry (i, j) = k(a_i, b_j); shape |A| x |B|.
///
/// Rows of `a` and `b` are samples. When the two slices are the same block
/// the upper triangle is computed once and mirrored, so the result is
/// symmetric by construction.
pub fn gram_matrix(spec: &KernelSpec, a: &DMatrix<f64>, b: &DMatrix<f64>) -> Result<GramMatrix> {
    spec.validate()?;
    check_samples("row", a)?;
    check_samples("column", b)?;
    if a.ncols() != b.ncols() {
        return Err(Error::DimensionMismatch {
            expected: a.ncols(),
            got: b.ncols(),
        });
    }

    let same = a == b;
    let n = a.nrows();
    let m = b.nrows();
    let mut values = DMatrix::zeros(n, m);
    if same {
        for i in 0..n {
            for j in i..m {
                let v = spec.eval_rows(a, i, b, j);
                values[(i, j)] = v;
                values[(j, i)] = v;
            }
        }
    } else {
        for i in 0..n {
            for j in 0..m {
                values[(i, j)] = spec.eval_rows(a, i, b, j);
            }
        }
    }

    let rows_from = SliceId(content_fingerprint(a));
    let cols_from = if same {
        rows_from
    } else {
        SliceId(content_fingerprint(b))
    };
    Ok(GramMatrix {
        values,
        rows_from,
        cols_from,
    })
}

/// Which average of cross-pair distances the bandwidth heuristic inverts.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DistanceAverage {
    Euclidean,
    SquaredEuclidean,
}

/// RBF bandwidth heuristic: draw `n_each` samples without replacement from
/// each slice and return the reciprocal of the mean cross-pair Euclidean
/// distance over all `n_each^2` pairs. Deterministic given the RNG stream
/// (normals are drawn first).
pub fn rbf_gamma_heuristic<R: Rng>(
    normals: &DMatrix<f64>,
    anomalous: &DMatrix<f64>,
    n_each: usize,
    rng: &mut R,
) -> Result<f64> {
    rbf_gamma_heuristic_with(normals, anomalous, n_each, rng, DistanceAverage::Euclidean)
}

/// Same draw protocol as [`rbf_gamma_heuristic`] but averaging squared
/// distances instead; kept as a one-line switch for the bandwidth scaling.
pub fn rbf_gamma_heuristic_with<R: Rng>(
    normals: &DMatrix<f64>,
    anomalous: &DMatrix<f64>,
    n_each: usize,
    rng: &mut R,
    average: DistanceAverage,
) -> Result<f64> {
    check_samples("normal", normals)?;
    check_samples("anomalous", anomalous)?;
    if normals.ncols() != anomalous.ncols() {
        return Err(Error::DimensionMismatch {
            expected: normals.ncols(),
            got: anomalous.ncols(),
        });
    }
    if n_each == 0 {
        return Err(Error::InvalidParameter(
            "bandwidth heuristic needs n_each >= 1".into(),
        ));
    }
    if normals.nrows() < n_each || anomalous.nrows() < n_each {
        return Err(Error::InvalidParameter(format!(
            "bandwidth heuristic needs at least {n_each} samples per class, got {} normal / {} anomalous",
            normals.nrows(),
            anomalous.nrows()
        )));
    }

    let picked_normals = sample_without_replacement(rng, normals.nrows(), n_each);
    let picked_anomalous = sample_without_replacement(rng, anomalous.nrows(), n_each);

    let mut total = 0.0;
    for &i in &picked_normals {
        for &j in &picked_anomalous {
            let sq_dist: f64 = normals
                .row(i)
                .iter()
                .zip(anomalous.row(j).iter())
                .map(|(a, b)| (a - b) * (a - b))
                .sum();
            total += match average {
                DistanceAverage::Euclidean => sq_dist.sqrt(),
                DistanceAverage::SquaredEuclidean => sq_dist,
            };
        }
    }
    let mean = total / (n_each * n_each) as f64;
    if mean <= 0.0 {
        return Err(Error::DegenerateData(
            "mean distance between selected normal and anomalous samples is zero".into(),
        ));
    }
    Ok(1.0 / mean)
}
