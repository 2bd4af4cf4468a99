//! Empirical checks of the heterogeneity assumption and the exploratory
//! views that go with it: determinant-ratio estimation over random
//! subsamples, kernel-matrix eigen-spectra, and a 2-D PCA embedding.

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::kernels::{gram_matrix, GramMatrix, KernelSpec};
use crate::linalg::{log_det_spd, symmetric_eigen_sorted};
use crate::sampling::{derive_rng, sample_without_replacement, stream};

/// Ridge added to each subsampled kernel matrix before the log-determinant.
pub const LOG_DET_RIDGE: f64 = 1e-10;

/// Estimate of `E[log det K_Z^m - log det K_A^m]` over random equal-size
/// subsamples of the two classes.
///
/// The expectation of the determinant ratio is estimated in log space: raw
/// determinants underflow already at moderate subsample sizes, and the
/// `ratio < 1` verdict is preserved under the log transform of the
/// geometric mean. `ratio_estimate` is the exponential of the mean log
/// ratio.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct HeterogeneityReport {
    /// Subsample size per class and draw.
    pub m: usize,
    /// Number of requested draws.
    pub n_draws: usize,
    /// Mean of `log det K_Z^m - log det K_A^m` over unflagged draws.
    pub mean_log_det_ratio: f64,
    /// Geometric-mean determinant ratio, `exp(mean_log_det_ratio)`.
    pub ratio_estimate: f64,
    /// Whether the estimated ratio is below 1.
    pub epsilon_satisfied: bool,
    pub per_draw_log_ratios: Vec<f64>,
    /// Draws whose kernel matrices stayed numerically singular despite the
    /// ridge; excluded from the mean.
    pub flagged_draws: usize,
}

impl HeterogeneityReport {
    /// Standard error of the per-draw log ratios.
    pub fn standard_error(&self) -> f64 {
        let n = self.per_draw_log_ratios.len();
        if n < 2 {
            return f64::INFINITY;
        }
        let mean = self.mean_log_det_ratio;
        let var = self
            .per_draw_log_ratios
            .iter()
            .map(|r| (r - mean) * (r - mean))
            .sum::<f64>()
            / (n - 1) as f64;
        (var / n as f64).sqrt()
    }
}

/// Runs the determinant-ratio diagnostic. Draw `d` derives its RNG stream
/// from `(seed, d)`, so the report is identical regardless of evaluation
/// order and exactly reproducible for a fixed seed.
pub fn heterogeneity_check(
    normals: &DMatrix<f64>,
    anomalous: &DMatrix<f64>,
    spec: &KernelSpec,
    m: usize,
    n_draws: usize,
    seed: u64,
) -> Result<HeterogeneityReport> {
    if m == 0 {
        return Err(Error::InvalidParameter("subsample size m must be >= 1".into()));
    }
    if n_draws == 0 {
        return Err(Error::InvalidParameter("need at least one draw".into()));
    }
    if m > normals.nrows() || m > anomalous.nrows() {
        return Err(Error::InvalidParameter(format!(
            "subsample size {m} exceeds class sizes ({} normal, {} anomalous)",
            normals.nrows(),
            anomalous.nrows()
        )));
    }

    let mut per_draw = Vec::with_capacity(n_draws);
    let mut flagged = 0usize;
    for draw in 0..n_draws {
        let mut rng = derive_rng(seed, stream::HETEROGENEITY, draw as u64, 0);
        let normal_rows = sample_without_replacement(&mut rng, normals.nrows(), m);
        let anomalous_rows = sample_without_replacement(&mut rng, anomalous.nrows(), m);
        let k_z = ridged_gram(spec, normals, &normal_rows)?;
        let k_a = ridged_gram(spec, anomalous, &anomalous_rows)?;
        match (log_det_spd(k_z), log_det_spd(k_a)) {
            (Some(ld_z), Some(ld_a)) => per_draw.push(ld_z - ld_a),
            _ => flagged += 1,
        }
    }

    if per_draw.is_empty() {
        return Err(Error::Diagnostic(format!(
            "all {n_draws} draws produced numerically singular kernel matrices"
        )));
    }

    let mean = per_draw.iter().sum::<f64>() / per_draw.len() as f64;
    let ratio = mean.exp();
    Ok(HeterogeneityReport {
        m,
        n_draws,
        mean_log_det_ratio: mean,
        ratio_estimate: ratio,
        epsilon_satisfied: ratio < 1.0,
        per_draw_log_ratios: per_draw,
        flagged_draws: flagged,
    })
}

fn ridged_gram(spec: &KernelSpec, samples: &DMatrix<f64>, rows: &[usize]) -> Result<DMatrix<f64>> {
    let subset = samples.select_rows(rows.iter());
    let mut values = gram_matrix(spec, &subset, &subset)?.values;
    for i in 0..values.nrows() {
        values[(i, i)] += LOG_DET_RIDGE;
    }
    Ok(values)
}

/// Eigenvalues of a square symmetric kernel matrix, sorted descending.
pub fn eigen_spectrum(gram: &GramMatrix) -> Result<Vec<f64>> {
    let (rows, cols) = gram.dim();
    if rows != cols {
        return Err(Error::InvalidParameter(format!(
            "eigen spectrum needs a square matrix, got {rows}x{cols}"
        )));
    }
    let scale = gram.values.abs().max().max(1.0);
    let asymmetry = (&gram.values - gram.values.transpose()).abs().max();
    if asymmetry > 1e-8 * scale {
        return Err(Error::InvalidParameter(format!(
            "eigen spectrum needs a symmetric matrix (max asymmetry {asymmetry:.3e})"
        )));
    }
    let (values, _) = symmetric_eigen_sorted(gram.values.clone())?;
    Ok(values.iter().copied().collect())
}

/// Principal-component embedding.
#[derive(Clone, Debug)]
pub struct Pca {
    /// Per-sample scores, one column per requested component.
    pub scores: DMatrix<f64>,
    /// Principal directions as columns (p x dims). Sign convention: each
    /// direction's entry of largest magnitude is positive.
    pub components: DMatrix<f64>,
    /// Covariance eigenvalues of the retained components, descending.
    pub eigenvalues: Vec<f64>,
}

/// Centers the columns of `samples` and projects onto the top `dims`
/// principal directions.
pub fn pca(samples: &DMatrix<f64>, dims: usize) -> Result<Pca> {
    let n = samples.nrows();
    let p = samples.ncols();
    if dims == 0 {
        return Err(Error::InvalidParameter("need at least one component".into()));
    }
    if n < dims + 1 {
        return Err(Error::InvalidParameter(format!(
            "PCA with {dims} components needs at least {} samples, got {n}",
            dims + 1
        )));
    }
    if dims > p {
        return Err(Error::InvalidParameter(format!(
            "cannot extract {dims} components from {p}-dimensional data"
        )));
    }
    if samples.iter().any(|v| !v.is_finite()) {
        return Err(Error::NonFinite("PCA input".into()));
    }

    let mut centered = samples.clone();
    for j in 0..p {
        let mean = centered.column(j).sum() / n as f64;
        for i in 0..n {
            centered[(i, j)] -= mean;
        }
    }
    let total_ss: f64 = centered.iter().map(|v| v * v).sum();
    if total_ss == 0.0 {
        return Err(Error::DegenerateData(
            "all features are constant; PCA is undefined".into(),
        ));
    }

    // Eigendecompose the smaller of X^T X (p x p) and X X^T (n x n).
    let mut components = DMatrix::zeros(p, dims);
    let mut eigenvalues = Vec::with_capacity(dims);
    if p <= n {
        let scatter = centered.transpose() * &centered;
        let (values, vectors) = symmetric_eigen_sorted(scatter)?;
        for d in 0..dims {
            components.set_column(d, &vectors.column(d).into_owned());
            eigenvalues.push(values[d].max(0.0) / (n - 1) as f64);
        }
    } else {
        let outer = &centered * centered.transpose();
        let (values, vectors) = symmetric_eigen_sorted(outer)?;
        let scale = values[0].max(0.0);
        for d in 0..dims {
            let direction = centered.transpose() * vectors.column(d);
            let norm = direction.norm();
            if norm > 1e-12 * scale.sqrt().max(1.0) {
                components.set_column(d, &(direction / norm));
            }
            eigenvalues.push(values[d].max(0.0) / (n - 1) as f64);
        }
    }

    // Make each direction's largest-magnitude entry positive; ties break to
    // the lowest index.
    for d in 0..dims {
        let mut pivot = 0usize;
        for k in 1..p {
            if components[(k, d)].abs() > components[(pivot, d)].abs() {
                pivot = k;
            }
        }
        if components[(pivot, d)] < 0.0 {
            for k in 0..p {
                components[(k, d)] = -components[(k, d)];
            }
        }
    }

    let scores = &centered * &components;
    Ok(Pca {
        scores,
        components,
        eigenvalues,
    })
}

/// Per-sample scores of the top `dims` principal components.
pub fn pca_embed(samples: &DMatrix<f64>, dims: usize) -> Result<DMatrix<f64>> {
    Ok(pca(samples, dims)?.scores)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::kernels::SliceId;
    use crate::sampling::NormalSampler;
    use approx::assert_relative_eq;

    fn gram_from(values: DMatrix<f64>) -> GramMatrix {
        GramMatrix {
            values,
            rows_from: SliceId(0),
            cols_from: SliceId(0),
        }
    }

    fn gaussian_block(seed: u64, n: usize, p: usize, sigma: f64) -> DMatrix<f64> {
        let mut rng = derive_rng(seed, 41, 0, 0);
        let mut sampler = NormalSampler::new();
        DMatrix::from_fn(n, p, |_, _| sigma * sampler.sample(&mut rng))
    }

    #[test]
    fn identically_distributed_classes_center_on_zero() {
        // Classes much larger than the subsample size, so the draw noise
        // dominates the bias from the two finite point sets.
        let a = gaussian_block(1, 2000, 20, 1.0);
        let b = gaussian_block(2, 2000, 20, 1.0);
        let report = heterogeneity_check(&a, &b, &KernelSpec::Linear, 8, 100, 99).unwrap();
        assert_eq!(report.flagged_draws, 0);
        let se = report.standard_error();
        assert!(
            report.mean_log_det_ratio.abs() <= 3.0 * se,
            "mean {} exceeds 3 standard errors {}",
            report.mean_log_det_ratio,
            se
        );
    }

    #[test]
    fn scaled_identity_grams_give_the_closed_form_ratio() {
        // Orthonormal normals give K_Z = I; scaling by sqrt(2) gives
        // K_A = 2I, so every draw of all three points has ratio -3 log 2.
        let normals = DMatrix::identity(3, 3);
        let anomalous = DMatrix::identity(3, 3) * 2.0f64.sqrt();
        let report =
            heterogeneity_check(&normals, &anomalous, &KernelSpec::Linear, 3, 4, 5).unwrap();
        for ratio in &report.per_draw_log_ratios {
            assert_relative_eq!(*ratio, -3.0 * 2.0f64.ln(), epsilon = 1e-8);
        }
        assert!(report.epsilon_satisfied);
    }

    #[test]
    fn hypervariable_anomalous_class_pushes_the_ratio_below_zero() {
        // sigma 2 vs sigma 4 at p=50: the oracle recomputes the expectation
        // by an independent Monte-Carlo route (fresh streams, eigenvalue
        // log-determinants).
        let p = 50;
        let normals = gaussian_block(11, 30, p, 2.0);
        let anomalous = gaussian_block(12, 30, p, 4.0);
        let report =
            heterogeneity_check(&normals, &anomalous, &KernelSpec::Linear, 10, 200, 7).unwrap();
        assert!(report.mean_log_det_ratio < 0.0);
        assert!(report.epsilon_satisfied);

        let oracle_draws = 200;
        let mut oracle_ratios = Vec::with_capacity(oracle_draws);
        for draw in 0..oracle_draws {
            let mut rng = derive_rng(1234, 99, draw as u64, 0);
            let nz = sample_without_replacement(&mut rng, normals.nrows(), 10);
            let na = sample_without_replacement(&mut rng, anomalous.nrows(), 10);
            let log_det_eigen = |samples: &DMatrix<f64>, rows: &[usize]| -> f64 {
                let subset = samples.select_rows(rows.iter());
                let mut gram = gram_matrix(&KernelSpec::Linear, &subset, &subset)
                    .unwrap()
                    .values;
                for i in 0..gram.nrows() {
                    gram[(i, i)] += LOG_DET_RIDGE;
                }
                let (values, _) = symmetric_eigen_sorted(gram).unwrap();
                values.iter().map(|l| l.ln()).sum()
            };
            oracle_ratios.push(log_det_eigen(&normals, &nz) - log_det_eigen(&anomalous, &na));
        }
        let oracle_mean = oracle_ratios.iter().sum::<f64>() / oracle_draws as f64;
        assert!(oracle_mean < 0.0);
        let oracle_var = oracle_ratios
            .iter()
            .map(|r| (r - oracle_mean) * (r - oracle_mean))
            .sum::<f64>()
            / (oracle_draws - 1) as f64;
        let combined_se =
            (oracle_var / oracle_draws as f64 + report.standard_error().powi(2)).sqrt();
        assert!(
            (report.mean_log_det_ratio - oracle_mean).abs() <= 4.0 * combined_se,
            "estimate {} vs oracle {} (combined se {})",
            report.mean_log_det_ratio,
            oracle_mean,
            combined_se
        );
    }

    #[test]
    fn heterogeneity_check_is_reproducible_bit_for_bit() {
        let a = gaussian_block(3, 15, 10, 1.0);
        let b = gaussian_block(4, 15, 10, 3.0);
        let spec = KernelSpec::Rbf { gamma: 0.05 };
        let first = heterogeneity_check(&a, &b, &spec, 5, 50, 21).unwrap();
        let second = heterogeneity_check(&a, &b, &spec, 5, 50, 21).unwrap();
        assert_eq!(
            first.mean_log_det_ratio.to_bits(),
            second.mean_log_det_ratio.to_bits()
        );
        for (x, y) in first
            .per_draw_log_ratios
            .iter()
            .zip(second.per_draw_log_ratios.iter())
        {
            assert_eq!(x.to_bits(), y.to_bits());
        }
    }

    #[test]
    fn oversized_subsample_is_rejected() {
        let a = gaussian_block(5, 4, 3, 1.0);
        let b = gaussian_block(6, 4, 3, 1.0);
        assert!(heterogeneity_check(&a, &b, &KernelSpec::Linear, 5, 10, 0).is_err());
    }

    #[test]
    fn spectrum_of_identity_is_all_ones() {
        let spectrum = eigen_spectrum(&gram_from(DMatrix::identity(3, 3))).unwrap();
        assert_eq!(spectrum, vec![1.0, 1.0, 1.0]);
    }

    #[test]
    fn spectrum_of_diagonal_matrix_sorts_descending() {
        let spectrum =
            eigen_spectrum(&gram_from(DMatrix::from_row_slice(2, 2, &[1.0, 0.0, 0.0, 4.0])))
                .unwrap();
        assert_relative_eq!(spectrum[0], 4.0, epsilon = 1e-12);
        assert_relative_eq!(spectrum[1], 1.0, epsilon = 1e-12);
    }

    #[test]
    fn spectrum_matches_characteristic_polynomial_roots() {
        // Independent oracle: roots of det(K - lambda I) located by sign
        // scanning plus bisection, with determinants from an LU route.
        let points = DMatrix::from_row_slice(5, 1, &[0.0, 0.7, 1.6, 3.1, 5.0]);
        let gram = gram_matrix(&KernelSpec::Rbf { gamma: 0.5 }, &points, &points).unwrap();
        let spectrum = eigen_spectrum(&gram).unwrap();

        let char_poly = |lambda: f64| -> f64 {
            let mut shifted = gram.values.clone();
            for i in 0..5 {
                shifted[(i, i)] -= lambda;
            }
            shifted.determinant()
        };
        let mut roots = Vec::new();
        let upper = gram.values.trace() + 0.1;
        let step = 1e-3;
        let mut lambda = -0.05;
        let mut prev = char_poly(lambda);
        while lambda < upper {
            let next_lambda = lambda + step;
            let next = char_poly(next_lambda);
            if prev == 0.0 {
                roots.push(lambda);
            } else if prev.signum() != next.signum() {
                let (mut lo, mut hi) = (lambda, next_lambda);
                for _ in 0..80 {
                    let mid = 0.5 * (lo + hi);
                    if char_poly(lo).signum() == char_poly(mid).signum() {
                        lo = mid;
                    } else {
                        hi = mid;
                    }
                }
                roots.push(0.5 * (lo + hi));
            }
            lambda = next_lambda;
            prev = next;
        }
        assert_eq!(roots.len(), 5, "oracle found {} roots", roots.len());
        roots.sort_by(|a, b| b.partial_cmp(a).unwrap());
        for (ours, oracle) in spectrum.iter().zip(roots.iter()) {
            assert!(
                (ours - oracle).abs() <= 1e-8,
                "eigenvalue {ours} vs characteristic-polynomial root {oracle}"
            );
        }
    }

    #[test]
    fn spectrum_sums_to_trace() {
        let points = gaussian_block(7, 8, 3, 1.5);
        let gram = gram_matrix(&KernelSpec::Rbf { gamma: 0.3 }, &points, &points).unwrap();
        let spectrum = eigen_spectrum(&gram).unwrap();
        let total: f64 = spectrum.iter().sum();
        assert_relative_eq!(total, gram.values.trace(), max_relative = 1e-8);
    }

    #[test]
    fn collinear_points_have_vanishing_second_scores() {
        let samples = DMatrix::from_fn(6, 2, |i, j| {
            let t = i as f64 - 2.5;
            if j == 0 {
                t
            } else {
                2.0 * t
            }
        });
        let embedding = pca_embed(&samples, 2).unwrap();
        for i in 0..6 {
            assert!(embedding[(i, 1)].abs() <= 1e-8);
        }
    }

    #[test]
    fn axis_aligned_centered_data_is_embedded_as_itself() {
        let samples =
            DMatrix::from_row_slice(4, 2, &[-3.0, 0.0, 3.0, 0.0, 0.0, 1.0, 0.0, -1.0]);
        let embedding = pca_embed(&samples, 2).unwrap();
        for i in 0..4 {
            for j in 0..2 {
                assert_relative_eq!(embedding[(i, j)], samples[(i, j)], epsilon = 1e-10);
            }
        }
    }

    #[test]
    fn full_rank_embedding_reconstructs_the_centered_data() {
        let samples = gaussian_block(8, 10, 4, 1.0);
        let result = pca(&samples, 4).unwrap();
        let reconstructed = &result.scores * result.components.transpose();
        let mut centered = samples.clone();
        for j in 0..4 {
            let mean = centered.column(j).sum() / 10.0;
            for i in 0..10 {
                centered[(i, j)] -= mean;
            }
        }
        assert!((reconstructed - centered).abs().max() <= 1e-8);
    }

    #[test]
    fn score_column_variances_never_increase() {
        let samples = gaussian_block(9, 25, 7, 2.0);
        let embedding = pca_embed(&samples, 4).unwrap();
        let variance = |col: usize| {
            let mean = embedding.column(col).sum() / 25.0;
            embedding
                .column(col)
                .iter()
                .map(|v| (v - mean) * (v - mean))
                .sum::<f64>()
                / 24.0
        };
        for d in 1..4 {
            assert!(variance(d) <= variance(d - 1) + 1e-12);
        }
    }

    #[test]
    fn constant_data_is_degenerate() {
        let samples = DMatrix::from_element(5, 3, 2.5);
        assert!(matches!(
            pca_embed(&samples, 2),
            Err(Error::DegenerateData(_))
        ));
    }

    #[test]
    fn wide_data_uses_the_gram_route() {
        // More features than samples exercises the n x n eigendecomposition.
        let samples = gaussian_block(10, 6, 40, 1.0);
        let result = pca(&samples, 2).unwrap();
        assert_eq!(result.scores.nrows(), 6);
        assert_eq!(result.components.nrows(), 40);
        for d in 0..2 {
            assert_relative_eq!(result.components.column(d).norm(), 1.0, epsilon = 1e-10);
        }
    }
}
