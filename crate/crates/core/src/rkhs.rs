//! Projection onto the span of normal-sample representers and the indirect
//! kernel built from it.
//!
//! The indirect kernel between two points is the RKHS inner product of their
//! representers after both are projected onto the subspace spanned by the
//! representers of the normal samples:
//!
//! ```text
//! k~(x, y) = k_zx^T K_n^+ k_zy,        K~ = K_s K_n^+ K_s^T
//! ```
//!
//! where `K_n` is the Gram matrix of the normals, `K_n^+` its (optionally
//! ridge-stabilized) spectral pseudo-inverse, and `k_zx` the vector of kernel
//! evaluations between the normals and `x`.

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};
use crate::kernels::{gram_matrix, GramMatrix, KernelSpec, SliceId};
use crate::linalg::{content_fingerprint, symmetric_eigen_sorted, symmetrize};

/// Ridge added to `K_n` before pseudo-inversion.
pub const DEFAULT_RIDGE: f64 = 1e-10;
/// Relative eigenvalue cutoff for the spectral pseudo-inverse.
pub const DEFAULT_EIG_TOLERANCE: f64 = 1e-12;

/// Everything needed to evaluate the indirect kernel: the normal samples,
/// their Gram matrix, and the spectral pseudo-inverse of `K_n + ridge I`.
/// Immutable once built.
///
/// The pseudo-inverse is kept in factored form (eigenvectors plus retained
/// reciprocal eigenvalues) and applied through the factors: components along
/// near-null directions then cancel in `V^T k_zx` before any reciprocal
/// eigenvalue can amplify them. A materialized pseudo-inverse matrix is
/// stored for inspection.
#[derive(Clone, Debug)]
pub struct IndirectKernelContext {
    normals: DMatrix<f64>,
    spec: KernelSpec,
    k_n: GramMatrix,
    eigenvectors: DMatrix<f64>,
    /// 1/(lambda_i + ridge) for retained eigenvalues, 0 for truncated ones.
    inv_eigenvalues: DVector<f64>,
    k_n_pinv: DMatrix<f64>,
    ridge: f64,
    eig_tolerance: f64,
}

/// Coefficients of a projected representer in the normal-representer basis.
#[derive(Clone, Debug)]
pub struct ProjectionCoefficients {
    pub beta: DVector<f64>,
}

/// Builds the indirect-kernel context for a set of normal samples (rows).
///
/// `K_n + ridge * I` is eigendecomposed; eigenvalues above
/// `eig_tolerance * lambda_max` are inverted and the rest zeroed.
pub fn build_context(
    normals: &DMatrix<f64>,
    spec: KernelSpec,
    ridge: f64,
    eig_tolerance: f64,
) -> Result<IndirectKernelContext> {
    if !(ridge.is_finite() && ridge >= 0.0) {
        return Err(Error::InvalidParameter(format!(
            "ridge must be a nonnegative finite real, got {ridge}"
        )));
    }
    if !(eig_tolerance.is_finite() && eig_tolerance >= 0.0) {
        return Err(Error::InvalidParameter(format!(
            "eigenvalue tolerance must be a nonnegative finite real, got {eig_tolerance}"
        )));
    }
    let k_n = gram_matrix(&spec, normals, normals)?;
    let m = k_n.values.nrows();
    let mut ridged = k_n.values.clone();
    for i in 0..m {
        ridged[(i, i)] += ridge;
    }
    let (eigenvalues, eigenvectors) = symmetric_eigen_sorted(ridged)?;
    let lambda_max = eigenvalues[0];
    let cutoff = if lambda_max > 0.0 {
        eig_tolerance * lambda_max
    } else {
        f64::INFINITY
    };
    let inv_eigenvalues = DVector::from_iterator(
        m,
        eigenvalues
            .iter()
            .map(|&l| if l > cutoff { 1.0 / l } else { 0.0 }),
    );
    let mut k_n_pinv =
        &eigenvectors * DMatrix::from_diagonal(&inv_eigenvalues) * eigenvectors.transpose();
    symmetrize(&mut k_n_pinv);
    Ok(IndirectKernelContext {
        normals: normals.clone(),
        spec,
        k_n,
        eigenvectors,
        inv_eigenvalues,
        k_n_pinv,
        ridge,
        eig_tolerance,
    })
}

impl IndirectKernelContext {
    pub fn with_defaults(normals: &DMatrix<f64>, spec: KernelSpec) -> Result<Self> {
        build_context(normals, spec, DEFAULT_RIDGE, DEFAULT_EIG_TOLERANCE)
    }

    pub fn normals(&self) -> &DMatrix<f64> {
        &self.normals
    }

    pub fn spec(&self) -> KernelSpec {
        self.spec
    }

    pub fn gram(&self) -> &GramMatrix {
        &self.k_n
    }

    pub fn pseudo_inverse(&self) -> &DMatrix<f64> {
        &self.k_n_pinv
    }

    pub fn ridge(&self) -> f64 {
        self.ridge
    }

    pub fn eig_tolerance(&self) -> f64 {
        self.eig_tolerance
    }

    pub fn n_normals(&self) -> usize {
        self.normals.nrows()
    }

    pub fn dim(&self) -> usize {
        self.normals.ncols()
    }

    fn check_dim(&self, x: &[f64]) -> Result<()> {
        if x.len() != self.dim() {
            return Err(Error::DimensionMismatch {
                expected: self.dim(),
                got: x.len(),
            });
        }
        if x.iter().any(|v| !v.is_finite()) {
            return Err(Error::NonFinite("projection input".into()));
        }
        Ok(())
    }

    /// k_zx: kernel evaluations between each normal sample and `x`.
    pub fn kernel_section(&self, x: &[f64]) -> Result<DVector<f64>> {
        self.check_dim(x)?;
        Ok(DVector::from_iterator(
            self.n_normals(),
            (0..self.n_normals()).map(|i| {
                self.spec
                    .eval_iter(self.normals.row(i).iter().copied(), x.iter().copied())
            }),
        ))
    }

    /// `K_n^+ v` through the eigenfactors.
    pub fn apply_pseudo_inverse(&self, v: &DVector<f64>) -> DVector<f64> {
        let coefficients = self.eigenvectors.transpose() * v;
        &self.eigenvectors * coefficients.component_mul(&self.inv_eigenvalues)
    }

    /// `u^T K_n^+ v` through the eigenfactors; exactly symmetric in its
    /// arguments.
    fn pseudo_inverse_form(&self, u: &DVector<f64>, v: &DVector<f64>) -> f64 {
        let a = self.eigenvectors.transpose() * u;
        let b = self.eigenvectors.transpose() * v;
        (0..a.len())
            .map(|i| self.inv_eigenvalues[i] * a[i] * b[i])
            .sum()
    }
}

/// Coefficients of the projection of `k(x, .)` onto the normal span:
/// `beta = K_n^+ k_zx`, the minimizer of `|k(x,.) - sum_i beta_i k(z_i,.)|_H`.
pub fn projection_coefficients(
    ctx: &IndirectKernelContext,
    x: &[f64],
) -> Result<ProjectionCoefficients> {
    let k_zx = ctx.kernel_section(x)?;
    Ok(ProjectionCoefficients {
        beta: ctx.apply_pseudo_inverse(&k_zx),
    })
}

/// k~(x, y) = k_zx^T K_n^+ k_zy.
pub fn indirect_kernel_eval(ctx: &IndirectKernelContext, x: &[f64], y: &[f64]) -> Result<f64> {
    let k_zx = ctx.kernel_section(x)?;
    let k_zy = ctx.kernel_section(y)?;
    Ok(ctx.pseudo_inverse_form(&k_zx, &k_zy))
}

/// K~ = K_s K_n^+ K_s^T over the sample rows of `a`.
///
/// Assembled as W W^T with W = K_s V sqrt(Lambda^+), which is positive
/// semidefinite by construction; symmetrized afterwards to kill the last
/// rounding drift.
pub fn indirect_gram(ctx: &IndirectKernelContext, a: &DMatrix<f64>) -> Result<GramMatrix> {
    let k_s = gram_matrix(&ctx.spec, a, &ctx.normals)?;
    let mut w = &k_s.values * &ctx.eigenvectors;
    for j in 0..w.ncols() {
        let scale = ctx.inv_eigenvalues[j].sqrt();
        for i in 0..w.nrows() {
            w[(i, j)] *= scale;
        }
    }
    let mut values = &w * w.transpose();
    symmetrize(&mut values);
    let id = SliceId(content_fingerprint(a));
    Ok(GramMatrix {
        values,
        rows_from: id,
        cols_from: id,
    })
}
