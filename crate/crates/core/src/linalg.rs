//! Small dense linear-algebra helpers used across modules.

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};

/// Eigendecomposition of a symmetric matrix, eigenvalues sorted descending
/// with eigenvector columns reordered to match.
pub fn symmetric_eigen_sorted(matrix: DMatrix<f64>) -> Result<(DVector<f64>, DMatrix<f64>)> {
    let eig = matrix.symmetric_eigen();
    if eig.eigenvalues.iter().any(|v| !v.is_finite()) {
        return Err(Error::Numerical(
            "symmetric eigendecomposition produced non-finite eigenvalues".into(),
        ));
    }
    let mut order: Vec<usize> = (0..eig.eigenvalues.len()).collect();
    order.sort_by(|&a, &b| {
        eig.eigenvalues[b]
            .partial_cmp(&eig.eigenvalues[a])
            .expect("finite eigenvalues")
    });
    let values = DVector::from_iterator(order.len(), order.iter().map(|&i| eig.eigenvalues[i]));
    let vectors = eig.eigenvectors.select_columns(&order);
    Ok((values, vectors))
}

/// log(det M) of a symmetric positive-definite matrix via Cholesky.
/// Returns `None` when the factorization fails or overflows, so callers can
/// flag the instance instead of propagating NaN.
pub fn log_det_spd(matrix: DMatrix<f64>) -> Option<f64> {
    let chol = nalgebra::Cholesky::new(matrix)?;
    let log_det = 2.0 * chol.l_dirty().diagonal().iter().map(|d| d.ln()).sum::<f64>();
    log_det.is_finite().then_some(log_det)
}

/// In-place (M + M^T)/2.
pub fn symmetrize(matrix: &mut DMatrix<f64>) {
    let n = matrix.nrows();
    debug_assert_eq!(n, matrix.ncols());
    for i in 0..n {
        for j in (i + 1)..n {
            let avg = 0.5 * (matrix[(i, j)] + matrix[(j, i)]);
            matrix[(i, j)] = avg;
            matrix[(j, i)] = avg;
        }
    }
}

/// FNV-1a fingerprint of a matrix' shape and contents. Used to tag which
/// sample slice a Gram matrix was computed from.
pub fn content_fingerprint(matrix: &DMatrix<f64>) -> u64 {
    const OFFSET: u64 = 0xcbf2_9ce4_8422_2325;
    const PRIME: u64 = 0x0000_0100_0000_01b3;
    let mut hash = OFFSET;
    let mut absorb = |bytes: &[u8]| {
        for &b in bytes {
            hash ^= b as u64;
            hash = hash.wrapping_mul(PRIME);
        }
    };
    absorb(&(matrix.nrows() as u64).to_le_bytes());
    absorb(&(matrix.ncols() as u64).to_le_bytes());
    for i in 0..matrix.nrows() {
        for j in 0..matrix.ncols() {
            absorb(&matrix[(i, j)].to_bits().to_le_bytes());
        }
    }
    hash
}
