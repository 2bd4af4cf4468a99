//! Sequential minimal optimization over a precomputed Gram matrix.
//!
//! Solves `max_a  e^T a - 1/2 a^T (Y G Y) a` subject to `0 <= a <= C`,
//! `y^T a = 0` by repeatedly taking the maximal-KKT-violating pair and
//! solving the two-variable subproblem analytically.

use nalgebra::DVector;

use crate::error::{Error, Result};
use crate::solver::{DualProblem, DualSolution, SV_THRESHOLD_FACTOR};

/// Floor for the pair curvature when the Gram matrix is only PSD.
const CURVATURE_FLOOR: f64 = 1e-12;

pub fn solve_dual(problem: &DualProblem, tol: f64, max_iter: u64) -> Result<DualSolution> {
    solve_dual_observed(problem, tol, max_iter, |_| {})
}

/// Same as [`solve_dual`] but calls `observe` with the dual iterate after
/// every accepted pair update. Observation cost is the caller's business.
pub fn solve_dual_observed(
    problem: &DualProblem,
    tol: f64,
    max_iter: u64,
    mut observe: impl FnMut(&DVector<f64>),
) -> Result<DualSolution> {
    problem.validate()?;
    if !(tol.is_finite() && tol > 0.0) {
        return Err(Error::InvalidParameter(format!(
            "solver tolerance must be positive, got {tol}"
        )));
    }

    let n = problem.labels.len();
    let k = &problem.gram.values;
    let y = &problem.labels;
    let c = problem.cost;

    let mut alpha = DVector::<f64>::zeros(n);
    // grad_i = d/d a_i [ 1/2 a^T Q a - e^T a ] with Q_ij = y_i y_j K_ij.
    let mut grad = DVector::from_element(n, -1.0);

    let in_up = |i: usize, alpha: &DVector<f64>| {
        (y[i] > 0.0 && alpha[i] < c) || (y[i] < 0.0 && alpha[i] > 0.0)
    };
    let in_low = |i: usize, alpha: &DVector<f64>| {
        (y[i] < 0.0 && alpha[i] < c) || (y[i] > 0.0 && alpha[i] > 0.0)
    };

    let mut iterations = 0u64;
    loop {
        // Maximal violating pair: i maximizes -y G over I_up, j minimizes
        // it over I_low. The difference is the KKT gap.
        let mut up_best: Option<(usize, f64)> = None;
        let mut low_best: Option<(usize, f64)> = None;
        for t in 0..n {
            let v = -y[t] * grad[t];
            if in_up(t, &alpha) && up_best.map_or(true, |(_, best)| v > best) {
                up_best = Some((t, v));
            }
            if in_low(t, &alpha) && low_best.map_or(true, |(_, best)| v < best) {
                low_best = Some((t, v));
            }
        }
        let ((i, m_up), (j, m_low)) = match (up_best, low_best) {
            (Some(u), Some(l)) => (u, l),
            // No feasible ascent direction left: every point is pinned.
            _ => break,
        };
        let gap = m_up - m_low;
        if gap <= tol {
            break;
        }
        if iterations >= max_iter {
            return Err(Error::Convergence {
                iterations,
                residual: gap,
                best_alpha: alpha.iter().copied().collect(),
            });
        }

        // Two-variable analytic step on (i, j). A variable that crosses its
        // bound is pinned to the exact bound and its partner recomputed
        // from the conserved sum/difference, so no sub-ulp dust survives at
        // the box boundary to stall later pair selections.
        let eta = (k[(i, i)] + k[(j, j)] - 2.0 * k[(i, j)]).max(CURVATURE_FLOOR);
        let old_i = alpha[i];
        let old_j = alpha[j];
        if y[i] * y[j] < 0.0 {
            let step = (-grad[i] - grad[j]) / eta;
            let diff = old_i - old_j;
            alpha[i] += step;
            alpha[j] += step;
            if diff > 0.0 {
                if alpha[j] < 0.0 {
                    alpha[j] = 0.0;
                    alpha[i] = diff;
                }
                if alpha[i] > c {
                    alpha[i] = c;
                    alpha[j] = c - diff;
                }
            } else {
                if alpha[i] < 0.0 {
                    alpha[i] = 0.0;
                    alpha[j] = -diff;
                }
                if alpha[j] > c {
                    alpha[j] = c;
                    alpha[i] = c + diff;
                }
            }
        } else {
            let step = (grad[i] - grad[j]) / eta;
            let sum = old_i + old_j;
            alpha[i] -= step;
            alpha[j] += step;
            if sum > c {
                if alpha[i] > c {
                    alpha[i] = c;
                    alpha[j] = sum - c;
                }
                if alpha[j] > c {
                    alpha[j] = c;
                    alpha[i] = sum - c;
                }
            } else {
                if alpha[j] < 0.0 {
                    alpha[j] = 0.0;
                    alpha[i] = sum;
                }
                if alpha[i] < 0.0 {
                    alpha[i] = 0.0;
                    alpha[j] = sum;
                }
            }
        }
        let delta_i = alpha[i] - old_i;
        let delta_j = alpha[j] - old_j;

        for t in 0..n {
            grad[t] += y[t] * (y[i] * k[(i, t)] * delta_i + y[j] * k[(j, t)] * delta_j);
        }

        iterations += 1;
        observe(&alpha);
    }

    // Per-point bias that would put t exactly on the margin: with
    // u_t = y_t (grad_t + 1) the value y_t - u_t equals -y_t grad_t.
    let on_margin_bias: Vec<f64> = (0..n).map(|t| -y[t] * grad[t]).collect();
    let free: Vec<usize> = (0..n)
        .filter(|&t| alpha[t] > 0.0 && alpha[t] < c)
        .collect();
    let bias = if !free.is_empty() {
        free.iter().map(|&t| on_margin_bias[t]).sum::<f64>() / free.len() as f64
    } else {
        // Midpoint of the KKT-feasible bias interval.
        let lower = (0..n)
            .filter(|&t| in_up(t, &alpha))
            .map(|t| on_margin_bias[t])
            .fold(f64::NEG_INFINITY, f64::max);
        let upper = (0..n)
            .filter(|&t| in_low(t, &alpha))
            .map(|t| on_margin_bias[t])
            .fold(f64::INFINITY, f64::min);
        match (lower.is_finite(), upper.is_finite()) {
            (true, true) => 0.5 * (lower + upper),
            (true, false) => lower,
            (false, true) => upper,
            (false, false) => 0.0,
        }
    };

    let residual = (0..n)
        .map(|t| {
            let margin = grad[t] + 1.0 + y[t] * bias; // y_t f(x_t)
            if alpha[t] <= 0.0 {
                (1.0 - margin).max(0.0)
            } else if alpha[t] >= c {
                (margin - 1.0).max(0.0)
            } else {
                (margin - 1.0).abs()
            }
        })
        .fold(0.0, f64::max);

    let sv_threshold = SV_THRESHOLD_FACTOR * c;
    let support_indices: Vec<usize> = (0..n).filter(|&t| alpha[t] > sv_threshold).collect();

    Ok(DualSolution {
        alpha,
        bias,
        support_indices,
        iterations,
        kkt_residual: residual,
    })
}
