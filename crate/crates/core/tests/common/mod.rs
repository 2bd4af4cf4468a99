//! Shared fixtures: random dual instances and an exact brute-force solver
//! used as the independent oracle for the SMO implementation.
#![allow(dead_code)]

use apsvm::kernels::{gram_matrix, GramMatrix, KernelSpec};
use apsvm::sampling::{derive_rng, NormalSampler};
use nalgebra::{DMatrix, DVector};
use rand::Rng;
use rand_chacha::ChaCha8Rng;

/// A random dual instance with both classes present.
pub struct RandomInstance {
    pub gram: GramMatrix,
    pub labels: Vec<f64>,
    pub cost: f64,
    pub spec: KernelSpec,
    pub points: DMatrix<f64>,
}

pub fn random_instance(seed: u64) -> RandomInstance {
    let mut rng = derive_rng(seed, 1001, 0, 0);
    let n = rng.gen_range(2..=6);
    let p = rng.gen_range(1..=4);
    let spec = if rng.gen_bool(0.5) {
        KernelSpec::Linear
    } else {
        KernelSpec::Rbf {
            gamma: rng.gen_range(0.1..2.0),
        }
    };
    let cost = [0.1, 1.0, 10.0][rng.gen_range(0..3)];
    let mut sampler = NormalSampler::new();
    let points = DMatrix::from_fn(n, p, |_, _| 1.5 * sampler.sample(&mut rng));
    let labels = loop {
        let candidate: Vec<f64> = (0..n)
            .map(|_| if rng.gen_bool(0.5) { 1.0 } else { -1.0 })
            .collect();
        if candidate.iter().any(|&y| y > 0.0) && candidate.iter().any(|&y| y < 0.0) {
            break candidate;
        }
    };
    let gram = gram_matrix(&spec, &points, &points).unwrap();
    RandomInstance {
        gram,
        labels,
        cost,
        spec,
        points,
    }
}

pub fn random_rng(seed: u64) -> ChaCha8Rng {
    derive_rng(seed, 1002, 0, 0)
}

/// Dual objective e^T a - 1/2 a^T (Y K Y) a.
pub fn dual_objective(k: &DMatrix<f64>, labels: &[f64], alpha: &DVector<f64>) -> f64 {
    let n = labels.len();
    let mut quadratic = 0.0;
    for i in 0..n {
        for j in 0..n {
            quadratic += alpha[i] * alpha[j] * labels[i] * labels[j] * k[(i, j)];
        }
    }
    alpha.sum() - 0.5 * quadratic
}

/// Exact maximizer of the dual over {0 <= a <= C, y^T a = 0} by active-set
/// enumeration: every variable is pinned at 0, pinned at C, or left free;
/// each free block solves the equality-constrained stationarity system. A
/// convex QP attains its optimum at one of these candidates, so the best
/// feasible candidate is the global maximum. Exponential in n; fine for the
/// n <= 6 oracle instances.
pub fn brute_force_dual_maximum(k: &DMatrix<f64>, labels: &[f64], cost: f64) -> f64 {
    let n = labels.len();
    let mut best = f64::NEG_INFINITY;
    let slack = 1e-9 * cost.max(1.0);

    for assignment in 0..3usize.pow(n as u32) {
        let mut code = assignment;
        let mut fixed = vec![0.0f64; n];
        let mut free = Vec::new();
        for i in 0..n {
            match code % 3 {
                0 => fixed[i] = 0.0,
                1 => fixed[i] = cost,
                _ => free.push(i),
            }
            code /= 3;
        }

        let mut alpha = DVector::from_vec(fixed.clone());
        if free.is_empty() {
            let balance: f64 = (0..n).map(|i| labels[i] * alpha[i]).sum();
            if balance.abs() > slack {
                continue;
            }
        } else {
            // Stationarity over the free block with multiplier nu:
            //   Q_FF a_F + nu y_F = e_F - Q_FB a_B,  y_F^T a_F = -y_B^T a_B.
            let f = free.len();
            let mut system = DMatrix::zeros(f + 1, f + 1);
            let mut rhs = DVector::zeros(f + 1);
            for (r, &i) in free.iter().enumerate() {
                for (c, &j) in free.iter().enumerate() {
                    system[(r, c)] = labels[i] * labels[j] * k[(i, j)];
                }
                system[(r, f)] = labels[i];
                let mut bound_term = 0.0;
                for j in 0..n {
                    if !free.contains(&j) {
                        bound_term += labels[i] * labels[j] * k[(i, j)] * fixed[j];
                    }
                }
                rhs[r] = 1.0 - bound_term;
            }
            for (c, &j) in free.iter().enumerate() {
                system[(f, c)] = labels[j];
            }
            rhs[f] = -(0..n)
                .filter(|i| !free.contains(i))
                .map(|i| labels[i] * fixed[i])
                .sum::<f64>();

            let solution = match system.full_piv_lu().solve(&rhs) {
                Some(s) if s.iter().all(|v| v.is_finite()) => s,
                _ => continue,
            };
            let mut ok = true;
            for (r, &i) in free.iter().enumerate() {
                let v = solution[r];
                if !(-slack..=cost + slack).contains(&v) {
                    ok = false;
                    break;
                }
                alpha[i] = v.clamp(0.0, cost);
            }
            if !ok {
                continue;
            }
            let balance: f64 = (0..n).map(|i| labels[i] * alpha[i]).sum();
            if balance.abs() > 1e-6 * cost.max(1.0) {
                continue;
            }
        }

        let objective = dual_objective(k, labels, &alpha);
        if objective > best {
            best = objective;
        }
    }
    best
}
