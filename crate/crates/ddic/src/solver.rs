//! Dense nonnegative least squares by the active-set method.
//!
//! Feasibility questions in this crate (is a distribution a convex
//! combination of given columns? does a column-stochastic matrix mapping
//! one family onto another exist?) are all posed as min ||Ax - b|| over
//! x >= 0 on systems with at most a few dozen unknowns, so a dense
//! active-set solver is enough. Least-squares subproblems are solved by
//! ridge-stabilized normal equations with iterative refinement, which keeps
//! exactly duplicated columns (common here: channel columns repeat) from
//! breaking the factorization.

pub(crate) struct NnlsResult {
    pub x: Vec<f64>,
    /// b - Ax at the returned solution.
    pub residual: Vec<f64>,
}

impl NnlsResult {
    pub fn max_abs_residual(&self) -> f64 {
        self.residual.iter().fold(0.0, |m, r| m.max(r.abs()))
    }
}

/// Solves min ||Ax - b||_2 subject to x >= 0. `a` is row-major, m x n.
pub(crate) fn nnls(m: usize, n: usize, a: &[f64], b: &[f64]) -> NnlsResult {
    assert_eq!(a.len(), m * n);
    assert_eq!(b.len(), m);

    let col = |j: usize| (0..m).map(move |i| a[i * n + j]);
    let scale = b.iter().fold(1.0f64, |s, v| s.max(v.abs()));
    let w_tol = 1e-13 * scale.max(1.0);

    let mut x = vec![0.0f64; n];
    let mut passive = vec![false; n];
    let mut residual = b.to_vec();

    let max_outer = 10 * n + 10;
    for _ in 0..max_outer {
        // Gradient of 1/2 ||Ax - b||^2 is -A^T residual; pick the most
        // negative direction among the clamped variables.
        let mut best_j = None;
        let mut best_w = w_tol;
        for j in 0..n {
            if passive[j] {
                continue;
            }
            let w: f64 = col(j).zip(&residual).map(|(aij, r)| aij * r).sum();
            if w > best_w {
                best_w = w;
                best_j = Some(j);
            }
        }
        let Some(j_new) = best_j else { break };
        passive[j_new] = true;

        // Inner loop: restore feasibility of the passive-set LS solution.
        loop {
            let z = ls_on_passive(m, n, a, b, &passive);
            let mut alpha = 1.0f64;
            let mut blocker = None;
            for j in 0..n {
                if passive[j] && z[j] <= 0.0 {
                    let denom = x[j] - z[j];
                    if denom > 0.0 {
                        let step = x[j] / denom;
                        if step < alpha {
                            alpha = step;
                            blocker = Some(j);
                        }
                    } else {
                        alpha = 0.0;
                        blocker = Some(j);
                    }
                }
            }
            if blocker.is_none() {
                x = z;
                break;
            }
            for j in 0..n {
                if passive[j] {
                    x[j] += alpha * (z[j] - x[j]);
                }
            }
            for j in 0..n {
                if passive[j] && x[j] <= 1e-14 {
                    x[j] = 0.0;
                    passive[j] = false;
                }
            }
            if !passive.iter().any(|&p| p) {
                break;
            }
        }

        for i in 0..m {
            let mut acc = b[i];
            for j in 0..n {
                if x[j] != 0.0 {
                    acc -= a[i * n + j] * x[j];
                }
            }
            residual[i] = acc;
        }
    }

    NnlsResult { x, residual }
}

/// Least squares on the passive columns via ridge + refinement; clamped
/// variables are returned as exact zeros.
fn ls_on_passive(m: usize, n: usize, a: &[f64], b: &[f64], passive: &[bool]) -> Vec<f64> {
    let idx: Vec<usize> = (0..n).filter(|&j| passive[j]).collect();
    let k = idx.len();
    let mut z = vec![0.0f64; n];
    if k == 0 {
        return z;
    }

    // Gram matrix and right-hand side of the normal equations.
    let mut g = vec![0.0f64; k * k];
    let mut rhs = vec![0.0f64; k];
    for (p, &jp) in idx.iter().enumerate() {
        for (q, &jq) in idx.iter().enumerate().skip(p) {
            let mut acc = 0.0;
            for i in 0..m {
                acc += a[i * n + jp] * a[i * n + jq];
            }
            g[p * k + q] = acc;
            g[q * k + p] = acc;
        }
        let mut acc = 0.0;
        for i in 0..m {
            acc += a[i * n + jp] * b[i];
        }
        rhs[p] = acc;
    }

    let trace: f64 = (0..k).map(|p| g[p * k + p]).sum();
    let mut ridge = 1e-12 * (trace / k as f64).max(1e-30);
    let chol = loop {
        match cholesky(k, &g, ridge) {
            Some(l) => break l,
            None => ridge *= 100.0,
        }
    };

    let mut sol = chol_solve(k, &chol, &rhs);
    // Refinement pushes the ridge bias out of the fit.
    for _ in 0..4 {
        let mut resid = vec![0.0f64; m];
        for i in 0..m {
            let mut acc = b[i];
            for (p, &jp) in idx.iter().enumerate() {
                acc -= a[i * n + jp] * sol[p];
            }
            resid[i] = acc;
        }
        let mut corr_rhs = vec![0.0f64; k];
        for (p, &jp) in idx.iter().enumerate() {
            let mut acc = 0.0;
            for i in 0..m {
                acc += a[i * n + jp] * resid[i];
            }
            corr_rhs[p] = acc;
        }
        let corr = chol_solve(k, &chol, &corr_rhs);
        let mut moved = 0.0f64;
        for p in 0..k {
            sol[p] += corr[p];
            moved = moved.max(corr[p].abs());
        }
        if moved < 1e-15 {
            break;
        }
    }

    for (p, &jp) in idx.iter().enumerate() {
        z[jp] = sol[p];
    }
    z
}

/// Cholesky of G + ridge*I; None if a pivot degenerates.
fn cholesky(k: usize, g: &[f64], ridge: f64) -> Option<Vec<f64>> {
    let mut l = vec![0.0f64; k * k];
    for i in 0..k {
        for j in 0..=i {
            let mut acc = g[i * k + j];
            if i == j {
                acc += ridge;
            }
            for t in 0..j {
                acc -= l[i * k + t] * l[j * k + t];
            }
            if i == j {
                if acc <= 0.0 {
                    return None;
                }
                l[i * k + i] = acc.sqrt();
            } else {
                l[i * k + j] = acc / l[j * k + j];
            }
        }
    }
    Some(l)
}

fn chol_solve(k: usize, l: &[f64], rhs: &[f64]) -> Vec<f64> {
    let mut y = vec![0.0f64; k];
    for i in 0..k {
        let mut acc = rhs[i];
        for t in 0..i {
            acc -= l[i * k + t] * y[t];
        }
        y[i] = acc / l[i * k + i];
    }
    let mut x = vec![0.0f64; k];
    for i in (0..k).rev() {
        let mut acc = y[i];
        for t in (i + 1)..k {
            acc -= l[t * k + i] * x[t];
        }
        x[i] = acc / l[i * k + i];
    }
    x
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn residual_norm2(r: &[f64]) -> f64 {
        r.iter().map(|v| v * v).sum::<f64>().sqrt()
    }

    #[test]
    fn exact_fit_when_solution_is_nonnegative() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        for _ in 0..100 {
            let m = rng.gen_range(3..9);
            let n = rng.gen_range(2..7);
            let a: Vec<f64> = (0..m * n).map(|_| rng.gen_range(0.0..1.0)).collect();
            let xstar: Vec<f64> = (0..n)
                .map(|_| if rng.gen_bool(0.5) { rng.gen_range(0.0..2.0) } else { 0.0 })
                .collect();
            let mut b = vec![0.0; m];
            for i in 0..m {
                for j in 0..n {
                    b[i] += a[i * n + j] * xstar[j];
                }
            }
            let sol = nnls(m, n, &a, &b);
            assert!(
                sol.max_abs_residual() <= 1e-9,
                "residual {} too large",
                sol.max_abs_residual()
            );
        }
    }

    #[test]
    fn duplicate_columns_still_fit() {
        // Two identical columns; any split of the weight fits exactly.
        let a = [0.3, 0.3, 0.7, 0.7]; // 2x2
        let b = [0.3, 0.7];
        let sol = nnls(2, 2, &a, &b);
        assert!(sol.max_abs_residual() <= 1e-10);
        assert!((sol.x[0] + sol.x[1] - 1.0).abs() <= 1e-9);
    }

    #[test]
    fn known_infeasible_system() {
        // Column (1,1), target (2,0): best x is 1 with residual (1,-1).
        let a = [1.0, 1.0];
        let b = [2.0, 0.0];
        let sol = nnls(2, 1, &a, &b);
        assert!((sol.x[0] - 1.0).abs() <= 1e-12);
        assert!((sol.max_abs_residual() - 1.0).abs() <= 1e-12);
    }

    #[test]
    fn kkt_conditions_on_random_problems() {
        // Independent optimality check: at the solution, the gradient
        // A^T(Ax - b) must vanish on positive coordinates and be
        // nonnegative on clamped ones.
        let mut rng = ChaCha8Rng::seed_from_u64(202);
        for trial in 0..200 {
            let m = rng.gen_range(2..8);
            let n = rng.gen_range(1..8);
            let a: Vec<f64> = (0..m * n).map(|_| rng.gen_range(-1.0..1.0)).collect();
            let b: Vec<f64> = (0..m).map(|_| rng.gen_range(-1.0..1.0)).collect();
            let sol = nnls(m, n, &a, &b);
            let scale = 1.0 + residual_norm2(&b);
            for j in 0..n {
                let grad: f64 = (0..m).map(|i| -a[i * n + j] * sol.residual[i]).sum();
                if sol.x[j] > 1e-10 {
                    assert!(grad.abs() <= 1e-7 * scale, "trial {trial}: grad {grad} at positive x");
                } else {
                    assert!(grad >= -1e-7 * scale, "trial {trial}: grad {grad} at clamped x");
                }
            }
        }
    }

    #[test]
    fn membership_in_a_segment() {
        // Convex membership pattern used by the condition checks: columns
        // plus a row of ones. Point on the segment fits, point off it
        // leaves a residual comparable to its distance.
        let cols = [[0.9, 0.1], [0.1, 0.9]];
        let build = |v: [f64; 2]| {
            let a = [
                cols[0][0], cols[1][0],
                cols[0][1], cols[1][1],
                1.0, 1.0,
            ];
            let b = [v[0], v[1], 1.0];
            nnls(3, 2, &a, &b)
        };
        let inside = build([0.5, 0.5]);
        assert!(inside.max_abs_residual() <= 1e-10);
        let outside = build([0.95, 0.05]);
        assert!(outside.max_abs_residual() > 1e-3);
    }
}
