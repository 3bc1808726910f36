//! Lowest eigenvalues of a real symmetric operator given only its action on
//! vectors, by Lanczos iteration with full reorthogonalization.

use nalgebra::{DMatrix, SymmetricEigen};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy)]
pub struct LanczosConfig {
    pub max_iter: usize,
    /// Convergence when every requested Ritz residual is below
    /// `tol * max(1, |theta|)`.
    pub tol: f64,
    pub seed: u64,
}

impl Default for LanczosConfig {
    fn default() -> Self {
        Self { max_iter: 300, tol: 1e-10, seed: 0x5eed }
    }
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

/// Returns the `k` smallest eigenvalues (ascending, with multiplicity as seen by
/// the Krylov space) of the `dim`-dimensional operator `apply(x, y)`: `y = A x`.
///
/// The random start vector has components in every symmetry sector, so
/// eigenvalues are not lost to conserved quantities of `A`.
pub fn lowest_eigenvalues<F>(dim: usize, k: usize, apply: F, cfg: LanczosConfig) -> Result<Vec<f64>>
where
    F: Fn(&[f64], &mut [f64]),
{
    if dim == 0 || k == 0 {
        return Err(Error::invalid("empty eigenproblem"));
    }
    let k = k.min(dim);
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let mut q: Vec<f64> = (0..dim).map(|_| rng.gen::<f64>() - 0.5).collect();
    let norm = dot(&q, &q).sqrt();
    q.iter_mut().for_each(|x| *x /= norm);

    let mut basis: Vec<Vec<f64>> = Vec::new();
    let mut alpha: Vec<f64> = Vec::new();
    let mut beta: Vec<f64> = Vec::new();
    let mut w = vec![0.0; dim];
    let mut last_residual = f64::INFINITY;

    for it in 0..cfg.max_iter.min(dim) {
        apply(&q, &mut w);
        let a = dot(&q, &w);
        basis.push(q.clone());
        alpha.push(a);
        // Full reorthogonalization, twice for stability.
        for _ in 0..2 {
            for v in &basis {
                let c = dot(v, &w);
                w.iter_mut().zip(v).for_each(|(x, y)| *x -= c * y);
            }
        }
        let b = dot(&w, &w).sqrt();

        let m = alpha.len();
        let mut t = DMatrix::<f64>::zeros(m, m);
        for i in 0..m {
            t[(i, i)] = alpha[i];
            if i + 1 < m {
                t[(i, i + 1)] = beta[i];
                t[(i + 1, i)] = beta[i];
            }
        }
        let eig = SymmetricEigen::new(t);
        let mut order: Vec<usize> = (0..m).collect();
        order.sort_by(|&i, &j| eig.eigenvalues[i].total_cmp(&eig.eigenvalues[j]));

        let invariant = b <= 1e-14 * alpha.iter().fold(1.0f64, |s, x| s.max(x.abs()));
        if m >= k || invariant {
            // Residual of Ritz pair i is |b * (last component of its eigenvector)|.
            let residual = order
                .iter()
                .take(k)
                .map(|&i| (b * eig.eigenvectors[(m - 1, i)]).abs() / eig.eigenvalues[i].abs().max(1.0))
                .fold(0.0f64, f64::max);
            last_residual = residual;
            if residual <= cfg.tol || invariant || it + 1 == dim {
                return Ok(order.iter().take(k).map(|&i| eig.eigenvalues[i]).collect());
            }
        }
        beta.push(b);
        q.iter_mut().zip(&w).for_each(|(x, y)| *x = y / b);
    }
    Err(Error::NoConvergence { residual: last_residual })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn diagonal_operator() {
        let d: Vec<f64> = (0..50).map(|i| (i as f64 * 0.37).sin() * 3.0).collect();
        let mut sorted = d.clone();
        sorted.sort_by(f64::total_cmp);
        let ev = lowest_eigenvalues(50, 2, |x, y| y.iter_mut().zip(x).zip(&d).for_each(|((y, x), d)| *y = d * x), LanczosConfig::default()).unwrap();
        assert!((ev[0] - sorted[0]).abs() < 1e-10);
        assert!((ev[1] - sorted[1]).abs() < 1e-10);
    }

    #[test]
    fn path_laplacian_against_dense() {
        let n = 40;
        let apply = |x: &[f64], y: &mut [f64]| {
            for i in 0..n {
                let mut s = 2.0 * x[i];
                if i > 0 {
                    s -= x[i - 1];
                }
                if i + 1 < n {
                    s -= x[i + 1];
                }
                y[i] = s;
            }
        };
        let ev = lowest_eigenvalues(n, 2, apply, LanczosConfig::default()).unwrap();
        for (k, e) in ev.iter().enumerate() {
            let exact = 2.0 - 2.0 * ((k + 1) as f64 * std::f64::consts::PI / (n + 1) as f64).cos();
            assert!((e - exact).abs() < 1e-9, "{e} vs {exact}");
        }
    }

    #[test]
    fn iteration_cap_reports_residual() {
        let d: Vec<f64> = (0..500).map(|i| i as f64 / 500.0).collect();
        let cfg = LanczosConfig { max_iter: 5, ..Default::default() };
        let r = lowest_eigenvalues(500, 2, |x, y| y.iter_mut().zip(x).zip(&d).for_each(|((y, x), d)| *y = d * x), cfg);
        assert!(matches!(r, Err(Error::NoConvergence { residual }) if residual > 0.0));
    }
}
