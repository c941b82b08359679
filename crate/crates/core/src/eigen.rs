//! Largest eigenpairs of a symmetric operator given only by its action.
//!
//! Restarted block Krylov iteration with full reorthogonalization and
//! Rayleigh–Ritz extraction. A block start resolves repeated eigenvalues
//! up to the block size.

use nalgebra::{DMatrix, SymmetricEigen};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy)]
pub struct EigOptions {
    pub block: usize,
    /// Krylov blocks per restart.
    pub steps: usize,
    /// Residual bound `‖Ay − θy‖ ≤ tol·|θ_max|`.
    pub tol: f64,
    pub max_restarts: usize,
    pub seed: u64,
}

impl Default for EigOptions {
    fn default() -> Self {
        Self { block: 4, steps: 12, tol: 1e-10, max_restarts: 60, seed: 0x5eed }
    }
}

#[derive(Debug, Clone)]
pub struct EigPairs {
    /// Descending.
    pub values: Vec<f64>,
    pub vectors: Vec<Vec<f64>>,
    pub residuals: Vec<f64>,
    pub restarts: usize,
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

fn norm(a: &[f64]) -> f64 {
    dot(a, a).sqrt()
}

/// Orthonormalizes `block` against `basis` and itself (two Gram–Schmidt
/// passes); nearly dependent vectors are dropped.
fn orthonormalize(block: Vec<Vec<f64>>, basis: &[Vec<f64>]) -> Vec<Vec<f64>> {
    let mut out: Vec<Vec<f64>> = Vec::with_capacity(block.len());
    for mut v in block {
        let start = norm(&v);
        if !(start > 0.0) {
            continue;
        }
        for _ in 0..2 {
            for q in basis.iter().chain(out.iter()) {
                let c = dot(q, &v);
                v.iter_mut().zip(q).for_each(|(x, y)| *x -= c * y);
            }
        }
        let nv = norm(&v);
        if nv > 1e-10 * start {
            v.iter_mut().for_each(|x| *x /= nv);
            out.push(v);
        }
    }
    out
}

fn combine(vs: &[Vec<f64>], coef: impl Iterator<Item = f64>) -> Vec<f64> {
    let mut y = vec![0.0; vs[0].len()];
    for (v, c) in vs.iter().zip(coef) {
        y.iter_mut().zip(v).for_each(|(a, b)| *a += c * b);
    }
    y
}

/// The `k` largest (algebraic) eigenpairs of the symmetric map `apply` on
/// `ℝ^len`.
pub fn top_eigenpairs<A>(apply: A, len: usize, k: usize, opts: &EigOptions) -> Result<EigPairs>
where
    A: Fn(&[f64]) -> Vec<f64> + Sync,
{
    let b = opts.block.max(k);
    if k == 0 || b * opts.steps > len {
        return Err(Error::InvalidParams(format!(
            "cannot extract {k} eigenpairs with block {b}×{} on dimension {len}",
            opts.steps
        )));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(opts.seed);
    let mut start: Vec<Vec<f64>> =
        (0..b).map(|_| (0..len).map(|_| rng.gen::<f64>() - 0.5).collect()).collect();
    let mut worst = f64::INFINITY;

    for restart in 0..opts.max_restarts {
        let mut basis: Vec<Vec<f64>> = Vec::new();
        let mut images: Vec<Vec<f64>> = Vec::new();
        let mut cur = start;
        for _ in 0..opts.steps {
            cur = orthonormalize(cur, &basis);
            if cur.is_empty() {
                break;
            }
            let img: Vec<Vec<f64>> = cur.par_iter().map(|v| apply(v)).collect();
            basis.extend(cur);
            images.extend(img.iter().cloned());
            cur = img;
        }
        let m = basis.len();
        if m < k {
            return Err(Error::NonConvergence { iterations: restart, last_change: f64::NAN });
        }
        let t = DMatrix::from_fn(m, m, |i, j| {
            0.5 * (dot(&basis[i], &images[j]) + dot(&basis[j], &images[i]))
        });
        let eig = SymmetricEigen::new(t);
        let mut order: Vec<usize> = (0..m).collect();
        order.sort_by(|&i, &j| eig.eigenvalues[j].total_cmp(&eig.eigenvalues[i]));

        let scale = eig.eigenvalues.iter().fold(0.0f64, |a, v| a.max(v.abs())).max(1e-300);
        let ritz: Vec<(f64, Vec<f64>, f64)> = order
            .iter()
            .take(b)
            .map(|&c| {
                let col = eig.eigenvectors.column(c);
                let theta = eig.eigenvalues[c];
                let y = combine(&basis, col.iter().copied());
                let ay = combine(&images, col.iter().copied());
                let r = ay.iter().zip(&y).map(|(a, v)| (a - theta * v).powi(2)).sum::<f64>().sqrt();
                (theta, y, r)
            })
            .collect();
        worst = ritz.iter().take(k).fold(0.0f64, |a, r| a.max(r.2)) / scale;
        if worst <= opts.tol {
            let (values, rest): (Vec<f64>, Vec<(Vec<f64>, f64)>) =
                ritz.into_iter().take(k).map(|(t, y, r)| (t, (y, r))).unzip();
            let (vectors, residuals) = rest.into_iter().unzip();
            return Ok(EigPairs { values, vectors, residuals, restarts: restart });
        }
        start = ritz.into_iter().map(|r| r.1).collect();
    }
    Err(Error::NonConvergence { iterations: opts.max_restarts, last_change: worst })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn diagonal_operator_with_repeated_top() {
        let diag: Vec<f64> = (0..300).map(|i| if i < 3 { 5.0 } else { 1.0 / (i as f64) }).collect();
        let op = |v: &[f64]| v.iter().zip(&diag).map(|(a, d)| a * d).collect::<Vec<_>>();
        let res = top_eigenpairs(op, 300, 4, &EigOptions::default()).unwrap();
        for v in &res.values[..3] {
            assert!((v - 5.0).abs() < 1e-10);
        }
        assert!((res.values[3] - 1.0 / 3.0).abs() < 1e-10);
    }

    #[test]
    fn second_difference_matrix() {
        let n = 60;
        let op = |v: &[f64]| {
            (0..n)
                .map(|i| {
                    let l = if i > 0 { v[i - 1] } else { 0.0 };
                    let r = if i + 1 < n { v[i + 1] } else { 0.0 };
                    2.0 * v[i] - l - r
                })
                .collect::<Vec<_>>()
        };
        let opts = EigOptions { steps: 12, max_restarts: 400, tol: 1e-9, ..Default::default() };
        let res = top_eigenpairs(op, n, 2, &opts).unwrap();
        for (j, v) in res.values.iter().enumerate() {
            let kk = (n - j) as f64;
            let exact = 2.0 - 2.0 * (std::f64::consts::PI * kk / (n as f64 + 1.0)).cos();
            assert!((v - exact).abs() < 1e-8, "{v} vs {exact}");
        }
    }

    #[test]
    fn too_small_space_is_rejected() {
        let op = |v: &[f64]| v.to_vec();
        assert!(top_eigenpairs(op, 10, 2, &EigOptions::default()).is_err());
    }
}
