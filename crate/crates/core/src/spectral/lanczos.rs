//! Lanczos iteration with full reorthogonalization and locking restarts.

use crate::error::{Error, Result};
use nalgebra::{DMatrix, SymmetricEigen};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

/// Relative residual bound `|β_j s_ji| ≤ tol·θ_i` for a converged Ritz pair.
pub const RITZ_TOLERANCE: f64 = 1e-10;

pub(crate) fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

pub(crate) fn norm(a: &[f64]) -> f64 {
    dot(a, a).sqrt()
}

fn axpy(y: &mut [f64], a: f64, x: &[f64]) {
    for (yi, xi) in y.iter_mut().zip(x) {
        *yi += a * xi;
    }
}

fn orthogonalize(w: &mut [f64], against: &[&[f64]]) {
    // two passes of classical Gram–Schmidt
    for _ in 0..2 {
        for v in against {
            let c = dot(w, v);
            axpy(w, -c, v);
        }
    }
}

pub(crate) struct Eigenpairs {
    /// Largest eigenvalues of the operator, descending.
    pub values: Vec<f64>,
    pub vectors: Vec<Vec<f64>>,
    pub iterations: usize,
}

/// The `m` largest eigenpairs of a symmetric positive operator on the
/// orthogonal complement of the unit vector `deflate`.
///
/// Each run grows a Krylov basis until its top Ritz pairs converge; converged
/// pairs are locked and the next run starts from a fresh random vector
/// orthogonal to everything locked, so repeated eigenvalues are recovered.
/// Stops when a run finds nothing above the current `m`-th value.
pub(crate) fn largest<F>(mut op: F, n: usize, m: usize, deflate: &[f64], max_iterations: usize, seed: u64) -> Result<Eigenpairs>
where
    F: FnMut(&[f64], &mut [f64]) -> Result<()>,
{
    let dim = n.saturating_sub(1);
    if m == 0 || m > dim {
        return Err(Error::Invalid(format!("cannot compute {m} eigenpairs of a {dim}-dimensional problem")));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut locked: Vec<(f64, Vec<f64>)> = Vec::new();
    let mut iterations = 0usize;
    let max_basis = (3 * m + 40).min(dim);
    loop {
        let room = dim - locked.len();
        if room == 0 {
            break;
        }
        let mut start: Vec<f64> = (0..n).map(|_| rng.gen::<f64>() - 0.5).collect();
        {
            let mut against: Vec<&[f64]> = vec![deflate];
            against.extend(locked.iter().map(|(_, v)| v.as_slice()));
            orthogonalize(&mut start, &against);
        }
        let s = norm(&start);
        start.iter_mut().for_each(|x| *x /= s);

        let mut basis: Vec<Vec<f64>> = vec![start];
        let mut alpha: Vec<f64> = Vec::new();
        let mut beta: Vec<f64> = Vec::new();
        let want = m.min(room);
        let mut found: Vec<(f64, Vec<f64>)> = Vec::new();
        let mut w = vec![0.0; n];
        loop {
            if iterations >= max_iterations {
                return Err(Error::NoConvergence { iterations });
            }
            let j = basis.len() - 1;
            op(&basis[j], &mut w)?;
            iterations += 1;
            let a = dot(&w, &basis[j]);
            alpha.push(a);
            {
                let mut against: Vec<&[f64]> = vec![deflate];
                against.extend(locked.iter().map(|(_, v)| v.as_slice()));
                against.extend(basis.iter().map(|v| v.as_slice()));
                orthogonalize(&mut w, &against);
            }
            let b = norm(&w);
            let k = alpha.len();
            let mut t = DMatrix::zeros(k, k);
            for i in 0..k {
                t[(i, i)] = alpha[i];
                if i + 1 < k {
                    t[(i, i + 1)] = beta[i];
                    t[(i + 1, i)] = beta[i];
                }
            }
            let eig = SymmetricEigen::new(t);
            let mut order: Vec<usize> = (0..k).collect();
            order.sort_by(|&x, &y| eig.eigenvalues[y].total_cmp(&eig.eigenvalues[x]));
            let exhausted = b <= 1e-14 * a.abs().max(1.0) || k >= room;
            let top = &order[..want.min(k)];
            let converged: Vec<bool> = top
                .iter()
                .map(|&i| {
                    let theta = eig.eigenvalues[i];
                    exhausted || (b * eig.eigenvectors[(k - 1, i)]).abs() <= RITZ_TOLERANCE * theta.abs()
                })
                .collect();
            let done = top.len() == want && converged.iter().all(|&c| c);
            if done || exhausted || k >= max_basis {
                for (&i, &c) in top.iter().zip(&converged) {
                    if !c {
                        continue;
                    }
                    let mut y = vec![0.0; n];
                    for (r, v) in basis.iter().enumerate() {
                        axpy(&mut y, eig.eigenvectors[(r, i)], v);
                    }
                    let s = norm(&y);
                    y.iter_mut().for_each(|x| *x /= s);
                    found.push((eig.eigenvalues[i], y));
                }
                break;
            }
            beta.push(b);
            basis.push(w.iter().map(|x| x / b).collect());
        }
        let threshold = if locked.len() >= m {
            locked[m - 1].0
        } else {
            f64::NEG_INFINITY
        };
        let improved = found.iter().any(|(theta, _)| *theta > threshold * (1.0 + RITZ_TOLERANCE));
        locked.extend(found);
        locked.sort_by(|x, y| y.0.total_cmp(&x.0));
        if locked.len() >= m && !improved {
            break;
        }
    }
    locked.truncate(m);
    if locked.len() < m {
        return Err(Error::NoConvergence { iterations });
    }
    Ok(Eigenpairs {
        values: locked.iter().map(|(t, _)| *t).collect(),
        vectors: locked.into_iter().map(|(_, v)| v).collect(),
        iterations,
    })
}
