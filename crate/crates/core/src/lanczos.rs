//! Krylov-space eigensolvers for sparse symmetric matrices.

use faer::Mat;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::dense::SymmetricEigen;
use crate::error::{Error, Result};
use crate::sparse::SparseSymMatrix;

#[inline]
pub(crate) fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

#[inline]
pub(crate) fn axpy(alpha: f64, x: &[f64], y: &mut [f64]) {
    y.iter_mut().zip(x).for_each(|(yi, xi)| *yi += alpha * xi);
}

pub(crate) fn normalize(v: &mut [f64]) -> f64 {
    let n = dot(v, v).sqrt();
    if n > 0.0 {
        v.iter_mut().for_each(|x| *x /= n);
    }
    n
}

/// Classical Gram-Schmidt, applied twice; returns the projection coefficients.
fn orthogonalize(basis: &[Vec<f64>], w: &mut [f64]) -> Vec<f64> {
    let mut coeffs = vec![0.0; basis.len()];
    for _ in 0..2 {
        for (c, b) in coeffs.iter_mut().zip(basis) {
            let h = dot(b, w);
            axpy(-h, b, w);
            *c += h;
        }
    }
    coeffs
}

fn sorted_eigen(t: &Mat<f64>) -> Result<(Vec<f64>, Mat<f64>)> {
    let eig = SymmetricEigen::new(t)?;
    Ok((eig.values, eig.vectors))
}

fn combine(basis: &[Vec<f64>], coeffs: impl Iterator<Item = f64>) -> Vec<f64> {
    let mut out = vec![0.0; basis[0].len()];
    for (b, c) in basis.iter().zip(coeffs) {
        axpy(c, b, &mut out);
    }
    out
}

/// Deterministic pseudo-random unit start vector.
pub(crate) fn start_vector(dim: usize, seed: u64) -> Vec<f64> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut v: Vec<f64> = (0..dim).map(|_| rng.gen::<f64>() - 0.5).collect();
    normalize(&mut v);
    v
}

#[derive(Debug, Clone, Copy)]
pub struct LanczosParams {
    /// Maximum Krylov dimension before a restart.
    pub krylov_dim: usize,
    /// Residual tolerance relative to the spectral scale.
    pub tol: f64,
    pub max_restarts: usize,
}

impl Default for LanczosParams {
    fn default() -> Self {
        Self {
            krylov_dim: 64,
            tol: 1e-10,
            max_restarts: 400,
        }
    }
}

/// The `k` algebraically smallest eigenpairs by thick-restart Lanczos
/// with full reorthogonalization.
pub fn thick_restart_lowest(
    a: &SparseSymMatrix,
    k: usize,
    params: &LanczosParams,
) -> Result<Vec<(f64, Vec<f64>)>> {
    let n = a.dim();
    assert!(k >= 1 && k <= n);
    let m = params.krylov_dim.max(2 * k + 8).min(n);
    let scale = a.norm_bound().max(1e-300);

    let mut v: Vec<Vec<f64>> = vec![start_vector(n, 0x5eed_1a2c)];
    let mut t = Mat::<f64>::zeros(m, m);
    let mut j = 0usize;
    let mut best = f64::INFINITY;
    let mut w = vec![0.0; n];

    for restart in 0..=params.max_restarts {
        let mut beta;
        loop {
            a.matvec_into(&v[j], &mut w);
            let h = orthogonalize(&v, &mut w);
            for (i, &hi) in h.iter().enumerate() {
                t[(i, j)] = hi;
                t[(j, i)] = hi;
            }
            beta = dot(&w, &w).sqrt();
            if j + 1 == m || beta <= 1e-13 * scale {
                break;
            }
            let mut next = w.clone();
            next.iter_mut().for_each(|x| *x /= beta);
            v.push(next);
            j += 1;
        }

        let size = j + 1;
        let (theta, s) = sorted_eigen(&Mat::from_fn(size, size, |r, c| t[(r, c)]))?;
        let invariant = beta <= 1e-13 * scale;
        let resid: Vec<f64> = (0..size).map(|i| (beta * s[(size - 1, i)]).abs()).collect();
        let worst = resid.iter().take(k).fold(0.0f64, |acc, &r| acc.max(r));
        best = best.min(worst);

        if worst <= params.tol * scale || invariant {
            if invariant && size < k {
                return Err(Error::NonConvergence {
                    iterations: restart,
                    residual: worst,
                });
            }
            return Ok((0..k)
                .map(|i| {
                    let mut x = combine(&v, (0..size).map(|r| s[(r, i)]));
                    normalize(&mut x);
                    (theta[i], x)
                })
                .collect());
        }

        // thick restart: keep the lowest Ritz vectors plus the residual direction
        let keep = (k + (m - k) / 2).min(size - 1);
        let mut kept: Vec<Vec<f64>> = (0..keep)
            .map(|i| combine(&v, (0..size).map(|r| s[(r, i)])))
            .collect();
        let mut r = w.clone();
        r.iter_mut().for_each(|x| *x /= beta);
        kept.push(r);
        v = kept;
        t = Mat::zeros(m, m);
        for i in 0..keep {
            t[(i, i)] = theta[i];
            let c = beta * s[(size - 1, i)];
            t[(i, keep)] = c;
            t[(keep, i)] = c;
        }
        j = keep;
    }
    Err(Error::NonConvergence {
        iterations: params.max_restarts,
        residual: best,
    })
}

/// Ritz vector of `a` nearest `target` in the Krylov space of `start`,
/// with its residual. The iteration stops once that residual drops below
/// `resid_tol`, when `beta` falls below `breakdown`, or after `limit` steps.
fn krylov_ritz(
    a: &SparseSymMatrix,
    start: &[f64],
    target: f64,
    window: f64,
    resid_tol: f64,
    breakdown: f64,
    limit: usize,
) -> Result<Option<(Vec<f64>, f64)>> {
    let n = a.dim();
    let mut first = start.to_vec();
    if normalize(&mut first) == 0.0 {
        return Ok(None);
    }
    let mut v = vec![first];
    let mut diag: Vec<f64> = Vec::new();
    let mut off: Vec<f64> = Vec::new();
    let mut w = vec![0.0; n];
    loop {
        let j = v.len() - 1;
        a.matvec_into(&v[j], &mut w);
        let h = orthogonalize(&v, &mut w);
        diag.push(h[j]);
        let beta = dot(&w, &w).sqrt();
        let size = v.len();
        let t = Mat::from_fn(size, size, |r, c| {
            if r == c {
                diag[r]
            } else if r + 1 == c {
                off[r]
            } else if c + 1 == r {
                off[c]
            } else {
                0.0
            }
        });
        let (theta, s) = sorted_eigen(&t)?;
        let hit = (0..size)
            .filter(|&i| (theta[i] - target).abs() < window)
            .min_by(|&x, &y| (theta[x] - target).abs().total_cmp(&(theta[y] - target).abs()));
        let resid = hit.map(|i| (beta * s[(size - 1, i)]).abs());
        if resid.is_some_and(|r| r <= resid_tol) || beta <= breakdown || size >= limit.min(n) {
            return Ok(hit.map(|i| {
                let mut y = combine(&v, (0..size).map(|r| s[(r, i)]));
                normalize(&mut y);
                (y, resid.unwrap_or(f64::INFINITY))
            }));
        }
        off.push(beta);
        let mut next = w.clone();
        next.iter_mut().for_each(|x| *x /= beta);
        v.push(next);
    }
}

/// Orthogonal projection of `start` onto the eigenspace of `a` with
/// eigenvalue `target`, for an operator whose spectrum is a known set of
/// well-separated values (at most `max_steps` of them). Returns `None`
/// when the projection vanishes.
///
/// A first Lanczos pass from `start` finds the direction of the
/// projection; further passes started from that direction remove the
/// contamination left by rounding near Krylov breakdown. The length of
/// the projection follows from `|P s|^2 = <s|P|s>`.
pub fn project_onto_eigenspace(
    a: &SparseSymMatrix,
    start: &[f64],
    target: f64,
    cluster_tol: f64,
    max_steps: usize,
) -> Result<Option<Vec<f64>>> {
    let scale = a.norm_bound().max(1.0);
    let norm0 = dot(start, start).sqrt();
    if norm0 == 0.0 {
        return Ok(None);
    }
    let window = cluster_tol * scale;
    let limit = max_steps.max(2);
    let Some((mut u, _)) = krylov_ritz(a, start, target, window, 1e-12 * scale, 1e-9 * scale, limit)? else {
        return Ok(None);
    };
    let mut resid = f64::INFINITY;
    for _ in 0..4 {
        match krylov_ritz(a, &u, target, window, 1e-13 * scale, 1e-14 * scale, limit)? {
            Some((y, r)) => {
                u = y;
                resid = r;
            }
            None => return Ok(None),
        }
        if resid <= 1e-11 * scale {
            break;
        }
    }
    if resid > 1e-8 * scale {
        return Err(Error::NonConvergence {
            iterations: limit,
            residual: resid,
        });
    }
    let weight = dot(&u, start);
    u.iter_mut().for_each(|x| *x *= weight);
    Ok(Some(u))
}
