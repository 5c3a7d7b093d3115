//! Thick-restart Lanczos (Krylov–Schur form) with full reorthogonalization.
//!
//! The projected matrix `T = Vᵀ A V` is kept dense. Each new column is
//! orthogonalized against the whole basis by classical Gram–Schmidt with a
//! DGKS second pass, and the Gram–Schmidt coefficients are the entries of `T`. On
//! restart the lowest Ritz vectors are kept, `T` collapses to their Ritz
//! values, and the residual direction becomes the next basis vector; the
//! arrow-shaped coupling that results is picked up by the same coefficients.

use nalgebra::{DMatrix, SymmetricEigen};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::hamiltonian::LinearOperator;
use crate::linalg::{axpy, combine, dot, multi_dot, multi_sub, norm, normalize};

#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct SolverOptions {
    /// Residual-norm target `‖A v − θ v‖` for the lowest pair.
    pub tolerance: f64,
    /// Residual target for the higher requested pairs.
    pub excited_tolerance: f64,
    /// Budget of operator applications.
    pub max_iter: usize,
    pub seed: u64,
    /// Largest Krylov basis held in memory before a restart.
    pub krylov_dim: usize,
    /// Ritz vectors retained across a restart, beyond the requested ones.
    pub extra_kept: usize,
    /// Relative weight of seeded noise mixed into a warm-start vector.
    pub warm_noise: f64,
    /// Start-block size of a ground-state solve: 2 resolves a degenerate
    /// ground level and converges `E1`, 1 is cheaper and only bounds `E1`.
    pub block: usize,
}

impl Default for SolverOptions {
    fn default() -> Self {
        Self {
            tolerance: 1e-12,
            excited_tolerance: 1e-6,
            max_iter: 4000,
            seed: 1,
            krylov_dim: 48,
            extra_kept: 6,
            warm_noise: 1e-3,
            block: 2,
        }
    }
}

#[derive(Debug, Clone)]
pub struct Eigenpairs {
    pub values: Vec<f64>,
    pub vectors: Vec<Vec<f64>>,
    /// Residual norms; the lowest one is recomputed with an explicit product.
    pub residuals: Vec<f64>,
    pub iterations: usize,
    /// First Ritz value above the requested ones (unconverged upper bound).
    pub next_ritz: Option<f64>,
}

pub(crate) fn random_unit(dim: usize, seed: u64) -> Vec<f64> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut v: Vec<f64> = (0..dim).map(|_| rng.gen_range(-1.0..1.0)).collect();
    normalize(&mut v);
    v
}

fn start_vector(dim: usize, opts: &SolverOptions, warm: Option<&[f64]>) -> Result<Vec<f64>> {
    let mut v = random_unit(dim, opts.seed);
    if let Some(w) = warm {
        if w.len() != dim {
            return Err(Error::DimensionMismatch {
                expected: dim,
                got: w.len(),
            });
        }
        let wn = norm(w);
        if wn > 0.0 && wn.is_finite() {
            for (vi, wi) in v.iter_mut().zip(w) {
                *vi = wi / wn + opts.warm_noise * *vi;
            }
            normalize(&mut v);
        }
    }
    Ok(v)
}

/// Orthogonalizes `w` against `basis` twice; returns the summed coefficients.
fn orthogonalize(basis: &[Vec<f64>], w: &mut [f64]) -> Vec<f64> {
    let mut total = vec![0.0; basis.len()];
    for _ in 0..2 {
        let c = multi_dot(basis, w);
        multi_sub(basis, &c, w);
        for (t, ci) in total.iter_mut().zip(c) {
            *t += ci;
        }
    }
    total
}

/// Norm-drop ratio below which a second Gram–Schmidt pass is required.
const DGKS_RATIO: f64 = std::f64::consts::FRAC_1_SQRT_2;

/// Full reorthogonalization of a new Krylov direction.
///
/// The large components along `basis[local..]` are removed first; a
/// classical Gram–Schmidt pass over the whole basis follows, repeated once
/// more if it shrinks `w` by more than [`DGKS_RATIO`].
fn reorthogonalize(basis: &[Vec<f64>], local: usize, w: &mut [f64]) -> Vec<f64> {
    let mut total = vec![0.0; basis.len()];
    let near = &basis[local..];
    let c = multi_dot(near, w);
    multi_sub(near, &c, w);
    for (t, ci) in total[local..].iter_mut().zip(c) {
        *t += ci;
    }
    for _ in 0..2 {
        let before = norm(w);
        let c = multi_dot(basis, w);
        multi_sub(basis, &c, w);
        for (t, ci) in total.iter_mut().zip(c) {
            *t += ci;
        }
        if norm(w) >= DGKS_RATIO * before {
            break;
        }
    }
    total
}

fn ritz(t: &DMatrix<f64>, size: usize) -> (Vec<f64>, DMatrix<f64>) {
    let sub = t.view((0, 0), (size, size)).into_owned();
    let eig = SymmetricEigen::new(sub);
    let mut order: Vec<usize> = (0..size).collect();
    order.sort_by(|&a, &b| eig.eigenvalues[a].total_cmp(&eig.eigenvalues[b]));
    let values = order.iter().map(|&i| eig.eigenvalues[i]).collect();
    let vectors = DMatrix::from_fn(size, size, |r, c| eig.eigenvectors[(r, order[c])]);
    (values, vectors)
}

/// Lowest `nev` eigenpairs of a symmetric operator.
///
/// The Krylov space is grown from a block of `nev` start vectors, so an
/// eigenspace of multiplicity up to `nev` is resolved in full.
pub fn lowest_eigenpairs<O: LinearOperator + ?Sized>(
    op: &O,
    nev: usize,
    opts: &SolverOptions,
    warm: Option<&[f64]>,
) -> Result<Eigenpairs> {
    let dim = op.dim();
    if nev == 0 || nev > dim {
        return Err(Error::InvalidArgument(format!(
            "cannot compute {nev} eigenpairs of a {dim}-dimensional operator"
        )));
    }
    let block = nev;
    let m = opts.krylov_dim.max(2 * nev + 2).min(dim);
    let keep = (nev + opts.extra_kept).min(m.saturating_sub(nev + 1)).max(nev);
    let mut fresh_seeds = opts.seed.wrapping_mul(0x2545_f491_4f6c_dd1d);
    let mut fresh = |basis: &[Vec<f64>]| -> Option<Vec<f64>> {
        for _ in 0..4 {
            fresh_seeds = fresh_seeds.wrapping_add(0x9e37_79b9_7f4a_7c15);
            let mut v = random_unit(dim, fresh_seeds);
            orthogonalize(basis, &mut v);
            if normalize(&mut v) > 1e-8 {
                return Some(v);
            }
        }
        None
    };

    let mut basis: Vec<Vec<f64>> = Vec::with_capacity(m + block);
    basis.push(start_vector(dim, opts, warm)?);
    for _ in 1..block {
        let v = fresh(&basis).ok_or_else(|| Error::InvalidArgument("degenerate start block".into()))?;
        basis.push(v);
    }
    // Projected matrix including the rows that couple to the unprocessed tail.
    let mut t = DMatrix::<f64>::zeros(m + block + 1, m + block + 1);
    let mut w = vec![0.0; dim];
    let mut processed = 0usize;
    let mut matvecs = 0usize;
    let mut best = (f64::INFINITY, f64::NAN);

    loop {
        let j = processed;
        op.apply(&basis[j], &mut w);
        matvecs += 1;
        let coeffs = reorthogonalize(&basis, j.saturating_sub(block), &mut w);
        for (r, c) in coeffs.into_iter().enumerate() {
            t[(r, j)] = c;
            t[(j, r)] = c;
        }
        let beta = norm(&w);
        processed += 1;
        let scale = t[(j, j)].abs().max(1.0);
        if beta > 1e-13 * scale && basis.len() < dim {
            crate::linalg::scale(1.0 / beta, &mut w);
            let r = basis.len();
            t[(r, j)] = beta;
            t[(j, r)] = beta;
            basis.push(w.clone());
        }
        let k = processed;
        let len = basis.len();
        let (theta, s) = ritz(&t, k);
        let estimates: Vec<f64> = (0..nev.min(k))
            .map(|i| {
                (k..len)
                    .map(|r| {
                        let c: f64 = (0..k).map(|q| t[(r, q)] * s[(q, i)]).sum();
                        c * c
                    })
                    .sum::<f64>()
                    .sqrt()
            })
            .collect();
        if let Some(&r0) = estimates.first() {
            if r0 < best.0 {
                best = (r0, theta[0]);
            }
        }

        let wanted_ready = k >= nev
            && estimates[0] <= opts.tolerance
            && estimates
                .iter()
                .skip(1)
                .all(|&r| r <= opts.excited_tolerance);
        if wanted_ready {
            let vectors: Vec<Vec<f64>> = (0..nev)
                .map(|i| {
                    let col: Vec<f64> = s.column(i).iter().copied().collect();
                    let mut y = combine(&basis[..k], &col, dim);
                    normalize(&mut y);
                    y
                })
                .collect();
            let mut hy = vec![0.0; dim];
            op.apply(&vectors[0], &mut hy);
            matvecs += 1;
            let e0 = dot(&vectors[0], &hy);
            axpy(-e0, &vectors[0], &mut hy);
            let true_residual = norm(&hy);
            if true_residual <= opts.tolerance {
                let mut values = theta[..nev].to_vec();
                values[0] = e0;
                let mut residuals = estimates;
                residuals[0] = true_residual;
                return Ok(Eigenpairs {
                    values,
                    vectors,
                    residuals,
                    iterations: matvecs,
                    next_ritz: theta.get(nev).copied(),
                });
            }
            best = (true_residual, e0);
        }

        if matvecs >= opts.max_iter {
            return Err(Error::NotConverged {
                iterations: matvecs,
                residual: best.0,
                energy: best.1,
            });
        }

        if processed == basis.len() {
            // Invariant subspace reached: continue with a fresh direction.
            match fresh(&basis) {
                Some(v) => basis.push(v),
                None => {
                    return Err(Error::NotConverged {
                        iterations: matvecs,
                        residual: best.0,
                        energy: best.1,
                    })
                }
            }
        }

        if processed < m {
            continue;
        }

        // Thick restart: lowest Ritz vectors followed by the unprocessed tail.
        let tail: Vec<Vec<f64>> = basis.drain(k..).collect();
        let mut coupling = DMatrix::<f64>::zeros(tail.len(), keep);
        for q in 0..tail.len() {
            for i in 0..keep {
                coupling[(q, i)] = (0..k).map(|c| t[(k + q, c)] * s[(c, i)]).sum();
            }
        }
        let kept: Vec<Vec<f64>> = (0..keep)
            .map(|i| {
                let col: Vec<f64> = s.column(i).iter().copied().collect();
                combine(&basis, &col, dim)
            })
            .collect();
        basis = kept;
        basis.extend(tail);
        t.fill(0.0);
        for (i, &v) in theta.iter().take(keep).enumerate() {
            t[(i, i)] = v;
        }
        for q in 0..coupling.nrows() {
            for i in 0..keep {
                t[(keep + q, i)] = coupling[(q, i)];
                t[(i, keep + q)] = coupling[(q, i)];
            }
        }
        processed = keep;
    }
}
