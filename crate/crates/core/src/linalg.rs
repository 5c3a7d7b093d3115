//! Dense vector kernels used by the Krylov solver and the fidelity engine.
//!
//! Reductions are split into fixed-size blocks whose partial sums are added
//! in block order, so results are bit-identical for any thread count.

use rayon::prelude::*;

const BLOCK: usize = 8192;

pub fn dot(a: &[f64], b: &[f64]) -> f64 {
    debug_assert_eq!(a.len(), b.len());
    if a.len() <= BLOCK {
        return a.iter().zip(b).map(|(x, y)| x * y).sum();
    }
    let partial: Vec<f64> = a
        .par_chunks(BLOCK)
        .zip(b.par_chunks(BLOCK))
        .map(|(x, y)| x.iter().zip(y).map(|(p, q)| p * q).sum::<f64>())
        .collect();
    partial.into_iter().sum()
}

pub fn norm(a: &[f64]) -> f64 {
    dot(a, a).sqrt()
}

/// `y += alpha * x`
pub fn axpy(alpha: f64, x: &[f64], y: &mut [f64]) {
    debug_assert_eq!(x.len(), y.len());
    y.par_chunks_mut(BLOCK)
        .zip(x.par_chunks(BLOCK))
        .for_each(|(yc, xc)| {
            for (yi, xi) in yc.iter_mut().zip(xc) {
                *yi += alpha * xi;
            }
        });
}

pub fn scale(alpha: f64, x: &mut [f64]) {
    x.par_chunks_mut(BLOCK).for_each(|c| {
        for v in c {
            *v *= alpha;
        }
    });
}

/// Normalizes in place and returns the previous norm.
pub fn normalize(x: &mut [f64]) -> f64 {
    let n = norm(x);
    if n > 0.0 {
        scale(1.0 / n, x);
    }
    n
}

/// `Σ_i coeffs[i] * basis[i]`
pub fn combine(basis: &[Vec<f64>], coeffs: &[f64], dim: usize) -> Vec<f64> {
    let mut out = vec![0.0; dim];
    out.par_chunks_mut(BLOCK)
        .enumerate()
        .for_each(|(chunk, oc)| {
            let start = chunk * BLOCK;
            for (v, &c) in basis.iter().zip(coeffs) {
                if c == 0.0 {
                    continue;
                }
                let vc = &v[start..start + oc.len()];
                for (o, x) in oc.iter_mut().zip(vc) {
                    *o += c * x;
                }
            }
        });
    out
}

/// `Vᵀ w` for a set of vectors `V`, one pass over `w`.
pub fn multi_dot(basis: &[Vec<f64>], w: &[f64]) -> Vec<f64> {
    let partial: Vec<Vec<f64>> = w
        .par_chunks(BLOCK)
        .enumerate()
        .map(|(chunk, wc)| {
            let start = chunk * BLOCK;
            basis
                .iter()
                .map(|v| {
                    v[start..start + wc.len()]
                        .iter()
                        .zip(wc)
                        .map(|(a, b)| a * b)
                        .sum::<f64>()
                })
                .collect()
        })
        .collect();
    let mut out = vec![0.0; basis.len()];
    for p in partial {
        for (o, x) in out.iter_mut().zip(p) {
            *o += x;
        }
    }
    out
}

/// `w -= V c`
pub fn multi_sub(basis: &[Vec<f64>], coeffs: &[f64], w: &mut [f64]) {
    w.par_chunks_mut(BLOCK)
        .enumerate()
        .for_each(|(chunk, wc)| {
            let range = chunk * BLOCK..chunk * BLOCK + wc.len();
            for (v, &c) in basis.iter().zip(coeffs) {
                for (x, y) in wc.iter_mut().zip(&v[range.clone()]) {
                    *x -= c * y;
                }
            }
        });
}

/// Squared distance `‖a - b‖²`, accurate when `a ≈ b`.
pub fn distance_sq(a: &[f64], b: &[f64]) -> f64 {
    debug_assert_eq!(a.len(), b.len());
    let partial: Vec<f64> = a
        .par_chunks(BLOCK)
        .zip(b.par_chunks(BLOCK))
        .map(|(x, y)| {
            x.iter()
                .zip(y)
                .map(|(p, q)| (p - q) * (p - q))
                .sum::<f64>()
        })
        .collect();
    partial.into_iter().sum()
}
