//! Heisenberg chain with nearest- and next-nearest-neighbour exchange,
//! `H(λ) = Σ_j (s_j·s_{j+1} + λ s_j·s_{j+2})` with periodic closure.
//!
//! Every bond `s_j·s_k` contributes `s^z_j s^z_k` on the diagonal and
//! `(s^+_j s^-_k + h.c.)/2` off the diagonal. The sum over `j` runs over all
//! `L` sites literally, so at `L = 4` each next-nearest pair appears twice.

use nalgebra::DMatrix;
use rayon::prelude::*;

use crate::basis::SectorBasis;
use crate::error::{Error, Result};

/// Rows per parallel work item in the matrix-free product.
const ROW_CHUNK: usize = 4096;

/// Largest dimension accepted by the dense builders.
pub const DENSE_DIM_LIMIT: usize = 4000;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Boundary {
    #[default]
    Periodic,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ChainSpec {
    pub sites: usize,
    pub lambda: f64,
    pub boundary: Boundary,
}

impl ChainSpec {
    pub fn new(sites: usize, lambda: f64) -> Result<Self> {
        SectorBasis::check_sites(sites)?;
        if !lambda.is_finite() {
            return Err(Error::InvalidArgument(format!("lambda = {lambda}")));
        }
        Ok(Self {
            sites,
            lambda,
            boundary: Boundary::Periodic,
        })
    }

    pub fn with_lambda(self, lambda: f64) -> Self {
        Self { lambda, ..self }
    }
}

/// A real symmetric operator applied without storing its matrix.
pub trait LinearOperator: Sync {
    fn dim(&self) -> usize;
    /// Writes `A x` into `y`. Both slices have length `dim()`.
    fn apply(&self, x: &[f64], y: &mut [f64]);
}

/// Matrix-free `nn · H_0 + nnn · H_I` on one magnetization sector.
#[derive(Debug, Clone, Copy)]
pub struct ChainOperator<'a> {
    basis: &'a SectorBasis,
    nn: f64,
    nnn: f64,
}

impl<'a> ChainOperator<'a> {
    pub fn new(basis: &'a SectorBasis, nn: f64, nnn: f64) -> Self {
        Self { basis, nn, nnn }
    }

    /// Full `H(λ)`.
    pub fn hamiltonian(spec: &ChainSpec, basis: &'a SectorBasis) -> Result<Self> {
        check_sites(spec, basis)?;
        Ok(Self::new(basis, 1.0, spec.lambda))
    }

    /// Driving term `H_I = Σ_j s_j·s_{j+2}` alone.
    pub fn driving(spec: &ChainSpec, basis: &'a SectorBasis) -> Result<Self> {
        check_sites(spec, basis)?;
        Ok(Self::new(basis, 0.0, 1.0))
    }

    pub fn basis(&self) -> &SectorBasis {
        self.basis
    }

    #[inline]
    fn couplings(&self) -> [(usize, f64); 2] {
        [(1, self.nn), (2, self.nnn)]
    }

    /// Diagonal element and the off-diagonal `(target, amplitude)` pairs of
    /// the column belonging to `state`, in a fixed order.
    #[inline]
    fn for_each_element(&self, state: u64, mut off: impl FnMut(u64, f64)) -> f64 {
        let sites = self.basis.sites();
        let mask = (1u64 << sites) - 1;
        let mut diag = 0.0;
        for (range, coupling) in self.couplings() {
            if coupling == 0.0 {
                continue;
            }
            let rotated = ((state >> range) | (state << (sites - range))) & mask;
            // bit j set <=> spins j and j+range are antiparallel
            let anti = (state ^ rotated) & mask;
            let n_anti = anti.count_ones() as i64;
            diag += 0.25 * coupling * (sites as i64 - 2 * n_anti) as f64;
            let half = 0.5 * coupling;
            let mut bits = anti;
            while bits != 0 {
                let j = bits.trailing_zeros() as usize;
                bits &= bits - 1;
                let k = (j + range) % sites;
                off(state ^ (1u64 << j) ^ (1u64 << k), half);
            }
        }
        diag
    }

    /// Diagonal matrix element for one basis state.
    pub fn diagonal(&self, state: u64) -> f64 {
        self.for_each_element(state, |_, _| {})
    }

    /// Off-diagonal `(target mask, amplitude)` pairs generated from `state`.
    pub fn off_diagonal(&self, state: u64) -> Vec<(u64, f64)> {
        let mut out = Vec::new();
        self.for_each_element(state, |t, a| out.push((t, a)));
        out
    }

    /// Dense matrix of the operator. Exactly symmetric.
    pub fn to_dense(&self) -> Result<DMatrix<f64>> {
        let dim = self.basis.dim();
        if dim > DENSE_DIM_LIMIT {
            return Err(Error::DenseGuard {
                dim,
                limit: DENSE_DIM_LIMIT,
            });
        }
        let mut m = DMatrix::zeros(dim, dim);
        for (col, &s) in self.basis.states().iter().enumerate() {
            let diag = self.for_each_element(s, |t, amp| {
                m[(self.basis.rank_unchecked(t), col)] += amp;
            });
            m[(col, col)] = diag;
        }
        Ok(m)
    }
}

impl LinearOperator for ChainOperator<'_> {
    fn dim(&self) -> usize {
        self.basis.dim()
    }

    fn apply(&self, x: &[f64], y: &mut [f64]) {
        assert_eq!(x.len(), self.dim());
        assert_eq!(y.len(), self.dim());
        let states = self.basis.states();
        // Gather form: each output row sums its own terms in a fixed order,
        // so the result does not depend on how rows are split across threads.
        y.par_chunks_mut(ROW_CHUNK)
            .enumerate()
            .for_each(|(chunk, out)| {
                let start = chunk * ROW_CHUNK;
                for (offset, yi) in out.iter_mut().enumerate() {
                    let i = start + offset;
                    let mut acc = 0.0;
                    let diag = self.for_each_element(states[i], |t, amp| {
                        acc += amp * x[self.basis.rank_unchecked(t)];
                    });
                    *yi = diag * x[i] + acc;
                }
            });
    }
}

/// Dense symmetric matrix wrapped as an operator (oracle support).
impl LinearOperator for DMatrix<f64> {
    fn dim(&self) -> usize {
        self.nrows()
    }

    fn apply(&self, x: &[f64], y: &mut [f64]) {
        let n = self.nrows();
        for (i, yi) in y.iter_mut().enumerate().take(n) {
            *yi = (0..n).map(|j| self[(i, j)] * x[j]).sum();
        }
    }
}

fn check_sites(spec: &ChainSpec, basis: &SectorBasis) -> Result<()> {
    if spec.sites != basis.sites() {
        return Err(Error::InvalidArgument(format!(
            "chain has {} sites but basis has {}",
            spec.sites,
            basis.sites()
        )));
    }
    Ok(())
}

fn apply_checked(op: &ChainOperator<'_>, v: &[f64]) -> Result<Vec<f64>> {
    if v.len() != op.dim() {
        return Err(Error::DimensionMismatch {
            expected: op.dim(),
            got: v.len(),
        });
    }
    let mut out = vec![0.0; v.len()];
    op.apply(v, &mut out);
    Ok(out)
}

/// `H(λ) v`.
pub fn apply_hamiltonian(spec: &ChainSpec, basis: &SectorBasis, v: &[f64]) -> Result<Vec<f64>> {
    apply_checked(&ChainOperator::hamiltonian(spec, basis)?, v)
}

/// `H_I v` with `H_I = Σ_j s_j·s_{j+2}`.
pub fn apply_driving(spec: &ChainSpec, basis: &SectorBasis, v: &[f64]) -> Result<Vec<f64>> {
    apply_checked(&ChainOperator::driving(spec, basis)?, v)
}

pub fn dense_hamiltonian(spec: &ChainSpec, basis: &SectorBasis) -> Result<DMatrix<f64>> {
    ChainOperator::hamiltonian(spec, basis)?.to_dense()
}

pub fn dense_driving(spec: &ChainSpec, basis: &SectorBasis) -> Result<DMatrix<f64>> {
    ChainOperator::driving(spec, basis)?.to_dense()
}
